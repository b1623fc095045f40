"""
Policy checkpoints: network coefficients, Adam state and the PPO config echo.
"""

import json
from pathlib import Path
from typing import Any, NamedTuple, Union

from ..errors import InvalidArgumentError, SchemaVersionError
from ..log import get_logger
from ..models.agent import PpoConfig
from .network import CHECKPOINT_SCHEMA_VERSION, PolicyParams
from .ppo import Adam

logger = get_logger(__name__)


class Checkpoint(NamedTuple):
    params: PolicyParams
    optimizer: Adam
    update_index: int
    ppo: PpoConfig


def save_checkpoint(
    path: Union[str, Path],
    params: PolicyParams,
    optimizer: Adam,
    update_index: int,
    ppo: PpoConfig,
) -> None:
    """Write a checkpoint as JSON."""
    checkpoint_path = Path(path)
    checkpoint_path.parent.mkdir(parents=True, exist_ok=True)

    data: dict[str, Any] = params.to_dict()
    data["update_index"] = update_index
    data["adam"] = optimizer.to_dict()
    data["ppo"] = ppo.model_dump(mode="json")

    with open(checkpoint_path, "w") as f:
        json.dump(data, f, indent=2)
    logger.debug("Saved checkpoint at update %d to %s", update_index, checkpoint_path)


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """Read a checkpoint written by ``save_checkpoint``."""
    checkpoint_path = Path(path)
    if not checkpoint_path.exists():
        raise InvalidArgumentError(f"Checkpoint not found: {checkpoint_path}")

    try:
        with open(checkpoint_path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise InvalidArgumentError(f"Checkpoint {checkpoint_path} is not valid JSON: {e}") from e

    version = data.get("schema_version")
    if version != CHECKPOINT_SCHEMA_VERSION:
        raise SchemaVersionError("checkpoint", version, (CHECKPOINT_SCHEMA_VERSION,))

    try:
        ppo = PpoConfig(**data["ppo"])
        params = PolicyParams.from_dict(data)
        optimizer = Adam.from_dict(data["adam"], learn_rate=ppo.learn_rate)
        update_index = int(data["update_index"])
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidArgumentError(f"Malformed checkpoint {checkpoint_path}: {e}") from e

    if optimizer.m.shape != (params.size,):
        raise InvalidArgumentError(f"Optimizer state does not match parameters in {checkpoint_path}")

    return Checkpoint(params=params, optimizer=optimizer, update_index=update_index, ppo=ppo)
