"""
Initial scene generation, catalog persistence and test-subset selection.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
from pydantic import ValidationError

from .errors import (
    CatalogNotFoundError,
    CatalogParseError,
    InvalidArgumentError,
    InvalidConfigError,
    SchemaVersionError,
)
from .log import get_logger
from .models.scene import (
    CATALOG_SCHEMA_VERSION,
    SUPPORTED_CATALOG_VERSIONS,
    CutIn,
    GeneratorConfig,
    LeadEvent,
    Scene,
    SceneCatalog,
)
from .rng import derive_seed, stream

logger = get_logger(__name__)


def _uniform(rng: np.random.Generator, bounds: tuple[float, float]) -> float:
    low, high = bounds
    return float(rng.uniform(low, high)) if high > low else float(low)


def _integer(rng: np.random.Generator, bounds: tuple[int, int]) -> int:
    """Inclusive integer draw."""
    low, high = bounds
    return int(rng.integers(low, high + 1))


def _lead_events(rng: np.random.Generator, cfg: GeneratorConfig) -> list[LeadEvent]:
    """Braking events, one per equal slot of the horizon so they never overlap."""
    count = _integer(rng, cfg.brake_event_count_range)
    if count == 0:
        return []

    slot = cfg.horizon_ticks // count
    events: list[LeadEvent] = []
    for j in range(count):
        longest = max(1, min(cfg.event_duration_range[1], slot - 1))
        shortest = min(cfg.event_duration_range[0], longest)
        duration = _integer(rng, (shortest, longest))
        start = j * slot + int(rng.integers(0, max(0, slot - duration) + 1))
        events.append(
            LeadEvent(
                start_tick=start,
                duration_ticks=duration,
                target_speed=_uniform(rng, cfg.brake_target_range),
            )
        )
    return events


def _cut_in(rng: np.random.Generator, cfg: GeneratorConfig) -> Optional[CutIn]:
    happens = float(rng.random()) < cfg.cut_in_probability
    earliest = max(1, cfg.horizon_ticks // 10)
    latest = max(earliest, cfg.horizon_ticks * 4 // 5)
    trigger = _integer(rng, (earliest, latest))
    gap = _uniform(rng, cfg.cut_in_gap_range)
    speed = _uniform(rng, cfg.cut_in_speed_range)
    if not happens:
        return None
    return CutIn(trigger_tick=trigger, inserted_gap=gap, inserted_speed=speed)


def generate(cfg: GeneratorConfig, seed: int) -> SceneCatalog:
    """
    Draw ``cfg.count`` scenes from the configured ranges.

    Each scene's noise_seed is derived from (seed, index), so a scene's perception
    noise is fixed no matter which other scenes are generated alongside it.

    Args:
        cfg: Sampling ranges
        seed: Generator seed

    Returns:
        The generated catalog

    Raises:
        InvalidConfigError: If ``cfg.count`` is 0
    """
    if cfg.count == 0:
        raise InvalidConfigError("Scene count must be positive")

    rng = stream("catalog", seed)
    scenes: list[Scene] = []
    for i in range(cfg.count):
        scenes.append(
            Scene(
                scene_id=f"scene-{i:05d}",
                initial_gap=_uniform(rng, cfg.gap_range),
                ego_speed0=_uniform(rng, cfg.ego_speed_range),
                lead_speed0=_uniform(rng, cfg.lead_speed_range),
                lead_events=_lead_events(rng, cfg),
                cut_in=_cut_in(rng, cfg),
                noise_seed=derive_seed("scene", seed, i),
            )
        )

    logger.info("Generated %d scenes with seed %d", len(scenes), seed)
    return SceneCatalog(
        schema_version=CATALOG_SCHEMA_VERSION, generator_seed=seed, scenes=scenes
    )


def save(catalog: SceneCatalog, path: Union[str, Path]) -> None:
    """Write the catalog as one JSON document."""
    catalog_path = Path(path)
    catalog_path.parent.mkdir(parents=True, exist_ok=True)
    with open(catalog_path, "w") as f:
        json.dump(catalog.model_dump(mode="json"), f, indent=2)
        f.write("\n")


def load(path: Union[str, Path]) -> SceneCatalog:
    """
    Read and validate a catalog file.

    Raises:
        CatalogNotFoundError: If the file does not exist
        CatalogParseError: If the document is malformed or fails validation
        SchemaVersionError: If schema_version is not supported
    """
    catalog_path = Path(path)
    try:
        text = catalog_path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise CatalogNotFoundError(f"Catalog not found: {catalog_path}") from e
    except OSError as e:
        raise CatalogParseError(f"Cannot read catalog {catalog_path}: {e}") from e

    try:
        data: Any = json.loads(text)
    except json.JSONDecodeError as e:
        raise CatalogParseError(f"Malformed catalog {catalog_path}: {e.msg}", e.lineno, e.colno) from e

    if not isinstance(data, dict):
        raise CatalogParseError(f"Catalog {catalog_path} must be a JSON object", 1, 1)

    version = data.get("schema_version")
    if version not in SUPPORTED_CATALOG_VERSIONS:
        raise SchemaVersionError("catalog", version, SUPPORTED_CATALOG_VERSIONS)

    try:
        return SceneCatalog.model_validate(data)
    except ValidationError as e:
        raise CatalogParseError(f"Invalid catalog {catalog_path}: {e}") from e


def catalog_sha256(path: Union[str, Path]) -> str:
    """Content hash recorded in run manifests."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def select_test_subset(catalog: SceneCatalog, n: int = 50, seed: int = 7) -> list[Scene]:
    """
    Choose ``n`` distinct scenes by seeded sampling without replacement.

    Raises:
        InvalidArgumentError: If ``n`` exceeds the catalog size or is negative
    """
    if n < 0 or n > len(catalog):
        raise InvalidArgumentError(
            f"Cannot select {n} scenes from a catalog of {len(catalog)}"
        )
    order = stream("subset", seed).permutation(len(catalog))[:n]
    return [catalog.scenes[int(i)] for i in order]
