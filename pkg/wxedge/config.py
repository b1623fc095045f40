"""
Configuration management for wxedge.

Two layers: process ``Settings`` read from ``WXEDGE_*`` environment variables
(and a ``.env`` file), and the JSON ``HarnessConfig`` file with one section per
component.
"""

from pathlib import Path
from typing import Any, Optional, Union

from dotenv import load_dotenv
from pydantic import Field, ValidationError, model_validator
from pydantic_settings import BaseSettings

from .errors import InvalidConfigError
from .models.agent import PpoConfig
from .models.common import WxModel
from .models.perception import ControllerConfig, PerceptionConfig
from .models.records import EvalConfig
from .models.rules import RulebookConfig
from .models.scene import GeneratorConfig
from .models.world import SimConfig

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    """Process-level settings for the wxedge harness."""

    master_seed: Optional[int] = Field(
        default=None,
        ge=0,
        description="Overrides ppo.seed and eval.seed when set",
    )

    log_level: str = Field(default="INFO", description="Logging level for wxedge")

    class Config:
        env_prefix = "WXEDGE_"
        case_sensitive = False


def load_settings() -> Settings:
    """Read ``Settings`` from the environment, rejecting invalid ``WXEDGE_*`` values."""
    try:
        return Settings()
    except ValidationError as e:
        raise InvalidConfigError(f"Invalid WXEDGE_* environment: {e}") from e


class HarnessConfig(WxModel):
    """The harness JSON config file: one section per component."""

    sim: SimConfig = Field(default_factory=SimConfig)
    perception: PerceptionConfig = Field(default_factory=PerceptionConfig)
    controller: ControllerConfig = Field(default_factory=ControllerConfig)
    rulebook: RulebookConfig = Field(default_factory=RulebookConfig)
    ppo: PpoConfig = Field(default_factory=PpoConfig)
    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    @model_validator(mode="after")
    def _gaps_clear_vehicle(self) -> "HarnessConfig":
        if self.generator.gap_range[0] <= self.sim.vehicle_length:
            raise ValueError(
                f"generator.gap_range must start above sim.vehicle_length "
                f"{self.sim.vehicle_length} m"
            )
        return self

    @classmethod
    def load(cls, path: Union[str, Path, None]) -> "HarnessConfig":
        """Read and validate a config file; ``None`` yields the defaults."""
        if path is None:
            return cls()

        config_path = Path(path)
        try:
            text = config_path.read_text(encoding="utf-8")
        except OSError as e:
            raise InvalidConfigError(f"Cannot read config {config_path}: {e}") from e

        try:
            return cls.model_validate_json(text)
        except ValidationError as e:
            raise InvalidConfigError(f"Invalid config {config_path}: {e}") from e

    def with_master_seed(self, settings: Settings) -> tuple["HarnessConfig", str]:
        """Apply the environment master seed, returning the config and the seed source."""
        if settings.master_seed is None:
            return self, "config"

        seed = settings.master_seed
        updated = self.model_copy(
            update={
                "ppo": self.ppo.model_copy(update={"seed": seed}),
                "eval": self.eval.model_copy(update={"seed": seed}),
            }
        )
        return updated, "env"

    def echo(self) -> dict[str, Any]:
        """JSON-ready dump of every section, for manifests and checkpoints."""
        return self.model_dump(mode="json")
