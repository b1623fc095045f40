"""
World-state models: weather knobs, control signals and the per-tick world.
"""

import math
from typing import Optional

from pydantic import Field, field_validator, model_validator

from .common import WxModel

KNOB_NAMES: tuple[str, ...] = (
    "fog_density",
    "precipitation",
    "precipitation_deposits",
    "sun_altitude",
    "sun_azimuth",
)

# (min, max) for each knob; sun_azimuth is circular and wraps instead of clamping.
KNOB_BOUNDS: dict[str, tuple[float, float]] = {
    "fog_density": (0.0, 1.0),
    "precipitation": (0.0, 1.0),
    "precipitation_deposits": (0.0, 1.0),
    "sun_altitude": (-90.0, 90.0),
    "sun_azimuth": (0.0, 360.0),
}

CIRCULAR_KNOBS = frozenset({"sun_azimuth"})


def knob_span(name: str) -> float:
    """Full span of a knob's range."""
    low, high = KNOB_BOUNDS[name]
    return high - low


class KnobState(WxModel):
    """The five weather parametric knobs the agent controls."""

    fog_density: float = Field(0.0, ge=0.0, le=1.0, description="Fog density fraction")
    precipitation: float = Field(0.0, ge=0.0, le=1.0, description="Rain density fraction")
    precipitation_deposits: float = Field(
        0.0, ge=0.0, le=1.0, description="Puddle / wet-surface level fraction"
    )
    sun_altitude: float = Field(90.0, ge=-90.0, le=90.0, description="Sun altitude (deg)")
    sun_azimuth: float = Field(0.0, description="Sun azimuth (deg, stored modulo 360)")

    class Config:
        extra = "forbid"
        validate_assignment = True
        frozen = True

    @field_validator("sun_azimuth")
    @classmethod
    def _wrap_azimuth(cls, value: float) -> float:
        wrapped = math.fmod(value, 360.0)
        if wrapped < 0.0:
            wrapped += 360.0
        # fmod of a tiny negative can round to exactly 360.0
        return 0.0 if wrapped >= 360.0 else wrapped

    @classmethod
    def clear(cls) -> "KnobState":
        """Clear-day preset: no fog, rain or deposits, sun at zenith."""
        return cls()

    @classmethod
    def from_vector(cls, values: list[float]) -> "KnobState":
        """Build from a 5-vector ordered as ``KNOB_NAMES``."""
        if len(values) != len(KNOB_NAMES):
            raise ValueError(f"Expected {len(KNOB_NAMES)} knob values, got {len(values)}")
        return cls(**dict(zip(KNOB_NAMES, (float(v) for v in values))))

    def as_vector(self) -> list[float]:
        """Knob values ordered as ``KNOB_NAMES``."""
        return [getattr(self, name) for name in KNOB_NAMES]


class ControlSignal(WxModel):
    """Longitudinal control command; throttle and brake are mutually exclusive."""

    throttle: float = Field(0.0, ge=0.0, le=1.0)
    brake: float = Field(0.0, ge=0.0, le=1.0)

    class Config:
        extra = "forbid"
        frozen = True

    @model_validator(mode="after")
    def _exclusive(self) -> "ControlSignal":
        if self.throttle > 0.0 and self.brake > 0.0:
            raise ValueError("throttle and brake cannot both be engaged")
        return self

    @classmethod
    def coast(cls) -> "ControlSignal":
        return cls()


class WorldState(WxModel):
    """Kinematic and environmental state at one tick."""

    tick: int = Field(0, ge=0, description="Tick index (dt per tick)")
    ego_pos: float = Field(description="Ego rear-axle position (m)")
    ego_speed: float = Field(ge=0.0, description="Ego speed (m/s)")
    lead_pos: float = Field(description="Lead position (m)")
    lead_speed: float = Field(ge=0.0, description="Lead speed (m/s)")
    knobs: KnobState = Field(default_factory=KnobState.clear)
    collided: bool = Field(False, description="Monotone collision flag")
    vehicle_length: float = Field(4.5, gt=0.0, description="Lead vehicle length (m)")
    lead_base_speed: Optional[float] = Field(
        None, ge=0.0, description="Speed the lead returns to between events"
    )
    lead_index: int = Field(0, ge=0, description="Vehicles that have been the lead before this one")

    class Config:
        extra = "forbid"
        frozen = True

    @property
    def gap(self) -> float:
        """Bumper-to-bumper distance to the lead vehicle."""
        return self.lead_pos - self.ego_pos - self.vehicle_length


class SimConfig(WxModel):
    """Microsimulator constants and knob-perturbation settings."""

    dt: float = Field(0.1, gt=0.0, description="Seconds per tick")
    a_acc_max: float = Field(3.0, gt=0.0, description="Full-throttle acceleration (m/s²)")
    a_dec_max: float = Field(8.0, gt=0.0, description="Full-brake deceleration (m/s²)")
    v_cap: float = Field(30.0, gt=0.0, description="Ego speed cap (m/s)")
    vehicle_length: float = Field(4.5, gt=0.0, description="Vehicle length (m)")
    lead_accel_max: float = Field(
        4.0, gt=0.0, description="Lead acceleration bound while tracking targets (m/s²)"
    )
    max_step_fraction: float = Field(
        0.05, gt=0.0, le=1.0, description="Per-step knob change limit as span fraction"
    )
    initial_knobs: KnobState = Field(default_factory=KnobState.clear)
    frozen_knobs: list[str] = Field(
        default_factory=list, description="Knobs held at their initial value"
    )

    @field_validator("frozen_knobs")
    @classmethod
    def _known_knobs(cls, value: list[str]) -> list[str]:
        unknown = [name for name in value if name not in KNOB_NAMES]
        if unknown:
            raise ValueError(f"unknown knob names: {', '.join(unknown)}")
        return value
