"""
Initial-scene models and the persisted scene catalog.
"""

from typing import Optional

from pydantic import Field, model_validator

from .common import WxModel

CATALOG_SCHEMA_VERSION = 1
SUPPORTED_CATALOG_VERSIONS: tuple[int, ...] = (CATALOG_SCHEMA_VERSION,)


class LeadEvent(WxModel):
    """Scripted lead speed target held for a window of ticks."""

    start_tick: int = Field(ge=0, description="First tick of the event")
    duration_ticks: int = Field(gt=0, description="Number of ticks the target holds")
    target_speed: float = Field(ge=0.0, description="Lead target speed (m/s)")

    @property
    def end_tick(self) -> int:
        """First tick after the event."""
        return self.start_tick + self.duration_ticks


class CutIn(WxModel):
    """A vehicle inserting itself ahead of the ego, becoming the new lead."""

    trigger_tick: int = Field(gt=0, description="Tick at which the inserted vehicle appears")
    inserted_gap: float = Field(gt=0.0, description="Gap to the inserted vehicle (m)")
    inserted_speed: float = Field(ge=0.0, description="Inserted vehicle speed (m/s)")


class Scene(WxModel):
    """Initial configuration of one episode."""

    scene_id: str = Field(min_length=1)
    initial_gap: float = Field(gt=0.0, description="Initial bumper-to-bumper gap (m)")
    ego_speed0: float = Field(ge=0.0, description="Initial ego speed (m/s)")
    lead_speed0: float = Field(ge=0.0, description="Initial lead speed (m/s)")
    lead_events: list[LeadEvent] = Field(default_factory=list)
    cut_in: Optional[CutIn] = None
    noise_seed: int = Field(ge=0, lt=1 << 64, description="Perception noise seed")

    @model_validator(mode="after")
    def _check_invariants(self) -> "Scene":
        for prev, nxt in zip(self.lead_events, self.lead_events[1:]):
            if nxt.start_tick < prev.end_tick:
                raise ValueError(
                    "lead_events must be sorted by start_tick and non-overlapping"
                )
        return self

    def active_event(self, tick: int) -> Optional[LeadEvent]:
        """Lead event covering ``tick``, if any."""
        for event in self.lead_events:
            if event.start_tick <= tick < event.end_tick:
                return event
            if event.start_tick > tick:
                break
        return None


class SceneCatalog(WxModel):
    """Versioned collection of initial scenes."""

    schema_version: int = Field(CATALOG_SCHEMA_VERSION)
    generator_seed: int = Field(ge=0, lt=1 << 64)
    scenes: list[Scene] = Field(min_length=1)

    @model_validator(mode="after")
    def _unique_ids(self) -> "SceneCatalog":
        seen: set[str] = set()
        for scene in self.scenes:
            if scene.scene_id in seen:
                raise ValueError(f"duplicate scene_id {scene.scene_id!r}")
            seen.add(scene.scene_id)
        return self

    def __len__(self) -> int:
        return len(self.scenes)


class GeneratorConfig(WxModel):
    """Sampling ranges for the initial scene generator."""

    count: int = Field(1200, ge=0, description="Number of scenes to generate")
    gap_range: tuple[float, float] = Field((15.0, 60.0), description="Initial gap (m)")
    ego_speed_range: tuple[float, float] = Field((8.0, 15.0), description="Ego speed (m/s)")
    lead_speed_range: tuple[float, float] = Field(
        (6.0, 14.0), description="Lead speed (m/s)"
    )
    brake_event_count_range: tuple[int, int] = Field(
        (1, 3), description="Number of lead braking events (inclusive)"
    )
    brake_target_range: tuple[float, float] = Field(
        (0.0, 8.0), description="Lead braking target speed (m/s)"
    )
    event_duration_range: tuple[int, int] = Field(
        (20, 80), description="Braking event duration (ticks, inclusive)"
    )
    cut_in_probability: float = Field(0.3, ge=0.0, le=1.0)
    cut_in_gap_range: tuple[float, float] = Field(
        (12.0, 30.0), description="Gap to an inserted vehicle (m)"
    )
    cut_in_speed_range: tuple[float, float] = Field(
        (6.0, 14.0), description="Inserted vehicle speed (m/s)"
    )
    horizon_ticks: int = Field(512, gt=20, description="Ticks over which events are placed")

    @model_validator(mode="after")
    def _ordered_ranges(self) -> "GeneratorConfig":
        for name in (
            "gap_range",
            "ego_speed_range",
            "lead_speed_range",
            "brake_event_count_range",
            "brake_target_range",
            "event_duration_range",
            "cut_in_gap_range",
            "cut_in_speed_range",
        ):
            low, high = getattr(self, name)
            if low < 0 or high < low:
                raise ValueError(f"{name} must be ordered and non-negative, got {(low, high)}")
        if self.gap_range[0] <= 0:
            raise ValueError("gap_range must start above 0 m")
        if self.event_duration_range[0] < 1:
            raise ValueError("event_duration_range must start at 1 tick or more")
        return self
