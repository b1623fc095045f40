"""
Episode logs, evaluation reports and harness config sections.
"""

from enum import Enum
from typing import Optional

from pydantic import Field, model_validator

from .common import WxModel


class FailureMode(str, Enum):
    """Why an episode ended in a collision."""

    NONE = "none"
    NON_DETECTION = "non_detection"
    INTERMITTENT = "intermittent"
    DELAYED = "delayed"


class AgentKind(str, Enum):
    """Knob-perturbing agents compared in evaluation."""

    CLEAR = "clear"
    RANDOM = "random"
    POLICY = "policy"
    SCRIPTED = "scripted"


class TickRow(WxModel):
    """One logged tick of an episode."""

    tick: int = Field(ge=0)
    knobs: list[float] = Field(min_length=5, max_length=5)
    gap: float
    ego_speed: float = Field(ge=0.0)
    lead_speed: float = Field(ge=0.0)
    visibility: float = Field(ge=0.0, le=1.0)
    detected: bool
    iou: float = Field(ge=0.0, le=1.0)
    alpha_c: float = Field(ge=0.0)
    alpha_p: float = Field(ge=0.0)
    reward: float
    deficit: float = Field(0.0, ge=0.0, description="RSS following-distance deficit (m)")
    collision: bool = Field(False, description="First-contact tick")
    lead_index: int = Field(0, ge=0, description="Which vehicle is the lead; bumped by a cut-in")
    extra_terms: dict[str, float] = Field(
        default_factory=dict, description="Per-tick terms of rules registered beyond the shipped two"
    )


class EpisodeTotals(WxModel):
    """Per-episode sums over rows."""

    lambda_c: float = Field(0.0, ge=0.0)
    lambda_p: float = Field(0.0, ge=0.0)
    reward_sum: float = 0.0
    deficit_sum: float = Field(0.0, ge=0.0)

    @classmethod
    def from_rows(cls, rows: list[TickRow]) -> "EpisodeTotals":
        """Recompute totals from logged rows (sequential summation)."""
        lambda_c = lambda_p = reward_sum = deficit_sum = 0.0
        for row in rows:
            lambda_c += row.alpha_c
            lambda_p += row.alpha_p
            reward_sum += row.reward
            deficit_sum += row.deficit
        return cls(
            lambda_c=lambda_c,
            lambda_p=lambda_p,
            reward_sum=reward_sum,
            deficit_sum=deficit_sum,
        )


class EpisodeRecord(WxModel):
    """Complete log of one episode."""

    scene_id: str
    agent: str
    mode: str = Field("eval", pattern="^(train|eval)$")
    rows: list[TickRow] = Field(default_factory=list)
    totals: EpisodeTotals = Field(default_factory=EpisodeTotals)
    failure_mode: FailureMode = FailureMode.NONE
    aborted: bool = False
    diagnostic: Optional[str] = None

    @property
    def collided(self) -> bool:
        return any(row.collision for row in self.rows)

    @property
    def contact_tick(self) -> Optional[int]:
        """Index of the first-contact row, if any."""
        for index, row in enumerate(self.rows):
            if row.collision:
                return index
        return None


class EpisodeSummary(WxModel):
    """One row of the per-episode evaluation table."""

    agent: str
    scene_id: str
    lambda_c: float = Field(ge=0.0)
    lambda_p: float = Field(ge=0.0)
    reward_sum: float
    deficit_sum: float = Field(ge=0.0)
    collided: bool
    failure_mode: FailureMode
    aborted: bool = False

    @classmethod
    def from_record(cls, record: EpisodeRecord) -> "EpisodeSummary":
        return cls(
            agent=record.agent,
            scene_id=record.scene_id,
            lambda_c=record.totals.lambda_c,
            lambda_p=record.totals.lambda_p,
            reward_sum=record.totals.reward_sum,
            deficit_sum=record.totals.deficit_sum,
            collided=record.collided,
            failure_mode=record.failure_mode,
            aborted=record.aborted,
        )


class AgentAggregate(WxModel):
    """Aggregates for one agent over the evaluation subset."""

    agent: str
    episodes: int = Field(ge=0)
    mean_lambda_c: float = Field(ge=0.0)
    mean_lambda_p: float = Field(ge=0.0)
    mean_reward: float
    deficit_sum: float = Field(ge=0.0, description="Summed deficit over all episodes")
    collisions: int = Field(ge=0)
    failure_modes: dict[str, int] = Field(default_factory=dict)

    @property
    def mean_violation(self) -> float:
        return self.mean_lambda_c + self.mean_lambda_p


class EvaluationReport(WxModel):
    """Per-agent aggregates plus the per-episode table they derive from."""

    catalog_sha256: str
    subset_seed: int
    scene_ids: list[str]
    aggregates: list[AgentAggregate]
    episodes: list[EpisodeSummary]

    def aggregate_for(self, agent: str) -> AgentAggregate:
        for aggregate in self.aggregates:
            if aggregate.agent == agent:
                return aggregate
        raise KeyError(agent)


class EdgeCase(WxModel):
    """An evaluation episode in which the system violated a rule."""

    agent: str
    scene_id: str
    lambda_c: float
    lambda_p: float
    failure_mode: FailureMode
    episode_file: str
    first_violation_tick: int
    knobs_at_violation: list[float]


class EvalConfig(WxModel):
    """Evaluation section of the harness config."""

    subset_size: int = Field(50, gt=0)
    subset_seed: int = Field(7, ge=0)
    seed: int = Field(0, ge=0, description="Seed for stochastic baseline agents")
    failure_window: int = Field(50, gt=0, description="W: ticks inspected before contact")
    dropout_ticks: int = Field(10, gt=0, description="G: undetected run marking track loss")
    agents: list[AgentKind] = Field(
        default_factory=lambda: [AgentKind.CLEAR, AgentKind.RANDOM, AgentKind.POLICY]
    )

    @model_validator(mode="after")
    def _dropout_fits_window(self) -> "EvalConfig":
        if self.dropout_ticks > self.failure_window:
            raise ValueError("dropout_ticks cannot exceed failure_window")
        return self
