"""
Rulebook models: per-tick rule inputs, realizations, weights and scores.
"""

from pydantic import Field

from .common import WxModel


class RuleState(WxModel):
    """The slice of a tick that safety rules consume."""

    ego_speed: float = Field(ge=0.0, description="Ego speed (m/s)")
    gap: float = Field(description="Gap to the lead vehicle (m)")
    collision_this_tick: bool = Field(False)
    lead_speed: float = Field(0.0, ge=0.0, description="Lead speed (m/s)")

    class Config:
        extra = "forbid"
        frozen = True


class Realization(WxModel):
    """Ordered sequence of rule states over which rules are evaluated."""

    states: list[RuleState] = Field(min_length=1)

    def __len__(self) -> int:
        return len(self.states)

    def __add__(self, other: "Realization") -> "Realization":
        return Realization(states=[*self.states, *other.states])


class RewardWeights(WxModel):
    """Weights applied inside the violation term of the step reward."""

    w_c: float = Field(500.0, gt=0.0, description="Collision weight")
    w_p: float = Field(100.0, gt=0.0, description="Proximity weight")


class RulebookConfig(RewardWeights):
    """Rulebook section of the harness config."""

    proximity_threshold: float = Field(5.0, gt=0.0, description="Proximity rule distance (m)")
    rss_deceleration: float = Field(5.0, gt=0.0, description="Shared maximum deceleration (m/s²)")

    @property
    def weights(self) -> RewardWeights:
        return RewardWeights(w_c=self.w_c, w_p=self.w_p)


class ViolationScores(WxModel):
    """Trajectory-level rule scores."""

    lambda_c: float = Field(0.0, ge=0.0)
    lambda_p: float = Field(0.0, ge=0.0)

    def __add__(self, other: "ViolationScores") -> "ViolationScores":
        return ViolationScores(
            lambda_c=self.lambda_c + other.lambda_c,
            lambda_p=self.lambda_p + other.lambda_p,
        )
