"""
Safety rulebook: per-tick violation terms, trajectory scores, step reward and
the RSS following-distance metrics.

A rule maps a realization to a non-negative score, zero meaning full
compliance. Each shipped rule is a sum of per-tick terms weighted by the ego
speed at the violating tick, so per-tick emission and trajectory evaluation
agree.
"""

import math
from typing import Protocol

from .errors import InvalidConfigError
from .models.rules import Realization, RewardWeights, RuleState, ViolationScores

DEFAULT_PROXIMITY_THRESHOLD = 5.0
DEFAULT_RSS_DECELERATION = 5.0


class Rule(Protocol):
    """A rule scored as the sum of a per-tick non-negative term."""

    name: str

    def term(self, rs: RuleState) -> float: ...


class CollisionRule:
    """Violated at the tick the ego first contacts the lead."""

    name = "collision"

    def term(self, rs: RuleState) -> float:
        return rs.ego_speed if rs.collision_this_tick else 0.0


class ProximityRule:
    """Violated on every tick the gap is below the threshold."""

    name = "proximity"

    def __init__(self, threshold: float = DEFAULT_PROXIMITY_THRESHOLD):
        if threshold <= 0:
            raise InvalidConfigError(f"proximity threshold must be positive, got {threshold}")
        self.threshold = threshold

    def term(self, rs: RuleState) -> float:
        return rs.ego_speed if rs.gap < self.threshold else 0.0


class Rulebook:
    """Registry of rules evaluated over realizations."""

    def __init__(self, proximity_threshold: float = DEFAULT_PROXIMITY_THRESHOLD):
        self.collision = CollisionRule()
        self.proximity = ProximityRule(proximity_threshold)
        self._rules: dict[str, Rule] = {}
        self.register(self.collision)
        self.register(self.proximity)

    def register(self, rule: Rule) -> None:
        """Add a rule; names must be unique."""
        if rule.name in self._rules:
            raise ValueError(f"rule {rule.name!r} already registered")
        self._rules[rule.name] = rule

    @property
    def names(self) -> list[str]:
        return list(self._rules)

    def terms(self, rs: RuleState) -> dict[str, float]:
        """Per-tick term of every registered rule."""
        return {name: rule.term(rs) for name, rule in self._rules.items()}

    def step(self, rs: RuleState) -> tuple[float, float, dict[str, float]]:
        """Per-tick (alpha_c, alpha_p) plus the terms of every extra rule."""
        extra = self.terms(rs)
        alpha_c = extra.pop(self.collision.name)
        alpha_p = extra.pop(self.proximity.name)
        return alpha_c, alpha_p, extra

    def score(self, realization: Realization) -> dict[str, float]:
        """Trajectory score of every registered rule."""
        totals = dict.fromkeys(self._rules, 0.0)
        for rs in realization.states:
            for name, term in self.terms(rs).items():
                totals[name] += term
        return totals

    def evaluate(self, realization: Realization) -> ViolationScores:
        scores = self.score(realization)
        return ViolationScores(
            lambda_c=scores[self.collision.name], lambda_p=scores[self.proximity.name]
        )


def step_violation(
    rs: RuleState, proximity_threshold: float = DEFAULT_PROXIMITY_THRESHOLD
) -> tuple[float, float]:
    """Per-tick (alpha_c, alpha_p)."""
    alpha_c, alpha_p, _ = Rulebook(proximity_threshold).step(rs)
    return alpha_c, alpha_p


def evaluate(
    realization: Realization, proximity_threshold: float = DEFAULT_PROXIMITY_THRESHOLD
) -> ViolationScores:
    """Sum the per-tick terms into (lambda_c, lambda_p)."""
    return Rulebook(proximity_threshold).evaluate(realization)


def step_reward(
    iou: float, alpha_c: float, alpha_p: float, w: RewardWeights = RewardWeights()
) -> float:
    """exp(-iou) + ln(1 + w_c * alpha_c + w_p * alpha_p)."""
    return math.exp(-iou) + math.log1p(w.w_c * alpha_c + w.w_p * alpha_p)


def rss_min_distance(v_e: float, v_l: float, a: float = DEFAULT_RSS_DECELERATION) -> float:
    """Simplified RSS safe gap with equal braking and zero reaction time."""
    if a <= 0:
        raise InvalidConfigError(f"RSS deceleration must be positive, got {a}")
    return max(0.0, (v_e * v_e - v_l * v_l) / (2.0 * a))


def mfd_deficit(gap: float, d_min: float) -> float:
    """How far inside the RSS unsafe region the ego is."""
    return max(0.0, d_min - gap)
