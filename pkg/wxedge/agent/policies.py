"""
Knob-perturbing agents and the feature vector they observe.
"""

import math
from collections.abc import Callable, Sequence
from typing import NamedTuple, Optional, Protocol, Union

import numpy as np

from ..models.common import clamp
from ..models.perception import DetectionResult
from ..models.records import AgentKind
from ..models.world import WorldState
from .network import ACT_DIM, PolicyParams, policy_forward
from .ppo import sample_action

GAP_SCALE = 100.0


def featurize(
    world: WorldState, det: DetectionResult, vis: float, v_cap: float = 30.0
) -> np.ndarray:
    """
    Normalized observation vector.

    Layout: fog, rain, deposits, sun_altitude/90, sin(azimuth), cos(azimuth),
    visibility, gap/100 clamped to [0, 2], ego and lead speed over v_cap,
    detected flag, IOU.
    """
    knobs = world.knobs
    azimuth = math.radians(knobs.sun_azimuth)
    fs = np.array(
        [
            knobs.fog_density,
            knobs.precipitation,
            knobs.precipitation_deposits,
            knobs.sun_altitude / 90.0,
            math.sin(azimuth),
            math.cos(azimuth),
            vis,
            clamp(world.gap / GAP_SCALE, 0.0, 2.0),
            world.ego_speed / v_cap,
            world.lead_speed / v_cap,
            1.0 if det.detected else 0.0,
            det.iou,
        ],
        dtype=np.float64,
    )
    return fs


def act_clear() -> np.ndarray:
    """Zero perturbation: the knobs stay where they are."""
    return np.zeros(ACT_DIM)


def act_random(rng: np.random.Generator) -> np.ndarray:
    """Uniform action in [-1, 1]^5."""
    return rng.uniform(-1.0, 1.0, ACT_DIM)


class AgentStep(NamedTuple):
    """An agent's choice for one tick plus what PPO needs to learn from it."""

    action: np.ndarray
    raw: np.ndarray
    log_prob: float = 0.0
    value: float = 0.0


class Agent(Protocol):
    name: str

    def act(self, fs: np.ndarray, rng: np.random.Generator) -> AgentStep: ...


class ClearAgent:
    """Keeps the weather at its initial preset."""

    name = AgentKind.CLEAR.value

    def act(self, fs: np.ndarray, rng: np.random.Generator) -> AgentStep:
        action = act_clear()
        return AgentStep(action=action, raw=action.copy())


class RandomAgent:
    name = AgentKind.RANDOM.value

    def act(self, fs: np.ndarray, rng: np.random.Generator) -> AgentStep:
        action = act_random(rng)
        return AgentStep(action=action, raw=action.copy())


class PolicyAgent:
    """The learned Gaussian policy; stochastic while training, mean action otherwise."""

    name = AgentKind.POLICY.value

    def __init__(self, params: PolicyParams, deterministic: bool = False):
        self.params = params
        self.deterministic = deterministic

    def act(self, fs: np.ndarray, rng: np.random.Generator) -> AgentStep:
        mean, log_std, value = policy_forward(self.params, fs)
        sample = sample_action(mean, log_std, rng, deterministic=self.deterministic)
        return AgentStep(
            action=sample.action, raw=sample.raw, log_prob=sample.log_prob, value=value
        )


class ScriptedAgent:
    """
    Replays a fixed action or a function of the features.

    Useful for targeted stress runs, e.g. driving fog to its maximum with
    ``ScriptedAgent([1, 0, 0, 0, 0])``.
    """

    name = AgentKind.SCRIPTED.value

    def __init__(
        self,
        script: Union[Sequence[float], Callable[[np.ndarray], Sequence[float]]],
        name: Optional[str] = None,
    ):
        self.script = script
        if name is not None:
            self.name = name

    def act(self, fs: np.ndarray, rng: np.random.Generator) -> AgentStep:
        chosen = self.script(fs) if callable(self.script) else self.script
        action = np.clip(np.asarray(chosen, dtype=np.float64), -1.0, 1.0)
        if action.shape != (ACT_DIM,):
            raise ValueError(f"Scripted action must have {ACT_DIM} components")
        return AgentStep(action=action, raw=action.copy())
