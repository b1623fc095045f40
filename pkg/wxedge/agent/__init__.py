"""
The weather-perturbing agent: networks, PPO and the baseline agents.
"""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .network import ACT_DIM, OBS_DIM, PolicyParams, forward_batch, policy_forward
from .policies import (
    Agent,
    AgentStep,
    ClearAgent,
    PolicyAgent,
    RandomAgent,
    ScriptedAgent,
    act_clear,
    act_random,
    featurize,
)
from .ppo import Adam, RolloutBuffer, gae, normalize_advantages, ppo_update, sample_action

__all__ = [
    "ACT_DIM",
    "OBS_DIM",
    "Adam",
    "Agent",
    "AgentStep",
    "Checkpoint",
    "ClearAgent",
    "PolicyAgent",
    "PolicyParams",
    "RandomAgent",
    "RolloutBuffer",
    "ScriptedAgent",
    "act_clear",
    "act_random",
    "featurize",
    "forward_batch",
    "gae",
    "load_checkpoint",
    "normalize_advantages",
    "policy_forward",
    "ppo_update",
    "sample_action",
    "save_checkpoint",
]
