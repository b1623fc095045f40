"""
Proximal Policy Optimization on the numpy networks.

Sampling, generalized advantage estimation, the clipped surrogate loss with its
analytic gradient, an Adam optimizer, and the minibatch update loop.
"""

import math
from typing import Any, NamedTuple, Optional

import numpy as np

from ..errors import NonFiniteError
from ..log import get_logger
from ..models.agent import PpoConfig, TrainStats
from .network import PolicyParams, mlp_backward, mlp_forward

logger = get_logger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


class ActionSample(NamedTuple):
    """A sampled action: clamped for the world, raw for the log-probability."""

    action: np.ndarray
    raw: np.ndarray
    log_prob: float


class Minibatch(NamedTuple):
    obs: np.ndarray
    raw_actions: np.ndarray
    old_log_probs: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray


def gaussian_log_prob(raw: np.ndarray, mean: np.ndarray, log_std: np.ndarray) -> np.ndarray:
    """Log density of a diagonal Gaussian, summed over the last axis."""
    z = (raw - mean) / np.exp(log_std)
    return np.sum(-0.5 * z * z - log_std - 0.5 * LOG_2PI, axis=-1)


def gaussian_entropy(log_std: np.ndarray) -> float:
    return float(np.sum(log_std + 0.5 * (LOG_2PI + 1.0)))


def sample_action(
    mean: np.ndarray,
    log_std: np.ndarray,
    rng: np.random.Generator,
    deterministic: bool = False,
) -> ActionSample:
    """
    Draw from N(mean, diag(exp(log_std)^2)) and clamp to [-1, 1].

    The log-probability is of the unclamped sample. Deterministic mode returns
    the clamped mean.
    """
    if deterministic:
        raw = np.array(mean, dtype=np.float64)
    else:
        raw = mean + np.exp(log_std) * rng.standard_normal(mean.shape)
    log_prob = float(gaussian_log_prob(raw, mean, log_std))
    return ActionSample(action=np.clip(raw, -1.0, 1.0), raw=raw, log_prob=log_prob)


def gae(
    rewards: np.ndarray,
    values: np.ndarray,
    terminals: np.ndarray,
    gamma: float,
    lam: float,
    last_value: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Generalized advantage estimates and value targets.

    ``terminals[t]`` marks the last transition of an episode; no value is
    bootstrapped across it. ``last_value`` bootstraps a trailing unfinished
    episode.

    Returns:
        (advantages, returns) with returns = advantages + values
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    terminals = np.asarray(terminals, dtype=bool)
    steps = len(rewards)

    advantages = np.zeros(steps)
    running = 0.0
    for t in reversed(range(steps)):
        if terminals[t]:
            next_value, nonterminal = 0.0, 0.0
        else:
            next_value = values[t + 1] if t + 1 < steps else last_value
            nonterminal = 1.0
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        running = delta + gamma * lam * nonterminal * running
        advantages[t] = running

    return advantages, advantages + values


def normalize_advantages(advantages: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Zero-mean, unit-std advantages."""
    return (advantages - advantages.mean()) / (advantages.std() + eps)


class RolloutBuffer:
    """Fixed-capacity store of on-policy transitions."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.raw_actions = np.zeros((capacity, act_dim))
        self.log_probs = np.zeros(capacity)
        self.rewards = np.zeros(capacity)
        self.values = np.zeros(capacity)
        self.terminals = np.zeros(capacity, dtype=bool)
        self.size = 0

    def __len__(self) -> int:
        return self.size

    @property
    def full(self) -> bool:
        return self.size >= self.capacity

    def add(
        self,
        obs: np.ndarray,
        raw_action: np.ndarray,
        log_prob: float,
        reward: float,
        value: float,
        terminal: bool,
    ) -> None:
        if self.full:
            raise IndexError("rollout buffer is full")
        i = self.size
        self.obs[i] = obs
        self.raw_actions[i] = raw_action
        self.log_probs[i] = log_prob
        self.rewards[i] = reward
        self.values[i] = value
        self.terminals[i] = terminal
        self.size += 1

    def clear(self) -> None:
        self.size = 0
        self.terminals[:] = False


def surrogate_objective(
    params: PolicyParams,
    obs: np.ndarray,
    raw_actions: np.ndarray,
    old_log_probs: np.ndarray,
    advantages: np.ndarray,
    clip_ratio: float,
) -> float:
    """Mean clipped surrogate E[min(r A, clip(r, 1-e, 1+e) A)]."""
    means, _ = mlp_forward(params.policy, np.atleast_2d(obs))
    ratio = np.exp(gaussian_log_prob(raw_actions, means, params.log_std) - old_log_probs)
    clipped = np.clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio)
    return float(np.mean(np.minimum(ratio * advantages, clipped * advantages)))


def loss_and_grad(
    params: PolicyParams, batch: Minibatch, cfg: PpoConfig
) -> tuple[float, np.ndarray, dict[str, float]]:
    """
    PPO loss ``-surrogate + c_v * value_loss - c_e * entropy`` and its gradient.

    The gradient is laid out like ``params.to_vector()``.
    """
    n = len(batch.returns)
    std = np.exp(params.log_std)

    means, policy_acts = mlp_forward(params.policy, batch.obs)
    z = (batch.raw_actions - means) / std
    log_probs = np.sum(-0.5 * z * z - params.log_std - 0.5 * LOG_2PI, axis=1)
    ratio = np.exp(log_probs - batch.old_log_probs)

    eps = cfg.clip_ratio
    unclipped = ratio * batch.advantages
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * batch.advantages
    surrogate = float(np.mean(np.minimum(unclipped, clipped)))

    values_out, value_acts = mlp_forward(params.value, batch.obs)
    values = values_out[:, 0]
    value_loss = float(np.mean((values - batch.returns) ** 2))
    entropy = gaussian_entropy(params.log_std)

    loss = -surrogate + cfg.value_coeff * value_loss - cfg.entropy_coeff * entropy

    # dL/dlogp is zero where the clipped branch is the active minimum
    active = unclipped <= clipped
    g_logp = -(active * ratio * batch.advantages) / n

    g_mean = g_logp[:, None] * z / std
    g_log_std = np.sum(g_logp[:, None] * (z * z - 1.0), axis=0) - cfg.entropy_coeff
    g_values = (cfg.value_coeff * 2.0 * (values - batch.returns) / n)[:, None]

    policy_grads = mlp_backward(params.policy, policy_acts, g_mean)
    value_grads = mlp_backward(params.value, value_acts, g_values)
    grad = PolicyParams(policy_grads, g_log_std, value_grads).to_vector()

    info = {
        "surrogate": surrogate,
        "value_loss": value_loss,
        "approx_kl": float(np.mean((ratio - 1.0) - np.log(ratio))),
        "clip_fraction": float(np.mean(np.abs(ratio - 1.0) > eps)),
        "entropy": entropy,
    }
    return float(loss), grad, info


def clip_grad_norm(grad: np.ndarray, max_norm: float) -> np.ndarray:
    norm = float(np.linalg.norm(grad))
    if norm > max_norm:
        return grad * (max_norm / norm)
    return grad


class Adam:
    """Adam optimizer over a flat parameter vector."""

    def __init__(
        self,
        size: int,
        learn_rate: float = 3e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.learn_rate = learn_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return theta - self.learn_rate * m_hat / (np.sqrt(v_hat) + self.eps)

    def snapshot(self) -> tuple[np.ndarray, np.ndarray, int]:
        return self.m.copy(), self.v.copy(), self.t

    def restore(self, state: tuple[np.ndarray, np.ndarray, int]) -> None:
        self.m, self.v, self.t = state[0].copy(), state[1].copy(), state[2]

    def to_dict(self) -> dict[str, Any]:
        return {"t": self.t, "m": self.m.tolist(), "v": self.v.tolist()}

    @classmethod
    def from_dict(cls, data: dict[str, Any], learn_rate: float) -> "Adam":
        m = np.asarray(data["m"], dtype=np.float64)
        adam = cls(len(m), learn_rate=learn_rate)
        adam.m = m
        adam.v = np.asarray(data["v"], dtype=np.float64)
        adam.t = int(data["t"])
        return adam


def ppo_update(
    params: PolicyParams,
    buffer: RolloutBuffer,
    cfg: PpoConfig,
    rng: np.random.Generator,
    optimizer: Optional[Adam] = None,
) -> tuple[PolicyParams, TrainStats]:
    """
    Run ``epochs_per_update`` passes of shuffled minibatch Adam steps.

    Policy and value gradients are clipped to ``max_grad_norm`` separately and
    log_std is clamped after every step. On a non-finite loss or gradient the
    optimizer state is rolled back and NonFiniteError is raised; the caller
    keeps the previous parameters.

    Args:
        params: Current parameters (not mutated)
        buffer: Collected transitions; episodes closed with ``terminals``
        cfg: PPO hyperparameters
        rng: Stream used for minibatch shuffling
        optimizer: Adam state carried across updates; a fresh one when None

    Returns:
        (updated parameters, update statistics)
    """
    size = len(buffer)
    if size == 0:
        raise ValueError("cannot update on an empty rollout buffer")

    optimizer = optimizer or Adam(params.size, learn_rate=cfg.learn_rate)
    saved = optimizer.snapshot()

    obs = buffer.obs[:size]
    raw_actions = buffer.raw_actions[:size]
    old_log_probs = buffer.log_probs[:size]
    advantages, returns = gae(
        buffer.rewards[:size],
        buffer.values[:size],
        buffer.terminals[:size],
        cfg.gamma,
        cfg.gae_lambda,
    )
    advantages = normalize_advantages(advantages)

    split = params.policy_size
    theta = params.to_vector()
    current = params.copy()
    totals = dict.fromkeys(("surrogate", "value_loss", "approx_kl", "clip_fraction"), 0.0)
    count = 0

    for epoch in range(cfg.epochs_per_update):
        order = rng.permutation(size)
        for start in range(0, size, cfg.minibatch_size):
            idx = order[start : start + cfg.minibatch_size]
            batch = Minibatch(
                obs[idx], raw_actions[idx], old_log_probs[idx], advantages[idx], returns[idx]
            )
            loss, grad, info = loss_and_grad(current, batch, cfg)
            if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
                optimizer.restore(saved)
                raise NonFiniteError("ppo update", f"epoch {epoch}, minibatch {count}")

            grad = np.concatenate(
                [
                    clip_grad_norm(grad[:split], cfg.max_grad_norm),
                    clip_grad_norm(grad[split:], cfg.max_grad_norm),
                ]
            )
            theta = optimizer.step(theta, grad)
            current = params.with_vector(theta)
            current.clamp_log_std()
            theta = current.to_vector()

            for key in totals:
                totals[key] += info[key]
            count += 1

    if not current.is_finite():
        optimizer.restore(saved)
        raise NonFiniteError("ppo update", "parameters after update")

    stats = TrainStats(
        surrogate=totals["surrogate"] / count,
        value_loss=totals["value_loss"] / count,
        approx_kl=totals["approx_kl"] / count,
        clip_fraction=totals["clip_fraction"] / count,
        entropy=gaussian_entropy(current.log_std),
        minibatches=count,
    )
    logger.debug(
        "PPO update: surrogate=%.4f value_loss=%.4f kl=%.5f clip=%.3f",
        stats.surrogate,
        stats.value_loss,
        stats.approx_kl,
        stats.clip_fraction,
    )
    return current, stats
