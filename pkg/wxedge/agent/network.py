"""
Policy and value networks as plain numpy MLPs with hand-written backprop.

Both networks use tanh hidden layers and a linear output. The policy network
outputs the Gaussian mean; its log standard deviation is a state-independent
parameter vector.
"""

from collections.abc import Sequence
from typing import Any

import numpy as np

from ..errors import SchemaVersionError

OBS_DIM = 12
ACT_DIM = 5
LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0

CHECKPOINT_SCHEMA_VERSION = 1

Layer = tuple[np.ndarray, np.ndarray]


def _orthogonal(rng: np.random.Generator, n_in: int, n_out: int, gain: float) -> np.ndarray:
    a = rng.standard_normal((max(n_in, n_out), min(n_in, n_out)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if n_in < n_out:
        q = q.T
    return gain * q[:n_in, :n_out]


def _init_mlp(
    rng: np.random.Generator, sizes: Sequence[int], out_gain: float
) -> list[Layer]:
    layers: list[Layer] = []
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        gain = out_gain if i == len(sizes) - 2 else np.sqrt(2.0)
        layers.append((_orthogonal(rng, n_in, n_out, gain), np.zeros(n_out)))
    return layers


def mlp_forward(layers: list[Layer], x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Forward pass over a batch; returns the output and the per-layer activations."""
    activations = [x]
    h = x
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        z = h @ w + b
        h = np.tanh(z) if i < last else z
        activations.append(h)
    return h, activations


def mlp_backward(
    layers: list[Layer], activations: list[np.ndarray], grad_out: np.ndarray
) -> list[Layer]:
    """Gradients of each (W, b) given dL/d(output)."""
    grads: list[Layer] = []
    g = grad_out
    for i in reversed(range(len(layers))):
        w, _ = layers[i]
        h_in = activations[i]
        grads.append((h_in.T @ g, g.sum(axis=0)))
        if i > 0:
            g = (g @ w.T) * (1.0 - activations[i] ** 2)
    grads.reverse()
    return grads


class PolicyParams:
    """Trainable parameters of the Gaussian policy and the value function."""

    def __init__(self, policy: list[Layer], log_std: np.ndarray, value: list[Layer]):
        self.policy = policy
        self.log_std = log_std
        self.value = value

    @classmethod
    def initialize(
        cls,
        rng: np.random.Generator,
        obs_dim: int = OBS_DIM,
        act_dim: int = ACT_DIM,
        hidden_sizes: Sequence[int] = (64, 64),
        log_std_init: float = 0.0,
    ) -> "PolicyParams":
        """Orthogonal init; the policy head is scaled by 0.01 so early actions sit near zero."""
        policy = _init_mlp(rng, [obs_dim, *hidden_sizes, act_dim], out_gain=0.01)
        value = _init_mlp(rng, [obs_dim, *hidden_sizes, 1], out_gain=1.0)
        log_std = np.full(act_dim, float(log_std_init))
        return cls(policy, log_std, value)

    @classmethod
    def zeros(
        cls,
        obs_dim: int = OBS_DIM,
        act_dim: int = ACT_DIM,
        hidden_sizes: Sequence[int] = (64, 64),
    ) -> "PolicyParams":
        def build(sizes: list[int]) -> list[Layer]:
            return [(np.zeros((a, b)), np.zeros(b)) for a, b in zip(sizes[:-1], sizes[1:])]

        return cls(
            build([obs_dim, *hidden_sizes, act_dim]),
            np.zeros(act_dim),
            build([obs_dim, *hidden_sizes, 1]),
        )

    @property
    def obs_dim(self) -> int:
        return int(self.policy[0][0].shape[0])

    @property
    def act_dim(self) -> int:
        return int(self.log_std.shape[0])

    @property
    def hidden_sizes(self) -> tuple[int, ...]:
        return tuple(int(w.shape[1]) for w, _ in self.policy[:-1])

    def _arrays(self) -> list[np.ndarray]:
        arrays: list[np.ndarray] = []
        for w, b in self.policy:
            arrays.extend((w, b))
        arrays.append(self.log_std)
        for w, b in self.value:
            arrays.extend((w, b))
        return arrays

    @property
    def policy_size(self) -> int:
        """Length of the policy segment (layers + log_std) at the front of the vector."""
        return sum(w.size + b.size for w, b in self.policy) + self.log_std.size

    @property
    def size(self) -> int:
        return sum(a.size for a in self._arrays())

    def to_vector(self) -> np.ndarray:
        """Flatten as policy layers, log_std, value layers."""
        return np.concatenate([a.ravel() for a in self._arrays()])

    def with_vector(self, vector: np.ndarray) -> "PolicyParams":
        """New parameters with this layout and the given flat values."""
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.size,):
            raise ValueError(f"Expected a vector of length {self.size}, got {vector.shape}")

        offset = 0

        def take(shape: tuple[int, ...]) -> np.ndarray:
            nonlocal offset
            count = int(np.prod(shape))
            chunk = vector[offset : offset + count].reshape(shape).copy()
            offset += count
            return chunk

        policy = [(take(w.shape), take(b.shape)) for w, b in self.policy]
        log_std = take(self.log_std.shape)
        value = [(take(w.shape), take(b.shape)) for w, b in self.value]
        return PolicyParams(policy, log_std, value)

    def copy(self) -> "PolicyParams":
        return self.with_vector(self.to_vector())

    def clamp_log_std(self) -> None:
        np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX, out=self.log_std)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.to_vector())))

    def to_dict(self) -> dict[str, Any]:
        """Shapes plus flat coefficient arrays."""
        return {
            "schema_version": CHECKPOINT_SCHEMA_VERSION,
            "obs_dim": self.obs_dim,
            "act_dim": self.act_dim,
            "hidden_sizes": list(self.hidden_sizes),
            "shapes": [list(a.shape) for a in self._arrays()],
            "coefficients": self.to_vector().tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PolicyParams":
        version = data.get("schema_version")
        if version != CHECKPOINT_SCHEMA_VERSION:
            raise SchemaVersionError("checkpoint", version, (CHECKPOINT_SCHEMA_VERSION,))

        template = cls.zeros(
            obs_dim=int(data["obs_dim"]),
            act_dim=int(data["act_dim"]),
            hidden_sizes=[int(h) for h in data["hidden_sizes"]],
        )
        shapes = [list(a.shape) for a in template._arrays()]
        if shapes != [list(s) for s in data["shapes"]]:
            raise ValueError("Checkpoint shapes do not match the declared architecture")
        return template.with_vector(np.asarray(data["coefficients"], dtype=np.float64))


def forward_batch(params: PolicyParams, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Means (N, act_dim) and values (N,) for a batch of feature vectors."""
    obs = np.atleast_2d(obs)
    means, _ = mlp_forward(params.policy, obs)
    values, _ = mlp_forward(params.value, obs)
    return means, values[:, 0]


def policy_forward(
    params: PolicyParams, fs: np.ndarray
) -> tuple[np.ndarray, np.ndarray, float]:
    """(mean, log_std, value) for one feature vector."""
    means, values = forward_batch(params, fs)
    return means[0], params.log_std.copy(), float(values[0])
