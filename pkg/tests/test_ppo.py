"""
Tests for the numpy networks, PPO internals and checkpoints.
"""

import json
import math

import numpy as np
import pytest

from wxedge.agent.checkpoint import load_checkpoint, save_checkpoint
from wxedge.agent.network import (
    ACT_DIM,
    OBS_DIM,
    PolicyParams,
    forward_batch,
    policy_forward,
)
from wxedge.agent.ppo import (
    Adam,
    Minibatch,
    RolloutBuffer,
    gae,
    gaussian_log_prob,
    loss_and_grad,
    normalize_advantages,
    ppo_update,
    sample_action,
    surrogate_objective,
)
from wxedge.errors import InvalidArgumentError, NonFiniteError, SchemaVersionError
from wxedge.models.agent import PpoConfig


def brute_force_gae(rewards, values, terminals, gamma, lam, last_value=0.0):
    """Direct discounted sums of TD residuals, O(T^2)."""
    steps = len(rewards)
    deltas = []
    for t in range(steps):
        if terminals[t]:
            next_value = 0.0
        else:
            next_value = values[t + 1] if t + 1 < steps else last_value
        deltas.append(rewards[t] + gamma * next_value - values[t])

    advantages = np.zeros(steps)
    for t in range(steps):
        total = 0.0
        for k in range(t, steps):
            total += (gamma * lam) ** (k - t) * deltas[k]
            if terminals[k]:
                break
        advantages[t] = total
    return advantages


def synthetic_buffer(params: PolicyParams, rng: np.random.Generator, size: int = 128) -> RolloutBuffer:
    buffer = RolloutBuffer(size, params.obs_dim, params.act_dim)
    for t in range(size):
        obs = rng.standard_normal(params.obs_dim)
        mean, log_std, value = policy_forward(params, obs)
        sample = sample_action(mean, log_std, rng)
        buffer.add(obs, sample.raw, sample.log_prob, float(rng.standard_normal()), value, (t + 1) % 32 == 0)
    return buffer


class TestNetwork:
    """Test PolicyParams and the forward pass."""

    def test_zero_network(self):
        """Test an all-zero network outputs zeros."""
        params = PolicyParams.zeros()

        mean, log_std, value = policy_forward(params, np.ones(OBS_DIM))

        np.testing.assert_array_equal(mean, np.zeros(ACT_DIM))
        np.testing.assert_array_equal(log_std, np.zeros(ACT_DIM))
        assert value == 0.0

    def test_deterministic_forward(self):
        """Test the same input gives the same output."""
        params = PolicyParams.initialize(np.random.default_rng(0))
        fs = np.random.default_rng(1).standard_normal(OBS_DIM)

        first = policy_forward(params, fs)
        second = policy_forward(params, fs)

        np.testing.assert_array_equal(first[0], second[0])
        assert first[2] == second[2]

    def test_hand_computed_linear_layer(self):
        """Test a single linear layer against a hand computation."""
        weights = np.zeros((OBS_DIM, ACT_DIM))
        for i in range(ACT_DIM):
            weights[i, i] = 1.0
        weights[6, 0] = 2.0
        bias = np.array([0.5, 0.0, -0.5, 0.0, 1.0])
        params = PolicyParams(
            policy=[(weights, bias)],
            log_std=np.full(ACT_DIM, -1.0),
            value=[(np.ones((OBS_DIM, 1)), np.array([0.25]))],
        )
        fs = np.arange(OBS_DIM, dtype=float)

        mean, log_std, value = policy_forward(params, fs)

        np.testing.assert_allclose(mean, [0.0 + 2 * 6.0 + 0.5, 1.0, 2.0 - 0.5, 3.0, 4.0 + 1.0])
        np.testing.assert_array_equal(log_std, np.full(ACT_DIM, -1.0))
        assert value == pytest.approx(sum(range(OBS_DIM)) + 0.25)

    def test_initialization(self):
        """Test init shapes, the small policy head and orthogonal hidden layers."""
        params = PolicyParams.initialize(np.random.default_rng(0), log_std_init=-0.5)

        assert params.hidden_sizes == (64, 64)
        np.testing.assert_array_equal(params.log_std, np.full(ACT_DIM, -0.5))
        hidden = params.policy[1][0]
        np.testing.assert_allclose(hidden.T @ hidden, 2.0 * np.eye(64), atol=1e-10)

        means, _ = forward_batch(params, np.random.default_rng(1).standard_normal((100, OBS_DIM)))
        assert np.max(np.abs(means)) < 0.2

    def test_vector_round_trip(self):
        """Test flattening and rebuilding preserves every coefficient."""
        params = PolicyParams.initialize(np.random.default_rng(3), hidden_sizes=(8, 4))

        rebuilt = params.with_vector(params.to_vector())

        np.testing.assert_array_equal(rebuilt.to_vector(), params.to_vector())
        assert rebuilt.hidden_sizes == (8, 4)
        assert params.policy_size == 12 * 8 + 8 + 8 * 4 + 4 + 4 * 5 + 5 + 5

    def test_wrong_vector_length(self):
        """Test a vector of the wrong length is rejected."""
        params = PolicyParams.zeros(hidden_sizes=(4,))

        with pytest.raises(ValueError):
            params.with_vector(np.zeros(3))

    def test_clamp_log_std(self):
        """Test log_std is clamped to [-5, 2]."""
        params = PolicyParams.zeros(hidden_sizes=(4,))
        params.log_std[:] = [-9.0, -5.0, 0.0, 2.0, 7.0]

        params.clamp_log_std()

        np.testing.assert_array_equal(params.log_std, [-5.0, -5.0, 0.0, 2.0, 2.0])


class TestSampling:
    """Test action sampling."""

    def test_log_prob_at_mean(self):
        """Test the 5-dim standard-normal log density at zero."""
        sample = sample_action(np.zeros(ACT_DIM), np.zeros(ACT_DIM), np.random.default_rng(0), deterministic=True)

        assert sample.log_prob == pytest.approx(-4.5946927, abs=1e-7)
        np.testing.assert_array_equal(sample.action, np.zeros(ACT_DIM))

    def test_clamped_action(self):
        """Test out-of-range raw samples are clamped in the action only."""
        mean = np.array([1.7, -3.0, 0.2, 0.0, 0.0])

        sample = sample_action(mean, np.zeros(ACT_DIM), np.random.default_rng(0), deterministic=True)

        assert sample.action[0] == 1.0
        assert sample.action[1] == -1.0
        assert sample.raw[0] == 1.7

    def test_log_prob_of_raw_sample(self):
        """Test the log-probability is of the unclamped sample."""
        mean = np.full(ACT_DIM, 0.9)
        log_std = np.full(ACT_DIM, 0.3)

        sample = sample_action(mean, log_std, np.random.default_rng(4))

        assert sample.log_prob == pytest.approx(float(gaussian_log_prob(sample.raw, mean, log_std)))
        assert np.all(np.abs(sample.action) <= 1.0)

    def test_seeded(self):
        """Test sampling is reproducible from the seed."""
        first = sample_action(np.zeros(ACT_DIM), np.zeros(ACT_DIM), np.random.default_rng(9))
        second = sample_action(np.zeros(ACT_DIM), np.zeros(ACT_DIM), np.random.default_rng(9))

        np.testing.assert_array_equal(first.raw, second.raw)


class TestGae:
    """Test generalized advantage estimation."""

    def test_single_step(self):
        """Test one terminal step."""
        advantages, returns = gae([1.0], [0.0], [True], 0.99, 0.95)

        np.testing.assert_array_equal(advantages, [1.0])
        np.testing.assert_array_equal(returns, [1.0])

    def test_undiscounted_pair(self):
        """Test gamma = lambda = 1 over two steps."""
        advantages, _ = gae([1.0, 1.0], [0.0, 0.0], [False, True], 1.0, 1.0)

        np.testing.assert_array_equal(advantages, [2.0, 1.0])

    def test_zero_case(self):
        """Test zero rewards and values give zero advantages."""
        advantages, returns = gae(np.zeros(8), np.zeros(8), np.zeros(8, dtype=bool), 0.99, 0.95)

        np.testing.assert_array_equal(advantages, np.zeros(8))
        np.testing.assert_array_equal(returns, np.zeros(8))

    def test_matches_brute_force(self):
        """Test the recursion against direct discounted sums."""
        rng = np.random.default_rng(0)
        for _ in range(40):
            steps = int(rng.integers(1, 65))
            rewards = rng.standard_normal(steps)
            values = rng.standard_normal(steps)
            terminals = rng.random(steps) < 0.1
            gamma, lam = rng.uniform(0.8, 1.0), rng.uniform(0.8, 1.0)
            last_value = float(rng.standard_normal())

            advantages, returns = gae(rewards, values, terminals, gamma, lam, last_value)
            expected = brute_force_gae(rewards, values, terminals, gamma, lam, last_value)

            np.testing.assert_allclose(advantages, expected, rtol=0, atol=1e-10)
            np.testing.assert_allclose(returns, expected + values, rtol=0, atol=1e-10)

    def test_normalize(self):
        """Test normalized advantages have zero mean and unit deviation."""
        normalized = normalize_advantages(np.random.default_rng(1).uniform(-5, 20, 256))

        assert normalized.mean() == pytest.approx(0.0, abs=1e-12)
        assert normalized.std() == pytest.approx(1.0, abs=1e-6)


class TestSurrogate:
    """Test the clipped surrogate and its gradient."""

    def test_ratio_one_identity(self):
        """Test the surrogate equals the mean advantage when policies match."""
        rng = np.random.default_rng(0)
        params = PolicyParams.initialize(rng, hidden_sizes=(8,))
        obs = rng.standard_normal((20, OBS_DIM))
        means, _ = forward_batch(params, obs)
        raw = means + rng.standard_normal(means.shape)
        log_probs = gaussian_log_prob(raw, means, params.log_std)
        advantages = rng.standard_normal(20)

        assert surrogate_objective(params, obs, raw, log_probs, advantages, 0.2) == pytest.approx(
            advantages.mean()
        )

    def test_clip_branch(self):
        """Test a ratio of 1.5 with positive advantages contributes 1.2 A."""
        rng = np.random.default_rng(1)
        params = PolicyParams.initialize(rng, hidden_sizes=(8,))
        obs = rng.standard_normal((10, OBS_DIM))
        means, _ = forward_batch(params, obs)
        raw = means + rng.standard_normal(means.shape)
        old = gaussian_log_prob(raw, means, params.log_std) - math.log(1.5)
        advantages = rng.uniform(0.5, 2.0, 10)

        assert surrogate_objective(params, obs, raw, old, advantages, 0.2) == pytest.approx(
            1.2 * advantages.mean()
        )

    def test_gradient_matches_finite_differences(self):
        """Test the analytic gradient on a 75-parameter net."""
        rng = np.random.default_rng(2)
        params = PolicyParams.initialize(rng, hidden_sizes=(2,), log_std_init=-0.3)
        assert params.size <= 100

        cfg = PpoConfig(value_coeff=0.5, entropy_coeff=0.01)
        obs = rng.standard_normal((16, OBS_DIM))
        means, values = forward_batch(params, obs)
        raw = means + np.exp(params.log_std) * rng.standard_normal(means.shape)
        old = gaussian_log_prob(raw, means, params.log_std) + rng.normal(0.0, 0.05, 16)
        batch = Minibatch(obs, raw, old, rng.standard_normal(16), values + rng.standard_normal(16))

        _, analytic, _ = loss_and_grad(params, batch, cfg)

        theta = params.to_vector()
        h = 1e-5
        numeric = np.zeros_like(theta)
        for i in range(theta.size):
            up, down = theta.copy(), theta.copy()
            up[i] += h
            down[i] -= h
            loss_up, _, _ = loss_and_grad(params.with_vector(up), batch, cfg)
            loss_down, _, _ = loss_and_grad(params.with_vector(down), batch, cfg)
            numeric[i] = (loss_up - loss_down) / (2 * h)

        relative = np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), 1e-4)
        assert np.max(relative) <= 1e-4


class TestRolloutBuffer:
    """Test RolloutBuffer."""

    def test_fill(self):
        """Test adding transitions up to capacity."""
        buffer = RolloutBuffer(3, OBS_DIM, ACT_DIM)
        for _ in range(3):
            buffer.add(np.zeros(OBS_DIM), np.zeros(ACT_DIM), -1.0, 1.0, 0.5, False)

        assert buffer.full
        assert len(buffer) == 3
        with pytest.raises(IndexError):
            buffer.add(np.zeros(OBS_DIM), np.zeros(ACT_DIM), -1.0, 1.0, 0.5, False)

    def test_terminal_and_clear(self):
        """Test a terminal flag is stored and cleared on reuse."""
        buffer = RolloutBuffer(4, OBS_DIM, ACT_DIM)
        buffer.add(np.zeros(OBS_DIM), np.zeros(ACT_DIM), 0.0, 0.0, 0.0, True)

        assert buffer.terminals[0]

        buffer.clear()
        assert len(buffer) == 0
        assert not buffer.terminals.any()


class TestPpoUpdate:
    """Test the PPO update loop."""

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_update_improves_surrogate(self, seed):
        """Test one update raises the clipped surrogate on its own buffer."""
        rng = np.random.default_rng(seed)
        params = PolicyParams.initialize(rng, hidden_sizes=(16,))
        buffer = synthetic_buffer(params, rng)
        cfg = PpoConfig(learn_rate=1e-3, epochs_per_update=4, minibatch_size=32)

        advantages, _ = gae(buffer.rewards, buffer.values, buffer.terminals, cfg.gamma, cfg.gae_lambda)
        advantages = normalize_advantages(advantages)
        args = (buffer.obs, buffer.raw_actions, buffer.log_probs, advantages, cfg.clip_ratio)
        before = surrogate_objective(params, *args)

        updated, stats = ppo_update(params, buffer, cfg, np.random.default_rng(100 + seed))

        assert surrogate_objective(updated, *args) > before
        assert stats.minibatches == 4 * 4
        assert 0.0 <= stats.clip_fraction <= 1.0
        assert updated.is_finite()

    def test_input_params_untouched(self):
        """Test the update returns new parameters."""
        rng = np.random.default_rng(5)
        params = PolicyParams.initialize(rng, hidden_sizes=(8,))
        original = params.to_vector().copy()
        buffer = synthetic_buffer(params, rng, size=64)

        ppo_update(params, buffer, PpoConfig(epochs_per_update=1), np.random.default_rng(0))

        np.testing.assert_array_equal(params.to_vector(), original)

    def test_non_finite_aborts(self):
        """Test a NaN reward aborts the update and rolls back Adam."""
        rng = np.random.default_rng(6)
        params = PolicyParams.initialize(rng, hidden_sizes=(8,))
        buffer = synthetic_buffer(params, rng, size=64)
        buffer.rewards[10] = np.nan
        optimizer = Adam(params.size)

        with pytest.raises(NonFiniteError):
            ppo_update(params, buffer, PpoConfig(), np.random.default_rng(0), optimizer)

        assert optimizer.t == 0
        assert not optimizer.m.any()

    def test_log_std_stays_clamped(self):
        """Test log_std stays in range after large steps."""
        rng = np.random.default_rng(7)
        params = PolicyParams.initialize(rng, hidden_sizes=(8,), log_std_init=1.99)
        buffer = synthetic_buffer(params, rng, size=64)

        updated, _ = ppo_update(params, buffer, PpoConfig(learn_rate=0.05), np.random.default_rng(0))

        assert np.all(updated.log_std <= 2.0)
        assert np.all(updated.log_std >= -5.0)


class TestCheckpoint:
    """Test checkpoint persistence."""

    def test_round_trip(self, tmp_path):
        """Test parameters, Adam state and config survive a save and load."""
        params = PolicyParams.initialize(np.random.default_rng(0), hidden_sizes=(8, 8))
        optimizer = Adam(params.size)
        optimizer.step(params.to_vector(), np.ones(params.size))
        cfg = PpoConfig(hidden_sizes=(8, 8), seed=3)
        path = tmp_path / "checkpoint.json"

        save_checkpoint(path, params, optimizer, 7, cfg)
        loaded = load_checkpoint(path)

        np.testing.assert_array_equal(loaded.params.to_vector(), params.to_vector())
        np.testing.assert_array_equal(loaded.optimizer.m, optimizer.m)
        assert loaded.optimizer.t == 1
        assert loaded.update_index == 7
        assert loaded.ppo == cfg

    def test_unsupported_version(self, tmp_path):
        """Test a checkpoint with an unknown schema_version is rejected."""
        params = PolicyParams.zeros(hidden_sizes=(4,))
        path = tmp_path / "checkpoint.json"
        save_checkpoint(path, params, Adam(params.size), 0, PpoConfig())
        data = json.loads(path.read_text())
        data["schema_version"] = 999
        path.write_text(json.dumps(data))

        with pytest.raises(SchemaVersionError):
            load_checkpoint(path)

    def test_missing(self, tmp_path):
        """Test a missing checkpoint is an argument error."""
        with pytest.raises(InvalidArgumentError):
            load_checkpoint(tmp_path / "nope.json")
