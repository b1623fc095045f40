"""
Agent-side models: PPO hyperparameters and update statistics.
"""

from pydantic import Field, model_validator

from .common import WxModel


class PpoConfig(WxModel):
    """PPO hyperparameters and training cadence."""

    gamma: float = Field(0.99, gt=0.0, le=1.0)
    gae_lambda: float = Field(0.95, gt=0.0, le=1.0)
    clip_ratio: float = Field(0.2, gt=0.0, lt=1.0)
    learn_rate: float = Field(3e-4, gt=0.0)
    epochs_per_update: int = Field(10, gt=0)
    minibatch_size: int = Field(64, gt=0)
    value_coeff: float = Field(0.5, ge=0.0)
    entropy_coeff: float = Field(0.0, ge=0.0)
    episode_len: int = Field(512, gt=0)
    episodes_per_update: int = Field(4, gt=0)
    total_steps: int = Field(40960, gt=0)
    hidden_sizes: tuple[int, ...] = Field((64, 64), min_length=1)
    log_std_init: float = Field(0.0, ge=-5.0, le=2.0)
    max_grad_norm: float = Field(0.5, gt=0.0)
    seed: int = Field(0, ge=0, description="Training master seed")

    @model_validator(mode="after")
    def _positive_hidden(self) -> "PpoConfig":
        if any(size <= 0 for size in self.hidden_sizes):
            raise ValueError("hidden_sizes must be positive")
        return self

    @property
    def batch_size(self) -> int:
        """Transitions collected per update."""
        return self.episode_len * self.episodes_per_update

    @property
    def num_updates(self) -> int:
        """Updates needed to reach ``total_steps``."""
        return self.total_steps // self.batch_size


class TrainStats(WxModel):
    """Diagnostics from one PPO update."""

    surrogate: float = Field(description="Mean clipped surrogate objective")
    value_loss: float = Field(description="Mean squared value error")
    approx_kl: float = Field(description="Mean KL estimate (ratio - 1 - log ratio)")
    clip_fraction: float = Field(ge=0.0, le=1.0)
    entropy: float = Field(description="Policy entropy (nats)")
    minibatches: int = Field(ge=0)
