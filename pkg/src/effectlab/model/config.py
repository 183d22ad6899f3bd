"""Model and training hyperparameter containers."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigurationError


@dataclass(frozen=True)
class ModelConfig:
    """Transformer shape.

    ``max_features`` must match the episode feature budget; the token width
    is ``max_features + 3`` (covariates, treatment flag, outcome, outcome
    mask).
    """

    d_model: int = 64
    n_layers: int = 3
    n_heads: int = 4
    ffn_dim: int = 128
    max_features: int = 16

    def __post_init__(self):
        for name in ("d_model", "n_layers", "n_heads", "ffn_dim", "max_features"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.d_model % self.n_heads != 0:
            raise ConfigurationError("d_model must be divisible by n_heads")

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads

    @property
    def d_in(self) -> int:
        return self.max_features + 3


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings.

    Adam with decoupled weight decay; the learning rate ramps linearly
    over ``warmup_steps`` (0 disables warmup) and halves when the
    smoothed loss stops improving (reduce-on-plateau). ``smooth_window``
    is the moving-average span used both by the scheduler and by
    progress reporting.
    """

    steps: int = 500
    batch_size: int = 8
    learning_rate: float = 1e-3
    warmup_steps: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 1e-5
    plateau_factor: float = 0.5
    plateau_patience: int = 100
    plateau_min_delta: float = 1e-4
    smooth_window: int = 50
    min_learning_rate: float = 1e-7
    seed: int = 0
    checkpoint_every: int = 100
    divergence_factor: float = 50.0

    def __post_init__(self):
        if self.steps < 0:
            raise ConfigurationError("steps must be >= 0")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.warmup_steps < 0:
            raise ConfigurationError("warmup_steps must be >= 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigurationError("Adam betas must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ConfigurationError("weight_decay must be >= 0")
        if not (0 < self.plateau_factor < 1):
            raise ConfigurationError("plateau_factor must lie in (0, 1)")
        if self.plateau_patience < 1 or self.smooth_window < 1:
            raise ConfigurationError("plateau_patience and smooth_window must be >= 1")
        if self.checkpoint_every < 1:
            raise ConfigurationError("checkpoint_every must be >= 1")
        if self.divergence_factor <= 1:
            raise ConfigurationError("divergence_factor must exceed 1")
