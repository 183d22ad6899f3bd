"""Adam training loop with plateau scheduling and divergence recovery."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingDivergenceError
from ..episodes import PriorConfig, generate_batch
from ..rng import derived_rng
from .checkpoint import save_checkpoint
from .config import ModelConfig, TrainConfig
from .network import init_params, loss_and_grads

_INIT_STREAM = 0
_BATCH_STREAM = 1


@dataclass
class TrainResult:
    """Trained parameters plus the loss and learning-rate trace."""

    params: dict[str, np.ndarray]
    config: ModelConfig
    train_config: TrainConfig
    history: np.ndarray
    smoothed: np.ndarray
    lr_history: np.ndarray
    steps_run: int
    lr_reductions: int = 0
    checkpoint_path: str | None = None
    meta: dict = field(default_factory=dict)


class _Plateau:
    """Halve the learning rate when the smoothed loss stalls."""

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.lr = cfg.learning_rate
        self.best = np.inf
        self.wait = 0
        self.reductions = 0

    def update(self, smoothed: float) -> float:
        if smoothed < self.best - self.cfg.plateau_min_delta:
            self.best = smoothed
            self.wait = 0
        else:
            self.wait += 1
            if self.wait >= self.cfg.plateau_patience:
                self.lr = max(self.lr * self.cfg.plateau_factor,
                              self.cfg.min_learning_rate)
                self.wait = 0
                self.reductions += 1
        return self.lr


def _copy_params(params):
    return {k: v.copy() for k, v in params.items()}


def train(model_config: ModelConfig, train_config: TrainConfig,
          prior: PriorConfig | None = None, episodes=None,
          params: dict[str, np.ndarray] | None = None,
          checkpoint_path=None, progress=None) -> TrainResult:
    """Train the in-context model.

    Batches come either from ``prior`` (a fresh batch per step, derived
    deterministically from the training seed and step index) or from a
    fixed ``episodes`` snapshot cycled in order. Exactly one source must
    be given. ``progress(step, loss, smoothed, lr)`` is called per step
    when provided.

    On a non-finite or exploding loss the loop stops and raises
    :class:`TrainingDivergenceError` carrying the last checkpointed
    parameters and the loss history up to the failure.
    """
    if (prior is None) == (episodes is None):
        raise ValueError("pass exactly one of prior or episodes")
    cfg = train_config
    if params is None:
        params = init_params(model_config, derived_rng(cfg.seed, _INIT_STREAM))
    else:
        params = _copy_params(params)

    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(u) for k, u in params.items()}
    sched = _Plateau(cfg)
    history, smoothed_hist, lr_hist = [], [], []
    last_good = _copy_params(params)
    last_good_step = 0
    reference = None

    for step in range(cfg.steps):
        if episodes is not None:
            lo = (step * cfg.batch_size) % len(episodes)
            batch = [episodes[(lo + i) % len(episodes)] for i in range(cfg.batch_size)]
        else:
            batch = generate_batch(prior, cfg.batch_size,
                                   derived_rng(cfg.seed, _BATCH_STREAM, step))
        loss, grads = loss_and_grads(params, model_config, batch)
        history.append(loss)
        window = history[-cfg.smooth_window:]
        smoothed = float(np.mean(window))
        smoothed_hist.append(smoothed)
        if reference is None and len(history) >= cfg.smooth_window:
            reference = smoothed

        exploded = reference is not None and smoothed > cfg.divergence_factor * reference
        if not np.isfinite(loss) or exploded:
            raise TrainingDivergenceError(
                f"training diverged at step {step} (loss {loss!r}); "
                f"restored parameters from step {last_good_step}",
                last_good_params=last_good,
                history=np.asarray(history),
            )

        lr = sched.lr
        if len(history) >= cfg.smooth_window:
            lr = sched.update(smoothed)
        if cfg.warmup_steps > 0:
            lr *= min(1.0, (step + 1) / cfg.warmup_steps)
        lr_hist.append(lr)

        t = step + 1
        bc1 = 1.0 - cfg.beta1 ** t
        bc2 = 1.0 - cfg.beta2 ** t
        for k in params:
            g = grads[k]
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g
            update = (m[k] / bc1) / (np.sqrt(v[k] / bc2) + cfg.adam_eps)
            params[k] = params[k] - lr * update - lr * cfg.weight_decay * params[k]

        if progress is not None:
            progress(step, loss, smoothed, lr)
        if (step + 1) % cfg.checkpoint_every == 0:
            last_good = _copy_params(params)
            last_good_step = step + 1
            if checkpoint_path is not None:
                save_checkpoint(checkpoint_path, params, model_config,
                                extras={"step": step + 1, "lr": lr})

    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, params, model_config,
                        extras={"step": cfg.steps, "lr": sched.lr})
    return TrainResult(
        params=params,
        config=model_config,
        train_config=cfg,
        history=np.asarray(history),
        smoothed=np.asarray(smoothed_hist),
        lr_history=np.asarray(lr_hist),
        steps_run=cfg.steps,
        lr_reductions=sched.reductions,
        checkpoint_path=str(checkpoint_path) if checkpoint_path is not None else None,
    )
