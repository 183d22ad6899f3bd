"""S-learner baseline: one ridge regressor over (covariates, treatment).

The base model is ridge regression on random Fourier features of the
joint (covariates, treatment) vector, which approximates a Gaussian
kernel machine while staying deterministic and dependency-free. The
effect estimate is the plug-in difference mu(x, t1) - mu(x, t0).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotFittedError, PositivityError
from .model.checkpoint import save_checkpoint
from .model.config import ModelConfig
from .model.inference import CateEstimate
from .rng import derived_rng, ensure_rng
from .table import (
    CATEGORICAL,
    CONTINUOUS,
    ROLE_COVARIATE,
    ROLE_OUTCOME,
    ROLE_TREATMENT,
    SampleTable,
)

_MEDIAN_SUBSAMPLE = 500


@dataclass
class SLearner:
    """Configuration knobs; call :meth:`fit` before estimating."""

    n_features: int = 200
    ridge_lambda: float = 1e-3
    seed: int = 0
    name: str = "s-learner"

    def __post_init__(self):
        self._fitted = False

    # ---- encoding --------------------------------------------------------

    def _design(self, covariates: SampleTable, t: np.ndarray) -> np.ndarray:
        blocks = []
        for i, col in enumerate(self._cov_columns):
            v = covariates.values(col.name)
            if col.kind == CATEGORICAL:
                onehot = np.zeros((v.shape[0], col.categories))
                onehot[np.arange(v.shape[0]), v.astype(np.intp)] = 1.0
                blocks.append(onehot)
            else:
                mean, std = self._cov_stats[i]
                blocks.append(((v - mean) / std)[:, None])
        blocks.append(np.asarray(t, dtype=np.float64)[:, None])
        return np.hstack(blocks)

    def _features(self, z: np.ndarray) -> np.ndarray:
        proj = z @ self._omega + self._phase
        return np.sqrt(2.0 / self.n_features) * np.cos(proj)

    # ---- fitting ---------------------------------------------------------

    def fit(self, context: SampleTable,
            treatment_column: str | None = None,
            outcome_column: str | None = None) -> "SLearner":
        """Fit mu(x, t) on a role-tagged table (or named columns).

        Raises :class:`PositivityError` when fewer than 10 rows are given
        or the treatment column holds a single value.
        """
        if treatment_column is not None or outcome_column is not None:
            roles = {}
            if treatment_column is not None:
                roles[treatment_column] = ROLE_TREATMENT
            if outcome_column is not None:
                roles[outcome_column] = ROLE_OUTCOME
            context = context.with_roles(**roles)
        t_name = context.role_column(ROLE_TREATMENT)
        y_name = context.role_column(ROLE_OUTCOME)
        if t_name is None or y_name is None:
            raise PositivityError("context needs treatment and outcome columns")
        if context.n_rows < 10:
            raise PositivityError(
                f"need at least 10 rows to fit, got {context.n_rows}"
            )
        t = context.values(t_name)
        if np.unique(t).size < 2:
            raise PositivityError(
                f"treatment column {t_name!r} holds a single arm; "
                "both arms are required"
            )
        y = context.values(y_name)

        self._cov_columns = tuple(
            c for c in context.columns if c.role == ROLE_COVARIATE
        )
        self._cov_stats = []
        for c in self._cov_columns:
            if c.kind == CONTINUOUS:
                v = context.values(c.name)
                std = float(np.std(v))
                self._cov_stats.append((float(np.mean(v)), std if std > 1e-8 else 1.0))
            else:
                self._cov_stats.append((0.0, 1.0))

        z = self._design(context.select([c.name for c in self._cov_columns]), t)
        rng = ensure_rng(derived_rng(self.seed, 0))
        bandwidth = _median_heuristic(z, derived_rng(self.seed, 1))
        self._bandwidth = bandwidth
        self._omega = rng.standard_normal((z.shape[1], self.n_features)) / bandwidth
        self._phase = rng.uniform(0.0, 2.0 * np.pi, self.n_features)

        phi = self._features(z)
        # Centering y makes the implicit intercept unpenalized, so adding a
        # constant to every outcome shifts mu but leaves effect estimates
        # untouched.
        self._y_mean = float(np.mean(y))
        yc = y - self._y_mean
        gram = phi.T @ phi + self.ridge_lambda * np.eye(self.n_features)
        self._weights = np.linalg.solve(gram, phi.T @ yc)
        self._fitted = True
        return self

    def _mu(self, covariates: SampleTable, t_value: float) -> np.ndarray:
        t = np.full(covariates.n_rows, float(t_value))
        z = self._design(covariates, t)
        return self._features(z) @ self._weights + self._y_mean

    def estimate_cate(self, queries: SampleTable,
                      t1: float = 1.0, t0: float = 0.0) -> CateEstimate:
        """Plug-in effect mu(x, t1) - mu(x, t0) for each query row."""
        if not self._fitted:
            raise NotFittedError("fit the learner before estimating")
        q = queries.select([c.name for c in self._cov_columns])
        point = self._mu(q, t1) - self._mu(q, t0)
        return CateEstimate(point)

    def estimate(self, context: SampleTable, queries: SampleTable) -> np.ndarray:
        """Benchmark adapter: fit on context, estimate on queries."""
        fresh = SLearner(self.n_features, self.ridge_lambda, self.seed, self.name)
        fresh.fit(context)
        return fresh.estimate_cate(queries).point

    # ---- export ----------------------------------------------------------

    def save(self, path) -> None:
        """Export fitted state in the shared manifest+payload format."""
        if not self._fitted:
            raise NotFittedError("fit the learner before saving")
        tensors = {
            "omega": self._omega,
            "phase": self._phase,
            "weights": self._weights,
            "cov_means": np.array([s[0] for s in self._cov_stats]),
            "cov_stds": np.array([s[1] for s in self._cov_stats]),
        }
        # Checkpoint config slots are repurposed: n_features rides in ffn_dim,
        # the covariate count in max_features.
        config = ModelConfig(
            d_model=max(1, self._omega.shape[0]), n_layers=1, n_heads=1,
            ffn_dim=self.n_features, max_features=max(1, len(self._cov_columns)),
        )
        extras = {
            "y_mean": self._y_mean,
            "bandwidth": self._bandwidth,
            "ridge_lambda": self.ridge_lambda,
            "seed": self.seed,
        }
        save_checkpoint(path, tensors, config, extras=extras)


def _median_heuristic(z: np.ndarray, rng) -> float:
    """Median pairwise distance over a bounded subsample of rows."""
    n = z.shape[0]
    if n > _MEDIAN_SUBSAMPLE:
        idx = rng.choice(n, size=_MEDIAN_SUBSAMPLE, replace=False)
        z = z[idx]
    d2 = np.sum((z[:, None, :] - z[None, :, :]) ** 2, axis=-1)
    upper = d2[np.triu_indices(z.shape[0], k=1)]
    med = float(np.sqrt(np.median(upper)))
    return med if med > 1e-12 else 1.0
