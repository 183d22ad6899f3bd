"""Effect prediction on real tables with bootstrap uncertainty."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CapacityError, ContractError, DegenerateTreatmentError
from ..episodes import Episode, FeatureCodec
from ..rng import ensure_rng
from ..table import (
    CATEGORICAL,
    ROLE_COVARIATE,
    ROLE_OUTCOME,
    ROLE_TREATMENT,
    SampleTable,
)
from .config import ModelConfig
from .network import assemble_tokens, cast_params, forward


@dataclass(frozen=True)
class CateEstimate:
    """Per-query effect estimates in raw outcome units.

    ``lower`` and ``upper`` are the 10th and 90th percentiles over
    bootstrap resamples of the context rows; both are None when the
    bootstrap is disabled.
    """

    point: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    n_bootstrap: int = 0

    def __len__(self):
        return self.point.shape[0]


def predict_episode(params, config: ModelConfig, episode: Episode) -> np.ndarray:
    """Point predictions for an episode's queries, de-normalized."""
    p64 = cast_params(params, np.float64)
    tokens = assemble_tokens(
        episode.context_features(), episode.context_treatment(),
        episode.context_outcome(), episode.query_features(), config,
        dtype=np.float64,
    )
    preds = forward(p64, config, tokens, episode.n_context)
    return preds * episode.meta.y_std


def _covariate_width(col) -> int:
    return col.categories if col.kind == CATEGORICAL else 1


def prepare_inference_inputs(context: SampleTable, queries: SampleTable,
                             config: ModelConfig, truncate: bool = False):
    """Encode a role-tagged context table and query covariates.

    The context must carry a binary treatment column and an outcome
    column; every other column is a covariate and must appear in the
    query table under the same name. When the one-hot encoded width
    exceeds the model's feature budget, trailing covariates are dropped
    if ``truncate`` is set and :class:`CapacityError` is raised
    otherwise.
    """
    t_name = context.role_column(ROLE_TREATMENT)
    y_name = context.role_column(ROLE_OUTCOME)
    if t_name is None or y_name is None:
        raise ContractError("context needs treatment and outcome role columns")
    cov_cols = [c for c in context.columns if c.role == ROLE_COVARIATE]
    missing = [c.name for c in cov_cols if c.name not in queries.column_names]
    if missing:
        raise ContractError(f"query table lacks covariate columns {missing}")

    total = sum(_covariate_width(c) for c in cov_cols)
    if total > config.max_features:
        if not truncate:
            raise CapacityError(
                f"encoded covariate width {total} exceeds the model budget "
                f"{config.max_features}; pass truncate=True to drop trailing columns"
            )
        while cov_cols and total > config.max_features:
            total -= _covariate_width(cov_cols[-1])
            cov_cols = cov_cols[:-1]

    t_raw = context.values(t_name)
    arms = np.unique(t_raw)
    if not np.all(np.isin(arms, (0.0, 1.0))):
        raise DegenerateTreatmentError(
            f"treatment column {t_name!r} must be binary 0/1"
        )
    if arms.size < 2:
        raise DegenerateTreatmentError(
            f"context holds a single treatment arm (all {int(arms[0])})"
        )

    codec = FeatureCodec.fit(context, [c.name for c in cov_cols], config.max_features)
    y_raw = context.values(y_name)
    y_mean = float(np.mean(y_raw))
    y_std = float(np.std(y_raw))
    if y_std <= 1e-8:
        y_std = 1.0
    ctx_x = codec.encode(context)
    q_x = codec.encode(queries.select([c.name for c in cov_cols]))
    y_norm = (y_raw - y_mean) / y_std
    return ctx_x, t_raw.astype(np.float64), y_norm, q_x, y_std


def predict_cate(params, config: ModelConfig, context: SampleTable,
                 queries: SampleTable, n_bootstrap: int = 20,
                 rng=None, truncate: bool = False,
                 treatment_column: str | None = None,
                 outcome_column: str | None = None) -> CateEstimate:
    """What-if effect estimates for query rows given an observed context.

    The point estimate uses the full context; the uncertainty band
    re-runs the model on ``n_bootstrap`` with-replacement resamples of
    the context rows and reports the 10th and 90th percentile per query.
    Column roles can be assigned by name here instead of pre-tagging
    the context table.
    """
    if treatment_column is not None or outcome_column is not None:
        roles = {}
        if treatment_column is not None:
            roles[treatment_column] = ROLE_TREATMENT
        if outcome_column is not None:
            roles[outcome_column] = ROLE_OUTCOME
        context = context.with_roles(**roles)
    ctx_x, ctx_t, ctx_y, q_x, y_std = prepare_inference_inputs(
        context, queries, config, truncate=truncate
    )
    p64 = cast_params(params, np.float64)
    n_ctx = ctx_x.shape[0]
    tokens = assemble_tokens(ctx_x, ctx_t, ctx_y, q_x, config, dtype=np.float64)
    point = forward(p64, config, tokens, n_ctx) * y_std
    if n_bootstrap < 1:
        return CateEstimate(point, None, None, 0)
    rng = ensure_rng(0 if rng is None else rng)
    draws = np.empty((n_bootstrap, point.shape[0]))
    for b in range(n_bootstrap):
        idx = rng.integers(0, n_ctx, size=n_ctx)
        toks = assemble_tokens(ctx_x[idx], ctx_t[idx], ctx_y[idx], q_x, config,
                               dtype=np.float64)
        draws[b] = forward(p64, config, toks, n_ctx) * y_std
    lower = np.percentile(draws, 10, axis=0)
    upper = np.percentile(draws, 90, axis=0)
    return CateEstimate(point, lower, upper, n_bootstrap)


class InContextEstimator:
    """Benchmark adapter: effect estimates from a trained checkpoint."""

    def __init__(self, params, config: ModelConfig, name: str = "in-context",
                 truncate: bool = True):
        self.params = params
        self.config = config
        self.name = name
        self.truncate = truncate

    def estimate(self, context: SampleTable, queries: SampleTable) -> np.ndarray:
        est = predict_cate(self.params, self.config, context, queries,
                           n_bootstrap=0, truncate=self.truncate)
        return est.point
