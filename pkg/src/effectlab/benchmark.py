"""Semi-synthetic effect benchmark: known-truth datasets and PEHE scoring.

Real covariates (or generated stand-ins) are combined with a synthetic
treatment and outcome mechanism so that the per-row effect tau(x) is
known exactly. Estimators only ever see (X, T, Y); the truth columns
live next to the table, never in it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractError
from .rng import derived_rng, ensure_rng
from .table import (
    CATEGORICAL,
    CONTINUOUS,
    ROLE_COVARIATE,
    ROLE_OUTCOME,
    ROLE_TREATMENT,
    Column,
    SampleTable,
)

SEMISYNTH_FORMAT_VERSION = 1

_RESPONSE_FAMILIES = ("linear", "nonlinear")


@dataclass(frozen=True)
class SemiSynthConfig:
    """Knobs for one semi-synthetic dataset.

    ``effect_strength`` scales a unit-standard-deviation effect surface;
    with ``constant_effect`` the surface is the constant
    ``effect_strength`` instead. ``overlap_clip`` bounds propensities
    away from 0 and 1; at 0.5 every propensity is forced to exactly 0.5.
    """

    response: str = "linear"
    effect_strength: float = 1.0
    outcome_noise: float = 0.5
    treated_fraction: float = 0.5
    overlap_clip: float = 0.1
    propensity_sharpness: float = 2.0
    constant_effect: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.response not in _RESPONSE_FAMILIES:
            raise ConfigurationError(
                f"response must be one of {_RESPONSE_FAMILIES}, got {self.response!r}"
            )
        if not (0.0 < self.overlap_clip <= 0.5):
            raise ConfigurationError("overlap_clip must lie in (0, 0.5]")
        if not (0.0 < self.treated_fraction < 1.0):
            raise ConfigurationError("treated_fraction must lie in (0, 1)")
        if self.outcome_noise < 0:
            raise ConfigurationError("outcome_noise must be >= 0")
        if self.propensity_sharpness <= 0:
            raise ConfigurationError("propensity_sharpness must be positive")


def semi_synth_config_to_dict(config: SemiSynthConfig) -> dict:
    return {
        "format_version": SEMISYNTH_FORMAT_VERSION,
        "response": config.response,
        "effect_strength": config.effect_strength,
        "outcome_noise": config.outcome_noise,
        "treated_fraction": config.treated_fraction,
        "overlap_clip": config.overlap_clip,
        "propensity_sharpness": config.propensity_sharpness,
        "constant_effect": config.constant_effect,
        "seed": config.seed,
    }


def semi_synth_config_from_dict(d: dict) -> SemiSynthConfig:
    if d.get("format_version") != SEMISYNTH_FORMAT_VERSION:
        raise ContractError(
            f"unsupported dataset config version {d.get('format_version')!r}"
        )
    kwargs = {k: v for k, v in d.items() if k != "format_version"}
    return SemiSynthConfig(**kwargs)


@dataclass
class BenchmarkDataset:
    """Observed table plus the hidden truth it was generated from."""

    name: str
    table: SampleTable
    tau: np.ndarray
    mu0: np.ndarray
    propensity: np.ndarray
    config: SemiSynthConfig

    @property
    def n_rows(self) -> int:
        return self.table.n_rows

    def covariate_names(self) -> list[str]:
        return [c.name for c in self.table.columns if c.role == ROLE_COVARIATE]


# ---------------------------------------------------------------------------
# covariate sources


def generate_covariates(n: int, n_continuous: int = 4, n_categorical: int = 2,
                        categories: int = 3, correlation: float = 0.5,
                        rng=None) -> SampleTable:
    """Correlated mixed-type covariates via a single latent factor.

    Each column loads on a shared factor with weight ``correlation``;
    categorical columns are quantile-binned latents, so every kind of
    column co-varies with the others.
    """
    if n < 1 or n_continuous < 0 or n_categorical < 0:
        raise ConfigurationError("sizes must be non-negative, n >= 1")
    if n_continuous + n_categorical < 1:
        raise ConfigurationError("at least one covariate column required")
    if not (0.0 <= correlation < 1.0):
        raise ConfigurationError("correlation must lie in [0, 1)")
    rng = ensure_rng(rng if rng is not None else 0)
    total = n_continuous + n_categorical
    factor = rng.standard_normal((n, 1))
    noise = rng.standard_normal((n, total))
    latent = np.sqrt(correlation) * factor + np.sqrt(1.0 - correlation) * noise
    columns, blocks = [], []
    for i in range(n_continuous):
        columns.append(Column(f"x{i}"))
        blocks.append(latent[:, i])
    for j in range(n_categorical):
        v = latent[:, n_continuous + j]
        edges = np.quantile(v, np.linspace(0, 1, categories + 1)[1:-1])
        codes = np.searchsorted(edges, v, side="right").astype(np.float64)
        columns.append(Column(f"cat{j}", CATEGORICAL, categories))
        blocks.append(codes)
    return SampleTable(columns, np.column_stack(blocks))


def _encode_design(table: SampleTable) -> np.ndarray:
    """Standardized one-hot design matrix used by the synthetic surfaces."""
    blocks = []
    for c in table.columns:
        v = table.values(c.name)
        if c.kind == CATEGORICAL:
            onehot = np.zeros((v.shape[0], c.categories))
            onehot[np.arange(v.shape[0]), v.astype(np.intp)] = 1.0
            blocks.append(onehot)
        else:
            std = float(np.std(v))
            blocks.append(((v - np.mean(v)) / (std if std > 1e-8 else 1.0))[:, None])
    return np.hstack(blocks)


def _random_surface(design: np.ndarray, kind: str, rng) -> np.ndarray:
    d = design.shape[1]
    if kind == "linear":
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        return design @ u
    hidden = 8
    w_in = rng.standard_normal((hidden, d)) / np.sqrt(d)
    w_out = rng.standard_normal(hidden)
    return np.tanh(design @ w_in.T) @ w_out


def build_semi_synthetic(covariates: SampleTable, config: SemiSynthConfig,
                         rng=None, name: str = "semi") -> BenchmarkDataset:
    """Attach a known treatment and outcome mechanism to covariates.

    Propensity: e(x) = clip(sigmoid(a*s(x) + b), eps, 1-eps) with s a
    random unit-norm linear score of the standardized design and b
    solved by bisection so the mean propensity hits the target treated
    fraction within 1e-3. Effect: tau(x) = c * g(x) with g drawn from
    the declared family and scaled to unit standard deviation first.
    Outcome: Y = mu0(x) + T*tau(x) + N(0, sigma_y).
    """
    cov_cols = [c for c in covariates.columns if c.role == ROLE_COVARIATE]
    if len(cov_cols) < 2:
        raise ContractError("need at least 2 covariate columns")
    if covariates.n_rows < 100:
        raise ContractError("need at least 100 rows")
    rng = ensure_rng(rng if rng is not None else derived_rng(config.seed))
    table = covariates.select([c.name for c in cov_cols])
    design = _encode_design(table)
    n = table.n_rows

    score = _random_surface(design, "linear", rng)
    propensity, intercept = _calibrate_propensity(
        score, config.propensity_sharpness, config.overlap_clip,
        config.treated_fraction,
    )
    t = (rng.random(n) < propensity).astype(np.float64)

    if config.constant_effect:
        tau = np.full(n, config.effect_strength)
    elif config.effect_strength == 0.0:
        tau = np.zeros(n)
    else:
        g = _random_surface(design, config.response, rng)
        sd = float(np.std(g))
        if sd < 1e-12:
            raise ConfigurationError("degenerate effect surface (zero variance)")
        # Standardized before scaling: effect strength c then equals both the
        # standard deviation of tau and the PEHE of an all-zero predictor.
        tau = config.effect_strength * (g - float(np.mean(g))) / sd
    mu0 = _random_surface(design, config.response, rng)
    y = mu0 + t * tau + config.outcome_noise * rng.standard_normal(n)

    columns = [Column(c.name, c.kind, c.categories) for c in cov_cols]
    columns.append(Column("T", CATEGORICAL, 2, role=ROLE_TREATMENT))
    columns.append(Column("Y", role=ROLE_OUTCOME))
    full = SampleTable(columns, np.column_stack([table.data, t, y]))
    return BenchmarkDataset(name, full, tau, mu0, propensity, config)


def _calibrate_propensity(score, sharpness, clip, target, tol=1e-3):
    """Solve the intercept so the mean clipped propensity hits target."""

    def mean_propensity(b):
        e = 1.0 / (1.0 + np.exp(-(sharpness * score + b)))
        return float(np.mean(np.clip(e, clip, 1.0 - clip)))

    lo, hi = -60.0, 60.0
    f_lo, f_hi = mean_propensity(lo), mean_propensity(hi)
    if not (f_lo - tol <= target <= f_hi + tol):
        raise ConfigurationError(
            f"treated fraction {target} unreachable under clipping at {clip} "
            f"(attainable range [{f_lo:.3f}, {f_hi:.3f}])"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mean_propensity(mid) < target:
            lo = mid
        else:
            hi = mid
    b = 0.5 * (lo + hi)
    if abs(mean_propensity(b) - target) > tol:
        raise ConfigurationError(
            f"propensity calibration did not converge to {target} "
            f"(reached {mean_propensity(b):.4f})"
        )
    e = 1.0 / (1.0 + np.exp(-(sharpness * score + b)))
    return np.clip(e, clip, 1.0 - clip), b


# ---------------------------------------------------------------------------
# scoring


def pehe(estimates, truth) -> float:
    """Root mean squared error between estimated and true effects."""
    est = np.asarray(estimates, dtype=np.float64)
    tru = np.asarray(truth, dtype=np.float64)
    if est.shape != tru.shape or est.ndim != 1:
        raise ContractError("estimates and truth must be 1-d of equal length")
    if est.size == 0:
        raise ContractError("cannot score empty estimates")
    return float(np.sqrt(np.mean((est - tru) ** 2)))


class ZeroEstimator:
    """Predicts zero effect everywhere."""

    name = "zero"

    def estimate(self, context: SampleTable, queries: SampleTable) -> np.ndarray:
        return np.zeros(queries.n_rows)


class OracleEstimator:
    """Reads hidden truth through the query metadata; for harness checks."""

    name = "oracle"

    def __init__(self, datasets):
        self.datasets = list(datasets)

    def estimate(self, context: SampleTable, queries: SampleTable) -> np.ndarray:
        meta = queries.meta or {}
        ds = self.datasets[meta["dataset_index"]]
        return ds.tau[np.asarray(meta["row_indices"], dtype=np.intp)]


@dataclass
class BenchmarkReport:
    """Per-dataset PEHE cells plus derived summary rows.

    ``cells[(dataset, estimator)]`` is a float or None for a failed run.
    """

    dataset_names: list[str]
    estimator_names: list[str]
    cells: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def column(self, estimator: str) -> list:
        return [self.cells[(d, estimator)] for d in self.dataset_names]

    def summary(self) -> dict[str, tuple[float, float]]:
        """Mean and sample standard deviation per estimator column."""
        out = {}
        for e in self.estimator_names:
            vals = [v for v in self.column(e) if v is not None]
            if not vals:
                out[e] = (float("nan"), float("nan"))
            elif len(vals) == 1:
                out[e] = (float(vals[0]), float("nan"))
            else:
                arr = np.asarray(vals)
                out[e] = (float(np.mean(arr)), float(np.std(arr, ddof=1)))
        return out

    def to_csv(self, path=None) -> str | None:
        lines = ["dataset,estimator,pehe"]
        for d in self.dataset_names:
            for e in self.estimator_names:
                v = self.cells[(d, e)]
                lines.append(f"{d},{e},{'nan' if v is None else repr(v)}")
        text = "\n".join(lines) + "\n"
        if path is None:
            return text
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        return None

    def to_text(self) -> str:
        """Aligned comparison table, datasets as rows, estimators as columns."""
        summary = self.summary()
        summary_cells = {}
        for e in self.estimator_names:
            mean, std = summary[e]
            summary_cells[e] = (
                f"{mean:.3f} +- {std:.3f}" if np.isfinite(std) else f"{mean:.3f}"
            )
        width = max(
            12,
            *(len(e) + 2 for e in self.estimator_names),
            *(len(c) + 2 for c in summary_cells.values()),
        )
        name_w = max(12, *(len(d) + 2 for d in self.dataset_names), len("mean +- std") + 2)
        header = "dataset".ljust(name_w) + "".join(
            e.rjust(width) for e in self.estimator_names
        )
        lines = [header, "-" * len(header)]
        for d in self.dataset_names:
            cells = []
            for e in self.estimator_names:
                v = self.cells[(d, e)]
                cells.append(("-" if v is None else f"{v:.4f}").rjust(width))
            lines.append(d.ljust(name_w) + "".join(cells))
        lines.append("-" * len(header))
        row = "mean +- std".ljust(name_w)
        for e in self.estimator_names:
            row += summary_cells[e].rjust(width)
        lines.append(row)
        return "\n".join(lines) + "\n"


def split_dataset(dataset: BenchmarkDataset, split_seed: int,
                  context_fraction: float = 0.8):
    """Deterministic context/query split; returns (context, queries, q_idx)."""
    if not (0.0 < context_fraction < 1.0):
        raise ConfigurationError("context_fraction must lie in (0, 1)")
    n = dataset.n_rows
    rng = derived_rng(split_seed, 0)
    perm = rng.permutation(n)
    n_ctx = max(1, int(round(context_fraction * n)))
    if n_ctx >= n:
        n_ctx = n - 1
    ctx_idx = np.sort(perm[:n_ctx])
    q_idx = np.sort(perm[n_ctx:])
    context = dataset.table.take_rows(ctx_idx)
    queries = dataset.table.select(dataset.covariate_names()).take_rows(q_idx)
    return context, queries, q_idx


def run_benchmark(datasets, estimators, split_seed: int = 0,
                  context_fraction: float = 0.8) -> BenchmarkReport:
    """Score every estimator on every dataset under a shared split protocol.

    Estimators implement ``name`` and ``estimate(context, queries)``.
    A failing estimator leaves a missing cell and the run continues.
    Query tables carry ``dataset_index`` and ``row_indices`` metadata so
    harness-side oracles can line predictions up with hidden truth.
    """
    if not datasets:
        raise ContractError("need at least one dataset")
    if not estimators:
        raise ContractError("need at least one estimator")
    report = BenchmarkReport(
        dataset_names=[d.name for d in datasets],
        estimator_names=[e.name for e in estimators],
    )
    for i, ds in enumerate(datasets):
        context, queries, q_idx = split_dataset(ds, derived_rng(split_seed, i).integers(2 ** 31))
        queries = SampleTable(
            queries.columns, queries.data,
            meta={"dataset_index": i, "row_indices": q_idx.tolist()},
        )
        truth = ds.tau[q_idx]
        for est in estimators:
            try:
                preds = np.asarray(est.estimate(context, queries), dtype=np.float64)
                report.cells[(ds.name, est.name)] = pehe(preds, truth)
            except Exception as exc:  # failure is a missing cell, not an abort
                report.cells[(ds.name, est.name)] = None
                report.errors[(ds.name, est.name)] = f"{type(exc).__name__}: {exc}"
    return report


def benchmark_suite_configs(seed: int = 0) -> list[SemiSynthConfig]:
    """Ten dataset configs sweeping response family, effect strength,
    noise, treated fraction, and overlap."""
    grid = [
        ("linear", 1.0, 0.1, 0.5, 0.10),
        ("linear", 2.0, 0.5, 0.5, 0.10),
        ("linear", 0.5, 0.1, 0.3, 0.10),
        ("linear", 1.0, 1.0, 0.5, 0.20),
        ("linear", 1.0, 0.1, 0.7, 0.05),
        ("nonlinear", 1.0, 0.1, 0.5, 0.10),
        ("nonlinear", 2.0, 0.5, 0.5, 0.20),
        ("nonlinear", 0.5, 0.1, 0.3, 0.10),
        ("nonlinear", 1.0, 0.5, 0.7, 0.05),
        ("nonlinear", 1.0, 0.1, 0.5, 0.40),
    ]
    return [
        SemiSynthConfig(response=r, effect_strength=c, outcome_noise=s,
                        treated_fraction=p, overlap_clip=e, seed=seed + i)
        for i, (r, c, s, p, e) in enumerate(grid)
    ]


def build_benchmark_suite(n_rows: int = 1000, seed: int = 0,
                          configs=None) -> list[BenchmarkDataset]:
    """Generate the default ten-dataset comparison suite."""
    configs = list(configs) if configs is not None else benchmark_suite_configs(seed)
    out = []
    for i, cfg in enumerate(configs):
        rng = derived_rng(seed, 100 + i)
        cov = generate_covariates(n_rows, rng=rng)
        out.append(build_semi_synthetic(cov, cfg, rng=rng, name=f"semi-{i:02d}"))
    return out
