"""Pretraining episodes: context + queries + ground-truth effect targets.

One episode is a fixed-shape supervised unit for the in-context model: an
observational context table (encoded covariates, a binary treatment flag,
the normalized outcome), a handful of query covariate rows, and the true
per-row interventional effect for each query computed from the generating
SCM with shared exogenous noise.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ContractError, EpisodeGenerationError
from .graphs import GraphConfig, sample_cpg
from .mechanisms import MechanismPrior
from .rng import derived_rng, draw_seed, ensure_rng
from .scm import (
    CategoricalEquation,
    ContinuousEquation,
    FixedEquation,
    InterventionSpec,
    Scm,
    apply_do,
    draw_standard_noise,
    encode_parents,
    instantiate_scm,
    paired_potential_outcomes,
    sample_observational,
)
from .table import (
    CATEGORICAL,
    CONTINUOUS,
    ROLE_COVARIATE,
    ROLE_OUTCOME,
    ROLE_TREATMENT,
    Column,
    SampleTable,
)

EPISODE_FORMAT_VERSION = 1

TREATED_COLUMN = "treated"
OUTCOME_COLUMN = "outcome"


@dataclass(frozen=True)
class PriorConfig:
    """Prior over data-generating processes for pretraining.

    ``context_range`` bounds the observational context size per episode;
    ``query_count`` fixes the number of effect queries; ``max_features``
    is the fixed width covariates are padded or truncated to.
    ``noise_draws_per_target`` averages that many post-treatment noise
    redraws into each target (1 keeps single-draw effects, whose squared
    error is still minimized by the conditional effect).
    """

    graph: GraphConfig = field(default_factory=GraphConfig)
    mechanisms: MechanismPrior = field(default_factory=MechanismPrior)
    context_range: tuple[int, int] = (32, 96)
    query_count: int = 8
    max_features: int = 16
    probe_samples: int = 1000
    noise_draws_per_target: int = 1
    max_retries: int = 10
    treatment_policy: str = "uniform"

    def __post_init__(self):
        lo, hi = self.context_range
        if lo < 1 or hi < lo:
            raise ConfigurationError("context_range must satisfy 1 <= lo <= hi")
        if self.query_count < 1:
            raise ConfigurationError("query_count must be >= 1")
        if self.max_features < 1:
            raise ConfigurationError("max_features must be >= 1")
        if self.probe_samples < 10:
            raise ConfigurationError("probe_samples must be >= 10")
        if self.noise_draws_per_target < 1:
            raise ConfigurationError("noise_draws_per_target must be >= 1")
        if self.max_retries < 1:
            raise ConfigurationError("max_retries must be >= 1")
        if self.treatment_policy != "uniform":
            raise ConfigurationError(f"unknown treatment policy {self.treatment_policy!r}")


@dataclass(frozen=True)
class EpisodeMeta:
    """Provenance and normalization statistics of one episode."""

    scm_seed: int
    treatment_node: int
    t1: float
    t0: float
    treatment_midpoint: float
    y_mean: float
    y_std: float
    covariate_nodes: tuple[int, ...]
    encoded_dim: int


@dataclass
class Episode:
    """Context table, query covariates, and per-query effect targets.

    ``targets`` are in raw outcome units; the context outcome column is
    z-scored by the context statistics recorded in ``meta``. The feature
    mask flags the leading encoded slots that carry real covariates.
    """

    context: SampleTable
    queries: SampleTable
    targets: np.ndarray
    feature_mask: np.ndarray
    meta: EpisodeMeta

    def __post_init__(self):
        ctx_cov = [c.name for c in self.context.columns if c.role == ROLE_COVARIATE]
        q_cov = [c.name for c in self.queries.columns]
        if ctx_cov != q_cov:
            raise ContractError("context and queries must share the covariate schema")
        if not np.all(np.isfinite(self.targets)):
            raise ContractError("episode targets must be finite")

    # ---- array views consumed by the model -------------------------------

    @property
    def max_features(self) -> int:
        return self.queries.n_columns

    @property
    def n_context(self) -> int:
        return self.context.n_rows

    @property
    def n_queries(self) -> int:
        return self.queries.n_rows

    def context_features(self) -> np.ndarray:
        return self.context.data[:, : self.max_features]

    def context_treatment(self) -> np.ndarray:
        return self.context.values(TREATED_COLUMN)

    def context_outcome(self) -> np.ndarray:
        return self.context.values(OUTCOME_COLUMN)

    def query_features(self) -> np.ndarray:
        return self.queries.data

    def targets_normalized(self) -> np.ndarray:
        return self.targets / self.meta.y_std


@dataclass(frozen=True)
class FeatureCodec:
    """Covariate encoding frozen from a context table.

    Continuous columns are z-scored by the recorded statistics; categorical
    columns expand to one-hot blocks. Encoded rows are padded with zeros to
    ``max_features`` slots.
    """

    columns: tuple[Column, ...]
    means: tuple[float, ...]
    stds: tuple[float, ...]
    max_features: int

    @property
    def encoded_dim(self) -> int:
        return sum(
            c.categories if c.kind == CATEGORICAL else 1 for c in self.columns
        )

    @classmethod
    def fit(cls, table: SampleTable, column_names, max_features: int) -> "FeatureCodec":
        cols = [table.column(n) for n in column_names]
        means, stds = [], []
        for c in cols:
            if c.kind == CONTINUOUS:
                v = table.values(c.name)
                m = float(np.mean(v)) if v.size else 0.0
                s = float(np.std(v)) if v.size else 1.0
                means.append(m)
                stds.append(s if s > 1e-8 else 1.0)
            else:
                means.append(0.0)
                stds.append(1.0)
        codec = cls(tuple(cols), tuple(means), tuple(stds), max_features)
        if codec.encoded_dim > max_features:
            raise ConfigurationError(
                f"encoded covariate dimension {codec.encoded_dim} exceeds {max_features} slots"
            )
        return codec

    def encode(self, table: SampleTable) -> np.ndarray:
        n = table.n_rows
        out = np.zeros((n, self.max_features), dtype=np.float64)
        pos = 0
        for c, m, s in zip(self.columns, self.means, self.stds):
            v = table.values(c.name)
            if c.kind == CATEGORICAL:
                k = c.categories
                out[np.arange(n), pos + v.astype(np.intp)] = 1.0
                pos += k
            else:
                out[:, pos] = (v - m) / s
                pos += 1
        return out

    def mask(self) -> np.ndarray:
        m = np.zeros(self.max_features, dtype=np.float64)
        m[: self.encoded_dim] = 1.0
        return m


def _f32(a: np.ndarray) -> np.ndarray:
    """Round through float32 so in-memory episodes match their on-disk form."""
    return np.asarray(a, dtype=np.float64).astype(np.float32).astype(np.float64)


def _feature_columns(max_features: int) -> list[Column]:
    return [Column(f"f{i:02d}") for i in range(max_features)]


def _treatment_contrast(scm: Scm, treatment: int, probe_samples: int, rng):
    """Binary contrast for the chosen treatment node.

    Binary categorical nodes use classes 0/1; other nodes take the 25th and
    75th percentiles of a probe of the observational marginal. Returns None
    when the contrast is degenerate.
    """
    kind = scm.node_kind(treatment)
    if kind == CATEGORICAL and scm.categories(treatment) == 2:
        return 0.0, 1.0
    probe = sample_observational(scm, probe_samples, rng).data[:, treatment]
    if kind == CATEGORICAL:
        t0 = float(np.quantile(probe, 0.25, method="nearest"))
        t1 = float(np.quantile(probe, 0.75, method="nearest"))
    else:
        t0 = float(np.quantile(probe, 0.25))
        t1 = float(np.quantile(probe, 0.75))
    if not (t1 > t0 + 1e-12):
        return None
    return t0, t1


def _select_covariates(scm: Scm, treatment: int, prior: PriorConfig) -> list[int]:
    """Non-descendants of the treatment, truncated to the feature budget by
    dropping the nodes farthest from the treatment in topological order."""
    desc = scm.graph.descendants(treatment)
    nodes = [
        i for i in range(scm.node_count)
        if i != treatment and i != scm.sink_index and i not in desc
    ]

    def width(i):
        return scm.categories(i) if scm.node_kind(i) == CATEGORICAL else 1

    total = sum(width(i) for i in nodes)
    while total > prior.max_features and nodes:
        far = max(nodes, key=lambda i: (abs(i - treatment), i))
        nodes.remove(far)
        total -= width(far)
    return nodes


def _query_targets(scm: Scm, treatment: int, t1: float, t0: float,
                   n_q: int, m: int, rng) -> SampleTable:
    """Potential-outcome queries; with m > 1, each target averages m
    post-treatment noise redraws at fixed pre-treatment covariates."""
    po = paired_potential_outcomes(scm, treatment, t1, t0, n_q, rng)
    if m == 1:
        return po
    # Extra draws refresh noise only downstream of the treatment; covariate
    # rows stay clamped to the first draw so each target averages m effect
    # realizations at the same pre-treatment state.
    ites = [po.values("ITE").copy()]
    scm1 = apply_do(scm, InterventionSpec(treatment, t1))
    scm0 = apply_do(scm, InterventionSpec(treatment, t0))
    cov_nodes = po.meta["covariate_nodes"]
    fixed = {i: po.values(f"X{i}") for i in cov_nodes}
    for _ in range(m - 1):
        noise = draw_standard_noise(scm, n_q, rng)
        vals1 = _forward_with_clamped(scm1, noise, n_q, fixed)
        vals0 = _forward_with_clamped(scm0, noise, n_q, fixed)
        ites.append(vals1[:, scm.sink_index] - vals0[:, scm.sink_index])
    averaged = np.mean(ites, axis=0)
    data = po.data.copy()
    data[:, po.index("ITE")] = averaged
    return SampleTable(po.columns, data, meta=po.meta)


def _forward_with_clamped(scm: Scm, noise, n: int, fixed: dict[int, np.ndarray]) -> np.ndarray:
    """Forward pass with some node columns clamped to given per-row values."""
    values = np.zeros((n, scm.node_count), dtype=np.float64)
    for i, spec in enumerate(scm.node_specs):
        if i in fixed:
            values[:, i] = fixed[i]
            continue
        eq = scm.equations[i]
        if isinstance(eq, FixedEquation):
            values[:, i] = eq.value
            continue
        enc = encode_parents(values, spec.parents, scm.node_specs)
        if isinstance(eq, ContinuousEquation):
            values[:, i] = eq.mechanism.apply(enc) + eq.noise.scale * noise[i]
        else:
            scores = np.empty((n, spec.categories), dtype=np.float64)
            for k in range(spec.categories):
                scores[:, k] = eq.mechanisms[k].apply(enc) + eq.noises[k].scale * noise[i][:, k]
            values[:, i] = np.argmax(scores, axis=1)
    return values


def episode_from_scm(scm: Scm, treatment: int, prior: PriorConfig, rng) -> Episode | None:
    """Build one episode from a concrete SCM and treatment node.

    Returns None when the treatment contrast is degenerate (constant
    marginal), which callers treat as a resample signal.
    """
    rng = ensure_rng(rng)
    contrast = _treatment_contrast(scm, treatment, prior.probe_samples, rng)
    if contrast is None:
        return None
    t0, t1 = contrast
    midpoint = (t0 + t1) / 2.0

    lo, hi = prior.context_range
    n_ctx = int(rng.integers(lo, hi + 1))
    obs = sample_observational(scm, n_ctx, rng)
    po = _query_targets(scm, treatment, t1, t0, prior.query_count,
                        prior.noise_draws_per_target, rng)

    cov_nodes = _select_covariates(scm, treatment, prior)
    cov_names = [f"X{i}" for i in cov_nodes]
    codec = FeatureCodec.fit(obs, cov_names, prior.max_features)

    ctx_x = codec.encode(obs)
    t_raw = obs.data[:, treatment]
    if scm.node_kind(treatment) == CATEGORICAL and scm.categories(treatment) == 2:
        t_flag = t_raw.copy()
    else:
        t_flag = (t_raw >= midpoint).astype(np.float64)
    y_raw = obs.data[:, scm.sink_index]
    y_mean = float(np.mean(y_raw))
    y_std = float(np.std(y_raw))
    if y_std <= 1e-8:
        y_std = 1.0
    y_norm = (y_raw - y_mean) / y_std

    qx = codec.encode(po)
    targets = _f32(po.values("ITE")).astype(np.float32)

    feat_cols = _feature_columns(prior.max_features)
    ctx_cols = feat_cols + [
        Column(TREATED_COLUMN, CATEGORICAL, 2, role=ROLE_TREATMENT),
        Column(OUTCOME_COLUMN, role=ROLE_OUTCOME),
    ]
    context = SampleTable(
        ctx_cols, np.column_stack([_f32(ctx_x), t_flag, _f32(y_norm)])
    )
    queries = SampleTable(feat_cols, _f32(qx))
    meta = EpisodeMeta(
        scm_seed=scm.seed if scm.seed is not None else -1,
        treatment_node=treatment,
        t1=t1,
        t0=t0,
        treatment_midpoint=midpoint,
        y_mean=y_mean,
        y_std=y_std,
        covariate_nodes=tuple(cov_nodes),
        encoded_dim=codec.encoded_dim,
    )
    return Episode(context, queries, targets, codec.mask(), meta)


def generate_episode(prior: PriorConfig, rng) -> Episode:
    """Sample a process SCM and turn it into one pretraining episode.

    Retries with a fresh SCM when no eligible treatment contrast exists,
    up to ``prior.max_retries`` times.
    """
    rng = ensure_rng(rng)
    for _ in range(prior.max_retries):
        scm_seed = draw_seed(rng)
        scm_rng = derived_rng(scm_seed)
        graph = sample_cpg(prior.graph, scm_rng)
        scm = instantiate_scm(graph, prior.mechanisms, scm_rng, seed=scm_seed)
        treatment = int(rng.integers(0, scm.node_count - 1))
        episode = episode_from_scm(scm, treatment, prior, rng)
        if episode is not None:
            return episode
    raise EpisodeGenerationError(
        f"no eligible treatment contrast after {prior.max_retries} SCM draws"
    )


def narrow_linear_prior(**overrides) -> PriorConfig:
    """Small fixed prior for fast training checks.

    Five-node graphs, continuous nodes only, linear mechanisms with
    slopes bounded away from zero. Effects are deterministic functions
    of the covariates and rarely negligible, which keeps the loss floor
    low and makes training progress easy to detect.
    """
    kwargs = dict(
        graph=GraphConfig(node_range=(5, 5)),
        mechanisms=MechanismPrior(
            categorical_prob=0.0,
            nonlinear_prob=0.0,
            coefficient_min_abs=0.5,
            noise_scale_range=(0.1, 0.4),
        ),
    )
    kwargs.update(overrides)
    return PriorConfig(**kwargs)


def generate_batch(prior: PriorConfig, batch_size: int, seed_or_rng) -> list[Episode]:
    """Generate independent episodes, deterministic per (master seed, index)."""
    if batch_size < 1:
        raise ConfigurationError("batch_size must be >= 1")
    if isinstance(seed_or_rng, (int, np.integer)):
        master = int(seed_or_rng)
    else:
        master = draw_seed(seed_or_rng)
    return [
        generate_episode(prior, derived_rng(master, i)) for i in range(batch_size)
    ]


# ---------------------------------------------------------------------------
# binary snapshot format: one JSON manifest line, then float32-LE payloads


def _episode_arrays(ep: Episode) -> list[np.ndarray]:
    return [
        ep.context_features(),
        ep.context_treatment(),
        ep.context_outcome(),
        ep.query_features(),
        ep.targets,
        ep.feature_mask,
    ]


def save_episodes(path, episodes: list[Episode]) -> None:
    """Snapshot episodes to a binary file.

    Layout: one UTF-8 JSON manifest line (shapes, meta, format version),
    then for each episode its context features, treatment flags, normalized
    outcomes, query features, targets, and feature mask as little-endian
    float32 in C order.
    """
    records = []
    payload = bytearray()
    for ep in episodes:
        arrays = [np.asarray(a, dtype="<f4") for a in _episode_arrays(ep)]
        offset = len(payload)
        for a in arrays:
            payload.extend(a.tobytes(order="C"))
        records.append({
            "n_context": ep.n_context,
            "n_queries": ep.n_queries,
            "max_features": ep.max_features,
            "offset": offset,
            "meta": {
                "scm_seed": ep.meta.scm_seed,
                "treatment_node": ep.meta.treatment_node,
                "t1": ep.meta.t1,
                "t0": ep.meta.t0,
                "treatment_midpoint": ep.meta.treatment_midpoint,
                "y_mean": ep.meta.y_mean,
                "y_std": ep.meta.y_std,
                "covariate_nodes": list(ep.meta.covariate_nodes),
                "encoded_dim": ep.meta.encoded_dim,
            },
        })
    manifest = {
        "format": "effectlab-episodes",
        "version": EPISODE_FORMAT_VERSION,
        "dtype": "<f4",
        "count": len(episodes),
        "episodes": records,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(manifest, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(bytes(payload))


def load_episodes(path) -> list[Episode]:
    with open(path, "rb") as fh:
        header = fh.readline()
        payload = fh.read()
    manifest = json.loads(header.decode("utf-8"))
    if manifest.get("format") != "effectlab-episodes":
        raise ContractError("not an effectlab episode file")
    if manifest.get("version") != EPISODE_FORMAT_VERSION:
        raise ContractError(f"unsupported episode format version {manifest.get('version')!r}")
    out = []
    for rec in manifest["episodes"]:
        n_ctx, n_q, d = rec["n_context"], rec["n_queries"], rec["max_features"]
        shapes = [(n_ctx, d), (n_ctx,), (n_ctx,), (n_q, d), (n_q,), (d,)]
        arrays = []
        pos = rec["offset"]
        for shape in shapes:
            count = int(np.prod(shape))
            a = np.frombuffer(payload, dtype="<f4", count=count, offset=pos)
            arrays.append(a.reshape(shape).astype(np.float64))
            pos += count * 4
        ctx_x, ctx_t, ctx_y, qx, targets, mask = arrays
        meta = EpisodeMeta(
            scm_seed=rec["meta"]["scm_seed"],
            treatment_node=rec["meta"]["treatment_node"],
            t1=rec["meta"]["t1"],
            t0=rec["meta"]["t0"],
            treatment_midpoint=rec["meta"]["treatment_midpoint"],
            y_mean=rec["meta"]["y_mean"],
            y_std=rec["meta"]["y_std"],
            covariate_nodes=tuple(rec["meta"]["covariate_nodes"]),
            encoded_dim=rec["meta"]["encoded_dim"],
        )
        feat_cols = _feature_columns(d)
        ctx_cols = feat_cols + [
            Column(TREATED_COLUMN, CATEGORICAL, 2, role=ROLE_TREATMENT),
            Column(OUTCOME_COLUMN, role=ROLE_OUTCOME),
        ]
        context = SampleTable(ctx_cols, np.column_stack([ctx_x, ctx_t, ctx_y]))
        queries = SampleTable(feat_cols, qx)
        out.append(Episode(context, queries, targets.astype(np.float32), mask, meta))
    return out
