"""Structural causal models over process graphs.

An :class:`Scm` pairs a :class:`~effectlab.graphs.CausalProcessGraph` with
one structural equation per node. Continuous nodes follow an additive-noise
equation; categorical nodes take the argmax over per-class noisy scores.
The module provides ancestral sampling, do-operator surgery, interventional
sampling, shared-noise potential outcomes, and Monte Carlo ground-truth
conditional effects, plus a versioned JSON serialization.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    ContractError,
    DegenerateTreatmentError,
    InvalidInterventionError,
)
from .graphs import CausalProcessGraph
from .mechanisms import (
    ConstantMechanism,
    Mechanism,
    MechanismPrior,
    NoiseSpec,
    mechanism_from_dict,
)
from .rng import draw_seed, ensure_rng
from .table import CATEGORICAL, CONTINUOUS, Column, SampleTable

SCM_FORMAT_VERSION = 1


@dataclass(frozen=True)
class NodeSpec:
    """Kind and parent list of one node."""

    kind: str
    parents: tuple[int, ...]
    categories: int | None = None

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, CATEGORICAL):
            raise ContractError(f"unknown node kind {self.kind!r}")
        if self.kind == CATEGORICAL and (self.categories is None or self.categories < 2):
            raise ContractError("categorical nodes need categories >= 2")


@dataclass
class ContinuousEquation:
    """X := f(parents) + noise."""

    mechanism: Mechanism
    noise: NoiseSpec


@dataclass
class CategoricalEquation:
    """X := argmax_k of f_k(parents) + noise_k."""

    mechanisms: list[Mechanism]
    noises: list[NoiseSpec]

    def __post_init__(self):
        if len(self.mechanisms) != len(self.noises):
            raise ContractError("one noise spec per class mechanism required")


@dataclass
class FixedEquation:
    """Node pinned to a constant, as produced by do-surgery."""

    value: float


@dataclass(frozen=True)
class InterventionSpec:
    """do(node := value). ``value`` is a category index for categorical nodes."""

    node_index: int
    value: float


class Scm:
    """Graph plus per-node structural equations.

    ``interventions`` records do-surgery already applied; a mutilated SCM
    tolerates single-sink violations introduced by edge removal.
    """

    def __init__(self, graph: CausalProcessGraph, node_specs: Sequence[NodeSpec],
                 equations: Sequence, seed: int | None = None,
                 interventions: dict[int, float] | None = None):
        if len(node_specs) != graph.node_count or len(equations) != graph.node_count:
            raise ContractError("one spec and one equation per node required")
        for i, spec in enumerate(node_specs):
            if tuple(spec.parents) != tuple(graph.parents(i)):
                raise ContractError(f"node {i}: spec parents disagree with graph")
        self.graph = graph
        self.node_specs = list(node_specs)
        self.equations = list(equations)
        self.seed = seed
        self.interventions = dict(interventions) if interventions else {}

    @property
    def node_count(self) -> int:
        return self.graph.node_count

    @property
    def sink_index(self) -> int:
        return self.graph.sink_index

    @property
    def mutilated(self) -> bool:
        return bool(self.interventions)

    def node_kind(self, i: int) -> str:
        return self.node_specs[i].kind

    def categories(self, i: int) -> int | None:
        return self.node_specs[i].categories

    def column_schema(self, names: Sequence[str] | None = None) -> list[Column]:
        names = names or [f"X{i}" for i in range(self.node_count)]
        return [
            Column(names[i], spec.kind, spec.categories)
            for i, spec in enumerate(self.node_specs)
        ]


# ---------------------------------------------------------------------------
# instantiation from a prior


def instantiate_scm(graph: CausalProcessGraph, prior: MechanismPrior, rng,
                    seed: int | None = None) -> Scm:
    """Enrich a process graph with concrete structural equations.

    Node kinds are drawn first (categorical with ``prior.categorical_prob``),
    then one equation per node in index order: roots get a constant-zero
    mechanism plus noise; parented nodes get a linear or tanh-network
    mechanism over the one-hot-encoded parent values. Deterministic given
    the generator state.
    """
    rng = ensure_rng(rng)
    n = graph.node_count
    specs: list[NodeSpec] = []
    for i in range(n):
        if rng.random() < prior.categorical_prob:
            lo, hi = prior.categories_range
            k = int(rng.integers(lo, hi + 1))
            specs.append(NodeSpec(CATEGORICAL, tuple(graph.parents(i)), k))
        else:
            specs.append(NodeSpec(CONTINUOUS, tuple(graph.parents(i))))

    equations: list = []
    for i, spec in enumerate(specs):
        dim = encoded_parent_dim(spec.parents, specs)
        if spec.kind == CONTINUOUS:
            mech = prior.draw_mechanism(dim, rng)
            noise = NoiseSpec("gaussian", prior.draw_noise_scale(rng))
            equations.append(ContinuousEquation(mech, noise))
        else:
            mechs = [prior.draw_mechanism(dim, rng) for _ in range(spec.categories)]
            noises = [
                NoiseSpec(prior.categorical_noise, prior.draw_noise_scale(rng))
                for _ in range(spec.categories)
            ]
            equations.append(CategoricalEquation(mechs, noises))
    return Scm(graph, specs, equations, seed=seed)


def encoded_parent_dim(parents: Sequence[int], specs: Sequence[NodeSpec]) -> int:
    """Width of the encoded parent matrix (one-hot for categorical parents)."""
    return sum(
        specs[p].categories if specs[p].kind == CATEGORICAL else 1 for p in parents
    )


def encode_parents(values: np.ndarray, parents: Sequence[int],
                   specs: Sequence[NodeSpec]) -> np.ndarray:
    """Gather parent columns out of a (n, node_count) value matrix,
    one-hot encoding categorical parents."""
    n = values.shape[0]
    blocks = []
    for p in parents:
        if specs[p].kind == CATEGORICAL:
            k = specs[p].categories
            onehot = np.zeros((n, k), dtype=np.float64)
            onehot[np.arange(n), values[:, p].astype(np.intp)] = 1.0
            blocks.append(onehot)
        else:
            blocks.append(values[:, p : p + 1])
    if not blocks:
        return np.zeros((n, 0), dtype=np.float64)
    return np.hstack(blocks)


# ---------------------------------------------------------------------------
# sampling


def draw_standard_noise(scm: Scm, n: int, rng) -> list[np.ndarray]:
    """Unit-scale noise for every node: (n,) per continuous node, (n, K)
    per categorical node. Drawn in node order so the stream is reproducible;
    scale factors are applied during the forward pass, which lets one draw
    be shared across interventional arms."""
    rng = ensure_rng(rng)
    out = []
    for i, spec in enumerate(scm.node_specs):
        eq = scm.equations[i]
        if spec.kind == CATEGORICAL:
            if isinstance(eq, CategoricalEquation):
                fam = eq.noises[0]
            else:
                fam = NoiseSpec("gaussian", 1.0)
            out.append(fam.standard(rng, (n, spec.categories)))
        else:
            fam = eq.noise if isinstance(eq, ContinuousEquation) else NoiseSpec("gaussian", 1.0)
            out.append(fam.standard(rng, n))
    return out


def forward_given_noise(scm: Scm, noise: Sequence[np.ndarray], n: int) -> np.ndarray:
    """Deterministic ancestral pass given pre-drawn unit noise.

    Returns the full (n, node_count) value matrix.
    """
    values = np.zeros((n, scm.node_count), dtype=np.float64)
    for i, spec in enumerate(scm.node_specs):
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


def sample_observational(scm: Scm, n: int, rng) -> SampleTable:
    """Ancestral sampling of ``n`` rows from the (possibly mutilated) SCM."""
    if n < 1:
        raise ConfigurationError("sample size must be >= 1")
    noise = draw_standard_noise(scm, n, rng)
    values = forward_given_noise(scm, noise, n)
    return SampleTable(scm.column_schema(), values)


def _with_fixed(scm: Scm, assignments: dict[int, float], sever: bool = True) -> Scm:
    """Copy with the given nodes pinned to constants. ``sever`` removes the
    incoming edges of pinned nodes (full do-surgery); forward passes ignore
    parents of pinned nodes either way."""
    graph = scm.graph
    specs = list(scm.node_specs)
    eqs = list(scm.equations)
    for node, value in assignments.items():
        if sever:
            graph = graph.without_incoming(node)
            specs[node] = NodeSpec(specs[node].kind, (), specs[node].categories)
        eqs[node] = FixedEquation(float(value))
    interventions = dict(scm.interventions)
    interventions.update({int(k): float(v) for k, v in assignments.items()})
    return Scm(graph, specs, eqs, seed=scm.seed, interventions=interventions)


def validate_intervention(scm: Scm, intervention: InterventionSpec) -> None:
    node = intervention.node_index
    if not (0 <= node < scm.node_count):
        raise InvalidInterventionError(f"node {node} out of range")
    if node == scm.sink_index:
        raise InvalidInterventionError("intervening on the sink/outcome node is not allowed")
    spec = scm.node_specs[node]
    value = intervention.value
    if not np.isfinite(value):
        raise InvalidInterventionError("intervention value must be finite")
    if spec.kind == CATEGORICAL:
        if value != int(value) or not (0 <= int(value) < spec.categories):
            raise InvalidInterventionError(
                f"category index {value!r} invalid for a {spec.categories}-class node"
            )


def apply_do(scm: Scm, intervention: InterventionSpec) -> Scm:
    """Mutilated copy: the intervened node loses its parents and is pinned
    to the intervention value; everything else is untouched. The single-sink
    property may no longer hold on the result and is deliberately not
    re-checked for mutilated SCMs."""
    validate_intervention(scm, intervention)
    return _with_fixed(scm, {intervention.node_index: intervention.value})


def sample_interventional(scm: Scm, intervention: InterventionSpec, n: int, rng) -> SampleTable:
    """Convenience composition of :func:`apply_do` and
    :func:`sample_observational`."""
    return sample_observational(apply_do(scm, intervention), n, rng)


# ---------------------------------------------------------------------------
# ground-truth effects


def _require_treatment_path(scm: Scm, treatment: int) -> set[int]:
    if not (0 <= treatment < scm.node_count):
        raise InvalidInterventionError(f"treatment node {treatment} out of range")
    if treatment == scm.sink_index:
        raise InvalidInterventionError("the sink cannot be the treatment")
    desc = scm.graph.descendants(treatment)
    if scm.sink_index not in desc:
        raise DegenerateTreatmentError(
            f"treatment node {treatment} has no directed path to the sink"
        )
    return desc


def paired_potential_outcomes(scm: Scm, treatment: int, t1: float, t0: float,
                              n: int, rng) -> SampleTable:
    """Shared-noise potential outcomes for a binary contrast.

    One exogenous noise vector per row is drawn once and reused for the
    do(T=t1) and do(T=t0) passes, so the per-row effect ``ITE = Y1 - Y0``
    is exact under that noise. Columns: the pre-treatment covariates (all
    nodes that are neither the treatment, the sink, nor a descendant of the
    treatment), then Y1, Y0, ITE. Covariate values are identical across
    both arms by construction.
    """
    if n < 1:
        raise ConfigurationError("sample size must be >= 1")
    desc = _require_treatment_path(scm, treatment)
    for t in (t1, t0):
        validate_intervention(scm, InterventionSpec(treatment, t))
    noise = draw_standard_noise(scm, n, rng)
    vals1 = forward_given_noise(apply_do(scm, InterventionSpec(treatment, t1)), noise, n)
    vals0 = forward_given_noise(apply_do(scm, InterventionSpec(treatment, t0)), noise, n)
    y1 = vals1[:, scm.sink_index]
    y0 = vals0[:, scm.sink_index]
    cov_nodes = [
        i for i in range(scm.node_count)
        if i != treatment and i != scm.sink_index and i not in desc
    ]
    columns = [
        Column(f"X{i}", scm.node_kind(i), scm.categories(i)) for i in cov_nodes
    ]
    columns += [Column("Y1"), Column("Y0"), Column("ITE")]
    data = np.column_stack([vals1[:, cov_nodes].reshape(n, len(cov_nodes)), y1, y0, y1 - y0])
    return SampleTable(
        columns, data,
        meta={"treatment": treatment, "t1": t1, "t0": t0, "covariate_nodes": cov_nodes},
    )


class CateGroundTruth:
    """Monte Carlo conditional effect estimate with its standard error."""

    def __init__(self, estimate: float, standard_error: float, n_mc: int):
        self.estimate = float(estimate)
        self.standard_error = float(standard_error)
        self.n_mc = int(n_mc)

    def __repr__(self):
        return f"CateGroundTruth({self.estimate:.6g} +- {self.standard_error:.2g}, n_mc={self.n_mc})"


def ground_truth_cate(scm: Scm, treatment: int, t1: float, t0: float,
                      x: dict[int, float], n_mc: int, rng) -> CateGroundTruth:
    """Ground-truth conditional effect at a covariate assignment.

    ``x`` must pin every non-descendant of the treatment (the same
    conditioning set :func:`paired_potential_outcomes` emits). Post-treatment
    noise is redrawn ``n_mc`` times, shared between the two arms within each
    redraw.
    """
    if n_mc < 2:
        raise ConfigurationError("n_mc must be >= 2")
    desc = _require_treatment_path(scm, treatment)
    non_desc = [
        i for i in range(scm.node_count) if i != treatment and i not in desc
    ]
    missing = [i for i in non_desc if i not in x]
    if missing:
        raise ContractError(
            f"covariate assignment must fix all non-descendants of the treatment; missing {missing}"
        )
    conditioned = _with_fixed(scm, {i: x[i] for i in non_desc}, sever=False)
    noise = draw_standard_noise(scm, n_mc, rng)
    vals1 = forward_given_noise(apply_do(conditioned, InterventionSpec(treatment, t1)), noise, n_mc)
    vals0 = forward_given_noise(apply_do(conditioned, InterventionSpec(treatment, t0)), noise, n_mc)
    ite = vals1[:, scm.sink_index] - vals0[:, scm.sink_index]
    se = float(np.std(ite, ddof=1) / np.sqrt(n_mc))
    return CateGroundTruth(float(np.mean(ite)), se, n_mc)


# ---------------------------------------------------------------------------
# serialization


def _equation_to_dict(eq) -> dict:
    if isinstance(eq, FixedEquation):
        return {"type": "fixed", "value": eq.value}
    if isinstance(eq, ContinuousEquation):
        return {
            "type": "additive",
            "mechanism": eq.mechanism.to_dict(),
            "noise": eq.noise.to_dict(),
        }
    if isinstance(eq, CategoricalEquation):
        return {
            "type": "argmax",
            "mechanisms": [m.to_dict() for m in eq.mechanisms],
            "noises": [s.to_dict() for s in eq.noises],
        }
    raise ContractError(f"cannot serialize equation {type(eq).__name__}")


def _equation_from_dict(d: dict):
    kind = d.get("type")
    if kind == "fixed":
        return FixedEquation(float(d["value"]))
    if kind == "additive":
        return ContinuousEquation(
            mechanism_from_dict(d["mechanism"]), NoiseSpec.from_dict(d["noise"])
        )
    if kind == "argmax":
        return CategoricalEquation(
            [mechanism_from_dict(m) for m in d["mechanisms"]],
            [NoiseSpec.from_dict(s) for s in d["noises"]],
        )
    raise ContractError(f"unknown equation type {kind!r}")


def scm_to_dict(scm: Scm) -> dict:
    return {
        "format_version": SCM_FORMAT_VERSION,
        "node_count": scm.node_count,
        "edges": [list(e) for e in scm.graph.edges],
        "seed": scm.seed,
        "interventions": {str(k): v for k, v in scm.interventions.items()},
        "nodes": [
            {
                "kind": spec.kind,
                "parents": list(spec.parents),
                **({"categories": spec.categories} if spec.kind == CATEGORICAL else {}),
                "equation": _equation_to_dict(eq),
            }
            for spec, eq in zip(scm.node_specs, scm.equations)
        ],
    }


def scm_from_dict(d: dict) -> Scm:
    version = d.get("format_version")
    if version != SCM_FORMAT_VERSION:
        raise ContractError(f"unsupported SCM format version {version!r}")
    graph = CausalProcessGraph(d["node_count"], [tuple(e) for e in d["edges"]])
    specs = []
    eqs = []
    for i, nd in enumerate(d["nodes"]):
        specs.append(
            NodeSpec(nd["kind"], tuple(graph.parents(i)), nd.get("categories"))
        )
        eqs.append(_equation_from_dict(nd["equation"]))
    return Scm(
        graph, specs, eqs,
        seed=d.get("seed"),
        interventions={int(k): float(v) for k, v in (d.get("interventions") or {}).items()},
    )


def scm_to_json(scm: Scm, path=None) -> str | None:
    text = json.dumps(scm_to_dict(scm), indent=2, sort_keys=True)
    if path is None:
        return text
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    return None


def scm_from_json(source) -> Scm:
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        text = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    return scm_from_dict(json.loads(text))
