"""Structural models: sampling, interventions, and ground-truth effects."""
from __future__ import annotations

import itertools

import numpy as np
import pytest
from scipy.stats import norm

from effectlab.errors import (
    ContractError,
    DegenerateTreatmentError,
    InvalidInterventionError,
)
from effectlab.graphs import CausalProcessGraph, GraphConfig, sample_cpg
from effectlab.mechanisms import (
    ConstantMechanism,
    LinearMechanism,
    MechanismPrior,
    NoiseSpec,
)
from effectlab.rng import derived_rng
from effectlab.scm import (
    CategoricalEquation,
    ContinuousEquation,
    InterventionSpec,
    NodeSpec,
    Scm,
    apply_do,
    ground_truth_cate,
    instantiate_scm,
    paired_potential_outcomes,
    sample_interventional,
    sample_observational,
    scm_from_json,
    scm_to_json,
    validate_intervention,
)
from effectlab.table import CATEGORICAL, CONTINUOUS

from conftest import interaction_txy_scm, linear_txy_scm


class TestSampling:
    def test_root_moments(self, txy_scm):
        table = sample_observational(txy_scm, 20000, derived_rng(0))
        t = table.values("X0")
        assert abs(t.mean()) < 4 / np.sqrt(20000)
        assert t.std() == pytest.approx(1.0, abs=0.05)

    def test_linear_slope_recovery(self, txy_scm):
        table = sample_observational(txy_scm, 20000, derived_rng(1))
        design = np.column_stack(
            [table.values("X0"), table.values("X1"), np.ones(table.n_rows)]
        )
        coef, *_ = np.linalg.lstsq(design, table.values("X2"), rcond=None)
        assert coef[0] == pytest.approx(2.0, abs=0.05)
        assert coef[1] == pytest.approx(1.0, abs=0.05)

    def test_determinism(self, txy_scm):
        a = sample_observational(txy_scm, 100, derived_rng(2))
        b = sample_observational(txy_scm, 100, derived_rng(2))
        np.testing.assert_array_equal(a.data, b.data)

    def test_argmax_dominant_class(self):
        graph = CausalProcessGraph(2, [(0, 1)])
        specs = [NodeSpec(CONTINUOUS, ()), NodeSpec(CATEGORICAL, (0,), categories=3)]
        equations = [
            ContinuousEquation(ConstantMechanism(0.0), NoiseSpec(scale=1.0)),
            CategoricalEquation(
                [ConstantMechanism(0.0), ConstantMechanism(10.0), ConstantMechanism(0.0)],
                [NoiseSpec(scale=0.5)] * 3,
            ),
        ]
        scm = Scm(graph, specs, equations)
        table = sample_observational(scm, 5000, derived_rng(3))
        assert (table.values("X1") == 1.0).mean() > 0.99

    def test_column_schema_kinds(self):
        prior = MechanismPrior(categorical_prob=1.0, categories_range=(2, 2))
        graph = sample_cpg(GraphConfig(node_range=(3, 3)), derived_rng(4))
        scm = instantiate_scm(graph, prior, derived_rng(4))
        table = sample_observational(scm, 50, derived_rng(4))
        assert all(c.kind == CATEGORICAL for c in table.columns)
        assert all(c.categories == 2 for c in table.columns)


class TestInterventions:
    def test_do_severs_dependence(self):
        # X0 -> X1 -> X2 chain; do(X1) makes X2 independent of X0.
        graph = CausalProcessGraph(3, [(0, 1), (1, 2)])
        specs = [NodeSpec(CONTINUOUS, ()), NodeSpec(CONTINUOUS, (0,)),
                 NodeSpec(CONTINUOUS, (1,))]
        equations = [
            ContinuousEquation(ConstantMechanism(0.0), NoiseSpec(scale=1.0)),
            ContinuousEquation(LinearMechanism([1.5]), NoiseSpec(scale=0.3)),
            ContinuousEquation(LinearMechanism([1.0]), NoiseSpec(scale=0.3)),
        ]
        scm = Scm(graph, specs, equations)
        obs = sample_observational(scm, 20000, derived_rng(5))
        assert abs(np.corrcoef(obs.values("X0"), obs.values("X2"))[0, 1]) > 0.9
        cut = sample_interventional(scm, InterventionSpec(1, 2.0), 20000, derived_rng(6))
        assert abs(np.corrcoef(cut.values("X0"), cut.values("X2"))[0, 1]) < 0.03
        assert cut.values("X1").min() == cut.values("X1").max() == 2.0
        assert cut.values("X2").mean() == pytest.approx(2.0, abs=0.02)

    def test_do_leaves_nondescendants_alone(self, txy_scm):
        cut = sample_interventional(txy_scm, InterventionSpec(0, 1.0), 20000,
                                    derived_rng(7))
        x = cut.values("X1")
        assert abs(x.mean()) < 4 / np.sqrt(20000)
        assert x.std() == pytest.approx(1.0, abs=0.05)

    def test_mutilation_is_local(self):
        # X0 -> X1 -> X2; do(X1) severs X0 -> X1 but keeps X1 -> X2.
        graph = CausalProcessGraph(3, [(0, 1), (1, 2)])
        specs = [NodeSpec(CONTINUOUS, ()), NodeSpec(CONTINUOUS, (0,)),
                 NodeSpec(CONTINUOUS, (1,))]
        equations = [
            ContinuousEquation(ConstantMechanism(0.0), NoiseSpec()),
            ContinuousEquation(LinearMechanism([1.0]), NoiseSpec()),
            ContinuousEquation(LinearMechanism([1.0]), NoiseSpec()),
        ]
        scm = Scm(graph, specs, equations)
        cut = apply_do(scm, InterventionSpec(1, 2.0))
        assert cut.mutilated and not scm.mutilated
        assert cut.interventions == {1: 2.0}
        assert cut.graph.parents(1) == []
        assert cut.graph.parents(2) == [1]
        # Untouched equations are shared, not copied.
        assert cut.equations[2] is scm.equations[2]
        assert scm.graph.parents(1) == [0]

    def test_validate_intervention(self):
        graph = CausalProcessGraph(2, [(0, 1)])
        specs = [NodeSpec(CATEGORICAL, (), categories=3), NodeSpec(CONTINUOUS, (0,))]
        equations = [
            CategoricalEquation([ConstantMechanism(0.0)] * 3, [NoiseSpec()] * 3),
            ContinuousEquation(LinearMechanism([1.0, 0.0, 0.0]), NoiseSpec()),
        ]
        scm = Scm(graph, specs, equations)
        validate_intervention(scm, InterventionSpec(0, 2.0))
        with pytest.raises(InvalidInterventionError):
            validate_intervention(scm, InterventionSpec(0, 3.0))
        with pytest.raises(InvalidInterventionError):
            validate_intervention(scm, InterventionSpec(0, 0.5))
        with pytest.raises(InvalidInterventionError):
            validate_intervention(scm, InterventionSpec(5, 0.0))
        with pytest.raises(InvalidInterventionError):
            validate_intervention(scm, InterventionSpec(0, np.nan))
        with pytest.raises(InvalidInterventionError):
            validate_intervention(scm, InterventionSpec(1, 0.0))


def exact_binary_joint(scm: Scm) -> dict[tuple[int, ...], float]:
    """Enumerate the joint law of an all-binary Gaussian-score model.

    With class scores s_k(pa) + scale_k * eps_k and Gaussian eps, class 1
    wins with probability Phi((s1 - s0) / sqrt(scale0^2 + scale1^2)).
    """
    probs = {}
    for values in itertools.product((0.0, 1.0), repeat=scm.node_count):
        p = 1.0
        for i in range(scm.node_count):
            if i in scm.interventions:
                if values[i] != scm.interventions[i]:
                    p = 0.0
                    break
                continue
            eq = scm.equations[i]
            parents = scm.node_specs[i].parents
            row = np.array([[values[j] for j in parents]], dtype=np.float64)
            # Binary parents encode one-hot; class-1 slot carries the value.
            encoded = np.column_stack(
                [np.column_stack([1.0 - row[:, k], row[:, k]])
                 for k in range(row.shape[1])]
            ) if parents else np.zeros((1, 0))
            s0 = eq.mechanisms[0].apply(encoded)[0]
            s1 = eq.mechanisms[1].apply(encoded)[0]
            spread = np.sqrt(eq.noises[0].scale ** 2 + eq.noises[1].scale ** 2)
            p1 = norm.cdf((s1 - s0) / spread)
            p *= p1 if values[i] == 1.0 else 1.0 - p1
        probs[values] = p
    return probs


def empirical_joint(table) -> dict[tuple[int, ...], float]:
    counts: dict[tuple[int, ...], int] = {}
    for row in table.data:
        key = tuple(row.tolist())
        counts[key] = counts.get(key, 0) + 1
    return {k: v / table.n_rows for k, v in counts.items()}


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


class TestAnalyticJoint:
    def test_observational_matches_enumeration(self):
        prior = MechanismPrior(categorical_prob=1.0, categories_range=(2, 2))
        graph = sample_cpg(GraphConfig(node_range=(3, 4)), derived_rng(8))
        scm = instantiate_scm(graph, prior, derived_rng(8))
        table = sample_observational(scm, 50000, derived_rng(9))
        tv = total_variation(exact_binary_joint(scm), empirical_joint(table))
        assert tv < 0.03

    def test_interventional_matches_enumeration(self):
        prior = MechanismPrior(categorical_prob=1.0, categories_range=(2, 2))
        graph = sample_cpg(GraphConfig(node_range=(4, 4)), derived_rng(10))
        scm = instantiate_scm(graph, prior, derived_rng(10))
        cut = apply_do(scm, InterventionSpec(1, 1.0))
        table = sample_observational(cut, 50000, derived_rng(11))
        tv = total_variation(exact_binary_joint(cut), empirical_joint(table))
        assert tv < 0.03


class TestGroundTruthEffects:
    def test_paired_additive_effect_exact(self):
        scm = linear_txy_scm(slope_t=2.0)
        table = paired_potential_outcomes(scm, 0, 1.0, 0.0, 500, derived_rng(12))
        np.testing.assert_allclose(table.values("ITE"), 2.0, atol=1e-12)
        np.testing.assert_array_equal(
            table.values("ITE"), table.values("Y1") - table.values("Y0")
        )
        assert table.meta["covariate_nodes"] == [1]

    def test_paired_interaction_effect_equals_covariate(self):
        scm = interaction_txy_scm()
        table = paired_potential_outcomes(scm, 0, 1.0, 0.0, 500, derived_rng(13))
        np.testing.assert_allclose(
            table.values("ITE"), table.values("X1"), atol=1e-12
        )

    def test_covariates_shared_across_arms(self):
        scm = linear_txy_scm()
        a = paired_potential_outcomes(scm, 0, 1.0, 0.0, 200, derived_rng(14))
        b = paired_potential_outcomes(scm, 0, 3.0, -1.0, 200, derived_rng(14))
        np.testing.assert_array_equal(a.values("X1"), b.values("X1"))

    def test_conditional_effect_monte_carlo(self):
        scm = linear_txy_scm(slope_t=2.0)
        gt = ground_truth_cate(scm, 0, 1.0, 0.0, {1: 0.7}, 2000, derived_rng(15))
        assert abs(gt.estimate - 2.0) <= max(3 * gt.standard_error, 1e-9)

    def test_conditional_effect_interaction(self):
        scm = interaction_txy_scm()
        gt = ground_truth_cate(scm, 0, 1.0, 0.0, {1: -1.3}, 2000, derived_rng(16))
        assert abs(gt.estimate - (-1.3)) <= max(3 * gt.standard_error, 1e-9)

    def test_missing_covariate_rejected(self):
        scm = linear_txy_scm()
        with pytest.raises(ContractError):
            ground_truth_cate(scm, 0, 1.0, 0.0, {}, 100, derived_rng(17))

    def test_treatment_without_path_rejected(self):
        graph = CausalProcessGraph(3, [(1, 2)])
        specs = [NodeSpec(CONTINUOUS, ()), NodeSpec(CONTINUOUS, ()),
                 NodeSpec(CONTINUOUS, (1,))]
        equations = [
            ContinuousEquation(ConstantMechanism(0.0), NoiseSpec()),
            ContinuousEquation(ConstantMechanism(0.0), NoiseSpec()),
            ContinuousEquation(LinearMechanism([1.0]), NoiseSpec()),
        ]
        scm = Scm(graph, specs, equations)
        with pytest.raises(DegenerateTreatmentError):
            paired_potential_outcomes(scm, 0, 1.0, 0.0, 10, derived_rng(18))


class TestSerialization:
    def test_json_round_trip_preserves_law(self):
        prior = MechanismPrior()
        graph = sample_cpg(GraphConfig(), derived_rng(19))
        scm = instantiate_scm(graph, prior, derived_rng(19), seed=19)
        back = scm_from_json(scm_to_json(scm))
        a = sample_observational(scm, 200, derived_rng(20))
        b = sample_observational(back, 200, derived_rng(20))
        np.testing.assert_array_equal(a.data, b.data)
        assert back.seed == 19

    def test_json_file_round_trip(self, tmp_path):
        prior = MechanismPrior(categorical_prob=0.0)
        graph = sample_cpg(GraphConfig(node_range=(3, 3)), derived_rng(21))
        scm = instantiate_scm(graph, prior, derived_rng(21))
        path = tmp_path / "model.json"
        scm_to_json(scm, path)
        back = scm_from_json(path)
        assert back.graph == scm.graph
