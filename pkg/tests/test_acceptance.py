"""Release acceptance checks: one test per gate, one PASS/FAIL line each.

Each test prints a single summary line and then asserts. Numeric
thresholds marked "frozen" were established by recorded pilot runs and
must not be relaxed without re-running the corresponding pilot.
"""
from __future__ import annotations

import json

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import interaction_txy_scm, linear_txy_scm
from test_model import TINY, finite_difference_check, tiny_prior
from test_scm import empirical_joint, exact_binary_joint, total_variation

from effectlab.benchmark import (
    SemiSynthConfig,
    build_benchmark_suite,
    build_semi_synthetic,
    generate_covariates,
    pehe,
    run_benchmark,
)
from effectlab.baseline import SLearner
from effectlab.cli import main as cli_main
from effectlab.episodes import generate_batch, narrow_linear_prior
from effectlab.graphs import (
    GraphConfig,
    edge_probability,
    sample_cpg,
    sample_edge_candidates,
)
from effectlab.mechanisms import MechanismPrior
from effectlab.model import (
    ModelConfig,
    TrainConfig,
    episode_loss,
    init_params,
    train,
)
from effectlab.model.inference import InContextEstimator
from effectlab.model.network import assemble_tokens, forward
from effectlab.rng import derived_rng
from effectlab.scm import (
    InterventionSpec,
    apply_do,
    ground_truth_cate,
    instantiate_scm,
    paired_potential_outcomes,
    sample_observational,
)
from effectlab.table import ROLE_OUTCOME, ROLE_TREATMENT


def report(label: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} [{label}] {detail}")
    assert ok, f"{label}: {detail}"


@pytest.fixture(scope="session")
def trained_session():
    """One 500-step training run shared by the sanity and benchmark gates."""
    prior = narrow_linear_prior()
    model_cfg = ModelConfig()
    train_cfg = TrainConfig()  # 500 steps, batch 8
    result = train(model_cfg, train_cfg, prior=prior)
    init = init_params(model_cfg, derived_rng(train_cfg.seed, 0))
    return prior, model_cfg, result, init


def test_01_generator_invariants():
    cfg = GraphConfig()
    rng = derived_rng(101)
    for _ in range(1000):
        g = sample_cpg(cfg, rng)
        assert all(i < j for i, j in g.edges)  # topological order => acyclic
        assert g.is_single_sink()
        sink = g.sink_index
        for node in range(g.node_count):
            if node != sink:
                assert len(g.parents(node)) <= cfg.max_in_degree
                assert g.has_path(node, sink)

    draws = 10_000
    counts = np.zeros((6, 6))
    freq_rng = derived_rng(102)
    for _ in range(draws):
        counts += sample_edge_candidates(6, cfg, freq_rng)
    worst = 0.0
    for i in range(6):
        for j in range(i + 1, 6):
            expected = edge_probability(j - i - 1, cfg)
            worst = max(worst, abs(counts[i, j] / draws - expected))
    report("1/10 generator invariants", worst < 0.02,
           f"1000 draws structurally valid; edge-frequency error "
           f"{worst:.4f} < 0.02 at {draws} draws")


def test_02_do_operator_oracle():
    prior = MechanismPrior(categorical_prob=1.0, categories_range=(2, 2))
    worst = 0.0
    for k in range(10):
        graph = sample_cpg(GraphConfig(node_range=(2, 4)), derived_rng(200, k))
        scm = instantiate_scm(graph, prior, derived_rng(200, k))
        obs = sample_observational(scm, 100_000, derived_rng(201, k))
        tv_obs = total_variation(exact_binary_joint(scm), empirical_joint(obs))

        node = k % max(1, scm.node_count - 1)  # never the sink
        cut = apply_do(scm, InterventionSpec(node, float(k % 2)))
        intv = sample_observational(cut, 100_000, derived_rng(202, k))
        tv_do = total_variation(exact_binary_joint(cut), empirical_joint(intv))
        worst = max(worst, tv_obs, tv_do)
    report("2/10 do-operator oracle", worst <= 0.02,
           f"worst total variation vs enumeration {worst:.4f} <= 0.02 "
           f"over 10 binary processes at 100k samples")


def test_03_effect_oracle():
    scm = linear_txy_scm(slope_t=2.0, slope_x=1.0, noise_scale=1.0)
    po = paired_potential_outcomes(scm, 0, 1.0, 0.0, 500, derived_rng(300))
    exact_linear = np.allclose(po.values("ITE"), 2.0, atol=1e-12)
    # Both effects are deterministic given the covariate, so the Monte
    # Carlo standard error collapses to ~0; the interval width is floored
    # at 1e-12 to absorb float representation noise.
    gt = ground_truth_cate(scm, 0, 1.0, 0.0, {1: 0.7}, 4000, derived_rng(301))
    gt_ok = abs(gt.estimate - 2.0) <= max(3.0 * gt.standard_error, 1e-12)

    inter = interaction_txy_scm()
    po_i = paired_potential_outcomes(inter, 0, 1.0, 0.0, 500, derived_rng(302))
    exact_inter = np.allclose(po_i.values("ITE"), po_i.values("X1"),
                              atol=1e-12)
    gt_i = ground_truth_cate(inter, 0, 1.0, 0.0, {1: -1.3}, 4000,
                             derived_rng(303))
    gt_i_ok = abs(gt_i.estimate - (-1.3)) <= max(3.0 * gt_i.standard_error,
                                                 1e-12)
    report("3/10 effect oracle", exact_linear and gt_ok and exact_inter
           and gt_i_ok,
           f"additive effect exactly 2.0, conditional 2.0 within 3 SE; "
           f"interaction effect equals the covariate exactly, conditional "
           f"{gt_i.estimate:.3f} ~ -1.3 within 3 SE")


def test_04_pehe_arithmetic():
    t = np.array([1.5, -0.5, 2.0])
    exact_zero = pehe(t, t) == 0.0
    unit = pehe(t + 1.0, t) == pytest.approx(1.0, abs=1e-12)
    worked = abs(pehe(np.zeros(2), np.array([3.0, 4.0]))
                 - 3.5355339059327378) <= 1e-4
    report("4/10 error-metric arithmetic", exact_zero and unit and worked,
           "exact predictions -> 0; unit bias -> 1; "
           "([0,0] vs [3,4]) -> 3.5355 within 1e-4")


def test_05_gradient_check():
    worst = 0.0
    for draw in range(20):
        episode = generate_batch(tiny_prior(), 1, derived_rng(500, draw))[0]
        worst = max(worst, finite_difference_check(TINY, episode, seed=draw))
    report("5/10 gradient check", worst < 1e-4,
           f"max relative error vs central differences {worst:.3e} < 1e-4 "
           f"over 20 draws at 64-bit")


def test_06_attention_set_invariance():
    params = init_params(TINY, derived_rng(600))
    worst = 0.0
    for k in range(100):
        ep = generate_batch(tiny_prior(), 1, derived_rng(601, k))[0]
        tokens = assemble_tokens(
            ep.context_features(), ep.context_treatment(),
            ep.context_outcome(), ep.query_features(), TINY,
            dtype=np.float64)
        base = forward(params, TINY, tokens, ep.n_context)
        perm = derived_rng(602, k).permutation(ep.n_context)
        shuffled = np.vstack([tokens[perm], tokens[ep.n_context:]])
        out = forward(params, TINY, shuffled, ep.n_context)
        worst = max(worst, float(np.max(np.abs(out - base))))
    report("6/10 attention set-invariance", worst < 1e-5,
           f"context permutation perturbs query predictions by "
           f"{worst:.3e} < 1e-5 over 100 episodes")


def test_07_training_sanity(trained_session):
    prior, model_cfg, result, init = trained_session
    first50 = float(np.mean(result.history[:50]))
    last50 = float(np.mean(result.history[-50:]))
    ratio = last50 / first50

    held_out = generate_batch(prior, 100, derived_rng(7777, 0))
    wins = sum(
        episode_loss(result.params, model_cfg, ep)
        < episode_loss(init, model_cfg, ep)
        for ep in held_out
    )
    # Frozen from the recorded pilot run: the measured win count was
    # 81/100 (loss ratio 0.26); an oracle least-squares probe given the
    # model's exact inputs wins only ~90/100 on this prior because
    # near-zero effects are unbeatable against a zero predictor, so the
    # bound is set below the information ceiling with drift margin.
    loss_ok = ratio <= 0.8
    wins_ok = wins >= 75
    report("7/10 training sanity", loss_ok and wins_ok,
           f"50-step loss ratio {ratio:.3f} <= 0.8; trained beats "
           f"untrained on {wins}/100 held-out episodes (>= 75, frozen)")


def test_08_baseline_recovery():
    cov = generate_covariates(2000, rng=derived_rng(800))
    config = SemiSynthConfig(response="linear", effect_strength=2.0,
                             outcome_noise=0.1, overlap_clip=0.4,
                             constant_effect=True, seed=800)
    ds = build_semi_synthetic(cov, config, rng=derived_rng(800, 1))
    learner = SLearner(seed=0)
    learner.fit(ds.table)
    queries = ds.table.select(
        [c.name for c in ds.table.columns
         if c.role not in (ROLE_TREATMENT, ROLE_OUTCOME)]
    )
    est = learner.estimate_cate(queries)
    err = float(np.mean(np.abs(est.point - 2.0)))
    report("8/10 baseline recovery", err < 0.1,
           f"mean |estimate - 2| = {err:.4f} < 0.1 on n=2000 linear "
           f"constant-effect data")


def test_09_benchmark_protocol(trained_session):
    _, model_cfg, result, _ = trained_session
    suite = build_benchmark_suite(n_rows=1000, seed=900)
    estimators = [InContextEstimator(result.params, model_cfg),
                  SLearner(seed=0)]
    rep = run_benchmark(suite, estimators, split_seed=900)

    names = [e.name for e in estimators]
    cells_ok = all(
        rep.cells[(ds.name, n)] is not None for ds in suite for n in names
    )
    shape_ok = len(suite) == 10 and cells_ok
    summary = rep.summary()
    exact = True
    for n in names:
        vals = np.array([rep.cells[(ds.name, n)] for ds in suite],
                        dtype=np.float64)
        mean, std = summary[n]
        exact &= mean == float(np.mean(vals))
        exact &= std == float(np.std(vals, ddof=1))
    text = rep.to_text()
    table_ok = "mean +- std" in text and len(text.strip().splitlines()) == 14
    report("9/10 benchmark protocol", shape_ok and exact and table_ok,
           f"10-row report for {names}; summary row equals "
           f"recomputation from cells exactly")


def test_10_reproducibility(tmp_path):
    runner = CliRunner()
    jobs = [
        (["train", "--steps", "3", "--batch-size", "2", "--seed", "5"],
         ["checkpoint.ckpt", "loss_history.csv"]),
        (["generate-prior", "--seed", "6", "--count", "4"],
         ["episodes.bin"]),
        (["evaluate", "--seed", "7", "--n-rows", "150",
          "--estimators", "zero,s-learner"],
         ["report.csv", "report.txt"]),
    ]
    identical = True
    for args, artifacts in jobs:
        first = tmp_path / f"{args[0]}-a"
        second = tmp_path / f"{args[0]}-b"
        res = runner.invoke(cli_main, [*args, "--out", str(first)])
        assert res.exit_code == 0, res.output
        res = runner.invoke(cli_main, [
            "replay", str(first / "manifest.json"), "--out", str(second)])
        assert res.exit_code == 0, res.output
        for name in [*artifacts, "manifest.json"]:
            identical &= (first / name).read_bytes() == \
                (second / name).read_bytes()
    report("10/10 reproducibility", identical,
           "replayed manifests rebuilt checkpoints, episode snapshots, "
           "and reports byte-identically")
