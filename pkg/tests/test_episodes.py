"""Pretraining episodes: encoding, targets, determinism, snapshots."""
from __future__ import annotations

import numpy as np
import pytest

from effectlab.episodes import (
    OUTCOME_COLUMN,
    TREATED_COLUMN,
    Episode,
    FeatureCodec,
    PriorConfig,
    episode_from_scm,
    generate_batch,
    generate_episode,
    load_episodes,
    narrow_linear_prior,
    save_episodes,
)
from effectlab.errors import ConfigurationError
from effectlab.graphs import CausalProcessGraph
from effectlab.mechanisms import ConstantMechanism, LinearMechanism, NoiseSpec
from effectlab.rng import derived_rng
from effectlab.scm import ContinuousEquation, NodeSpec, Scm
from effectlab.table import CATEGORICAL, CONTINUOUS, Column, SampleTable

from conftest import linear_txy_scm


def small_prior(**overrides) -> PriorConfig:
    kwargs = dict(context_range=(16, 24), query_count=4, probe_samples=200)
    kwargs.update(overrides)
    return narrow_linear_prior(**kwargs)


class TestFeatureCodec:
    def test_continuous_zscore(self):
        table = SampleTable([Column("a", CONTINUOUS)], np.array([[1.0], [3.0]]))
        codec = FeatureCodec.fit(table, ["a"], max_features=4)
        enc = codec.encode(table)
        np.testing.assert_allclose(enc[:, 0], [-1.0, 1.0])
        assert enc.shape == (2, 4)
        np.testing.assert_array_equal(enc[:, 1:], 0.0)
        np.testing.assert_array_equal(codec.mask(), [1, 0, 0, 0])

    def test_constant_column_uses_unit_scale(self):
        table = SampleTable([Column("a", CONTINUOUS)], np.array([[5.0], [5.0]]))
        codec = FeatureCodec.fit(table, ["a"], max_features=2)
        np.testing.assert_array_equal(codec.encode(table)[:, 0], [0.0, 0.0])

    def test_categorical_one_hot(self):
        table = SampleTable(
            [Column("k", CATEGORICAL, 3)], np.array([[0.0], [2.0], [1.0]])
        )
        codec = FeatureCodec.fit(table, ["k"], max_features=4)
        enc = codec.encode(table)
        np.testing.assert_array_equal(
            enc[:, :3], [[1, 0, 0], [0, 0, 1], [0, 1, 0]]
        )
        assert codec.encoded_dim == 3

    def test_width_overflow_rejected(self):
        table = SampleTable(
            [Column("k", CATEGORICAL, 5)], np.array([[0.0], [4.0]])
        )
        with pytest.raises(ConfigurationError):
            FeatureCodec.fit(table, ["k"], max_features=4)


class TestEpisodeFromScm:
    def test_layout_and_roles(self, txy_scm):
        prior = small_prior()
        ep = episode_from_scm(txy_scm, 0, prior, derived_rng(0))
        assert ep is not None
        assert ep.context.role_column("treatment") == TREATED_COLUMN
        assert ep.context.role_column("outcome") == OUTCOME_COLUMN
        assert ep.queries.n_rows == prior.query_count
        assert ep.targets.shape == (prior.query_count,)
        assert ep.targets.dtype == np.float32
        assert ep.max_features == prior.max_features
        assert set(np.unique(ep.context_treatment())) <= {0.0, 1.0}
        # Context outcome is z-scored by its own statistics.
        assert abs(ep.context_outcome().mean()) < 1e-6
        assert ep.meta.covariate_nodes == (1,)
        np.testing.assert_array_equal(ep.feature_mask[:1], [1.0])
        np.testing.assert_array_equal(ep.feature_mask[1:], 0.0)

    def test_targets_are_raw_scale(self, txy_scm):
        # The structural effect of T: q75 - q25 of a standard normal, times
        # the slope 2; raw targets must sit at that scale, not unit scale.
        ep = episode_from_scm(txy_scm, 0, small_prior(), derived_rng(1))
        spread = ep.meta.t1 - ep.meta.t0
        np.testing.assert_allclose(ep.targets, 2.0 * spread, rtol=1e-6)
        np.testing.assert_allclose(
            ep.targets_normalized(), ep.targets / ep.meta.y_std, rtol=1e-7
        )

    def test_zero_effect_targets_exactly_zero(self):
        scm = linear_txy_scm(slope_t=0.0, slope_x=1.0)
        ep = episode_from_scm(scm, 0, small_prior(), derived_rng(2))
        np.testing.assert_array_equal(ep.targets, 0.0)

    def test_degenerate_contrast_returns_none(self):
        # Treatment pinned to a constant: no 25/75 percentile spread.
        graph = CausalProcessGraph(2, [(0, 1)])
        specs = [NodeSpec(CONTINUOUS, ()), NodeSpec(CONTINUOUS, (0,))]
        equations = [
            ContinuousEquation(ConstantMechanism(1.0), NoiseSpec(scale=1e-13)),
            ContinuousEquation(LinearMechanism([1.0]), NoiseSpec()),
        ]
        scm = Scm(graph, specs, equations)
        assert episode_from_scm(scm, 0, small_prior(), derived_rng(3)) is None


class TestGeneration:
    def test_batch_deterministic(self):
        prior = small_prior()
        a = generate_batch(prior, 4, 123)
        b = generate_batch(prior, 4, 123)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.context.data, y.context.data)
            np.testing.assert_array_equal(x.targets, y.targets)
            assert x.meta == y.meta

    def test_batch_episodes_differ(self):
        a, b = generate_batch(small_prior(), 2, 7)
        assert a.meta.scm_seed != b.meta.scm_seed

    def test_context_size_within_range(self):
        prior = small_prior(context_range=(10, 12))
        for ep in generate_batch(prior, 6, 11):
            assert 10 <= ep.n_context <= 12

    def test_generate_episode_accepts_rng(self):
        ep = generate_episode(small_prior(), derived_rng(42))
        assert isinstance(ep, Episode)
        assert np.all(np.isfinite(ep.targets))

    def test_mixed_prior_generates(self):
        prior = PriorConfig(context_range=(16, 24), query_count=4,
                            probe_samples=200)
        eps = generate_batch(prior, 6, 5)
        assert len(eps) == 6
        for ep in eps:
            assert ep.n_queries == 4
            assert np.all(np.isfinite(ep.targets))


class TestSnapshot:
    def test_round_trip_identical(self, tmp_path):
        prior = small_prior()
        episodes = generate_batch(prior, 3, 9)
        path = tmp_path / "episodes.bin"
        save_episodes(path, episodes)
        back = load_episodes(path)
        assert len(back) == 3
        for a, b in zip(episodes, back):
            np.testing.assert_array_equal(a.context.data, b.context.data)
            np.testing.assert_array_equal(a.queries.data, b.queries.data)
            np.testing.assert_array_equal(a.targets, b.targets)
            np.testing.assert_array_equal(a.feature_mask, b.feature_mask)
            assert a.meta == b.meta
            assert [c.kind for c in b.context.columns] == \
                [c.kind for c in a.context.columns]

    def test_resave_is_byte_identical(self, tmp_path):
        episodes = generate_batch(small_prior(), 2, 13)
        p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
        save_episodes(p1, episodes)
        save_episodes(p2, load_episodes(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_rejects_wrong_format(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b'{"format": "something-else"}\n')
        with pytest.raises(Exception):
            load_episodes(path)
