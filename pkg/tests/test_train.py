import numpy as np
import pytest

from hmm2tc.config import TrainConfig
from hmm2tc.errors import DataError
from hmm2tc.gmm import GaussianMixture
from hmm2tc.hmm2 import Hmm2Model, baum_welch2, forward2, sample_hmm2
from hmm2tc.init import init_hmm1, init_hmm2

from conftest import random_hmm2


def two_cluster_frames(rng, n=200):
    a = rng.normal([-3.0, -3.0], 0.3, (n, 2))
    b = rng.normal([3.0, 3.0], 0.3, (n, 2))
    return np.concatenate([a, b])


class TestInit:
    def test_single_state_single_component(self):
        rng = np.random.default_rng(0)
        corpus = [rng.normal(size=(30, 2)), rng.normal(size=(25, 2))]
        model = init_hmm2(corpus, 1, 1, "ergodic", seed=0)
        pooled = np.concatenate(corpus)
        assert np.allclose(model.mixtures[0].means[0], pooled.mean(axis=0))
        assert np.allclose(model.mixtures[0].variances[0], pooled.var(axis=0))

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        corpus = [rng.normal(size=(50, 3))]
        m1 = init_hmm2(corpus, 3, 2, "left-right", seed=7)
        m2 = init_hmm2(corpus, 3, 2, "left-right", seed=7)
        assert np.array_equal(m1.psi, m2.psi)
        assert np.array_equal(m1.a3, m2.a3)
        for a, b in zip(m1.mixtures, m2.mixtures):
            assert np.array_equal(a.means, b.means)
            assert np.array_equal(a.variances, b.variances)

    def test_two_clusters_recovered(self):
        rng = np.random.default_rng(2)
        corpus = [two_cluster_frames(rng)]
        model = init_hmm2(corpus, 1, 2, "ergodic", seed=0)
        means = model.mixtures[0].means[np.argsort(model.mixtures[0].means[:, 0])]
        assert np.allclose(means[0], [-3, -3], atol=0.1)
        assert np.allclose(means[1], [3, 3], atol=0.1)

    def test_left_right_structure(self):
        rng = np.random.default_rng(3)
        model = init_hmm2([rng.normal(size=(60, 2))], 3, 1, "left-right", seed=0)
        assert np.all(np.tril(model.a2, -1) == 0)
        for j in range(3):
            assert np.all(model.a3[:, j, :j] == 0)

    def test_too_few_frames(self):
        with pytest.raises(DataError):
            init_hmm1([np.zeros((3, 2))], 2, 2, seed=0)


class TestBaumWelch2:
    def test_monotone_trace(self):
        rng = np.random.default_rng(4)
        true = random_hmm2(rng, 2, 1, 2)
        corpus = [sample_hmm2(true, 60, seed=s)[1] for s in range(4)]
        init = init_hmm2(corpus, 2, 1, "ergodic", seed=0)
        model, trace = baum_welch2(init, corpus, TrainConfig(max_iterations=15, tol=1e-12))
        assert all(b - a >= -1e-8 for a, b in zip(trace, trace[1:]))
        assert abs(model.psi.sum() - 1) < 1e-10
        assert np.all(np.abs(model.a2.sum(axis=1) - 1) < 1e-10)
        assert np.all(np.abs(model.a3.sum(axis=2) - 1) < 1e-10)

    def test_improves_over_init(self):
        rng = np.random.default_rng(5)
        true = random_hmm2(rng, 3, 1, 2)
        corpus = [sample_hmm2(true, 80, seed=s)[1] for s in range(5)]
        init = init_hmm2(corpus, 3, 1, "ergodic", seed=0)
        model, trace = baum_welch2(init, corpus, TrainConfig(max_iterations=20))
        final_ll = sum(forward2(model, o)[1] for o in corpus)
        assert final_ll > trace[0]

    def test_single_state_reduces_to_gmm_em(self):
        # N=1: transition structure is trivially 1, EM fits the pooled mixture
        rng = np.random.default_rng(6)
        frames = two_cluster_frames(rng, 60)
        init = init_hmm2([frames], 1, 2, "ergodic", seed=1)
        model, trace = baum_welch2(init, [frames], TrainConfig(max_iterations=10, tol=1e-12))
        assert model.a2.shape == (1, 1) and model.a2[0, 0] == 1.0
        assert model.a3[0, 0, 0] == 1.0
        assert all(b - a >= -1e-8 for a, b in zip(trace, trace[1:]))
        means = model.mixtures[0].means[np.argsort(model.mixtures[0].means[:, 0])]
        assert np.allclose(means[0], [-3, -3], atol=0.2)
        assert np.allclose(means[1], [3, 3], atol=0.2)

    def test_requires_t3(self):
        model = random_hmm2(np.random.default_rng(7), 2, 1, 1)
        with pytest.raises(DataError):
            baum_welch2(model, [np.zeros((2, 1))])

    def test_dimension_mismatch(self):
        model = random_hmm2(np.random.default_rng(7), 2, 1, 2)
        with pytest.raises(DataError):
            baum_welch2(model, [np.zeros((5, 3))])

    def test_freeze_initials(self):
        rng = np.random.default_rng(8)
        true = random_hmm2(rng, 2, 1, 2)
        corpus = [sample_hmm2(true, 40, seed=s)[1] for s in range(3)]
        init = init_hmm2(corpus, 2, 1, "ergodic", seed=0)
        cfg = TrainConfig(max_iterations=5, tol=1e-12, freeze_initials=True)
        model, _ = baum_welch2(init, corpus, cfg)
        assert np.array_equal(model.psi, init.psi)
        assert np.array_equal(model.a2, init.a2)

    def test_variance_floor_respected(self):
        rng = np.random.default_rng(9)
        corpus = [rng.normal(size=(50, 2)) for _ in range(3)]
        init = init_hmm2(corpus, 2, 2, "ergodic", seed=0)
        cfg = TrainConfig(max_iterations=8, tol=1e-12)
        model, _ = baum_welch2(init, corpus, cfg)
        pooled = np.concatenate(corpus)
        floor = np.maximum(1e-3 * pooled.var(axis=0), 1e-6)
        for mix in model.mixtures:
            assert np.all(mix.variances >= floor - 1e-15)
