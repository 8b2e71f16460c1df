import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from playstyle import cluster
from playstyle.cluster import Algorithm, ClusterModel, FitConfig
from playstyle.errors import ValidationError


def brute_assign(X, C):
    d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(-1)
    return d2.argmin(1), d2.min(1)


def km_model(C, param=None):
    C = np.asarray(C, dtype=np.float64)
    return ClusterModel(C, Algorithm.KMEANS, param or C.shape[0], 0.0, 0, 0)


def dp_model(C, lam):
    return ClusterModel(np.asarray(C, dtype=np.float64), Algorithm.DPMEANS, lam, 0.0, 0, 0)


def blobs(rng, centers, n_each, sd):
    X = np.vstack([c + sd * rng.normal(size=(n_each, len(c))) for c in centers])
    return X, np.repeat(np.arange(len(centers)), n_each)


class TestObjectives:
    def test_zero_when_points_are_centroids(self, rng):
        X = rng.random((6, 4))
        assert cluster.distortion(X, km_model(X)) == 0.0

    def test_hand_example(self):
        assert cluster.distortion(np.array([[1.0, 0.0], [0.0, 1.0]]), km_model([[0.0, 0.0]])) == 2.0

    def test_matches_brute_force(self, rng):
        X, C = rng.random((50, 5)), rng.random((3, 5))
        assert cluster.distortion(X, km_model(C)) == pytest.approx(brute_assign(X, C)[1].sum(), rel=1e-13)

    def test_ties_to_lowest_index(self):
        labels, _ = cluster.assign(np.array([[0.5]]), np.array([[1.0], [0.0], [1.0]]))
        assert labels[0] == 0

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValidationError):
            cluster.distortion(rng.random((4, 3)), km_model(rng.random((2, 2))))

    def test_dp_objective(self, rng):
        X = rng.random((20, 3))
        one = dp_model(X[:1], 0.7)
        assert cluster.dp_objective(X, one) == cluster.distortion(X, one)
        C = rng.random((8, 3))
        model = dp_model(C, 3.0)
        assert cluster.dp_objective(X, model) == pytest.approx(cluster.distortion(X, model) + 63.0, abs=1e-12)
        brute = brute_assign(X, C)[1].sum() + 7 * 9.0
        assert cluster.dp_objective(X, model) == pytest.approx(brute, abs=1e-12)

    def test_dp_objective_needs_lambda(self, rng):
        with pytest.raises(ValidationError):
            cluster.dp_objective(rng.random((3, 2)), km_model(rng.random((2, 2))))


class TestKmeans:
    def test_k_equals_n(self, rng):
        X = rng.random((12, 4))
        model, a = cluster.kmeans_fit(X, 12, seed=3)
        assert model.final_objective == 0.0
        assert sorted(map(tuple, model.centroids)) == sorted(map(tuple, X))
        assert np.unique(a.labels).size == 12

    def test_k_one_is_global_mean(self, rng):
        X = rng.random((40, 3))
        model, _ = cluster.kmeans_fit(X, 1)
        np.testing.assert_allclose(model.centroids[0], X.mean(0), rtol=0, atol=1e-15)

    def test_two_blobs(self, rng):
        X, truth = blobs(rng, [np.zeros(2), np.full(2, 10.0)], 100, 0.1)
        model, a = cluster.kmeans_fit(X, 2, seed=1)
        got = model.centroids[np.argsort(model.centroids[:, 0])]
        np.testing.assert_allclose(got[0], X[truth == 0].mean(0), atol=1e-9)
        np.testing.assert_allclose(got[1], X[truth == 1].mean(0), atol=1e-9)

    @pytest.mark.parametrize("bad_k", [0, 5])
    def test_k_out_of_range(self, bad_k):
        with pytest.raises(ValidationError):
            cluster.kmeans_fit(np.zeros((4, 2)), bad_k)

    def test_empty_matrix(self):
        with pytest.raises(ValidationError):
            cluster.kmeans_fit(np.zeros((0, 2)), 1)

    def test_unknown_init(self):
        with pytest.raises(ValidationError):
            cluster.kmeans_fit(np.zeros((4, 2)), 2, init="bogus")

    def test_reseed_empty_cluster(self):
        X = np.array([[0.0], [1.0], [10.0]])
        C = np.array([[0.5], [0.5], [100.0]])
        labels = np.array([0, 0, 0])
        d2 = np.array([0.25, 0.25, 90.25])
        out = cluster._reseed_empty(X, labels, C, d2)
        assert out[0, 0] == 0.5
        assert out[1, 0] == 10.0
        assert out[2, 0] == 0.0 or out[2, 0] == 1.0

    def test_duplicate_points_keep_k(self):
        # random init can put two centroids on identical rows, emptying one
        X = np.array([[0.0, 0.0]] * 5 + [[1.0, 1.0]] * 5 + [[5.0, 5.0]])
        for seed in range(20):
            model, a = cluster.kmeans_fit(X, 3, seed=seed, init="random")
            assert model.k == 3
            assert np.all(np.diff(model.objective_trace) <= 1e-12)

    def test_deterministic(self, rng):
        X = rng.random((200, 5))
        a, la = cluster.kmeans_fit(X, 4, seed=9)
        b, lb = cluster.kmeans_fit(X, 4, seed=9)
        assert a.same_as(b) and np.array_equal(la.labels, lb.labels)

    @given(
        arrays(np.float64, st.tuples(st.integers(3, 40), st.integers(1, 4)), elements=st.floats(0, 1)),
        st.integers(1, 5),
        st.integers(0, 2**16),
        st.sampled_from(["kmeans++", "random"]),
    )
    def test_lloyd_properties(self, X, k, seed, init):
        k = min(k, X.shape[0])
        model, a = cluster.kmeans_fit(X, k, seed=seed, init=init)
        trace = np.array(model.objective_trace)
        assert np.all(np.diff(trace) <= 1e-9 * max(1.0, trace[0]))
        assert model.k == k
        labels, d2 = brute_assign(X, model.centroids)
        if model.converged:
            # labels are an argmin (with the lowest-index tie rule)
            got = ((X - model.centroids[a.labels]) ** 2).sum(1)
            np.testing.assert_allclose(got, d2, rtol=1e-12, atol=1e-15)
            for c in np.unique(a.labels):
                np.testing.assert_allclose(model.centroids[c], X[a.labels == c].mean(0), atol=1e-10)


class TestDpmeans:
    def test_large_lambda_single_cluster(self, rng):
        X = rng.random((60, 4))
        diam2 = ((X[:, None] - X[None]) ** 2).sum(-1).max()
        model, a = cluster.dpmeans_fit(X, np.sqrt(diam2) * 1.01, seed=2)
        assert model.k == 1 and np.all(a.labels == 0)

    def test_tiny_lambda_every_point(self, rng):
        X = rng.random((50, 3))
        lam = 1e-6
        model, _ = cluster.dpmeans_fit(X, lam, seed=0)
        assert model.k == 50
        assert model.final_objective == pytest.approx(49 * lam * lam, rel=1e-12)

    def test_lambda_must_be_positive(self):
        with pytest.raises(ValidationError):
            cluster.dpmeans_fit(np.zeros((3, 2)), 0.0)

    def test_separated_blobs(self, rng):
        centers = [np.array([0.0, 0.0]), np.array([5.0, 0.0]), np.array([0.0, 5.0])]
        X, truth = blobs(rng, centers, 50, 0.05)
        model, a = cluster.dpmeans_fit(X, 1.5, seed=4)
        assert model.k == 3
        pairs = {(int(t), int(l)) for t, l in zip(truth, a.labels)}
        assert len(pairs) == 3

    @given(
        arrays(np.float64, st.tuples(st.integers(2, 40), st.integers(1, 3)), elements=st.floats(0, 1)),
        st.floats(0.05, 1.5),
        st.integers(0, 2**16),
    )
    def test_monotone_and_consistent(self, X, lam, seed):
        model, a = cluster.dpmeans_fit(X, lam, seed=seed)
        trace = np.array(model.objective_trace)
        assert np.all(np.diff(trace) <= 1e-9 * max(1.0, trace[0]))
        assert np.bincount(a.labels).min() > 0
        for c in range(model.k):
            np.testing.assert_allclose(model.centroids[c], X[a.labels == c].mean(0), atol=1e-10)


class TestTrials:
    def test_single_trial_is_a_fit(self, rng):
        X = rng.random((50, 3))
        cfg = FitConfig(Algorithm.KMEANS, 3)
        best, _ = cluster.best_of_trials(X, cfg, 1, base_seed=5)
        one, _ = cluster.fit(X, cfg, 5)
        assert best.same_as(one)

    def test_best_is_minimum(self, rng):
        X = rng.random((80, 3))
        cfg = FitConfig(Algorithm.KMEANS, 4, init="random")
        best, _ = cluster.best_of_trials(X, cfg, 10, base_seed=0)
        objs = [cluster.fit(X, cfg, s)[0].final_objective for s in range(10)]
        assert best.final_objective == min(objs)
        assert best.seed == int(np.argmin(objs))

    def test_enumerated_optimum(self):
        X = np.array([[0.0, 0.0], [1.0, 0.2], [4.0, 3.0], [4.5, 2.0]])
        best_val = np.inf
        for mask in itertools.product([0, 1], repeat=4):
            mask = np.array(mask)
            if 0 < mask.sum() < 4:
                val = sum(((X[mask == g] - X[mask == g].mean(0)) ** 2).sum() for g in (0, 1))
                best_val = min(best_val, val)
        for init in ("random", "kmeans++"):
            best, _ = cluster.best_of_trials(X, FitConfig(Algorithm.KMEANS, 2, init=init), 20)
            assert best.final_objective == pytest.approx(best_val, abs=1e-12)

    def test_needs_a_trial(self):
        with pytest.raises(ValidationError):
            cluster.best_of_trials(np.zeros((3, 1)), FitConfig(Algorithm.KMEANS, 1), 0)


class TestSelection:
    def test_first_interior_minimum(self):
        assert cluster.select_local_optimum([5, 4, 3, 3.5, 1]) == 2
        assert cluster.select_local_optimum([5, 4, 3, 2, 1]) == 4
        assert cluster.select_local_optimum([1.0]) == 0

    def test_rtol_plateau(self):
        s = [10.0, 5.0, 4.99, 4.98, 4.0]
        assert cluster.select_local_optimum(s) == 4
        assert cluster.select_local_optimum(s, rtol=0.01) == 1

    def test_empty_scores(self):
        with pytest.raises(ValidationError):
            cluster.select_local_optimum([])

    def test_folds(self):
        parts = cluster.fold_indices(23, 10, 0)
        assert sorted(len(p) for p in parts) == [2] * 7 + [3] * 3
        assert sorted(np.concatenate(parts).tolist()) == list(range(23))
        with pytest.raises(ValidationError):
            cluster.fold_indices(5, 10, 0)

    def test_singleton_grids(self, rng):
        X = rng.random((40, 3))
        assert cluster.cv_select_k(X, [3], folds=4).chosen == 3
        assert cluster.cv_select_lambda(X, [0.4], folds=4).chosen == 0.4

    def test_curve_shape(self, rng):
        X = rng.random((60, 3))
        curve = cluster.cv_select_lambda(X, [2.5 + 0.1 * i for i in range(20)], folds=10)
        assert len(curve.mean_scores) == 20 and curve.chosen in curve.grid
        assert all(len(f) == 10 for f in curve.fold_scores)

    def test_empty_grid_and_oversized_k(self, rng):
        X = rng.random((20, 2))
        with pytest.raises(ValidationError):
            cluster.cv_select_k(X, [], folds=4)
        with pytest.raises(ValidationError):
            cluster.cv_select_k(X, [19], folds=4)

    def test_blobs_choose_true_k(self, rng):
        centers = list(np.eye(4, 21) * 3.0)
        X, _ = blobs(rng, centers, 40, 0.1)
        assert cluster.cv_select_k(X, range(2, 9), folds=5).chosen == 4


def power_iteration(S, c, iters=5000):
    """Top-c eigenpairs by power iteration with deflation."""
    S = S.copy()
    vecs, vals = [], []
    rng = np.random.default_rng(0)
    for _ in range(c):
        v = rng.normal(size=S.shape[0])
        for _ in range(iters):
            v = S @ v
            v /= np.linalg.norm(v)
        lam = v @ S @ v
        vecs.append(v)
        vals.append(lam)
        S = S - lam * np.outer(v, v)
    return np.array(vals), np.array(vecs)


class TestPca:
    def test_power_iteration_oracle(self, rng):
        # distinct, well-spaced spectrum so power iteration converges quickly
        X = rng.normal(size=(300, 6)) * np.array([5.0, 4.0, 3.0, 2.0, 1.0, 0.5])
        p = cluster.pca_fit(X, 3)
        Xc = X - X.mean(0)
        vals, vecs = power_iteration(Xc.T @ Xc / (len(X) - 1), 3)
        np.testing.assert_allclose(p.explained_variance, vals, rtol=1e-10)
        for a, b in zip(p.components, vecs):
            assert min(np.abs(a - b).max(), np.abs(a + b).max()) < 1e-8

    def test_sign_convention(self, rng):
        p = cluster.pca_fit(rng.random((50, 5)), 5)
        for comp in p.components:
            assert comp[np.argmax(np.abs(comp))] > 0

    def test_line_data(self):
        t = np.linspace(-1, 1, 30)
        X = np.column_stack([t, 2 * t])
        p = cluster.pca_fit(X, 2)
        np.testing.assert_allclose(p.components[0], np.array([1, 2]) / np.sqrt(5), atol=1e-12)
        assert p.explained_variance[1] < 1e-12

    def test_isotropic(self):
        X = np.random.default_rng(1).normal(size=(10_000, 3))
        ev = cluster.pca_fit(X, 3).explained_variance
        assert ev.min() / ev.max() > 0.8

    def test_transform_and_reconstruct(self, rng):
        X = rng.random((40, 5))
        p = cluster.pca_fit(X, 5)
        np.testing.assert_allclose(cluster.pca_transform(p, X.mean(0, keepdims=True)), 0.0, atol=1e-15)
        back = cluster.pca_inverse_transform(p, cluster.pca_transform(p, X))
        np.testing.assert_allclose(back, X, atol=1e-10)

    def test_errors(self, rng):
        with pytest.raises(ValidationError):
            cluster.pca_fit(rng.random((10, 3)), 4)
        with pytest.raises(ValidationError):
            cluster.pca_fit(rng.random((1, 3)), 1)
        p = cluster.pca_fit(rng.random((10, 3)), 2)
        with pytest.raises(ValidationError):
            cluster.pca_transform(p, rng.random((2, 4)))

    @given(
        arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 6)), elements=st.floats(-10, 10)),
        st.integers(1, 6),
    )
    def test_properties(self, X, c):
        c = min(c, X.shape[1])
        p = cluster.pca_fit(X, c)
        np.testing.assert_allclose(p.components @ p.components.T, np.eye(c), atol=1e-10)
        assert np.all(np.diff(p.explained_variance) <= 1e-12 * max(1.0, p.explained_variance[0]))
        total = X.var(axis=0, ddof=1).sum()
        assert p.explained_variance.sum() <= total + 1e-8 * max(1.0, total)


def test_model_dict_round_trip(rng):
    model, _ = cluster.kmeans_fit(rng.random((30, 3)), 3, seed=2)
    assert ClusterModel.from_dict(model.to_dict()).same_as(model)
    dp, _ = cluster.dpmeans_fit(rng.random((30, 3)), 0.5, seed=2)
    assert ClusterModel.from_dict(dp.to_dict()).same_as(dp)
