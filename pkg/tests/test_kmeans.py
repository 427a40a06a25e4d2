import itertools
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkmeans.data import BlobSpec, make_blobs
from qkmeans.errors import CapacityError, DataError, ShapeError
from qkmeans.kmeans import (
    ClusterModel,
    DistanceBackend,
    KMeansConfig,
    QuantumKMeans,
    assign_points,
    canonical_relabel,
    cluster_accuracy,
    fit_kmeans,
    init_centroids,
    update_centroids,
    wcss,
)
from qkmeans.rng import derive_seed


def brute_accuracy(assignments, labels):
    a, y = np.asarray(assignments), np.asarray(labels)
    m = max(a.max(), y.max()) + 1
    return max(np.mean(np.array(perm)[a] == y) for perm in itertools.permutations(range(m)))


@pytest.fixture(scope="module")
def blobs():
    return make_blobs(BlobSpec(n_points=60, dims=3, k_clusters=3, std=1.5, seed=11))


# ---- config ----


@pytest.mark.parametrize(
    "kwargs",
    [dict(k=0), dict(max_iterations=0), dict(n_init=0), dict(distance_mode="manhattan"), dict(init="grid"),
     dict(reassignment_fraction_epsilon=1.0)],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        KMeansConfig(**kwargs)


@pytest.mark.parametrize("mode, eps", [("classical", 0.0), ("quantum_exact", 0.0), ("quantum_shots", 0.02)])
def test_default_epsilon(mode, eps):
    assert KMeansConfig(distance_mode=mode).reassignment_fraction_epsilon == eps


# ---- init ----


def test_init_with_n_equal_k_is_permutation():
    X = np.arange(12, dtype=float).reshape(4, 3)
    c = init_centroids(X, 4, seed=3)
    assert sorted(map(tuple, c)) == sorted(map(tuple, X))


@pytest.mark.parametrize("init", ["random_points", "kmeanspp"])
def test_init_deterministic(init, blobs):
    a = init_centroids(blobs.features, 3, init, seed=5)
    b = init_centroids(blobs.features, 3, init, seed=5)
    np.testing.assert_array_equal(a, b)


def test_init_too_few_points():
    with pytest.raises(DataError):
        init_centroids(np.zeros((2, 2)), 3)


FAR_PAIRS = np.array([[0.0, 0.0], [1.0, 0.0], [100.0, 0.0], [101.0, 0.0]])


def kmeanspp_same_pair_probability(X):
    """Enumerate the two-step k-means++ tree exactly."""
    n = len(X)
    total = 0.0
    for first in range(n):
        d = np.sum((X - X[first]) ** 2, axis=1)
        for second in range(n):
            same = (first < 2) == (second < 2)
            if same:
                total += (1 / n) * d[second] / d.sum()
    return total


def test_kmeanspp_splits_far_pairs():
    p_same = kmeanspp_same_pair_probability(FAR_PAIRS)
    assert p_same < 1e-4
    for seed in range(40):
        c = init_centroids(FAR_PAIRS, 2, "kmeanspp", seed=seed)
        assert sorted(c[:, 0] > 50) == [False, True]


def test_kmeanspp_frequency_matches_enumeration():
    # closer pairs make "same pair" likely enough to measure
    X = np.array([[0.0, 0.0], [2.0, 0.0], [3.0, 0.0], [5.0, 0.0]])
    p_same = kmeanspp_same_pair_probability(X)
    trials = 2000
    hits = sum(
        (c[0, 0] < 2.5) == (c[1, 0] < 2.5)
        for c in (init_centroids(X, 2, "kmeanspp", seed=s) for s in range(trials))
    )
    assert hits / trials == pytest.approx(p_same, abs=4 * np.sqrt(p_same * (1 - p_same) / trials))


# ---- assign / update ----


def test_assign_point_on_centroid():
    C = np.array([[5.0, 5.0], [-3.0, 1.0], [2.0, 2.0]])
    assert assign_points(np.array([[2.0, 2.0]]), C)[0] == 2


@pytest.mark.parametrize("mode", ["classical", "quantum_exact"])
def test_assign_tie_goes_to_lowest_index(mode):
    C = np.array([[1.0, 0.0], [3.0, 0.0]])
    assert assign_points(np.array([[2.0, 1.0]]), C, DistanceBackend(mode))[0] == 0


def test_assign_quantum_matches_classical_small():
    rng = np.random.default_rng(8)
    X, C = rng.normal(size=(6, 3)), rng.normal(size=(2, 3))
    np.testing.assert_array_equal(
        assign_points(X, C, DistanceBackend("quantum_exact")), assign_points(X, C, DistanceBackend("classical"))
    )


def test_backend_shape_mismatch():
    with pytest.raises(ShapeError):
        DistanceBackend("classical").pairwise(np.zeros((2, 3)), np.zeros((1, 2)))


def test_zero_norm_inputs_are_nudged(caplog):
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    C = np.array([[0.0, 0.0], [1.0, 1.0]])
    with caplog.at_level(logging.INFO, logger="qkmeans"):
        d = DistanceBackend("quantum_exact").pairwise(X, C)
    np.testing.assert_allclose(d, DistanceBackend("classical").pairwise(X, C), atol=1e-8)
    assert "zero-norm" in caplog.text


def test_update_single_cluster_is_global_mean(blobs):
    c = update_centroids(blobs.features, np.zeros(blobs.n_samples, dtype=int), 1)
    np.testing.assert_allclose(c[0], blobs.features.mean(axis=0))


def test_update_mean():
    c = update_centroids(np.array([[0.0, 0.0], [2.0, 2.0]]), np.array([0, 0]), 1)
    np.testing.assert_array_equal(c, [[1.0, 1.0]])


def test_update_empty_cluster_takes_farthest_point():
    X = np.array([[0.0], [1.0], [2.0], [10.0]])
    c = update_centroids(X, np.array([0, 0, 0, 0]), 3)
    # cluster 0 mean = 3.25; farthest point is 10, then 0
    np.testing.assert_array_equal(c[:, 0], [3.25, 10.0, 0.0])


def test_canonical_relabel():
    labels, cents = canonical_relabel(np.array([2, 2, 0, 1, 0]), np.array([[0.0], [1.0], [2.0]]))
    np.testing.assert_array_equal(labels, [0, 0, 1, 2, 1])
    np.testing.assert_array_equal(cents[:, 0], [2.0, 0.0, 1.0])


# ---- fit ----


def test_fit_two_far_blobs_is_perfect():
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(0, 0.1, (20, 2)), rng.normal(0, 0.1, (20, 2)) + [20, 0]])
    y = np.repeat([0, 1], 20)
    model = fit_kmeans(X, KMeansConfig(k=2, seed=1))
    assert model.converged
    assert cluster_accuracy(model.assignments, y) == 1.0


def test_fit_quantum_exact_equals_classical(blobs):
    a = fit_kmeans(blobs.features, KMeansConfig(k=3, distance_mode="classical", seed=4))
    b = fit_kmeans(blobs.features, KMeansConfig(k=3, distance_mode="quantum_exact", seed=4))
    np.testing.assert_array_equal(a.assignments, b.assignments)
    assert a.iterations_run == b.iterations_run


def test_fit_single_pass(blobs):
    model = fit_kmeans(blobs.features, KMeansConfig(k=3, max_iterations=1, n_init=1))
    assert model.iterations_run == 1
    assert len(model.wcss_trace) == 1
    assert not model.converged


@pytest.mark.parametrize("mode", ["classical", "quantum_exact"])
def test_wcss_nonincreasing(mode, blobs):
    model = fit_kmeans(blobs.features, KMeansConfig(k=3, distance_mode=mode, seed=2, n_init=1))
    trace = np.array(model.wcss_trace)
    assert np.all(np.diff(trace) <= 1e-9 * trace[:-1])
    assert model.wcss_trace[-1] == pytest.approx(wcss(blobs.features, model.centroids, model.assignments))


def test_fit_invariants(blobs):
    model = fit_kmeans(blobs.features, KMeansConfig(k=3, seed=9))
    assert model.assignments.shape == (blobs.n_samples,)
    assert set(model.assignments) <= {0, 1, 2}
    assert model.centroids.shape == (3, blobs.n_features)
    recs = model.trace_records()
    assert [r["iteration"] for r in recs] == list(range(1, model.iterations_run + 1))
    assert recs[0]["reassigned_fraction"] == 1.0


def test_fit_with_given_centroids():
    X = np.array([[0.0, 0.0], [0.2, 0.0], [5.0, 5.0], [5.2, 5.0]])
    model = fit_kmeans(X, KMeansConfig(k=2), initial_centroids=[[5.0, 5.0], [0.0, 0.0]])
    np.testing.assert_array_equal(model.assignments, [0, 0, 1, 1])


def test_shots_fit_deterministic_across_threads(blobs):
    X = blobs.features[:24]
    cfg = dict(k=3, distance_mode="quantum_shots", shots=2000, seed=3, n_init=1, max_iterations=5)
    a = fit_kmeans(X, KMeansConfig(**cfg, n_jobs=1))
    b = fit_kmeans(X, KMeansConfig(**cfg, n_jobs=4))
    np.testing.assert_array_equal(a.assignments, b.assignments)
    assert a.wcss_trace == b.wcss_trace


def test_restarts_pick_lowest_objective(blobs):
    X = blobs.features
    cfg = KMeansConfig(k=3, seed=0, n_init=4)
    replays = [
        fit_kmeans(X, cfg, initial_centroids=init_centroids(X, 3, "random_points", derive_seed(0, 0, r)))
        for r in range(4)
    ]
    best = min(range(4), key=lambda r: replays[r].objective)
    multi = fit_kmeans(X, cfg)
    assert multi.objective == replays[best].objective
    np.testing.assert_array_equal(multi.assignments, replays[best].assignments)


# ---- accuracy ----


def test_accuracy_basic():
    y = np.array([0, 0, 1, 1, 2, 2])
    assert cluster_accuracy(y, y) == 1.0
    assert cluster_accuracy(np.array([1, 1, 0, 0, 2, 2]), y) == 1.0
    assert cluster_accuracy([0, 1, 0, 1], [0, 0, 1, 1]) == 0.5


def test_accuracy_errors():
    with pytest.raises(ShapeError):
        cluster_accuracy([0, 1], [0])
    with pytest.raises(CapacityError):
        cluster_accuracy(np.arange(11), np.arange(11))


@settings(max_examples=80, deadline=None)
@given(
    st.integers(1, 30).flatmap(
        lambda n: st.tuples(st.lists(st.integers(0, 4), min_size=n, max_size=n), st.lists(st.integers(0, 4), min_size=n, max_size=n))
    ),
    st.permutations(range(5)),
)
def test_accuracy_matches_brute_force_and_is_relabel_invariant(pair, perm):
    a, y = np.array(pair[0]), np.array(pair[1])
    acc = cluster_accuracy(a, y)
    assert acc == pytest.approx(brute_accuracy(a, y), abs=1e-15)
    assert cluster_accuracy(np.array(perm)[a], y) == acc


# ---- estimator ----


def test_estimator_api(blobs):
    km = QuantumKMeans(n_clusters=3, distance="quantum_exact", random_state=1).fit(blobs.features)
    assert km.labels_.shape == (blobs.n_samples,)
    assert km.cluster_centers_.shape == (3, blobs.n_features)
    assert km.inertia_ == pytest.approx(km.wcss_trace_[-1])
    np.testing.assert_array_equal(km.predict(blobs.features), km.labels_)
    assert km.score(blobs.features, blobs.labels) == cluster_accuracy(km.labels_, blobs.labels)
    assert isinstance(km.model_, ClusterModel)
    assert QuantumKMeans(n_clusters=2).get_params()["n_clusters"] == 2
