"""Lloyd-style K-means with classical or swap-test distances."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .distance import DEFAULT_SHOTS, quantum_distance
from .errors import CapacityError, DataError, ShapeError
from .rng import derive_seed, make_rng

logger = logging.getLogger(__name__)

DistanceMode = Literal["classical", "quantum_exact", "quantum_shots"]
DISTANCE_MODES = ("classical", "quantum_exact", "quantum_shots")
INIT_METHODS = ("random_points", "kmeanspp")
MAX_MATCH_CLASSES = 10
ZERO_NORM_NUDGE = 1e-9


@dataclass
class KMeansConfig:
    k: int = 3
    distance_mode: DistanceMode = "classical"
    shots: int = DEFAULT_SHOTS
    max_iterations: int = 100
    reassignment_fraction_epsilon: Optional[float] = None
    init: str = "random_points"
    seed: int = 0
    n_init: int = 3
    n_jobs: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.n_init < 1:
            raise ValueError(f"n_init must be >= 1, got {self.n_init}")
        if self.distance_mode not in DISTANCE_MODES:
            raise ValueError(f"unknown distance mode {self.distance_mode!r}; choose from {DISTANCE_MODES}")
        if self.init not in INIT_METHODS:
            raise ValueError(f"unknown init {self.init!r}; choose from {INIT_METHODS}")
        if self.distance_mode == "quantum_shots" and self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.reassignment_fraction_epsilon is None:
            # shot noise can keep flipping boundary points forever under a strict stop rule
            self.reassignment_fraction_epsilon = 0.02 if self.distance_mode == "quantum_shots" else 0.0
        if not 0.0 <= self.reassignment_fraction_epsilon < 1.0:
            raise ValueError("reassignment_fraction_epsilon must lie in [0, 1)")


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    iterations_run: int
    converged: bool
    objective: float = float("nan")
    wcss_trace: list[float] = field(default_factory=list)
    reassigned_trace: list[float] = field(default_factory=list)

    def trace_records(self) -> list[dict]:
        return [
            {"iteration": i + 1, "wcss": w, "reassigned_fraction": r}
            for i, (w, r) in enumerate(zip(self.wcss_trace, self.reassigned_trace))
        ]


def _nudge_zero_norm(v: np.ndarray, what: str) -> np.ndarray:
    if np.any(v):
        return v
    logger.info("zero-norm %s cannot be amplitude-encoded; shifting first component by %g", what, ZERO_NORM_NUDGE)
    v = v.copy()
    v[0] += ZERO_NORM_NUDGE
    return v


class DistanceBackend:
    """Squared distances between points and centroids.

    ``pairwise(X, C, iteration)`` returns an ``N x K`` matrix. Quantum modes
    run one swap-test circuit per entry; in shot mode entry ``(i, k)`` of
    iteration ``t`` uses the seed ``derive_seed(seed, i, k, t)``, so the result
    is independent of evaluation order and thread count.
    """

    def __init__(self, mode: DistanceMode = "classical", shots: int = DEFAULT_SHOTS, seed: int = 0, n_jobs: int = 1):
        if mode not in DISTANCE_MODES:
            raise ValueError(f"unknown distance mode {mode!r}")
        self.mode = mode
        self.shots = shots
        self.seed = seed
        self.n_jobs = max(1, int(n_jobs))

    def pairwise(self, X: np.ndarray, C: np.ndarray, iteration: int = 0) -> np.ndarray:
        if X.shape[1] != C.shape[1]:
            raise ShapeError(f"points have {X.shape[1]} features, centroids {C.shape[1]}")
        if self.mode == "classical":
            diff = X[:, None, :] - C[None, :, :]
            return np.einsum("nkp,nkp->nk", diff, diff)

        qmode = "exact" if self.mode == "quantum_exact" else "shots"
        C = np.array([_nudge_zero_norm(c, f"centroid {k}") for k, c in enumerate(C)])

        def row(i):
            x = _nudge_zero_norm(X[i], f"point {i}")
            return [
                quantum_distance(x, C[k], qmode, self.shots, derive_seed(self.seed, i, k, iteration)).squared_distance
                for k in range(C.shape[0])
            ]

        if self.n_jobs > 1:
            with ThreadPoolExecutor(self.n_jobs) as pool:
                rows = list(pool.map(row, range(X.shape[0])))
        else:
            rows = [row(i) for i in range(X.shape[0])]
        return np.array(rows, dtype=float).reshape(X.shape[0], C.shape[0])


def _sq_dists(X, C):
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("nkp,nkp->nk", diff, diff)


def init_centroids(X: np.ndarray, k: int, init: str = "random_points", seed: int = 0) -> np.ndarray:
    """Pick ``k`` starting centroids from the rows of ``X``.

    ``random_points`` samples ``k`` distinct rows; ``kmeanspp`` uses k-means++
    seeding (classical distances, each new centre drawn with probability
    proportional to its squared distance from the nearest chosen centre).
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < k:
        raise DataError(f"need at least k={k} points, got {n}")
    rng = make_rng(seed)
    if init == "random_points":
        return X[rng.choice(n, size=k, replace=False)].copy()
    if init != "kmeanspp":
        raise ValueError(f"unknown init {init!r}")
    chosen = [int(rng.integers(n))]
    closest = _sq_dists(X, X[chosen])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=closest / total))
        else:
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest))
        chosen.append(nxt)
        closest = np.minimum(closest, _sq_dists(X, X[[nxt]])[:, 0])
    return X[chosen].copy()


def assign_points(X: np.ndarray, centroids: np.ndarray, backend: Optional[DistanceBackend] = None, iteration: int = 0):
    """Nearest-centroid labels; ties go to the lowest centroid index."""
    backend = backend or DistanceBackend("classical")
    d = backend.pairwise(np.asarray(X, dtype=float), np.asarray(centroids, dtype=float), iteration)
    return np.argmin(d, axis=1)


def update_centroids(X: np.ndarray, assignments: np.ndarray, k: int) -> np.ndarray:
    """Per-cluster feature means.

    An empty cluster is re-seeded at the point lying farthest from its own
    assigned centroid; several empty clusters take distinct points in turn.
    """
    X = np.asarray(X, dtype=float)
    assignments = np.asarray(assignments)
    counts = np.bincount(assignments, minlength=k)
    centroids = np.zeros((k, X.shape[1]))
    np.add.at(centroids, assignments, X)
    filled = counts > 0
    centroids[filled] /= counts[filled, None]
    empty = np.flatnonzero(~filled)
    if empty.size:
        gap = np.sum((X - centroids[assignments]) ** 2, axis=1)
        order = np.argsort(-gap, kind="stable")
        for slot, idx in zip(empty, order):
            centroids[slot] = X[idx]
    return centroids


def wcss(X: np.ndarray, centroids: np.ndarray, assignments: np.ndarray) -> float:
    return float(np.sum((X - centroids[assignments]) ** 2))


def canonical_relabel(assignments: np.ndarray, centroids: np.ndarray):
    """Renumber clusters in order of first appearance among the points.

    Empty clusters keep their relative order after the occupied ones.
    """
    k = centroids.shape[0]
    order = list(dict.fromkeys(int(a) for a in assignments))
    order += [c for c in range(k) if c not in order]
    remap = np.empty(k, dtype=int)
    remap[order] = np.arange(k)
    return remap[assignments], centroids[order]


def _lloyd(X, centroids, config: KMeansConfig, backend: DistanceBackend, restart: int) -> ClusterModel:
    prev = None
    converged = False
    wcss_trace, moved_trace = [], []
    objective = float("nan")
    it = 0
    for it in range(1, config.max_iterations + 1):
        d = backend.pairwise(X, centroids, iteration=restart * config.max_iterations + it)
        labels = np.argmin(d, axis=1)
        objective = float(d[np.arange(X.shape[0]), labels].sum())
        moved = 1.0 if prev is None else float(np.mean(labels != prev))
        centroids = update_centroids(X, labels, config.k)
        wcss_trace.append(wcss(X, centroids, labels))
        moved_trace.append(moved)
        prev = labels
        if it > 1 and moved <= config.reassignment_fraction_epsilon:
            converged = True
            break
    labels, centroids = canonical_relabel(prev, centroids)
    return ClusterModel(
        k=config.k,
        centroids=centroids,
        assignments=labels,
        iterations_run=it,
        converged=converged,
        objective=objective,
        wcss_trace=wcss_trace,
        reassigned_trace=moved_trace,
    )


def fit_kmeans(X, config: KMeansConfig, initial_centroids: Optional[np.ndarray] = None) -> ClusterModel:
    """Alternate assignment and centroid update until few enough points move.

    Each run stops once the fraction of reassigned points is at most
    ``config.reassignment_fraction_epsilon`` or after ``max_iterations``
    assign+update passes. With ``n_init > 1`` the run whose last assignment
    pass had the smallest summed distance (as measured by the configured
    backend) wins; runs within a relative 1e-9 of the best count as tied and
    the earliest is kept. The WCSS trace is always evaluated classically.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError("data must be a 2-D matrix")
    backend = DistanceBackend(config.distance_mode, config.shots, derive_seed(config.seed, 1), config.n_jobs)
    if initial_centroids is not None:
        return _lloyd(X, np.array(initial_centroids, dtype=float), config, backend, 0)

    runs = []
    for r in range(config.n_init):
        start = init_centroids(X, config.k, config.init, derive_seed(config.seed, 0, r))
        runs.append(_lloyd(X, start, config, backend, r))
    best = min(run.objective for run in runs)
    return next(run for run in runs if run.objective <= best + 1e-9 * abs(best))


def cluster_accuracy(assignments, true_labels) -> float:
    """Fraction of agreement under the best one-to-one relabeling of clusters.

    The maximum over all relabelings is found exactly with a dynamic program
    over subsets of labels, limited to at most 10 clusters/classes.
    """
    a = np.asarray(assignments, dtype=int)
    y = np.asarray(true_labels, dtype=int)
    if a.shape != y.shape:
        raise ShapeError(f"{a.size} assignments vs {y.size} labels")
    if a.size == 0:
        return 0.0
    m = int(max(a.max(), y.max())) + 1
    if m > MAX_MATCH_CLASSES:
        raise CapacityError(f"{m} clusters/classes exceed the matching bound of {MAX_MATCH_CLASSES}")
    confusion = np.zeros((m, m), dtype=int)
    np.add.at(confusion, (a, y), 1)

    best = np.full(1 << m, -1, dtype=int)
    best[0] = 0
    for mask in range(1 << m):
        if best[mask] < 0:
            continue
        row = bin(mask).count("1")
        if row == m:
            continue
        for lab in range(m):
            if not mask >> lab & 1:
                nxt = mask | (1 << lab)
                val = best[mask] + confusion[row, lab]
                if val > best[nxt]:
                    best[nxt] = val
    return float(best[(1 << m) - 1]) / a.size


class QuantumKMeans(ClusterMixin, BaseEstimator):
    """K-means whose assignment step can use swap-test distances.

    Parameters
    ----------
    n_clusters : int
        Number of clusters.
    distance : {"classical", "quantum_exact", "quantum_shots"}
        How point-centroid squared distances are obtained.
    shots : int
        Measurement repetitions per swap test in ``quantum_shots`` mode.
    max_iter : int
        Upper bound on assign+update passes.
    epsilon : float or None
        Stop when at most this fraction of points changes cluster. ``None``
        picks 0 for noiseless distances and 0.02 for shot-sampled ones.
    init : {"random_points", "kmeanspp"}
    n_init : int
        Independent restarts; the one with the smallest final objective is kept.
    random_state : int
    n_jobs : int
        Threads used to evaluate distances.
    """

    def __init__(
        self,
        n_clusters=3,
        distance="quantum_exact",
        shots=DEFAULT_SHOTS,
        max_iter=100,
        epsilon=None,
        init="random_points",
        n_init=3,
        random_state=0,
        n_jobs=1,
    ):
        self.n_clusters = n_clusters
        self.distance = distance
        self.shots = shots
        self.max_iter = max_iter
        self.epsilon = epsilon
        self.init = init
        self.n_init = n_init
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self) -> KMeansConfig:
        return KMeansConfig(
            k=self.n_clusters,
            distance_mode=self.distance,
            shots=self.shots,
            max_iterations=self.max_iter,
            reassignment_fraction_epsilon=self.epsilon,
            init=self.init,
            n_init=self.n_init,
            seed=self.random_state,
            n_jobs=self.n_jobs,
        )

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        config = self._config()
        model = fit_kmeans(X, config)
        self.model_ = model
        self.cluster_centers_ = model.centroids
        self.labels_ = model.assignments
        self.n_iter_ = model.iterations_run
        self.converged_ = model.converged
        self.wcss_trace_ = model.wcss_trace
        self.inertia_ = model.wcss_trace[-1]
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=float)
        cfg = self._config()
        backend = DistanceBackend(cfg.distance_mode, cfg.shots, derive_seed(cfg.seed, 2), cfg.n_jobs)
        return assign_points(X, self.cluster_centers_, backend)

    def score(self, X, y):
        """Permutation-matched accuracy of ``predict(X)`` against ``y``."""
        return cluster_accuracy(self.predict(X), y)
