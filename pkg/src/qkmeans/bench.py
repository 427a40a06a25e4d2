"""Four-way trinary classification benchmark.

Every trial draws one stratified train/test split and runs all four
algorithms on it:

* classical SVM: RBF kernel, one-against-rest, trained on the train split;
* quantum SVM: feature-map kernel, one-against-rest, trained on the train split;
* classical K-means and quantum K-means: cluster the unlabeled test split,
  then score with permutation-matched accuracy.

Only the test split is ever scored.
"""

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.pipeline import make_pipeline

from .data import BlobSpec, Dataset, FeatureScaler, load_builtin, make_blobs, subsample_split
from .kmeans import QuantumKMeans, cluster_accuracy
from .rng import derive_seed
from .svm import KernelSVC

ALGORITHMS = ("Classical SVM", "Quantum SVM", "Classical K-means", "Quantum K-means")

# Feature pairs used when none are given. Wine: alcohol and flavanoids;
# Iris: sepal length and sepal width.
DEFAULT_FEATURES = {"wine": (0, 6), "iris": (0, 1), "blobs": (0, 1)}


@dataclass
class BenchmarkConfig:
    dataset: str = "wine"
    trials: int = 5
    n_train: int = 30
    n_test: int = 30
    features: Optional[Sequence[int]] = None
    k: int = 3
    seed: int = 0
    shots: int = 100_000
    kmeans_distance: str = "quantum_shots"
    kernel_mode: str = "shots"
    C: float = 1.0
    n_init: int = 3
    threads: int = 1

    def __post_init__(self):
        if self.dataset not in DEFAULT_FEATURES:
            raise ValueError(f"dataset must be one of {sorted(DEFAULT_FEATURES)}, got {self.dataset!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.features is None:
            self.features = DEFAULT_FEATURES[self.dataset]
        self.features = [int(f) for f in self.features]

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "trials": self.trials,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "features": list(self.features),
            "k": self.k,
            "seed": self.seed,
            "shots": self.shots,
            "kmeans_distance": self.kmeans_distance,
            "kernel_mode": self.kernel_mode,
            "C": self.C,
            "n_init": self.n_init,
        }


@dataclass
class BenchmarkReport:
    config: dict
    accuracies: dict[str, list[float]]
    wall_times: dict[str, list[float]] = field(default_factory=dict)

    @property
    def means(self) -> dict[str, float]:
        return {name: float(np.mean(v)) for name, v in self.accuracies.items()}

    def to_dict(self, include_timings: bool = False) -> dict:
        d = {
            "config": self.config,
            "accuracies": self.accuracies,
            "means": self.means,
        }
        if include_timings:
            d["wall_times"] = self.wall_times
        return d

    def to_json(self, include_timings: bool = False) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        title = f"Trinary classification on {self.config['dataset']} ({self.config['trials']} trials)"
        width = max(len(a) for a in ALGORITHMS)
        lines = [title, f"{'Algorithm':<{width}}  Accuracy", f"{'-' * width}  --------"]
        for name in ALGORITHMS:
            lines.append(f"{name:<{width}}  {100 * self.means[name]:7.1f}%")
        return "\n".join(lines)


def load_benchmark_dataset(config: BenchmarkConfig) -> Dataset:
    if config.dataset == "blobs":
        ds = make_blobs(BlobSpec(n_points=150, dims=5, k_clusters=config.k, std=1.0, seed=config.seed))
    else:
        ds = load_builtin(config.dataset)
    return ds.select_features(config.features)


def run_trial(ds: Dataset, config: BenchmarkConfig, trial: int):
    tseed = derive_seed(config.seed, trial)
    train, test = subsample_split(ds, config.n_train, config.n_test, stratified=True, seed=tseed)
    accs, times = {}, {}

    def timed(name, fn):
        t0 = time.perf_counter()
        accs[name] = float(fn())
        times[name] = time.perf_counter() - t0

    def svm(kernel, scaling):
        model = make_pipeline(
            FeatureScaler(scaling, clip=True),
            KernelSVC(kernel=kernel, C=config.C, kernel_mode=config.kernel_mode, shots=config.shots, random_state=tseed),
        )
        model.fit(train.features, train.labels)
        return np.mean(model.predict(test.features) == test.labels)

    def kmeans(distance):
        X = FeatureScaler("unit_interval").fit_transform(test.features)
        km = QuantumKMeans(
            n_clusters=config.k, distance=distance, shots=config.shots, n_init=config.n_init, random_state=tseed
        ).fit(X)
        return cluster_accuracy(km.labels_, test.labels)

    timed("Classical SVM", lambda: svm("rbf", "unit_interval"))
    timed("Quantum SVM", lambda: svm("quantum", "angle_interval"))
    timed("Classical K-means", lambda: kmeans("classical"))
    timed("Quantum K-means", lambda: kmeans(config.kmeans_distance))
    return accs, times


def run_benchmark(config: BenchmarkConfig) -> BenchmarkReport:
    """Run every trial; results are ordered by trial index whatever the thread count."""
    ds = load_benchmark_dataset(config)
    threads = max(1, int(config.threads))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda t: run_trial(ds, config, t), range(config.trials)))
    else:
        results = [run_trial(ds, config, t) for t in range(config.trials)]
    accuracies = {name: [r[0][name] for r in results] for name in ALGORITHMS}
    wall = {name: [r[1][name] for r in results] for name in ALGORITHMS}
    return BenchmarkReport(config.to_dict(), accuracies, wall)


def env_threads(default: int = 1) -> int:
    """Thread cap from ``QKM_THREADS``."""
    raw = os.environ.get("QKM_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default
