"""Datasets: Gaussian blobs, CSV ingestion, feature scaling and splitting."""

import csv
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DataError
from .rng import make_rng, polar_normals

BUILTIN_DATASETS = ("wine", "iris")
SCALE_TARGETS = ("none", "unit_interval", "angle_interval", "standardize")


@dataclass
class Dataset:
    features: np.ndarray
    labels: Optional[np.ndarray] = None
    feature_names: Optional[list[str]] = None
    provenance: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        if self.features.ndim != 2:
            raise DataError(f"features must be a 2-D matrix, got shape {self.features.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)
            if self.labels.shape != (self.features.shape[0],):
                raise DataError("label count does not match row count")
            if self.labels.size and self.labels.min() < 0:
                raise DataError("labels must be nonnegative integers")
        if self.feature_names is None:
            self.feature_names = [f"f{p}" for p in range(self.features.shape[1])]
        elif len(self.feature_names) != self.features.shape[1]:
            raise DataError("feature_names length does not match column count")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.labels is None or self.labels.size == 0:
            return 0
        return int(self.labels.max()) + 1

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        labels = None if self.labels is None else self.labels[rows]
        return Dataset(self.features[rows], labels, list(self.feature_names), self.provenance)

    def select_features(self, columns: Sequence[int]) -> "Dataset":
        columns = list(columns)
        for c in columns:
            if not 0 <= c < self.n_features:
                raise DataError(f"feature index {c} outside [0, {self.n_features})")
        names = [self.feature_names[c] for c in columns]
        return Dataset(self.features[:, columns], self.labels, names, self.provenance)


@dataclass(frozen=True)
class BlobSpec:
    n_points: int = 100
    dims: int = 5
    k_clusters: int = 3
    std: float = 3.0
    mean_range: tuple[float, float] = field(default=(-10.0, 10.0))
    seed: int = 0

    def __post_init__(self):
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")
        if self.dims < 1:
            raise ValueError("dims must be >= 1")
        if self.k_clusters < 1:
            raise ValueError("k_clusters must be >= 1")
        if not (self.std > 0 and math.isfinite(self.std)):
            raise ValueError(f"std must be positive, got {self.std}")
        lo, hi = self.mean_range
        if not lo < hi:
            raise ValueError(f"mean_range must satisfy low < high, got {self.mean_range}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mean_range"] = list(self.mean_range)
        return d


def make_blobs(spec: BlobSpec) -> Dataset:
    """Isotropic Gaussian clusters.

    Cluster means are uniform over ``mean_range`` in every dimension; each point
    picks its cluster uniformly at random and adds ``std``-scaled normal noise
    drawn with the polar method. The label is the generating cluster.
    """
    rng = make_rng(spec.seed)
    lo, hi = spec.mean_range
    centers = lo + (hi - lo) * rng.random((spec.k_clusters, spec.dims))
    labels = rng.integers(0, spec.k_clusters, size=spec.n_points)
    noise = polar_normals(rng, spec.n_points * spec.dims).reshape(spec.n_points, spec.dims)
    features = centers[labels] + spec.std * noise
    prov = (
        f"blobs(n={spec.n_points}, dims={spec.dims}, k={spec.k_clusters}, "
        f"std={spec.std!r}, range={list(spec.mean_range)}, seed={spec.seed})"
    )
    return Dataset(features, labels, None, prov)


def load_csv(path, label_column: Optional[str] = None) -> Dataset:
    """Read a CSV with one header row and numeric feature columns.

    If ``label_column`` is given, that column is mapped to dense integer labels
    in order of first appearance. Every other column must be numeric.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        label_idx = None
        if label_column is not None:
            if label_column not in header:
                raise DataError(f"{path}: no label column {label_column!r} in header {header}")
            label_idx = header.index(label_column)
        feat_idx = [i for i in range(len(header)) if i != label_idx]
        if not feat_idx:
            raise DataError(f"{path}: no feature columns")

        rows, raw_labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(row[i]) for i in feat_idx])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric feature value ({exc})") from None
            if label_idx is not None:
                raw_labels.append(row[label_idx].strip())

    features = np.array(rows, dtype=float).reshape(len(rows), len(feat_idx))
    if not np.all(np.isfinite(features)):
        raise DataError(f"{path}: non-finite feature values")
    labels = None
    if label_idx is not None:
        codes: dict[str, int] = {}
        labels = np.array([codes.setdefault(v, len(codes)) for v in raw_labels], dtype=int)
    return Dataset(features, labels, [header[i] for i in feat_idx], str(path))


def load_builtin(name: str) -> Dataset:
    """Bundled copy of the UCI Wine or Iris data."""
    if name not in BUILTIN_DATASETS:
        raise DataError(f"unknown builtin dataset {name!r}; choose from {BUILTIN_DATASETS}")
    ref = resources.files("qkmeans") / "datasets" / f"{name}.csv"
    with resources.as_file(ref) as p:
        ds = load_csv(p, label_column="label")
    ds.provenance = name
    return ds


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(dataset: Dataset, path, extra_columns: Optional[dict] = None) -> None:
    """Write ``dataset`` as UTF-8 CSV: feature columns, optional ``label``, extras."""
    extra_columns = extra_columns or {}
    header = list(dataset.feature_names)
    if dataset.labels is not None:
        header.append("label")
    header += list(extra_columns)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in range(dataset.n_samples):
            row = [_fmt(v) for v in dataset.features[r]]
            if dataset.labels is not None:
                row.append(str(int(dataset.labels[r])))
            row += [str(col[r]) for col in extra_columns.values()]
            w.writerow(row)


class FeatureScaler(TransformerMixin, BaseEstimator):
    """Per-feature affine map fitted on one dataset and reusable on others.

    Targets:
        ``none``: identity.
        ``unit_interval``: min-max onto [0, 1].
        ``angle_interval``: min-max onto [0, 2*pi); the fitted maximum lands
            on the largest double below 2*pi.
        ``standardize``: zero mean, unit variance.

    Constant features go to the interval midpoint (0 for ``standardize``).
    With ``clip=True`` transformed values are clipped into the target interval,
    which is what out-of-range test points need before angle encoding.
    """

    def __init__(self, target: str = "unit_interval", clip: bool = False):
        self.target = target
        self.clip = clip

    def _interval(self):
        if self.target == "unit_interval":
            return 0.0, 1.0, False
        if self.target == "angle_interval":
            return 0.0, 2.0 * math.pi, True
        return None

    def fit(self, X, y=None):
        if self.target not in SCALE_TARGETS:
            raise ValueError(f"unknown scaling target {self.target!r}; choose from {SCALE_TARGETS}")
        X = check_array(X, dtype=float)
        self.n_features_in_ = X.shape[1]
        if self.target == "standardize":
            center = X.mean(axis=0)
            spread = X.std(axis=0)
            self.offset_ = center
            self.span_ = np.where(spread > 0, spread, 1.0)
            self.scale_ = 1.0 / self.span_
            self.constant_ = spread == 0
            self.midpoint_ = 0.0
        elif self.target == "none":
            self.offset_ = np.zeros(X.shape[1])
            self.scale_ = np.ones(X.shape[1])
            self.span_ = np.ones(X.shape[1])
            self.constant_ = np.zeros(X.shape[1], dtype=bool)
            self.midpoint_ = 0.0
        else:
            lo, hi, _ = self._interval()
            xmin, xmax = X.min(axis=0), X.max(axis=0)
            width = xmax - xmin
            self.constant_ = width == 0
            self.offset_ = xmin
            self.span_ = width
            self.scale_ = np.where(self.constant_, 0.0, (hi - lo) / np.where(self.constant_, 1.0, width))
            self.midpoint_ = 0.5 * (lo + hi)
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        if self.target == "none":
            return X.copy()
        out = (X - self.offset_) * self.scale_
        interval = self._interval()
        if interval is not None:
            lo, hi, half_open = interval
            out = out + lo
            top = np.nextafter(hi, -np.inf) if half_open else hi
            if half_open:
                # the fitted range itself must stay inside [lo, hi)
                inside = X <= self.offset_ + self.span_
                out[inside] = np.minimum(out[inside], top)
            if self.clip:
                out = np.clip(out, lo, top)
        out[:, self.constant_] = self.midpoint_
        return out

    def inverse_transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_array(X, dtype=float)
        if self.target == "none":
            return X.copy()
        interval = self._interval()
        lo = interval[0] if interval is not None else 0.0
        safe = np.where(self.scale_ == 0, 1.0, self.scale_)
        out = (X - lo) / safe + self.offset_
        out[:, self.constant_] = self.offset_[self.constant_]
        return out


def scale_features(data: Dataset, target: str = "unit_interval", clip: bool = False):
    """Fit a :class:`FeatureScaler` on ``data``; return the scaled copy and the scaler."""
    if data.n_samples == 0:
        raise DataError("cannot scale an empty dataset")
    scaler = FeatureScaler(target=target, clip=clip).fit(data.features)
    scaled = Dataset(scaler.transform(data.features), data.labels, list(data.feature_names), data.provenance)
    return scaled, scaler


def subsample_split(data: Dataset, n_train: int, n_test: int, stratified: bool = True, seed: int = 0):
    """Disjoint seeded train/test subsets of the requested sizes.

    In stratified mode each class receives ``n // n_classes`` rows of each
    split, with the remainder going to the lowest class indices.
    """
    if n_train < 0 or n_test < 0:
        raise ValueError("split sizes must be nonnegative")
    if n_train + n_test > data.n_samples:
        raise DataError(f"requested {n_train}+{n_test} rows from a dataset of {data.n_samples}")
    rng = make_rng(seed)

    if not stratified or data.labels is None:
        order = rng.permutation(data.n_samples)
        return data.take(order[:n_train]), data.take(order[n_train:n_train + n_test])

    classes = np.unique(data.labels)
    c = len(classes)

    def quotas(n):
        q = np.full(c, n // c)
        q[: n % c] += 1
        return q

    q_train, q_test = quotas(n_train), quotas(n_test)
    train_idx, test_idx = [], []
    for ci, cls in enumerate(classes):
        members = np.flatnonzero(data.labels == cls)
        need = q_train[ci] + q_test[ci]
        if need > members.size:
            raise DataError(f"class {cls} has {members.size} rows, stratified split needs {need}")
        members = members[rng.permutation(members.size)]
        train_idx.extend(members[: q_train[ci]])
        test_idx.extend(members[q_train[ci]: need])
    train_idx = np.array(train_idx, dtype=int)[rng.permutation(len(train_idx))]
    test_idx = np.array(test_idx, dtype=int)[rng.permutation(len(test_idx))]
    return data.take(train_idx), data.take(test_idx)
