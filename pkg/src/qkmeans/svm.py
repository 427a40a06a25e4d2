"""Kernel SVM trained by SMO, with a one-against-rest multiclass wrapper."""

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .errors import ClassCountError, DataError, ShapeError
from .qkernel import kernel_matrix
from .rng import derive_seed, make_rng

logger = logging.getLogger(__name__)

JITTER_START = 1e-8
JITTER_MAX = 1e-4


@dataclass
class DualSolution:
    alphas: np.ndarray
    bias: float
    labels: np.ndarray
    regularization_c: float
    converged: bool = True
    passes: int = 0
    objective_trace: list[float] = field(default_factory=list)

    @property
    def support_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alphas > 0)

    def to_dict(self) -> dict:
        return {
            "alphas": [float(a) for a in self.alphas],
            "bias": float(self.bias),
            "support_indices": [int(i) for i in self.support_indices],
            "labels": [int(v) for v in self.labels],
            "regularization_c": float(self.regularization_c),
            "converged": bool(self.converged),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DualSolution":
        return cls(
            alphas=np.asarray(d["alphas"], dtype=float),
            bias=float(d["bias"]),
            labels=np.asarray(d["labels"], dtype=int),
            regularization_c=float(d["regularization_c"]),
            converged=bool(d.get("converged", True)),
        )


def dual_objective(alphas, labels, gram) -> float:
    ay = alphas * labels
    return float(alphas.sum() - 0.5 * ay @ gram @ ay)


def _bias_from_bounds(alphas, y, g, C, eps):
    """Bias when no multiplier is strictly inside (0, C)."""
    at_zero = alphas <= eps
    at_c = alphas >= C - eps
    lower = np.concatenate([(1 - g)[at_zero & (y > 0)], (-1 - g)[at_c & (y < 0)]])
    upper = np.concatenate([(-1 - g)[at_zero & (y < 0)], (1 - g)[at_c & (y > 0)]])
    lo = lower.max() if lower.size else None
    hi = upper.min() if upper.size else None
    if lo is not None and hi is not None:
        return 0.5 * (lo + hi)
    return lo if lo is not None else (hi if hi is not None else 0.0)


def solve_dual(
    gram,
    labels,
    C: float = 1.0,
    tolerance: float = 1e-3,
    max_passes: int = 50,
    seed: int = 0,
) -> DualSolution:
    """Maximise the SVM dual by sequential minimal optimisation.

    Each pass visits every multiplier; a KKT violator is paired with a second
    index drawn from a seeded random order, trying candidates until one pair
    makes progress. Violations are judged without reference to the running
    bias: with ``F_i = f(x_i) - y_i - b``, the solution is optimal once
    ``max F`` over indices that may move down is within ``2 * tolerance`` of
    ``min F`` over indices that may move up. Solving stops at optimality, after
    a pass that makes no progress, or after ``max_passes`` passes. The bias is
    then re-estimated as the mean over margin support vectors.
    """
    K = np.asarray(gram, dtype=float)
    y = np.asarray(labels, dtype=float).ravel()
    n = y.size
    if K.shape != (n, n):
        raise ShapeError(f"Gram matrix {K.shape} does not match {n} labels")
    if not np.all(np.isfinite(K)):
        raise DataError("Gram matrix has non-finite entries")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("labels must be -1 or +1")
    if C <= 0:
        raise ValueError(f"C must be positive, got {C}")

    rng = make_rng(seed)
    alphas = np.zeros(n)
    b = 0.0
    err = -y.copy()  # f(x_i) - y_i with alpha = 0, b = 0
    trace = [0.0]
    eps = 1e-12

    def snap(a):
        if a < eps * C:
            return 0.0
        if a > C * (1.0 - eps):
            return C
        return a

    def step(i, j):
        nonlocal b
        if i == j:
            return False
        ai, aj = alphas[i], alphas[j]
        yi, yj = y[i], y[j]
        if yi != yj:
            lo, hi = max(0.0, aj - ai), min(C, C + aj - ai)
        else:
            lo, hi = max(0.0, ai + aj - C), min(C, ai + aj)
        if hi - lo < eps:
            return False
        eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
        if eta >= 0:
            return False
        aj_new = min(hi, max(lo, aj - yj * (err[i] - err[j]) / eta))
        if abs(aj_new - aj) < eps * (aj_new + aj + eps):
            return False
        ai_new = ai + yi * yj * (aj - aj_new)
        # snap rounding residue onto the box so bound multipliers read as bound
        ai_new = snap(ai_new)
        aj_new = snap(aj_new)
        dai, daj = ai_new - ai, aj_new - aj
        b1 = b - err[i] - yi * dai * K[i, i] - yj * daj * K[i, j]
        b2 = b - err[j] - yi * dai * K[i, j] - yj * daj * K[j, j]
        if 0 < ai_new < C:
            b_new = b1
        elif 0 < aj_new < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        err[:] += yi * dai * K[i] + yj * daj * K[j] + (b_new - b)
        alphas[i], alphas[j], b = ai_new, aj_new, b_new
        trace.append(dual_objective(alphas, y, K))
        return True

    def bounds():
        # b-free optimality: F = f - y - b must satisfy max over I_low <= min over I_up (+2 tol)
        F = err - b
        up = ((y > 0) & (alphas < C)) | ((y < 0) & (alphas > 0))
        low = ((y > 0) & (alphas > 0)) | ((y < 0) & (alphas < C))
        b_up = F[up].min() if up.any() else np.inf
        b_low = F[low].max() if low.any() else -np.inf
        return F, up, low, b_up, b_low

    converged = False
    passes = 0
    while passes < max_passes:
        passes += 1
        violators = changed = 0
        for i in range(n):
            F, up, low, b_up, b_low = bounds()
            if b_low <= b_up + 2 * tolerance:
                break
            if not ((up[i] and F[i] < b_low - 2 * tolerance) or (low[i] and F[i] > b_up + 2 * tolerance)):
                continue
            violators += 1
            for j in rng.permutation(n):
                if step(i, int(j)):
                    changed += 1
                    break
        _, _, _, b_up, b_low = bounds()
        if b_low <= b_up + 2 * tolerance:
            converged = True
            break
        if changed == 0:
            break
    if not converged:
        logger.warning("SMO stopped after %d passes without meeting the KKT tolerance", passes)

    g = K @ (alphas * y)
    free = (alphas > eps) & (alphas < C - eps)
    if np.any(free):
        b = float(np.mean(y[free] - g[free]))
    else:
        b = float(_bias_from_bounds(alphas, y, g, C, eps))
    return DualSolution(
        alphas=alphas,
        bias=b,
        labels=y.astype(int),
        regularization_c=float(C),
        converged=converged,
        passes=passes,
        objective_trace=trace,
    )


def decision_function(model: DualSolution, kernel_rows) -> np.ndarray | float:
    """``f(x) = sum_i alpha_i y_i K(x_i, x) + b``.

    ``kernel_rows`` holds ``K(x_i, x)`` over training points ``i``: one row for
    a single point, or a ``(n_points, n_train)`` matrix.
    """
    rows = np.asarray(kernel_rows, dtype=float)
    n = model.alphas.size
    if rows.shape[-1] != n:
        raise ShapeError(f"kernel row length {rows.shape[-1]} does not match {n} training points")
    out = rows @ (model.alphas * model.labels) + model.bias
    return float(out) if rows.ndim == 1 else out


def solve_dual_jittered(gram, labels, C=1.0, tolerance=1e-3, max_passes=50, seed=0) -> DualSolution:
    """Solve on ``gram + j*I``, raising ``j`` tenfold from 1e-8 until SMO converges.

    Intended for shot-estimated Gram matrices that may be slightly indefinite.
    The last attempt (jitter 1e-4) is returned even if it did not converge.
    """
    K = np.asarray(gram, dtype=float)
    jitter = JITTER_START
    while True:
        sol = solve_dual(K + jitter * np.eye(K.shape[0]), labels, C, tolerance, max_passes, seed)
        if sol.converged or jitter >= JITTER_MAX * (1 - 1e-9):
            return sol
        jitter *= 10.0


@dataclass
class OvrModel:
    classes: np.ndarray
    solutions: list[DualSolution]

    def to_dict(self) -> dict:
        return {
            "classes": [int(c) for c in self.classes],
            "models": [s.to_dict() for s in self.solutions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OvrModel":
        return cls(np.asarray(d["classes"], dtype=int), [DualSolution.from_dict(m) for m in d["models"]])


def fit_ovr(gram, y, C=1.0, tolerance=1e-3, max_passes=50, seed=0, jitter=False) -> OvrModel:
    """One binary SVM per class: that class +1, every other class -1."""
    y = np.asarray(y, dtype=int).ravel()
    classes = np.unique(y)
    if classes.size < 2:
        raise ClassCountError(f"need at least 2 classes, got {classes.size}")
    solve = solve_dual_jittered if jitter else solve_dual
    solutions = []
    for ci, cls in enumerate(classes):
        signs = np.where(y == cls, 1, -1)
        solutions.append(solve(gram, signs, C, tolerance, max_passes, derive_seed(seed, ci)))
    return OvrModel(classes, solutions)


def ovr_scores(model: OvrModel, kernel_rows) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(kernel_rows, dtype=float))
    if rows.shape[0] == 0:
        return np.zeros((0, len(model.classes)))
    return np.column_stack([decision_function(s, rows) for s in model.solutions])


def predict_ovr(model: OvrModel, kernel_rows) -> np.ndarray:
    """Class with the largest score; exact ties go to the lowest class index."""
    scores = ovr_scores(model, kernel_rows)
    if scores.shape[0] == 0:
        return np.zeros(0, dtype=int)
    return model.classes[np.argmax(scores, axis=1)]


def rbf_kernel(A, B=None, gamma: float = 1.0) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = A if B is None else np.atleast_2d(np.asarray(B, dtype=float))
    sq = np.sum(A ** 2, 1)[:, None] + np.sum(B ** 2, 1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def scale_gamma(X) -> float:
    """``1 / (P * var(X))`` over all entries; 1.0 for constant data."""
    X = np.asarray(X, dtype=float)
    var = X.var()
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


class KernelSVC(ClassifierMixin, BaseEstimator):
    """One-against-rest kernel SVM.

    Parameters
    ----------
    kernel : {"rbf", "quantum", "precomputed"}
        ``quantum`` expects features already scaled to angles (e.g. by
        ``FeatureScaler("angle_interval", clip=True)``); only the first two
        columns are used. ``precomputed`` takes Gram matrices in place of X.
    C : float
    gamma : "scale" or float
        RBF width; ``"scale"`` means ``1 / (P * var(X_train))``.
    kernel_mode : {"exact", "shots"}
        How quantum kernel entries are obtained.
    shots : int
    tol : float
        KKT tolerance of the SMO solver.
    max_passes : int
    random_state : int
    """

    def __init__(
        self,
        kernel="rbf",
        C=1.0,
        gamma="scale",
        kernel_mode="exact",
        shots=100_000,
        tol=1e-3,
        max_passes=50,
        random_state=0,
    ):
        self.kernel = kernel
        self.C = C
        self.gamma = gamma
        self.kernel_mode = kernel_mode
        self.shots = shots
        self.tol = tol
        self.max_passes = max_passes
        self.random_state = random_state

    def _kernel(self, A, B=None):
        if self.kernel == "rbf":
            return rbf_kernel(A, B, self.gamma_)
        if self.kernel == "quantum":
            return kernel_matrix(A, B, self.kernel_mode, self.shots, derive_seed(self.random_state, 7))
        raise ValueError(f"unknown kernel {self.kernel!r}")

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if self.kernel not in ("rbf", "quantum", "precomputed"):
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.kernel == "precomputed":
            if X.shape[0] != X.shape[1]:
                raise ShapeError("precomputed kernel must be a square Gram matrix")
            gram = X
        else:
            self.X_fit_ = X
            self.gamma_ = scale_gamma(X) if self.gamma == "scale" else float(self.gamma)
            gram = self._kernel(X)
        self.n_features_in_ = X.shape[1]
        jitter = self.kernel == "quantum" and self.kernel_mode == "shots"
        self.model_ = fit_ovr(gram, y, self.C, self.tol, self.max_passes, self.random_state, jitter=jitter)
        self.classes_ = self.model_.classes
        return self

    def _rows(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=float)
        if self.kernel == "precomputed":
            return X
        return self._kernel(X, self.X_fit_)

    def decision_function(self, X):
        return ovr_scores(self.model_, self._rows(X))

    def predict(self, X):
        return predict_ovr(self.model_, self._rows(X))

    def export(self) -> dict:
        check_is_fitted(self, "model_")
        spec = {"kernel": self.kernel, "C": self.C}
        if self.kernel == "rbf":
            spec["gamma"] = self.gamma_
        if self.kernel == "quantum":
            spec.update(mode=self.kernel_mode, shots=self.shots if self.kernel_mode == "shots" else 0)
        return {"kernel_spec": spec, **self.model_.to_dict()}

    def to_json(self) -> str:
        return json.dumps(self.export(), indent=2, sort_keys=True)
