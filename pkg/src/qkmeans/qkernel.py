"""Two-qubit feature-map kernel.

A point ``x = (x1, x2)`` (already scaled to angles) defines the diagonal
phase unitary

    U(x) = exp(i * [x1 Z_0 + x2 Z_1 + (pi - x1)(pi - x2) Z_0 Z_1])

and the feature map ``M(x) = U(x) H⊗H U(x) H⊗H``. The kernel is the
probability of reading ``00`` after ``M(x)`` followed by ``M(z)^dagger``:

    K(x, z) = |<00| M(x)^dagger M(z) |00>|^2
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import DataError, ShapeError
from .rng import derive_seed, make_rng

NUM_QUBITS = 2
KernelMode = Literal["exact", "shots"]

_H1 = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
_H2 = np.kron(_H1, _H1)
# Z eigenvalue signs per basis index b = b0 + 2*b1
_B0 = np.array([0, 1, 0, 1])
_B1 = np.array([0, 0, 1, 1])
_SIGN_Z0 = (-1.0) ** _B0
_SIGN_Z1 = (-1.0) ** _B1
_SIGN_Z0Z1 = (-1.0) ** (_B0 + _B1)


def _as_point(x) -> np.ndarray:
    v = np.asarray(x, dtype=float).ravel()
    if v.size < NUM_QUBITS:
        raise ShapeError(f"feature map needs {NUM_QUBITS} features, got {v.size}")
    return v[:NUM_QUBITS]


def phase_coefficients(x) -> tuple[float, float, float]:
    x1, x2 = _as_point(x)
    return x1, x2, (np.pi - x1) * (np.pi - x2)


def phase_unitary(x) -> np.ndarray:
    phi1, phi2, phi12 = phase_coefficients(x)
    angles = phi1 * _SIGN_Z0 + phi2 * _SIGN_Z1 + phi12 * _SIGN_Z0Z1
    return np.diag(np.exp(1j * angles))


def feature_map_unitary(x) -> np.ndarray:
    u = phase_unitary(x)
    return u @ _H2 @ u @ _H2


def feature_state(x) -> np.ndarray:
    """``M(x)|00>``, i.e. column 0 of the feature-map unitary."""
    return feature_map_unitary(x)[:, 0]


def _states(points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] < NUM_QUBITS:
        raise ShapeError(f"feature map needs {NUM_QUBITS} features, got {pts.shape[1]}")
    return np.array([feature_state(p) for p in pts]).reshape(pts.shape[0], 1 << NUM_QUBITS)


def _sample(p: float, shots: int, seed: int) -> float:
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    return make_rng(seed).binomial(shots, min(max(p, 0.0), 1.0)) / shots


def kernel_entry(x, z, mode: KernelMode = "exact", shots: int = 1024, seed: int = 0) -> float:
    k = float(abs(np.vdot(feature_state(x), feature_state(z))) ** 2)
    if mode == "exact":
        return k
    if mode == "shots":
        return _sample(k, shots, seed)
    raise ValueError(f"unknown kernel mode {mode!r}")


@dataclass
class KernelGram:
    matrix: np.ndarray
    mode: KernelMode = "exact"
    shots: int = 0


def kernel_matrix(A, B=None, mode: KernelMode = "exact", shots: int = 1024, seed: int = 0) -> np.ndarray:
    """Kernel values between rows of ``A`` and rows of ``B``.

    With ``B`` omitted the result is the symmetric Gram matrix of ``A``: only
    the upper triangle is evaluated and then mirrored. In shot mode entry
    ``(i, j)`` is sampled with seed ``derive_seed(seed, i, j)``; a separate
    cross matrix (``B`` given) uses ``derive_seed(seed, i, j, 1)``.
    """
    if mode not in ("exact", "shots"):
        raise ValueError(f"unknown kernel mode {mode!r}")
    sa = _states(A)
    symmetric = B is None
    sb = sa if symmetric else _states(B)
    exact = np.abs(sa.conj() @ sb.T) ** 2
    if symmetric:
        exact = np.triu(exact) + np.triu(exact, 1).T
    if mode == "exact":
        return exact
    out = np.empty_like(exact)
    for i in range(exact.shape[0]):
        for j in range(i if symmetric else 0, exact.shape[1]):
            seed_ij = derive_seed(seed, i, j) if symmetric else derive_seed(seed, i, j, 1)
            out[i, j] = _sample(exact[i, j], shots, seed_ij)
            if symmetric:
                out[j, i] = out[i, j]
    return out


def kernel_gram(points, mode: KernelMode = "exact", shots: int = 1024, seed: int = 0) -> KernelGram:
    return KernelGram(kernel_matrix(points, None, mode, shots, seed), mode, shots if mode == "shots" else 0)


class QuantumKernel:
    """Callable kernel ``k(X, Y) -> matrix``, usable wherever a Gram function is expected."""

    def __init__(self, mode: KernelMode = "exact", shots: int = 1024, seed: int = 0):
        self.mode = mode
        self.shots = shots
        self.seed = seed

    def __call__(self, X, Y=None):
        return kernel_matrix(X, Y, self.mode, self.shots, self.seed)

    def __repr__(self):
        return f"QuantumKernel(mode={self.mode!r}, shots={self.shots}, seed={self.seed})"


def write_gram_csv(path, matrix, mode: str = "exact", shots: int = 0) -> None:
    """CSV with a one-line ``N=..,mode=..,shots=..`` header followed by the rows."""
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"N={m.shape[0]}", f"mode={mode}", f"shots={int(shots)}"])
        for row in m:
            w.writerow([repr(float(v)) for v in row])


def read_gram_csv(path) -> KernelGram:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty Gram file")
    try:
        meta = dict(field.strip().split("=", 1) for field in rows[0])
        n = int(meta["N"])
        mode = meta["mode"]
        shots = int(meta["shots"])
    except (ValueError, KeyError):
        raise DataError(f"{path}:1: malformed header {rows[0]!r}") from None
    body = [r for r in rows[1:] if r]
    if len(body) != n:
        raise DataError(f"{path}: header declares {n} rows, found {len(body)}")
    try:
        matrix = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric Gram entry ({exc})") from None
    if matrix.ndim != 2:
        raise DataError(f"{path}: ragged Gram rows")
    return KernelGram(matrix, mode, shots)
