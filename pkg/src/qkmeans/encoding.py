"""Amplitude encoding of feature vectors and the distance-query state pair.

For a pair of vectors ``x_i, x_j`` with norms ``a = |x_i|`` and ``b = |x_j|``
two states are built:

* ``psi = (|0>|x_i> + |1>|x_j>) / sqrt(2)`` on one ancilla qubit plus an index
  register holding the amplitude-encoded vectors, and
* ``phi = (a|0> - b|1>) / sqrt(Z)`` on a single qubit, with ``Z = a**2 + b**2``.

A swap test between ``phi`` and the ancilla of ``psi`` then yields
``P(0) = 1/2 + |x_i - x_j|**2 / (4 Z)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ShapeError
from .statevec import Statevector, prepare_amplitude_state, prepare_basis_zero


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise ShapeError(f"expected a non-empty 1-D feature vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DegenerateInputError("feature vector has non-finite components")
    return v


def index_qubits(dim: int) -> int:
    """Qubits needed to address ``dim`` amplitudes; at least one."""
    return max(1, int(dim - 1).bit_length())


def amplitude_encode(x) -> Statevector:
    """Encode ``x`` as ``sum_p x_p/|x| |p>`` on ``ceil(log2 P)`` qubits (min 1)."""
    v = _as_vector(x)
    n = index_qubits(v.size)
    return prepare_amplitude_state(v, range(n), prepare_basis_zero(n))


@dataclass(frozen=True)
class EncodedPair:
    """States and magnitudes for one distance query.

    ``psi`` has its ancilla on qubit 0 and the index register on qubits
    ``1..n``; ``phi`` is a single qubit.
    """

    psi: Statevector
    phi: Statevector
    z_norm: float
    mag_i: float
    mag_j: float

    @property
    def index_qubits(self) -> int:
        return self.psi.num_qubits - 1


def build_encoded_pair(xi, xj) -> EncodedPair:
    vi, vj = _as_vector(xi), _as_vector(xj)
    if vi.shape != vj.shape:
        raise ShapeError(f"dimension mismatch: {vi.size} vs {vj.size}")
    mag_i, mag_j = float(np.linalg.norm(vi)), float(np.linalg.norm(vj))
    if mag_i == 0.0 or mag_j == 0.0:
        raise DegenerateInputError("cannot amplitude-encode a zero-norm vector")

    n = index_qubits(vi.size)
    width = 1 << n
    coeffs = np.zeros(2 * width)
    coeffs[: vi.size] = vi / mag_i
    coeffs[width: width + vj.size] = vj / mag_j
    # coefficient bits 0..n-1 select the index qubits 1..n, bit n the ancilla (qubit 0)
    psi = prepare_amplitude_state(coeffs, list(range(1, n + 1)) + [0], prepare_basis_zero(n + 1))

    z_norm = mag_i ** 2 + mag_j ** 2
    phi = prepare_amplitude_state([mag_i, -mag_j], [0], prepare_basis_zero(1))
    return EncodedPair(psi=psi, phi=phi, z_norm=z_norm, mag_i=mag_i, mag_j=mag_j)
