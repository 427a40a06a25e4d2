"""Squared Euclidean distance from a simulated swap test.

Register layout of the swap-test circuit for ``n`` index qubits::

    qubit 0          swap-test ancilla
    qubit 1          ancilla of psi
    qubits 2..n+1    index register of psi
    qubit n+2        phi

The circuit is H(0), CSWAP(0; 1 <-> n+2), H(0), then a measurement of qubit 0.
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .encoding import EncodedPair, _as_vector, build_encoded_pair
from .errors import ShapeError
from .statevec import (
    Statevector,
    ancilla_zero_probability,
    apply_cswap,
    apply_hadamard,
    prepare_basis_zero,
    sample_ancilla,
)

Mode = Literal["exact", "shots"]

DEFAULT_SHOTS = 100_000


@dataclass(frozen=True)
class SwapTestResult:
    p0: float
    mode: Mode
    shots_used: int = 0
    rng_seed: int = 0


@dataclass(frozen=True)
class DistanceEstimate:
    squared_distance: float
    result: SwapTestResult
    z_norm: float


def _layout(pair: EncodedPair):
    n = pair.index_qubits
    return 0, 1, n + 2


def circuit_trace(pair: EncodedPair) -> list[str]:
    """Gate list of the swap-test circuit, one line per gate, in application order."""
    anc, psi_anc, phi_q = _layout(pair)
    n = pair.index_qubits
    return [
        f"prepare psi q[{psi_anc}..{n + 1}] z={pair.z_norm!r}",
        f"prepare phi q[{phi_q}] amps=({pair.phi.amplitudes[0].real!r}, {pair.phi.amplitudes[1].real!r})",
        f"h q[{anc}]",
        f"cswap q[{anc}]; q[{psi_anc}], q[{phi_q}]",
        f"h q[{anc}]",
        f"measure q[{anc}]",
    ]


def swap_test_state(pair: EncodedPair) -> Statevector:
    """Final state of the swap-test circuit, before measurement."""
    anc, psi_anc, phi_q = _layout(pair)
    state = pair.phi.tensor(pair.psi.tensor(prepare_basis_zero(1)))
    state = apply_hadamard(state, anc)
    state = apply_cswap(state, anc, [psi_anc], [phi_q])
    return apply_hadamard(state, anc)


def swap_test(
    pair: EncodedPair,
    mode: Mode = "exact",
    shots: int = DEFAULT_SHOTS,
    rng_seed: int = 0,
) -> SwapTestResult:
    p0 = ancilla_zero_probability(swap_test_state(pair), 0)
    if mode == "exact":
        return SwapTestResult(p0=p0, mode="exact", shots_used=0, rng_seed=rng_seed)
    if mode == "shots":
        zeros = sample_ancilla(p0, shots, rng_seed)
        return SwapTestResult(p0=zeros / shots, mode="shots", shots_used=int(shots), rng_seed=rng_seed)
    raise ValueError(f"unknown mode {mode!r}")


def distance_from_p0(result: SwapTestResult, z_norm: float) -> DistanceEstimate:
    """Invert ``P(0) = 1/2 + d/(4Z)`` to ``d = Z(4 P(0) - 2)``.

    Shot noise can push ``P(0)`` below 1/2; those estimates are clamped to 0.
    In exact mode the clamp only absorbs rounding below zero.
    """
    d2 = max(0.0, z_norm * (4.0 * result.p0 - 2.0))
    return DistanceEstimate(squared_distance=d2, result=result, z_norm=z_norm)


def quantum_distance(xi, xj, mode: Mode = "exact", shots: int = DEFAULT_SHOTS, rng_seed: int = 0) -> DistanceEstimate:
    pair = build_encoded_pair(xi, xj)
    return distance_from_p0(swap_test(pair, mode, shots, rng_seed), pair.z_norm)


def classical_distance_oracle(xi, xj) -> float:
    vi, vj = _as_vector(xi), _as_vector(xj)
    if vi.shape != vj.shape:
        raise ShapeError(f"dimension mismatch: {vi.size} vs {vj.size}")
    diff = vi - vj
    return float(np.dot(diff, diff))
