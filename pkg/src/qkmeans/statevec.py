"""Dense statevector simulation for swap-test circuits.

Qubit ``q`` is bit ``q`` of the basis-state index (little-endian), so the
amplitude of ``|b_{n-1} ... b_1 b_0>`` lives at index ``sum(b_q << q)``.

States are treated as values: every operation returns a new
:class:`Statevector` and never mutates its argument.
"""

from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import AliasError, BoundsError, CapacityError, DegenerateInputError, PreconditionError
from .rng import make_rng

MAX_QUBITS = 24
NORM_ATOL = 1e-10

_SQRT1_2 = 1.0 / np.sqrt(2.0)


class Statevector:
    """Amplitudes of an ``num_qubits``-qubit pure state."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, amplitudes, num_qubits: int | None = None):
        amps = np.array(amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size == 0 or amps.size & (amps.size - 1):
            raise PreconditionError("amplitude count must be a power of two")
        n = amps.size.bit_length() - 1
        if num_qubits is not None and num_qubits != n:
            raise PreconditionError(f"{amps.size} amplitudes do not describe {num_qubits} qubits")
        amps.setflags(write=False)
        self.num_qubits = n
        self.amplitudes = amps

    def __len__(self):
        return self.amplitudes.size

    def __repr__(self):
        return f"Statevector(num_qubits={self.num_qubits})"

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def inner(self, other: "Statevector") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor(self, other: "Statevector") -> "Statevector":
        """``self ⊗ other`` with ``other`` on the low qubits."""
        return Statevector(np.outer(self.amplitudes, other.amplitudes).ravel())


def _check_index(num_qubits: int, q: int) -> int:
    if not isinstance(q, (int, np.integer)) or not 0 <= q < num_qubits:
        raise BoundsError(f"qubit index {q!r} outside [0, {num_qubits})")
    return int(q)


def prepare_basis_zero(num_qubits: int, max_qubits: int = MAX_QUBITS) -> Statevector:
    if not 1 <= num_qubits <= max_qubits:
        raise CapacityError(f"num_qubits={num_qubits} outside [1, {max_qubits}]")
    amps = np.zeros(1 << num_qubits, dtype=complex)
    amps[0] = 1.0
    return Statevector(amps)


@lru_cache(maxsize=256)
def _gather_tables(num_qubits: int, targets: tuple[int, ...]):
    idx = np.arange(1 << num_qubits)
    mask = 0
    coeff_index = np.zeros_like(idx)
    for k, q in enumerate(targets):
        mask |= 1 << q
        coeff_index |= ((idx >> q) & 1) << k
    base = idx & ~mask
    occupied = (idx & mask) != 0
    return base, coeff_index, occupied


def prepare_amplitude_state(
    coefficients: Sequence[float],
    target_qubits: Sequence[int],
    state: Statevector,
) -> Statevector:
    """Load normalized ``coefficients`` into the amplitudes of ``target_qubits``.

    Bit ``k`` of a coefficient's index addresses ``target_qubits[k]``.
    Coefficients are zero-padded up to ``2**len(target_qubits)``. The targets
    must currently hold ``|0...0>`` in a product with the remaining qubits.
    """
    coeffs = np.asarray(coefficients, dtype=complex).ravel()
    targets = tuple(_check_index(state.num_qubits, q) for q in target_qubits)
    if len(set(targets)) != len(targets):
        raise AliasError(f"repeated target qubits {targets}")
    if coeffs.size == 0 or coeffs.size > 1 << len(targets):
        raise PreconditionError(
            f"{coeffs.size} coefficients do not fit in {len(targets)} target qubits"
        )
    norm = np.sqrt(np.vdot(coeffs, coeffs).real)
    if norm == 0.0 or not np.isfinite(norm):
        raise DegenerateInputError("coefficient vector has zero or non-finite norm")
    padded = np.zeros(1 << len(targets), dtype=complex)
    padded[: coeffs.size] = coeffs / norm

    base, coeff_index, occupied = _gather_tables(state.num_qubits, targets)
    amps = state.amplitudes
    if np.abs(amps[occupied]).max(initial=0.0) > NORM_ATOL:
        raise PreconditionError("target qubits are not in |0...0>")
    return Statevector(amps[base] * padded[coeff_index])


def apply_hadamard(state: Statevector, q: int) -> Statevector:
    q = _check_index(state.num_qubits, q)
    n = state.num_qubits
    view = state.amplitudes.reshape(1 << (n - 1 - q), 2, 1 << q)
    out = np.empty_like(view)
    out[:, 0, :] = (view[:, 0, :] + view[:, 1, :]) * _SQRT1_2
    out[:, 1, :] = (view[:, 0, :] - view[:, 1, :]) * _SQRT1_2
    return Statevector(out.ravel())


@lru_cache(maxsize=256)
def _cswap_permutation(num_qubits: int, control: int, a: tuple[int, ...], b: tuple[int, ...]):
    idx = np.arange(1 << num_qubits)
    on = ((idx >> control) & 1).astype(bool)
    swapped = idx.copy()
    for qa, qb in zip(a, b):
        differ = (((idx >> qa) ^ (idx >> qb)) & 1).astype(bool) & on
        swapped[differ] ^= (1 << qa) | (1 << qb)
    return swapped


def apply_cswap(state: Statevector, control: int, a: Sequence[int], b: Sequence[int]) -> Statevector:
    """Exchange qubit groups ``a`` and ``b`` wherever ``control`` is 1."""
    n = state.num_qubits
    control = _check_index(n, control)
    a = tuple(_check_index(n, q) for q in a)
    b = tuple(_check_index(n, q) for q in b)
    if len(a) != len(b):
        raise AliasError(f"swap groups differ in length: {len(a)} vs {len(b)}")
    every = (control,) + a + b
    if len(set(every)) != len(every):
        raise AliasError(f"control/swap qubits overlap: control={control}, a={a}, b={b}")
    perm = _cswap_permutation(n, control, a, b)
    return Statevector(state.amplitudes[perm])


def ancilla_zero_probability(state: Statevector, q: int) -> float:
    q = _check_index(state.num_qubits, q)
    n = state.num_qubits
    view = state.amplitudes.reshape(1 << (n - 1 - q), 2, 1 << q)[:, 0, :]
    p0 = float(np.sum(view.real ** 2 + view.imag ** 2))
    return min(max(p0, 0.0), 1.0)


def sample_ancilla(p0: float, shots: int, rng_seed: int) -> int:
    """Number of ``0`` outcomes in ``shots`` measurements of one qubit.

    Only the measured qubit's marginal matters, which is Bernoulli(``p0``) per
    shot, so a single binomial draw reproduces the outcome distribution of a
    shot-by-shot full-register simulation exactly.
    """
    if isinstance(shots, bool) or not isinstance(shots, (int, np.integer)) or shots < 1:
        raise ValueError(f"shots must be a positive integer, got {shots!r}")
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"p0={p0} is not a probability")
    return int(make_rng(rng_seed).binomial(int(shots), p0))
