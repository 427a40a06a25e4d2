import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qkmeans.errors import DataError, ShapeError
from qkmeans.qkernel import (
    QuantumKernel,
    feature_map_unitary,
    feature_state,
    kernel_entry,
    kernel_gram,
    kernel_matrix,
    phase_coefficients,
    phase_unitary,
    read_gram_csv,
    write_gram_csv,
)
from qkmeans.statevec import Statevector, apply_hadamard, prepare_basis_zero

TWO_PI = 2 * np.pi
I2 = np.eye(2)
Z = np.diag([1.0, -1.0])
HD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
# qubit 0 is the low bit of the basis index
Z0, Z1 = np.kron(I2, Z), np.kron(Z, I2)


def oracle_unitary(x):
    x1, x2 = x[0], x[1]
    hamiltonian = x1 * Z0 + x2 * Z1 + (np.pi - x1) * (np.pi - x2) * Z0 @ Z1
    u = expm(1j * hamiltonian)
    h2 = np.kron(HD, HD)
    return u @ h2 @ u @ h2


def oracle_kernel(x, z):
    e0 = np.array([1, 0, 0, 0])
    return abs(np.vdot(oracle_unitary(x) @ e0, oracle_unitary(z) @ e0)) ** 2


def statevec_state(x):
    """Gate-by-gate route: H on both qubits, phase, H on both, phase."""
    diag = np.diag(phase_unitary(x))
    s = prepare_basis_zero(2)
    for _ in range(2):
        s = apply_hadamard(apply_hadamard(s, 0), 1)
        s = Statevector(diag * s.amplitudes)
    return s.amplitudes


angles = st.tuples(st.floats(0, TWO_PI, exclude_max=True), st.floats(0, TWO_PI, exclude_max=True))


def test_phase_unitary_origin():
    # phi1 = phi2 = 0, phi12 = pi^2; sign of Z0Z1 per basis index b = b0 + 2 b1
    assert phase_coefficients([0, 0]) == (0, 0, np.pi**2)
    expected = np.exp(1j * np.pi**2 * np.array([1, -1, -1, 1]))
    np.testing.assert_allclose(np.diag(phase_unitary([0, 0])), expected, atol=1e-15)


def test_phase_unitary_pi_pi():
    assert phase_coefficients([np.pi, np.pi])[2] == 0
    # angles pi*(s0 + s1): 2pi, 0, 0, -2pi
    np.testing.assert_allclose(np.diag(phase_unitary([np.pi, np.pi])), [1, 1, 1, 1], atol=1e-14)
    np.testing.assert_allclose(np.diag(phase_unitary([np.pi, np.pi])), np.exp(1j * np.pi * np.array([2, 0, 0, -2])))


@settings(max_examples=50, deadline=None)
@given(angles)
def test_unitaries(x):
    u = phase_unitary(x)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-12)
    assert np.count_nonzero(u - np.diag(np.diag(u))) == 0
    m = feature_map_unitary(x)
    np.testing.assert_allclose(m @ m.conj().T, np.eye(4), atol=1e-12)
    np.testing.assert_array_equal(m, feature_map_unitary(x))
    np.testing.assert_array_equal(feature_state(x), m[:, 0])
    np.testing.assert_allclose(m, oracle_unitary(x), atol=1e-10)
    np.testing.assert_allclose(feature_state(x), statevec_state(x), atol=1e-12)


def test_kernel_entry_reference_pair():
    x, z = (0.0, 0.0), (np.pi / 2, np.pi / 2)
    assert kernel_entry(x, z) == pytest.approx(oracle_kernel(x, z), abs=1e-10)


@pytest.mark.parametrize("seed", range(100))
def test_kernel_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    x, z = rng.uniform(0, TWO_PI, 2), rng.uniform(0, TWO_PI, 2)
    assert kernel_entry(x, z) == pytest.approx(oracle_kernel(x, z), abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(angles, angles)
def test_kernel_entry_properties(x, z):
    assert kernel_entry(x, x) == pytest.approx(1.0, abs=1e-12)
    k = kernel_entry(x, z)
    assert 0.0 <= k <= 1.0 + 1e-12
    assert k == pytest.approx(kernel_entry(z, x), abs=1e-12)


def test_extra_dimensions_are_dropped():
    assert kernel_entry([1.0, 2.0, 9.0], [0.5, 1.0, -3.0]) == kernel_entry([1.0, 2.0], [0.5, 1.0])


def test_too_few_dimensions():
    with pytest.raises(ShapeError):
        kernel_entry([1.0], [2.0])
    with pytest.raises(ShapeError):
        kernel_matrix(np.zeros((3, 1)))


def test_unknown_mode():
    with pytest.raises(ValueError):
        kernel_entry([0, 0], [1, 1], mode="noisy")
    with pytest.raises(ValueError):
        kernel_matrix(np.zeros((2, 2)), mode="noisy")


def test_gram_single_point():
    g = kernel_gram([[1.0, 2.0]])
    np.testing.assert_allclose(g.matrix, [[1.0]], atol=1e-12)
    assert g.mode == "exact" and g.shots == 0


def test_gram_duplicated_points():
    pts = np.array([[0.3, 1.2], [2.0, 5.0]])
    g = kernel_gram(np.vstack([pts, pts])).matrix
    assert g[0, 2] == pytest.approx(1.0, abs=1e-12)
    assert g[1, 3] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [5, 20])
def test_gram_exact_invariants(n):
    pts = np.random.default_rng(n).uniform(0, TWO_PI, (n, 2))
    g = kernel_gram(pts).matrix
    np.testing.assert_allclose(g, g.T, atol=1e-10)
    np.testing.assert_allclose(np.diag(g), 1.0, atol=1e-10)
    assert np.linalg.eigvalsh(g).min() >= -1e-8
    np.testing.assert_allclose(g, [[oracle_kernel(a, b) for b in pts] for a in pts], atol=1e-10)


def test_cross_matrix_matches_entries():
    rng = np.random.default_rng(1)
    A, B = rng.uniform(0, TWO_PI, (4, 2)), rng.uniform(0, TWO_PI, (3, 2))
    k = kernel_matrix(A, B)
    assert k.shape == (4, 3)
    np.testing.assert_allclose(k, [[kernel_entry(a, b) for b in B] for a in A], atol=1e-14)


def test_gram_shots_symmetric_and_reproducible():
    pts = np.random.default_rng(2).uniform(0, TWO_PI, (6, 2))
    a = kernel_matrix(pts, mode="shots", shots=4096, seed=3)
    b = kernel_matrix(pts, mode="shots", shots=4096, seed=3)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a, a.T)
    exact = kernel_matrix(pts)
    sigma = np.sqrt(exact * (1 - exact) / 4096)
    assert np.all(np.abs(a - exact) <= 4 * sigma + 1 / 4096)
    assert not np.array_equal(a, kernel_matrix(pts, mode="shots", shots=4096, seed=4))


@pytest.mark.parametrize("shots", [1024, 8192, 100_000])
def test_shot_entries_converge(shots):
    rng = np.random.default_rng(shots)
    fails = 0
    trials = 300
    for s in range(trials):
        x, z = rng.uniform(0, TWO_PI, 2), rng.uniform(0, TWO_PI, 2)
        k = kernel_entry(x, z)
        ks = kernel_entry(x, z, "shots", shots, s)
        fails += abs(ks - k) > 4 * np.sqrt(k * (1 - k) / shots) + 1 / shots
    assert fails / trials < 0.01


def test_callable_kernel():
    pts = np.random.default_rng(3).uniform(0, TWO_PI, (3, 2))
    qk = QuantumKernel()
    np.testing.assert_array_equal(qk(pts), kernel_matrix(pts))
    assert "exact" in repr(qk)


def test_gram_csv_roundtrip(tmp_path):
    m = kernel_matrix(np.random.default_rng(4).uniform(0, TWO_PI, (4, 2)), mode="shots", shots=100, seed=1)
    path = tmp_path / "gram.csv"
    write_gram_csv(path, m, "shots", 100)
    assert path.read_text().splitlines()[0] == "N=4,mode=shots,shots=100"
    g = read_gram_csv(path)
    np.testing.assert_array_equal(g.matrix, m)
    assert (g.mode, g.shots) == ("shots", 100)


@pytest.mark.parametrize(
    "text",
    ["", "rows=2\n1,0\n0,1\n", "N=3,mode=exact,shots=0\n1,0\n0,1\n", "N=2,mode=exact,shots=0\n1,x\n0,1\n"],
)
def test_gram_csv_errors(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(DataError):
        read_gram_csv(path)
