import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prodsim.errors import ValidationError
from prodsim.linalg import (
    SIGMA_I,
    SIGMA_X,
    SIGMA_Z,
    as_density,
    as_hermitian,
    as_state,
    eig_hermitian,
    expm_i,
    kron,
    partial_trace,
    permutation_matrix,
    random_hermitian,
    random_state,
    random_unitary,
    reduced_state,
    spectral_norm,
    swap_factors,
    unitary_distance,
    von_neumann_entropy,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
dims = st.integers(min_value=1, max_value=6)


def taylor_expm(h, t, terms=30):
    # scaling and squaring around a truncated series; independent of eigh
    a = -1j * t * np.asarray(h, dtype=complex)
    s = max(0, int(math.ceil(math.log2(max(np.linalg.norm(a, 1), 1e-300)))) + 1)
    a = a / 2**s
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def phase_scan_distance(u, v, rounds=6, points=401):
    # repeated zoom on a uniform phase grid; the minimum sits at a kink so
    # plain quadratic refinement would not help
    def f(p):
        return spectral_norm(u - np.exp(1j * p) * v)

    lo, hi = 0.0, 2 * np.pi
    best = None
    for _ in range(rounds):
        grid = np.linspace(lo, hi, points)
        vals = [f(p) for p in grid]
        k = int(np.argmin(vals))
        best = vals[k] if best is None else min(best, vals[k])
        step = grid[1] - grid[0]
        lo, hi = grid[k] - step, grid[k] + step
    return best


def test_eig_diagonal_input():
    vals, vecs = eig_hermitian(np.diag([1.0, -1.0]))
    assert np.allclose(vals, [1, -1])
    assert np.allclose(vecs, np.eye(2))


def test_eig_pauli_x():
    vals, _ = eig_hermitian(SIGMA_X)
    assert np.allclose(vals, [1, -1])


def test_eig_reconstruction_random(rng):
    h = random_hermitian(rng, 4)
    vals, vecs = eig_hermitian(h)
    assert np.all(np.diff(vals) <= 0)
    assert spectral_norm(vecs @ np.diag(vals) @ vecs.conj().T - h) <= 1e-10 * spectral_norm(h)


def test_eig_is_deterministic(rng):
    h = random_hermitian(rng, 5)
    v1 = eig_hermitian(h)[1]
    v2 = eig_hermitian(h.copy())[1]
    assert np.array_equal(v1, v2)


def test_eig_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        eig_hermitian(np.array([[1, 1], [0, 1]]))


def test_expm_zero_time_is_identity(rng):
    assert np.allclose(expm_i(random_hermitian(rng, 3), 0.0), np.eye(3))


def test_expm_sigma_z_quarter_period():
    u = expm_i(SIGMA_Z, math.pi / 2)
    assert np.allclose(u, np.diag([np.exp(-1j * math.pi / 2), np.exp(1j * math.pi / 2)]))


def test_expm_matches_series_oracle(rng):
    for d in (2, 3, 5):
        h = random_hermitian(rng, d, scale=3.0)
        t = float(rng.uniform(-2, 2))
        assert unitary_distance(expm_i(h, t), taylor_expm(h, t)) <= 1e-9


def test_expm_rejects_nonfinite_time():
    with pytest.raises(ValidationError):
        expm_i(SIGMA_Z, float("nan"))


@given(seeds, dims, st.floats(-3, 3), st.floats(-3, 3))
def test_expm_group_law(seed, d, s, t):
    h = random_hermitian(np.random.default_rng(seed), d, 2.0)
    assert np.max(np.abs(expm_i(h, s) @ expm_i(h, t) - expm_i(h, s + t))) <= 1e-10


def test_kron_identities():
    assert np.allclose(kron(np.eye(2), np.eye(2)), np.eye(4))


def test_kron_ising_diagonal():
    assert np.allclose(kron(SIGMA_Z, SIGMA_Z), np.diag([1, -1, -1, 1]))


def test_kron_index_formula(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    k = kron(a, b)
    assert k.shape == (6, 6)
    for i in range(2):
        for j in range(3):
            for m in range(2):
                for n in range(3):
                    assert abs(k[i * 3 + j, m * 3 + n] - a[i, m] * b[j, n]) <= 1e-14


def test_swap_factors_moves_tensor_factors(rng):
    a, b = random_hermitian(rng, 2), random_hermitian(rng, 3)
    s = swap_factors(2, 3)
    assert np.allclose(s @ np.kron(a, b) @ s.T, np.kron(b, a))


def test_permutation_matrix_order():
    p = permutation_matrix([2, 0, 1])
    assert np.allclose(p @ np.array([10, 20, 30]), [30, 10, 20])
    with pytest.raises(ValidationError):
        permutation_matrix([0, 0, 1])


def test_partial_trace_product_state(rng):
    ra = as_density(np.diag([0.7, 0.3]))
    psi = random_state(rng, 3)
    rb = np.outer(psi, psi.conj())
    assert np.allclose(partial_trace(np.kron(ra, rb), [2, 3], keep=0), ra)
    assert np.allclose(partial_trace(np.kron(ra, rb), [2, 3], keep=1), rb)


def test_partial_trace_bell_state():
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert np.allclose(partial_trace(np.outer(bell, bell), [2, 2], keep=[0]), np.eye(2) / 2)


def test_partial_trace_three_parties(rng):
    a, b, c = (np.diag(rng.dirichlet(np.ones(d))) for d in (2, 3, 2))
    rho = kron(a, b, c)
    assert np.allclose(partial_trace(rho, [2, 3, 2], keep=[0, 2]), np.kron(a, c))


def test_partial_trace_dimension_mismatch():
    with pytest.raises(ValidationError):
        partial_trace(np.eye(4) / 4, [2, 3], keep=0)


@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_schmidt_spectra_agree(seed, da, db):
    psi = random_state(np.random.default_rng(seed), da * db)
    rho = np.outer(psi, psi.conj())
    sa = np.sort(np.linalg.eigvalsh(partial_trace(rho, [da, db], keep=0)))[::-1]
    sb = np.sort(np.linalg.eigvalsh(partial_trace(rho, [da, db], keep=1)))[::-1]
    k = min(da, db)
    assert np.allclose(sa[:k], sb[:k], atol=1e-10)
    assert np.allclose(reduced_state(psi, (da, db)), partial_trace(rho, [da, db], keep=0), atol=1e-12)


def test_entropy_pure_state(rng):
    psi = random_state(rng, 4)
    assert abs(von_neumann_entropy(np.outer(psi, psi.conj()))) < 1e-10


def test_entropy_maximally_mixed_qubit():
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0, abs=1e-12)


def test_entropy_binary_value():
    # -p log2 p - (1-p) log2 (1-p) at p = 0.9168, evaluated by hand
    assert von_neumann_entropy(np.diag([0.9168, 0.0832])) == pytest.approx(0.41335542479578, abs=1e-12)


@given(seeds, st.integers(1, 5))
def test_entropy_bounds_and_unitary_invariance(seed, d):
    rng = np.random.default_rng(seed)
    rho = np.diag(rng.dirichlet(np.ones(d))).astype(complex)
    u = random_unitary(rng, d)
    s = von_neumann_entropy(rho)
    assert -1e-12 <= s <= math.log2(d) + 1e-12
    assert abs(von_neumann_entropy(u @ rho @ u.conj().T) - s) <= 1e-10


def test_distance_to_itself_is_zero(rng):
    u = random_unitary(rng, 3)
    assert unitary_distance(u, u) <= 1e-12


def test_distance_ignores_global_phase(rng):
    u = random_unitary(rng, 3)
    assert unitary_distance(u, np.exp(0.7j) * u) <= 1e-12


def test_distance_identity_to_pauli_x():
    # eigenvalues +-1 sit half a circle apart, so the best phase leaves sqrt(2)
    d = unitary_distance(SIGMA_I, SIGMA_X)
    assert d == pytest.approx(phase_scan_distance(SIGMA_I, SIGMA_X), abs=1e-9)
    assert d == pytest.approx(math.sqrt(2), abs=1e-12)


def test_distance_matches_phase_scan(rng):
    for d in (2, 3, 4):
        u, v = random_unitary(rng, d), random_unitary(rng, d)
        assert unitary_distance(u, v) == pytest.approx(phase_scan_distance(u, v), abs=1e-9)


def test_distance_non_unitary_fallback(rng):
    u = random_unitary(rng, 3)
    shrunk = 0.9 * u
    assert unitary_distance(shrunk, u) == pytest.approx(0.1, abs=1e-8)


def test_distance_dim_mismatch():
    with pytest.raises(ValidationError):
        unitary_distance(np.eye(2), np.eye(3))


def test_validators():
    with pytest.raises(ValidationError):
        as_hermitian(np.ones((2, 3)))
    with pytest.raises(ValidationError):
        as_state([1.0, 1.0])
    with pytest.raises(ValidationError):
        as_density(np.diag([0.5, 0.6]))
    with pytest.raises(ValidationError):
        as_density(np.diag([1.5, -0.5]))
    assert np.allclose(as_hermitian([[1, 1j], [-1j, 2]]), [[1, 1j], [-1j, 2]])
