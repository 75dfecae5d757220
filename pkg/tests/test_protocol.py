import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prodsim.errors import AncillaContaminationError, NotLocalError, ValidationError
from prodsim.hamiltonians import BipartiteHamiltonian, ProductHamiltonian, ising, random_product
from prodsim.linalg import (
    HADAMARD,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    expm_i,
    random_hermitian,
    random_unitary,
    unitary_distance,
)
from prodsim.protocol import (
    AttachAncilla,
    DiscardAncilla,
    Evolve,
    LocalUnitary,
    Protocol,
    _embedding,
    basis_state,
    compose,
    identity_protocol,
    pad_segments,
    rate_accounting_error,
    realize,
    rule_add_local,
    rule_attach,
    rule_conjugate,
    rule_reduce_subspace,
    rule_rescale,
    rule_trotter_combine,
    rule_unitary_mix,
    segment_dims,
    simplify,
    verify,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
X_LOCAL = ProductHamiltonian(SIGMA_X, np.eye(2))


def test_identity_protocol_is_exact(rng):
    p = identity_protocol(random_product(rng, 2, 3))
    assert verify(p, 0.7) <= 1e-12
    assert p.rate == 1.0
    assert p.segments(0.7) == [Evolve(0.7)]


def test_segments_validate_arguments():
    p = identity_protocol(ising())
    with pytest.raises(ValidationError):
        p.segments(-1.0)
    with pytest.raises(ValidationError):
        p.segments(1.0, 0)
    with pytest.raises(ValidationError):
        p.segments(float("inf"))


def test_zero_time_gives_identity(rng):
    p = rule_add_local(identity_protocol(ising()), X_LOCAL)
    assert p.segments(0.0, 8) == []
    r = realize(p, 0.0, 8)
    assert np.allclose(r.unitary, np.eye(4)) and r.native_time == 0.0
    assert verify(p, 0.0, 8) == 0.0


def test_simplify_merges_and_drops():
    u = LocalUnitary(SIGMA_X, SIGMA_Z, "u")
    segs = simplify([Evolve(0.2), Evolve(0.3), Evolve(0.0), u, u, LocalUnitary(HADAMARD, np.eye(2))])
    assert segs[0] == Evolve(0.5)
    assert len(segs) == 2 and np.allclose(segs[1].ua, HADAMARD)
    assert simplify([u, u]) == []


def test_pad_segments_pads_local_unitaries_only():
    segs = pad_segments([Evolve(1.0), LocalUnitary(SIGMA_X, SIGMA_Z)], 3, 2)
    assert segs[0] == Evolve(1.0)
    assert segs[1].ua.shape == (6, 6) and np.allclose(segs[1].ua, np.kron(np.eye(3), SIGMA_X))


def test_rescale_rule():
    p = rule_rescale(identity_protocol(ising()), 2.0)
    assert p.rate == 0.5
    assert verify(p, 0.4) <= 1e-12
    assert p.native_time(0.4) == pytest.approx(0.8)
    with pytest.raises(ValidationError):
        rule_rescale(p, 0.0)


def test_attach_rule(rng):
    h = random_product(rng, 2, 2)
    p = rule_attach(identity_protocol(h), 3, 2)
    assert p.target.dims == (6, 4)
    assert np.allclose(p.target.matrix, h.padded(3, 2).matrix)
    assert verify(p, 0.9) <= 1e-12
    assert p.rate == 1.0


def test_conjugate_rule(rng):
    h = random_product(rng, 2, 3)
    ua, ub = random_unitary(rng, 2), random_unitary(rng, 3)
    p = rule_conjugate(identity_protocol(h), ua, ub)
    assert verify(p, 1.3) <= 1e-12
    with pytest.raises(ValidationError):
        rule_conjugate(p, np.eye(3), np.eye(3))


def test_add_local_commuting_is_exact():
    h0 = ProductHamiltonian(SIGMA_Z, np.eye(2))
    p = rule_add_local(identity_protocol(ising()), h0)
    assert sum(isinstance(s, Evolve) for s in p.segments(1.0, 64)) == 1
    assert verify(p, 1.0, 1) <= 1e-12


def test_add_local_rejects_nonlocal():
    with pytest.raises(NotLocalError):
        rule_add_local(identity_protocol(ising()), ising())


def test_add_local_first_order_convergence():
    p = rule_add_local(identity_protocol(ising()), X_LOCAL)
    errs = [verify(p, 1.0, n) for n in (8, 16, 32, 64)]
    for e1, e2 in zip(errs, errs[1:]):
        assert e2 / e1 <= 0.6
    assert errs[-1] < 0.02


def test_trotter_combine_rate_and_target():
    p1 = identity_protocol(ising())
    p2 = rule_conjugate(identity_protocol(ising()), HADAMARD, HADAMARD)
    p = rule_trotter_combine(p1, rule_rescale(p2, 2.0), 0.25)
    # 1/gamma = p/gamma1 + (1-p)/gamma2 with gamma2 = 1/2
    assert p.rate == pytest.approx(1 / (0.25 + 0.75 * 2))
    expected = 0.25 * np.kron(SIGMA_Z, SIGMA_Z) + 0.75 * 2 * np.kron(SIGMA_X, SIGMA_X)
    assert np.allclose(p.target.matrix, expected)
    assert rate_accounting_error(p, 1.0, 16) <= 1e-12
    with pytest.raises(ValidationError):
        rule_trotter_combine(p1, p2, 1.5)


def test_trotter_combine_noncommuting_converges():
    p1 = identity_protocol(ising())
    p2 = rule_conjugate(identity_protocol(ising()), HADAMARD, np.eye(2))
    p = rule_trotter_combine(p1, p2, 0.5)
    e1, e2 = verify(p, 1.0, 32), verify(p, 1.0, 64)
    assert e2 / e1 <= 0.6


def test_unitary_mix_pauli_twirl_is_exact():
    # conjugating the Ising interaction by I and sigma_x on A averages it to zero
    p = rule_unitary_mix(identity_protocol(ising()), [(0.5, np.eye(2), np.eye(2)), (0.5, SIGMA_X, np.eye(2))])
    assert np.allclose(p.target.matrix, 0)
    assert verify(p, 1.0, 1) <= 1e-12


def test_unitary_mix_validation():
    base = identity_protocol(ising())
    with pytest.raises(ValidationError):
        rule_unitary_mix(base, [(0.5, np.eye(2), np.eye(2))])
    with pytest.raises(ValidationError):
        rule_unitary_mix(base, [(1.2, np.eye(2), np.eye(2)), (-0.2, SIGMA_X, np.eye(2))])


def test_embedding_is_minimal_permutation():
    for m, d in [(2, 3), (3, 4), (2, 4), (1, 3)]:
        k, q, v = _embedding(m, d)
        assert k == d // math.gcd(m, d) and q * d == m * k
        assert np.allclose(v @ v.T, np.eye(m * k))
        for j in range(m):
            src = np.kron(basis_state(m, j), basis_state(k, 0))
            dst = np.kron(basis_state(q, 0), basis_state(d, j))
            assert np.allclose(v @ src, dst)


def test_reduce_block_diagonal_target_exact():
    h = ProductHamiltonian(np.diag([1.0, 0.0, -1.0]), SIGMA_X)
    p = rule_reduce_subspace(identity_protocol(h), 2, 2)
    assert np.allclose(p.target.matrix, np.kron(np.diag([1.0, 0.0]), SIGMA_X))
    assert verify(p, 1.0, 1) <= 1e-12
    assert realize(p, 1.0).leakage <= 1e-14


def test_reduce_general_target_converges(rng):
    h = ProductHamiltonian(random_hermitian(rng, 3), SIGMA_Y)
    p = rule_reduce_subspace(identity_protocol(h), 2, 2)
    with pytest.raises(AncillaContaminationError):
        realize(p, 1.0, 4)
    errs = [verify(p, 1.0, n, leakage_tol=1e-3) for n in (16, 32, 64)]
    assert errs[1] <= errs[0] and errs[2] <= errs[1]
    assert errs[-1] < 1e-3
    leaks = [realize(p, 1.0, n, leakage_tol=None).leakage for n in (16, 64)]
    assert leaks[1] < leaks[0] / 8


def test_reduce_validation():
    with pytest.raises(ValidationError):
        rule_reduce_subspace(identity_protocol(ising()), 3, 2)


def test_compose_multiplies_rates():
    inner = rule_rescale(identity_protocol(ising()), 0.5)
    outer = rule_rescale(identity_protocol(ising(0.5)), 4.0)
    p = compose(outer, inner)
    assert p.rate == pytest.approx(outer.rate * inner.rate)
    assert verify(p, 0.3) <= 1e-12
    assert rate_accounting_error(p, 0.3) <= 1e-12
    with pytest.raises(ValidationError):
        compose(outer, identity_protocol(ising()))


def test_compose_under_ancilla(rng):
    # outer evolves on a padded register; the inner protocol must see padded unitaries
    h = ProductHamiltonian(np.diag([1.0, 0.0, -1.0]), SIGMA_Z)
    outer = rule_reduce_subspace(identity_protocol(h), 2, 2)
    inner = rule_conjugate(identity_protocol(ProductHamiltonian(h.a, SIGMA_X)), np.eye(3), HADAMARD)
    p = compose(outer, inner)
    assert verify(p, 1.0) <= 1e-12


def test_contamination_detected_by_hand_built_protocol():
    native = ising().as_bipartite()

    def build(t, n):
        return [AttachAncilla(2, 1, basis_state(2), basis_state(1)),
                LocalUnitary(np.kron(np.eye(2), SIGMA_X), np.eye(2), "kick"),
                Evolve(t),
                DiscardAncilla(2, 1)]

    p = Protocol(native, native, build, 1.0, "bad")
    with pytest.raises(AncillaContaminationError) as err:
        realize(p, 0.5)
    assert err.value.leakage == pytest.approx(1.0)
    assert realize(p, 0.5, leakage_tol=None).leakage == pytest.approx(1.0)


def test_mismatched_discard_rejected():
    native = ising().as_bipartite()
    p = Protocol(native, native, lambda t, n: [AttachAncilla(2, 1, basis_state(2), basis_state(1)),
                                              DiscardAncilla(1, 2)], 1.0)
    with pytest.raises(ValidationError):
        realize(p, 1.0)


def test_segment_dims_track_ancillas():
    h = ProductHamiltonian(np.diag([1.0, 0.0, -1.0]), SIGMA_X)
    p = rule_reduce_subspace(identity_protocol(h), 2, 2)
    dims = segment_dims(p, 1.0)
    assert dims[0] == (6, 2) and dims[-1] == (6, 2)


@given(seeds, st.floats(0.05, 2.0), st.integers(1, 6))
def test_rate_accounting_holds_for_rule_chains(seed, t, n):
    rng = np.random.default_rng(seed)
    h = random_product(rng, 2, 2)
    p = rule_rescale(identity_protocol(h), float(rng.uniform(0.5, 3)))
    p = rule_conjugate(p, random_unitary(rng, 2), random_unitary(rng, 2))
    p = rule_attach(p, 2, 1)
    loc = BipartiteHamiltonian((ProductHamiltonian(random_hermitian(rng, 4), np.eye(2)),))
    p = rule_add_local(p, loc)
    assert rate_accounting_error(p, t, n) <= 1e-12


@given(seeds, st.floats(0.0, 2.0))
def test_exact_rules_realize_target(seed, t):
    rng = np.random.default_rng(seed)
    h = random_product(rng, 2, 3)
    c = float(rng.uniform(0.2, 4))
    p = rule_conjugate(rule_rescale(identity_protocol(h), c), random_unitary(rng, 2), random_unitary(rng, 3))
    r = realize(p, t)
    assert unitary_distance(r.unitary, expm_i(p.target.matrix, t)) <= 1e-10
    assert abs(r.native_time - t / p.rate) <= 1e-12 * max(1, t)
