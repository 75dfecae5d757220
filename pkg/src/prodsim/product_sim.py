"""Compilers between product Hamiltonians, boxplus protocols, and the catalytic-condition check.

Every product Hamiltonian ``H`` is compiled to and from the Ising interaction
``sigma_z (x) sigma_z``; composing the two directions gives a protocol between
any pair of product Hamiltonians at rate ``K(H) / K(H')``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import subspace_angles

from .errors import DomainError, IneligibleError, ValidationError
from .hamiltonians import (
    BipartiteHamiltonian,
    ProductHamiltonian,
    as_bipartite,
    boxplus,
    delta,
    ising,
    k_otimes,
    require_nonlocal,
    standardize,
)
from .linalg import SIGMA_X, as_hermitian, eig_hermitian, kron, permutation_matrix, swap_factors
from .protocol import (
    Protocol,
    compose,
    identity_protocol,
    rule_add_local,
    rule_attach,
    rule_conjugate,
    rule_reduce_subspace,
    rule_rescale,
    rule_trotter_combine,
    rule_unitary_mix,
)
from .strength import pauli_normal_form

SUBSPACE_TOL = 1e-9
TRACE_TOL = 1e-9
DEGENERACY_RTOL = 1e-9


def _extremes_first(d: int) -> list[int]:
    return [0, d - 1] + list(range(1, d - 1))


def _pair_swap(d: int, j: int) -> np.ndarray:
    """Exchange basis vectors ``2j`` and ``2j+1`` on a ``2d``-dim register."""
    order = list(range(2 * d))
    order[2 * j], order[2 * j + 1] = 2 * j + 1, 2 * j
    return permutation_matrix(order)


@dataclass(frozen=True, eq=False)
class MixingSchedule:
    """Per-pair keep probabilities ``p_j = (a_j + 1)/2`` and the pair exchanges ``U_j``.

    Acting on ``I_d (x) sigma_z = diag(1, -1, 1, -1, ...)``, keeping pair ``j``
    with probability ``p_j`` and exchanging it otherwise averages to
    ``diag(a_1, -a_1, a_2, -a_2, ...)``.
    """

    a: np.ndarray
    p: np.ndarray
    swaps: tuple

    @classmethod
    def from_spectrum(cls, a) -> "MixingSchedule":
        a = np.asarray(a, dtype=float)
        if a.ndim != 1 or len(a) < 2:
            raise ValidationError("spectrum must have at least two entries")
        if np.any(np.diff(a) > 0) or abs(a[0] - 1) > 1e-12 or abs(a[-1] + 1) > 1e-12:
            raise ValidationError("spectrum must be descending from 1 to -1")
        d = len(a)
        return cls(a, (a + 1) / 2, tuple(_pair_swap(d, j) for j in range(d)))

    @property
    def pairs(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.p.tolist(), self.swaps))

    def mixture(self) -> list[tuple[float, np.ndarray]]:
        """Weighted unitaries realizing the schedule with one time-shared mixture.

        Entry ``k`` exchanges all pairs ``j >= k`` with weight ``p_{k-1} - p_k``,
        so pair ``j`` stays unexchanged with total weight ``p_j``.
        """
        d = len(self.p)
        out = []
        for k in range(1, d):
            w = float(self.p[k - 1] - self.p[k])
            if w <= 0:
                continue
            u = np.eye(2 * d, dtype=complex)
            for j in range(k, d):
                u = self.swaps[j] @ u
            out.append((w, u))
        return out

    def average_hamiltonian(self) -> np.ndarray:
        d = len(self.p)
        base = np.kron(np.eye(d), np.diag([1.0, -1.0]))
        return sum(w * u @ base @ u.conj().T for w, u in self.mixture())


@dataclass(frozen=True)
class DoubledForm:
    a_doubled: np.ndarray
    b_doubled: np.ndarray
    scale: float

    @classmethod
    def from_standard(cls, a, b, scale) -> "DoubledForm":
        dbl = lambda v: np.ravel(np.column_stack([v, -np.asarray(v)]))
        return cls(dbl(a), dbl(b), float(scale))

    def matrix(self) -> np.ndarray:
        return self.scale * np.kron(np.diag(self.a_doubled), np.diag(self.b_doubled))


def product_to_ising(h: ProductHamiltonian) -> Protocol:
    """Protocol using ``h`` to simulate ``sigma_z (x) sigma_z`` at rate ``K(h)``.

    Rotate into the eigenbases, remove the local terms, rescale, move the
    extremal eigenvectors to the leading block and restrict to it. Every
    intermediate target is diagonal, so the realization is exact.
    """
    sf = standardize(h)
    da, db = sf.dims
    p = identity_protocol(h)
    p = rule_conjugate(p, sf.frame_a.conj().T, sf.frame_b.conj().T)
    p = rule_add_local(p, -sf.diagonal_local_part())
    p = rule_rescale(p, 1.0 / sf.scale)
    p = rule_conjugate(p, permutation_matrix(_extremes_first(da)), permutation_matrix(_extremes_first(db)))
    p = rule_reduce_subspace(p, 2, 2)
    return replace(p, target=ising().as_bipartite(), label="product->ising",
                   info={"scale": sf.scale, "a": sf.a.tolist(), "b": sf.b.tolist()})


def _double_side(p: Protocol, spectrum: np.ndarray, side: str) -> tuple[Protocol, MixingSchedule | None]:
    # turn the qubit factor sigma_z on one side into diag(a_1, -a_1, a_2, -a_2, ...)
    d = len(spectrum)
    if d == 2:
        return p, None
    sched = MixingSchedule.from_spectrum(spectrum)
    ta, tb = p.target.dims
    eye_a, eye_b = np.eye(ta), np.eye(tb)
    if side == "a":
        p = rule_attach(p, d, 1)
        p = rule_conjugate(p, swap_factors(2, d), eye_b)
        p = rule_unitary_mix(p, [(w, u, eye_b) for w, u in sched.mixture()])
    else:
        p = rule_attach(p, 1, d)
        p = rule_conjugate(p, eye_a, swap_factors(2, d))
        p = rule_unitary_mix(p, [(w, eye_a, u) for w, u in sched.mixture()])
    return p, sched


def _evens_first(d: int) -> list[int]:
    return list(range(0, 2 * d, 2)) + list(range(1, 2 * d, 2))


def ising_to_product(h: ProductHamiltonian) -> Protocol:
    """Protocol using ``sigma_z (x) sigma_z`` to simulate ``h`` at rate ``1/K(h)``.

    Each side with ``d > 2`` gets a ``d``-dim ancilla next to its qubit; mixing
    with the pair-exchange schedule gives ``diag(a_1, -a_1, ...)`` on that side,
    and restricting to the even positions leaves ``diag(a)``. The result is then
    rescaled, the local terms are added back and the eigenframes restored.
    """
    sf = standardize(h)
    da, db = sf.dims
    p = identity_protocol(ising())
    p, sched_a = _double_side(p, sf.a, "a")
    p, sched_b = _double_side(p, sf.b, "b")
    ta, tb = p.target.dims
    order_a = _evens_first(da) if sched_a else list(range(ta))
    order_b = _evens_first(db) if sched_b else list(range(tb))
    p = rule_conjugate(p, permutation_matrix(order_a), permutation_matrix(order_b))
    p = rule_reduce_subspace(p, da, db)
    p = rule_rescale(p, sf.scale)
    p = rule_add_local(p, sf.diagonal_local_part())
    p = rule_conjugate(p, sf.frame_a, sf.frame_b)
    info = {"scale": sf.scale, "a": sf.a.tolist(), "b": sf.b.tolist()}
    if sched_a:
        info["schedule_a"] = sched_a.p.tolist()
    if sched_b:
        info["schedule_b"] = sched_b.p.tolist()
    return replace(p, target=h.as_bipartite(), label="ising->product", info=info)


def product_to_product(h: ProductHamiltonian, h_target: ProductHamiltonian) -> Protocol:
    """``h`` simulating ``h_target`` through the Ising interaction, rate ``K(h)/K(h_target)``."""
    p = compose(ising_to_product(h_target), product_to_ising(h))
    return replace(p, label="product->product")


def round_trip(h: ProductHamiltonian, h_other: ProductHamiltonian) -> Protocol:
    """``h`` simulating itself via ``h_other``; the composed rate is 1."""
    p = compose(product_to_product(h_other, h), product_to_product(h, h_other))
    return replace(p, label="round-trip")


def _sign_flip(c: float, d: float) -> np.ndarray:
    # local unitary on A1 A2 turning the sign of each negative coefficient
    return kron(SIGMA_X if c < 0 else np.eye(2), SIGMA_X if d < 0 else np.eye(2))


def _check_coefficients(c: float, d: float) -> None:
    if not (math.isfinite(c) and math.isfinite(d)):
        raise ValidationError("coefficients must be finite")
    if c == 0 or d == 0:
        raise DomainError("coefficients must be nonzero")


def boxplus_ising(c: float, d: float) -> BipartiteHamiltonian:
    return boxplus(ising(c), ising(d))


def summed_ising_target(c: float, d: float) -> ProductHamiltonian:
    """``((c+d)/4) (z I + I z) (x) (z I + I z)`` for positive ``c, d``."""
    s = kron(np.diag([1.0, -1.0]), np.eye(2)) + kron(np.eye(2), np.diag([1.0, -1.0]))
    return ProductHamiltonian((c + d) / 4 * s, s)


def boxplus_to_product(c: float, d: float) -> Protocol:
    """``c Ising (+) d Ising`` simulating a product Hamiltonian with ``K = |c| + |d|`` at rate 1.

    Equal-weight mixture of the four copies obtained by exchanging the two
    qubits on neither, one, or both sides.
    """
    _check_coefficients(c, d)
    native = boxplus_ising(c, d)
    p = identity_protocol(native)
    if c < 0 or d < 0:
        p = rule_conjugate(p, _sign_flip(c, d), np.eye(4))
    sw, e = swap_factors(2, 2), np.eye(4)
    p = rule_unitary_mix(p, [(0.25, e, e), (0.25, sw, e), (0.25, e, sw), (0.25, sw, sw)])
    return replace(p, target=summed_ising_target(abs(c), abs(d)).as_bipartite(), label="boxplus->product")


def product_to_boxplus(c: float, d: float) -> Protocol:
    """``(|c|+|d|) Ising`` on ancilla-extended registers simulating ``c Ising (+) d Ising`` at rate 1."""
    _check_coefficients(c, d)
    total = abs(c) + abs(d)
    j1 = rule_attach(identity_protocol(ising(total)), 2, 2)
    sw = swap_factors(2, 2)
    j2 = rule_conjugate(j1, sw, sw)
    p = rule_trotter_combine(j1, j2, abs(c) / total)
    if c < 0 or d < 0:
        p = rule_conjugate(p, _sign_flip(c, d), np.eye(4))
    return replace(p, target=boxplus_ising(c, d), label="product->boxplus")


def gamma_boxplus(h_target: ProductHamiltonian, parts) -> float:
    """Rate at which ``parts[0] (+) parts[1] (+) ...`` simulates ``h_target``."""
    parts = list(parts)
    if not parts:
        raise ValidationError("at least one part is required")
    require_nonlocal(h_target, "target Hamiltonian")
    return sum(k_otimes(p) for p in parts) / k_otimes(h_target)


@dataclass(frozen=True, eq=False)
class CatalyticCheck:
    """Outcome of the catalytic-condition test for ``J_A (x) J_B + G_A (x) G_B``.

    ``delta_j``/``delta_g`` are the balanced spreads (geometric means of the
    two sides). ``restricted`` holds the traceless balanced 2x2 restrictions
    ``(J_A, J_B, G_A, G_B)`` onto the extremal eigenspaces when eligible.
    """

    eligible: bool
    theta: float
    delta_j: float
    delta_g: float
    traces: tuple[float, float]
    reason: str
    restricted: tuple | None = None

    @property
    def deltas(self) -> tuple[float, float]:
        return self.delta_j, self.delta_g


def _extremal_frame(op: np.ndarray, what: str):
    """``(Q, reason)`` with ``Q`` the top and bottom eigenvectors, or ``None`` if degenerate."""
    vals, vecs = eig_hermitian(op)
    spread = vals[0] - vals[-1]
    d = len(vals)
    tol = DEGENERACY_RTOL * max(spread, 1e-300)
    top = int(np.sum(vals >= vals[0] - tol))
    bottom = int(np.sum(vals <= vals[-1] + tol))
    if d > 2 and (top > 1 or bottom > 1):
        return None, f"{what} has a degenerate extremal eigenvalue ({top}-fold max, {bottom}-fold min)"
    return np.column_stack([vecs[:, 0], vecs[:, -1]]), ""


def _traceless(m: np.ndarray) -> np.ndarray:
    return m - np.trace(m) / 2 * np.eye(2)


def _side(j: np.ndarray, g: np.ndarray, name: str):
    q, why = _extremal_frame(j, f"J_{name}")
    if q is None:
        return None, why
    je = _traceless(q.conj().T @ j @ q)
    g_spread = delta(g)
    if g_spread <= 1e-12 * max(1.0, float(np.max(np.abs(g)))):
        return (je, np.zeros((2, 2), dtype=complex)), ""
    qg, why = _extremal_frame(g, f"G_{name}")
    if qg is None:
        return None, why
    angle = float(np.max(subspace_angles(q, qg)))
    if math.sin(angle) > SUBSPACE_TOL:
        return None, f"extremal eigenspaces of J_{name} and G_{name} differ (principal angle {angle:.3e})"
    ge = _traceless(q.conj().T @ g @ q)
    return (je, ge), ""


def _spread2(m: np.ndarray) -> float:
    # spread of a traceless 2x2 Hermitian matrix
    return 2.0 * math.sqrt(max(0.0, float(np.real(np.trace(m @ m))) / 2))


def check_catalytic(ja, jb, ga, gb) -> CatalyticCheck:
    """Test whether ``J_A (x) J_B + G_A (x) G_B`` meets the catalytic conditions.

    (i) On each side, ``J`` and ``G`` have nondegenerate extremal eigenvalues
    whose eigenvectors span the same 2-dim subspace. (ii) After restricting to
    it, removing traces and balancing both terms, ``tr(J_A G_A) = tr(J_B G_B)``.
    """
    ja, jb, ga, gb = (as_hermitian(m, n) for m, n in ((ja, "J_A"), (jb, "J_B"), (ga, "G_A"), (gb, "G_B")))
    if ja.shape != ga.shape or jb.shape != gb.shape:
        raise ValidationError("J and G factors must have matching dims on each side")
    if min(delta(ja), delta(jb)) <= 1e-12 * max(1.0, np.max(np.abs(ja)), np.max(np.abs(jb))):
        if min(delta(ga), delta(gb)) <= 1e-12 * max(1.0, np.max(np.abs(ga)), np.max(np.abs(gb))):
            return CatalyticCheck(False, float("nan"), 0.0, 0.0, (0.0, 0.0), "both terms are local")
        ja, jb, ga, gb = ga, gb, ja, jb
    side_a, why_a = _side(ja, ga, "A")
    side_b, why_b = _side(jb, gb, "B")
    if side_a is None or side_b is None:
        return CatalyticCheck(False, float("nan"), 0.0, 0.0, (0.0, 0.0), why_a or why_b)
    (jea, gea), (jeb, geb) = side_a, side_b
    dja, djb = _spread2(jea), _spread2(jeb)
    dga, dgb = _spread2(gea), _spread2(geb)
    delta_j = math.sqrt(dja * djb)
    delta_g = math.sqrt(dga * dgb)
    if delta_g == 0.0:
        gea = geb = np.zeros((2, 2), dtype=complex)
        restricted = (jea * delta_j / dja, jeb * delta_j / djb, gea, geb)
        return CatalyticCheck(True, 0.0, delta_j, 0.0, (0.0, 0.0), "G is local", restricted)
    jea, jeb = jea * delta_j / dja, jeb * delta_j / djb
    gea, geb = gea * delta_g / dga, geb * delta_g / dgb
    ta = float(np.real(np.trace(jea @ gea)))
    tb = float(np.real(np.trace(jeb @ geb)))
    scale = delta_j * delta_g / 2
    if abs(ta - tb) > TRACE_TOL * max(1.0, scale):
        return CatalyticCheck(False, float("nan"), delta_j, delta_g, (ta, tb),
                              f"trace condition fails: {ta:.12g} != {tb:.12g}")
    theta = math.acos(max(-1.0, min(1.0, ta / scale)))
    return CatalyticCheck(True, theta, delta_j, delta_g, (ta, tb), "", (jea, jeb, gea, geb))


def catalytic_normal_form(ja, jb, ga, gb) -> tuple[float, float]:
    """``(Delta_x, Delta_z)`` of the two-qubit normal form of the restricted interaction."""
    chk = check_catalytic(ja, jb, ga, gb)
    if not chk.eligible:
        raise IneligibleError(chk.reason)
    jea, jeb, gea, geb = chk.restricted
    m = np.kron(jea, jeb) + np.kron(gea, geb)
    lam = pauli_normal_form(BipartiteHamiltonian.from_matrix(m, (2, 2))).lambdas
    return 2 * math.sqrt(max(lam[0], 0.0)), 2 * math.sqrt(max(lam[1], 0.0))


__all__ = [
    "CatalyticCheck",
    "DoubledForm",
    "MixingSchedule",
    "boxplus_ising",
    "boxplus_to_product",
    "catalytic_normal_form",
    "check_catalytic",
    "gamma_boxplus",
    "ising_to_product",
    "product_to_boxplus",
    "product_to_ising",
    "product_to_product",
    "round_trip",
    "summed_ising_target",
]
