"""Strength measures: the two-qubit normal form, ``K1, K2, K3``, and a property harness.

A strength measure is a function ``K`` of a bipartite Hamiltonian that cannot
increase under simulation. The harness checks the properties that follow from
this on randomly sampled Hamiltonians and reports the worst violations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import LocalHamiltonianError, ValidationError
from .hamiltonians import (
    BipartiteHamiltonian,
    ProductHamiltonian,
    as_bipartite,
    boxplus,
    k_otimes,
    local_factors,
)
from .linalg import PAULIS, SIGMA_I, random_hermitian, random_unitary

NONLOCAL_TOL = 1e-12
PROPERTY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TwoQubitNormalForm:
    """``H = (U_A (x) U_B) (sum_k lambda_k sigma_k (x) sigma_k) (U_A (x) U_B)^+ + local``."""

    lambdas: tuple[float, float, float]
    frames: tuple[np.ndarray, np.ndarray]
    local_part: BipartiteHamiltonian

    def nonlocal_matrix(self) -> np.ndarray:
        core = sum(l * np.kron(s, s) for l, s in zip(self.lambdas, PAULIS))
        u = np.kron(*self.frames)
        return u @ core @ u.conj().T

    def reconstruct(self) -> np.ndarray:
        return self.nonlocal_matrix() + self.local_part.matrix


def pauli_coefficients(m) -> np.ndarray:
    """Real 3x3 matrix ``M_ij = tr(H sigma_i (x) sigma_j) / 4``."""
    m = np.asarray(m, dtype=complex)
    return np.array([[np.trace(m @ np.kron(si, sj)).real / 4 for sj in PAULIS] for si in PAULIS])


def su2_from_rotation(r: np.ndarray) -> np.ndarray:
    """A unitary ``W`` with ``W sigma_k W^+ = sum_i R_ik sigma_i``."""
    rotvec = Rotation.from_matrix(r).as_rotvec()
    phi = float(np.linalg.norm(rotvec))
    if phi == 0.0:
        return SIGMA_I.copy()
    n = rotvec / phi
    gen = sum(c * s for c, s in zip(n, PAULIS))
    return math.cos(phi / 2) * SIGMA_I - 1j * math.sin(phi / 2) * gen


def _two_qubit_matrix(h) -> np.ndarray:
    if isinstance(h, (ProductHamiltonian, BipartiteHamiltonian)):
        h = as_bipartite(h)
        if h.dims != (2, 2):
            raise ValidationError(f"two-qubit Hamiltonian required, got dims {h.dims}")
        return h.matrix
    m = np.asarray(h, dtype=complex)
    if m.shape != (4, 4):
        raise ValidationError(f"two-qubit Hamiltonian required, got shape {m.shape}")
    return m


def pauli_normal_form(h) -> TwoQubitNormalForm:
    """Local-unitary normal form ``lambda_x >= lambda_y >= |lambda_z|``.

    Both rotation factors of the correlation-matrix SVD are made proper; a
    reflection left over is absorbed into the sign of ``lambda_z``.
    """
    m = _two_qubit_matrix(h)
    u, s, vt = np.linalg.svd(pauli_coefficients(m))
    v = vt.T
    s = s.copy()
    if np.linalg.det(u) < 0:
        u[:, 2] *= -1
        s[2] *= -1
    if np.linalg.det(v) < 0:
        v[:, 2] *= -1
        s[2] *= -1
    ha, hb = local_factors(m, (2, 2))
    local = BipartiteHamiltonian((ProductHamiltonian(ha, SIGMA_I), ProductHamiltonian(SIGMA_I, hb)))
    return TwoQubitNormalForm(tuple(float(x) for x in s), (su2_from_rotation(u), su2_from_rotation(v)), local)


def k123(nf: TwoQubitNormalForm) -> tuple[float, float, float]:
    lx, ly, lz = nf.lambdas
    return lx, lx + ly - lz, lx + ly + lz


def k1(h) -> float:
    return k123(pauli_normal_form(h))[0]


def k2(h) -> float:
    return k123(pauli_normal_form(h))[1]


def k3(h) -> float:
    return k123(pauli_normal_form(h))[2]


def gamma_two_qubit(h, h_target) -> float:
    """Optimal two-qubit rate ``min_i K_i(h) / K_i(h_target)``."""
    ks = k123(pauli_normal_form(h))
    kt = k123(pauli_normal_form(h_target))
    if kt[0] <= NONLOCAL_TOL * max(1.0, float(np.max(np.abs(_two_qubit_matrix(h_target))))):
        raise LocalHamiltonianError("target Hamiltonian is local")
    return min(a / b for a, b in zip(ks, kt))


def gamma_lower_bound(h, h_target, measures: Sequence[Callable]) -> float:
    """``min_K K(h) / K(h_target)`` over the given strength measures.

    Every strength measure bounds the optimal rate from above, so this is the
    tightest such bound from the provided set.
    """
    measures = list(measures)
    if not measures:
        raise ValueError("at least one measure is required")
    vals = []
    for k in measures:
        denom = k(h_target)
        if not denom > 0:
            raise LocalHamiltonianError("target Hamiltonian has zero strength")
        vals.append(k(h) / denom)
    return min(vals)


# property harness ---------------------------------------------------------

PROPERTIES = (
    "positivity",
    "homogeneity",
    "ancilla_stability",
    "local_unitary_invariance",
    "local_addition_invariance",
    "local_unitary_mixing",
    "subspace_reduction",
    "continuity",
    "inverse",
    "complex_conjugation",
    "exchange",
    "additivity",
)
PRODUCT_ONLY = ("inverse", "complex_conjugation", "exchange", "additivity")
CONTINUITY_EPS = (1e-2, 1e-3, 1e-4)


def _random_local(rng, da, db) -> BipartiteHamiltonian:
    return BipartiteHamiltonian((
        ProductHamiltonian(random_hermitian(rng, da), np.eye(db)),
        ProductHamiltonian(np.eye(da), random_hermitian(rng, db)),
    ))


@dataclass(frozen=True)
class Domain:
    """Sampler for a class of Hamiltonians closed under the harness operations.

    ``product`` enables the product-only properties; ``ancillas`` and
    ``reduction`` say whether padding and compression stay in the class.
    """

    name: str
    sample: Callable
    mix: Callable
    perturbation: Callable
    product: bool = False
    ancillas: bool = True
    reduction: bool = True

    def applicable(self) -> tuple[str, ...]:
        skip = set()
        if not self.product:
            skip.update(PRODUCT_ONLY)
        if not self.ancillas:
            skip.add("ancilla_stability")
        if not self.reduction:
            skip.add("subspace_reduction")
        return tuple(p for p in PROPERTIES if p not in skip)


def _sample_product(rng) -> ProductHamiltonian:
    da, db = (int(x) for x in rng.integers(2, 5, size=2))
    scale = float(rng.uniform(0.2, 3.0))
    return ProductHamiltonian(random_hermitian(rng, da, scale), random_hermitian(rng, db))


def _mix_product(rng, h: ProductHamiltonian) -> ProductHamiltonian:
    # one-sided mixing keeps the product form
    k = int(rng.integers(2, 5))
    p = rng.dirichlet(np.ones(k))
    d = h.dims[0]
    a = sum(w * u @ h.a @ u.conj().T for w, u in zip(p, (random_unitary(rng, d) for _ in range(k))))
    return ProductHamiltonian(a, h.b)


def _perturb_product(rng, h: ProductHamiltonian):
    j = random_hermitian(rng, h.dims[0])
    return lambda eps: ProductHamiltonian(h.a + eps * j, h.b)


def product_domain() -> Domain:
    return Domain("product", _sample_product, _mix_product, _perturb_product, product=True)


def _sample_two_qubit(rng) -> BipartiteHamiltonian:
    return BipartiteHamiltonian.from_matrix(random_hermitian(rng, 4, float(rng.uniform(0.2, 3.0))), (2, 2))


def _mix_two_qubit(rng, h: BipartiteHamiltonian) -> BipartiteHamiltonian:
    k = int(rng.integers(2, 5))
    p = rng.dirichlet(np.ones(k))
    m = sum(w * (lambda u: u @ h.matrix @ u.conj().T)(np.kron(random_unitary(rng, 2), random_unitary(rng, 2)))
            for w in p)
    return BipartiteHamiltonian.from_matrix(m, (2, 2))


def _perturb_two_qubit(rng, h: BipartiteHamiltonian):
    j = random_hermitian(rng, 4)
    return lambda eps: BipartiteHamiltonian.from_matrix(h.matrix + eps * j, (2, 2))


def two_qubit_domain() -> Domain:
    return Domain("two-qubit", _sample_two_qubit, _mix_two_qubit, _perturb_two_qubit,
                  product=False, ancillas=False, reduction=False)


@dataclass
class PropertyResult:
    name: str
    worst: float = 0.0
    checked: int = 0
    tol: float = PROPERTY_TOL
    detail: dict = field(default_factory=dict)
    override: bool | None = None

    @property
    def passed(self) -> bool:
        if self.override is not None:
            return self.override
        return self.checked > 0 and self.worst <= self.tol

    def record(self, violation: float) -> None:
        self.checked += 1
        self.worst = max(self.worst, float(violation))


@dataclass
class StrengthReport:
    measure: str
    domain: str
    trials: int
    results: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def failed(self) -> list[str]:
        return [n for n, r in self.results.items() if not r.passed]

    def as_dict(self) -> dict:
        return {
            "measure": self.measure,
            "domain": self.domain,
            "trials": self.trials,
            "passed": self.passed,
            "properties": {
                n: {"passed": r.passed, "worst": r.worst, "checked": r.checked, "tol": r.tol, **r.detail}
                for n, r in self.results.items()
            },
        }


def _conj_local(rng, h):
    h = as_bipartite(h)
    da, db = h.dims
    return h.conjugated(random_unitary(rng, da), random_unitary(rng, db))


def _restrict(rng, h):
    h = as_bipartite(h)
    da, db = h.dims
    ma, mb = int(rng.integers(1, da + 1)), int(rng.integers(1, db + 1))
    return h.restricted(ma, mb)


def strength_property_suite(k: Callable, domain: Domain | None = None, trials: int = 100,
                            seed: int = 42, name: str | None = None, tol: float = PROPERTY_TOL) -> StrengthReport:
    """Sample ``trials`` Hamiltonians and check every property applicable to ``domain``.

    Equalities are checked to ``tol * max(1, |K(H)|)``; inequalities allow the
    same slack. Continuity passes when the worst deviation shrinks along
    ``CONTINUITY_EPS`` (or is already below ``tol``).
    """
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    domain = domain or product_domain()
    rng = np.random.default_rng(seed)
    props = domain.applicable()
    res = {p: PropertyResult(p, tol=tol) for p in props}
    cont = np.zeros(len(CONTINUITY_EPS))

    def rel(x, ref):
        return abs(x) / max(1.0, abs(ref))

    def excess(x, ref):
        return max(0.0, x) / max(1.0, abs(ref))

    for _ in range(trials):
        h = domain.sample(rng)
        kh = k(h)
        da, db = as_bipartite(h).dims
        if "positivity" in res:
            # negative values on nonlocal inputs and nonzero values on local inputs both violate
            res["positivity"].record(max(0.0, -kh))
            res["positivity"].record(abs(k(_random_local(rng, da, db))))
        if "homogeneity" in res:
            c = float(rng.uniform(0.1, 5.0))
            res["homogeneity"].record(rel(k(as_bipartite(h).scaled(c)) - c * kh, c * kh))
        if "ancilla_stability" in res:
            ea, eb = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            res["ancilla_stability"].record(rel(k(h.padded(ea, eb)) - kh, kh))
        if "local_unitary_invariance" in res:
            res["local_unitary_invariance"].record(rel(k(_conj_local(rng, h)) - kh, kh))
        if "local_addition_invariance" in res:
            res["local_addition_invariance"].record(rel(k(as_bipartite(h) + _random_local(rng, da, db)) - kh, kh))
        if "local_unitary_mixing" in res:
            res["local_unitary_mixing"].record(excess(k(domain.mix(rng, h)) - kh, kh))
        if "subspace_reduction" in res:
            res["subspace_reduction"].record(excess(k(_restrict(rng, h)) - kh, kh))
        if "continuity" in res:
            path = domain.perturbation(rng, h)
            cont = np.maximum(cont, [abs(k(path(e)) - kh) for e in CONTINUITY_EPS])
        if domain.product:
            res["inverse"].record(rel(k(-h) - kh, kh))
            res["complex_conjugation"].record(rel(k(h.conj()) - kh, kh))
            res["exchange"].record(rel(k(h.swapped()) - kh, kh))
            h2 = domain.sample(rng)
            res["additivity"].record(rel(k(boxplus(h, h2)) - kh - k(h2), kh))
    if "continuity" in res:
        r = res["continuity"]
        r.checked = trials
        r.worst = float(cont[-1])
        r.detail = {"eps": list(CONTINUITY_EPS), "deviation": cont.tolist()}
        r.override = bool(np.all(np.diff(cont) < 0) or np.all(cont <= tol))
    return StrengthReport(name or getattr(k, "__name__", "K"), domain.name, trials, res)


def constant_measure(h) -> float:
    return 1.0


__all__ = [
    "CONTINUITY_EPS",
    "Domain",
    "PROPERTIES",
    "PropertyResult",
    "StrengthReport",
    "TwoQubitNormalForm",
    "constant_measure",
    "gamma_lower_bound",
    "gamma_two_qubit",
    "k1",
    "k123",
    "k2",
    "k3",
    "k_otimes",
    "pauli_coefficients",
    "pauli_normal_form",
    "product_domain",
    "strength_property_suite",
    "su2_from_rotation",
    "two_qubit_domain",
]
