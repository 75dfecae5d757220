"""Bipartite Hamiltonians: product and sum-of-product forms, local parts, K_otimes.

A bipartite operator on ``A (x) B`` is stored as a list of product terms
``sum_i A_i (x) B_i``. Products keep their factors; general operators can be
expanded into Hermitian product terms with :meth:`BipartiteHamiltonian.from_matrix`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LocalHamiltonianError, ValidationError
from .linalg import SIGMA_Z, as_hermitian, eig_hermitian, kron, spectral_norm

LOCALITY_RTOL = 1e-9
SPREAD_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class ProductHamiltonian:
    """``H = A (x) B`` with Hermitian factors."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", as_hermitian(self.a, "A factor"))
        object.__setattr__(self, "b", as_hermitian(self.b, "B factor"))

    @property
    def dims(self) -> tuple[int, int]:
        return self.a.shape[0], self.b.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return np.kron(self.a, self.b)

    def scaled(self, c: float) -> "ProductHamiltonian":
        return ProductHamiltonian(c * self.a, self.b)

    def __neg__(self):
        return self.scaled(-1.0)

    def conj(self) -> "ProductHamiltonian":
        return ProductHamiltonian(self.a.conj(), self.b.conj())

    def swapped(self) -> "ProductHamiltonian":
        return ProductHamiltonian(self.b, self.a)

    def conjugated(self, ua, ub) -> "ProductHamiltonian":
        return ProductHamiltonian(ua @ self.a @ ua.conj().T, ub @ self.b @ ub.conj().T)

    def padded(self, da: int, db: int) -> "ProductHamiltonian":
        return ProductHamiltonian(np.kron(self.a, np.eye(da)), np.kron(self.b, np.eye(db)))

    def as_bipartite(self) -> "BipartiteHamiltonian":
        return BipartiteHamiltonian((self,))


def ising(scale: float = 1.0) -> ProductHamiltonian:
    return ProductHamiltonian(scale * SIGMA_Z, SIGMA_Z)


@dataclass(frozen=True, eq=False)
class BipartiteHamiltonian:
    """``sum_i A_i (x) B_i``; all terms share the same ``(d_A, d_B)``.

    ``parts`` records the product summands when the operator was built with
    :func:`boxplus`, so that additive quantities can be evaluated per part.
    """

    terms: tuple[ProductHamiltonian, ...]
    parts: tuple[ProductHamiltonian, ...] | None = field(default=None)

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise ValidationError("a bipartite Hamiltonian needs at least one term")
        dims = terms[0].dims
        if any(t.dims != dims for t in terms):
            raise ValidationError("all product terms must act on the same dimensions")
        object.__setattr__(self, "terms", terms)
        if self.parts is not None:
            object.__setattr__(self, "parts", tuple(self.parts))

    @property
    def dims(self) -> tuple[int, int]:
        return self.terms[0].dims

    @property
    def matrix(self) -> np.ndarray:
        return sum(t.matrix for t in self.terms)

    @classmethod
    def from_matrix(cls, m, dims: tuple[int, int], rtol: float = 1e-12) -> "BipartiteHamiltonian":
        """Operator-Schmidt expansion into Hermitian product terms."""
        da, db = dims
        m = as_hermitian(m, "bipartite operator")
        if m.shape != (da * db, da * db):
            raise ValidationError(f"matrix shape {m.shape} does not match dims {dims}")
        ea, eb = hermitian_basis(da), hermitian_basis(db)
        coeff = np.einsum("kij,lmn,jnim->kl", ea, eb, m.reshape(da, db, da, db)).real
        u, s, vt = np.linalg.svd(coeff)
        keep = [r for r in range(len(s)) if s[r] > rtol * max(s[0], 1e-300)]
        if not keep:
            return cls((ProductHamiltonian(np.zeros((da, da)), np.zeros((db, db))),))
        terms = []
        for r in keep:
            fa = np.einsum("k,kij->ij", u[:, r], ea)
            fb = np.einsum("l,lij->ij", vt[r], eb)
            terms.append(ProductHamiltonian(s[r] * fa, fb))
        return cls(tuple(terms))

    def scaled(self, c: float) -> "BipartiteHamiltonian":
        parts = tuple(p.scaled(c) for p in self.parts) if self.parts and c >= 0 else None
        return BipartiteHamiltonian(tuple(t.scaled(c) for t in self.terms), parts)

    def __neg__(self):
        return self.scaled(-1.0)

    def __add__(self, other: "BipartiteHamiltonian") -> "BipartiteHamiltonian":
        other = as_bipartite(other)
        return BipartiteHamiltonian(self.terms + other.terms)

    def conj(self) -> "BipartiteHamiltonian":
        return BipartiteHamiltonian(tuple(t.conj() for t in self.terms))

    def swapped(self) -> "BipartiteHamiltonian":
        return BipartiteHamiltonian(tuple(t.swapped() for t in self.terms))

    def conjugated(self, ua, ub) -> "BipartiteHamiltonian":
        return BipartiteHamiltonian(tuple(t.conjugated(ua, ub) for t in self.terms))

    def padded(self, da: int, db: int) -> "BipartiteHamiltonian":
        """``H (x) I`` with the ancillas in the less significant position on each side."""
        return BipartiteHamiltonian(tuple(t.padded(da, db) for t in self.terms))

    def restricted(self, ma: int, mb: int) -> "BipartiteHamiltonian":
        """Compress every term to its upper-left ``ma x mb`` block."""
        return BipartiteHamiltonian(
            tuple(ProductHamiltonian(t.a[:ma, :ma], t.b[:mb, :mb]) for t in self.terms)
        )

    def as_product(self, rtol: float = 1e-10) -> ProductHamiltonian | None:
        """The single product term if the operator has operator-Schmidt rank one."""
        if len(self.terms) == 1:
            return self.terms[0]
        expanded = BipartiteHamiltonian.from_matrix(self.matrix, self.dims, rtol)
        return expanded.terms[0] if len(expanded.terms) == 1 else None

    def as_bipartite(self) -> "BipartiteHamiltonian":
        return self


def as_bipartite(h) -> BipartiteHamiltonian:
    if isinstance(h, (ProductHamiltonian, BipartiteHamiltonian)):
        return h.as_bipartite()
    raise TypeError(f"expected a Hamiltonian, got {type(h).__name__}")


def hermitian_basis(d: int) -> np.ndarray:
    """Generalized Gell-Mann matrices plus ``I/sqrt(d)``, orthonormal under ``tr(X Y)``."""
    basis = [np.eye(d, dtype=complex) / math.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1 / math.sqrt(2)
            basis.append(s)
            a = np.zeros((d, d), dtype=complex)
            a[j, k], a[k, j] = -1j / math.sqrt(2), 1j / math.sqrt(2)
            basis.append(a)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        basis.append(np.diag(diag / math.sqrt(l * (l + 1))).astype(complex))
    return np.array(basis)


def local_factors(m, dims: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """``(H_A, H_B)`` with ``H_A (x) I + I (x) H_B`` the trace projection of ``m`` onto local operators."""
    da, db = dims
    t = np.asarray(m, dtype=complex).reshape(da, db, da, db)
    tr_b = np.einsum("ijkj->ik", t) / db
    tr_a = np.einsum("ijil->jl", t) / da
    c = np.einsum("ijij->", t) / (da * db)
    return tr_b - c * np.eye(da), tr_a


def local_part(m, dims: tuple[int, int]) -> np.ndarray:
    ha, hb = local_factors(m, dims)
    return np.kron(ha, np.eye(dims[1])) + np.kron(np.eye(dims[0]), hb)


def nonlocal_part(m, dims: tuple[int, int]) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return m - local_part(m, dims)


def is_local(h, tol: float = LOCALITY_RTOL) -> bool:
    """True when the nonlocal residual vanishes relative to ``||H||_2``."""
    h = as_bipartite(h)
    m = h.matrix
    norm = spectral_norm(m)
    if norm == 0.0:
        return True
    return spectral_norm(nonlocal_part(m, h.dims)) <= tol * norm


def delta(k) -> float:
    """Spread between the largest and smallest eigenvalue."""
    vals = np.linalg.eigvalsh(as_hermitian(k))
    return float(vals[-1] - vals[0])


def _spread_vanishes(spread: float, op: np.ndarray) -> bool:
    return spread <= SPREAD_RTOL * max(spectral_norm(op), 1e-300)


def k_otimes(h) -> float:
    """``Delta_A Delta_B / 4``.

    Accepts a product Hamiltonian, a sum built by :func:`boxplus` (the value is
    the sum over its parts), or any bipartite operator whose nonlocal part has
    operator-Schmidt rank at most one.
    """
    if isinstance(h, ProductHamiltonian):
        return delta(h.a) * delta(h.b) / 4.0
    h = as_bipartite(h)
    if h.parts is not None:
        return sum(k_otimes(p) for p in h.parts)
    if len(h.terms) == 1:
        return k_otimes(h.terms[0])
    m = h.matrix
    nl_m = nonlocal_part(m, h.dims)
    if spectral_norm(nl_m) <= LOCALITY_RTOL * 1e-3 * max(1.0, spectral_norm(m)):
        return 0.0
    nl = BipartiteHamiltonian.from_matrix(nl_m, h.dims, 1e-10)
    if len(nl.terms) > 1:
        raise ValueError("operator is not a product Hamiltonian up to local terms")
    return k_otimes(nl.terms[0])


def require_nonlocal(h: ProductHamiltonian, what: str = "Hamiltonian") -> None:
    if _spread_vanishes(delta(h.a), h.a) or _spread_vanishes(delta(h.b), h.b):
        raise LocalHamiltonianError(f"{what} is local (a factor is proportional to the identity)")


@dataclass(frozen=True, eq=False)
class StandardForm:
    """``H = (s_A + (Delta_A/2) F_A diag(a) F_A^+) (x) (s_B + (Delta_B/2) F_B diag(b) F_B^+)``.

    ``a`` and ``b`` are descending with ``a[0] = 1`` and ``a[-1] = -1``;
    ``scale = Delta_A Delta_B / 4``. ``balance`` is the factor
    ``c = sqrt(Delta_B / Delta_A)`` that makes both balanced spreads equal
    to ``Delta = 2 sqrt(scale)``.
    """

    a: np.ndarray
    b: np.ndarray
    scale: float
    frame_a: np.ndarray
    frame_b: np.ndarray
    shift_a: float
    shift_b: float
    balance: float

    @property
    def dims(self) -> tuple[int, int]:
        return len(self.a), len(self.b)

    @property
    def delta(self) -> float:
        return 2.0 * math.sqrt(self.scale)

    @property
    def delta_a(self) -> float:
        return self.delta / self.balance

    @property
    def delta_b(self) -> float:
        return self.delta * self.balance

    def diagonal_factors(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalue vectors of the two original factors, in frame order."""
        return (self.shift_a + self.delta_a / 2 * self.a,
                self.shift_b + self.delta_b / 2 * self.b)

    def diagonal_local_part(self) -> BipartiteHamiltonian:
        """Local terms separating the diagonal product from ``scale * a (x) b``."""
        ha = self.shift_b * self.delta_a / 2 * np.diag(self.a) + self.shift_a * self.shift_b * np.eye(len(self.a))
        hb = self.shift_a * self.delta_b / 2 * np.diag(self.b)
        return BipartiteHamiltonian((
            ProductHamiltonian(ha, np.eye(len(self.b))),
            ProductHamiltonian(np.eye(len(self.a)), hb),
        ))

    def nonlocal_product(self) -> ProductHamiltonian:
        fa, fb = self.frame_a, self.frame_b
        return ProductHamiltonian(
            self.scale * fa @ np.diag(self.a) @ fa.conj().T, fb @ np.diag(self.b) @ fb.conj().T
        )

    def reconstruct(self) -> ProductHamiltonian:
        la, lb = self.diagonal_factors()
        fa, fb = self.frame_a, self.frame_b
        return ProductHamiltonian(fa @ np.diag(la) @ fa.conj().T, fb @ np.diag(lb) @ fb.conj().T)


def _normalized_spectrum(op: np.ndarray):
    vals, vecs = eig_hermitian(op)
    spread = float(vals[0] - vals[-1])
    shift = float(vals[0] + vals[-1]) / 2
    a = (vals - shift) / (spread / 2)
    a[0], a[-1] = 1.0, -1.0
    return np.clip(a, -1.0, 1.0), vecs, spread, shift


def standardize(h: ProductHamiltonian) -> StandardForm:
    require_nonlocal(h)
    a, fa, da, sa = _normalized_spectrum(h.a)
    b, fb, db, sb = _normalized_spectrum(h.b)
    return StandardForm(a, b, da * db / 4, fa, fb, sa, sb, math.sqrt(db / da))


def gamma_product(h: ProductHamiltonian, h_target: ProductHamiltonian) -> float:
    """Optimal rate for ``h`` to simulate ``h_target``: ``K(h) / K(h_target)``."""
    require_nonlocal(h_target, "target Hamiltonian")
    return k_otimes(h) / k_otimes(h_target)


def boxplus(h1, h2) -> BipartiteHamiltonian:
    """``H1 (x) I + I (x) H2`` on ``(A1 A2 | B1 B2)``."""
    h1, h2 = as_bipartite(h1), as_bipartite(h2)
    (a1, b1), (a2, b2) = h1.dims, h2.dims
    terms = tuple(t.padded(a2, b2) for t in h1.terms) + tuple(
        ProductHamiltonian(np.kron(np.eye(a1), t.a), np.kron(np.eye(b1), t.b)) for t in h2.terms
    )
    parts = None
    p1 = h1.parts if h1.parts is not None else (h1.terms if len(h1.terms) == 1 else None)
    p2 = h2.parts if h2.parts is not None else (h2.terms if len(h2.terms) == 1 else None)
    if p1 is not None and p2 is not None:
        parts = tuple(p1) + tuple(p2)
    return BipartiteHamiltonian(terms, parts)


def hamiltonians_close(h1, h2, tol: float = 1e-10) -> bool:
    m1, m2 = as_bipartite(h1).matrix, as_bipartite(h2).matrix
    if m1.shape != m2.shape or as_bipartite(h1).dims != as_bipartite(h2).dims:
        return False
    return spectral_norm(m1 - m2) <= tol * max(1.0, spectral_norm(m1))


def random_product(rng: np.random.Generator, da: int, db: int) -> ProductHamiltonian:
    from .linalg import random_hermitian

    return ProductHamiltonian(random_hermitian(rng, da), random_hermitian(rng, db))


__all__ = [
    "BipartiteHamiltonian",
    "ProductHamiltonian",
    "StandardForm",
    "as_bipartite",
    "boxplus",
    "delta",
    "gamma_product",
    "hamiltonians_close",
    "hermitian_basis",
    "is_local",
    "ising",
    "k_otimes",
    "kron",
    "local_factors",
    "local_part",
    "nonlocal_part",
    "random_product",
    "require_nonlocal",
    "standardize",
]
