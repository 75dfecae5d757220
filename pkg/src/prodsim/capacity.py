"""Entanglement capacities of product Hamiltonians.

The capacity of ``H_A (x) H_B`` is ``alpha * Delta_A * Delta_B / 4`` where
``alpha = 2 max_x sqrt(x(1-x)) log2(x/(1-x))``. The explicit input state that
attains it is available, together with a finite-difference evaluation of the
instantaneous entanglement rate as an independent check.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .errors import IneligibleError, ValidationError
from .hamiltonians import ProductHamiltonian, as_bipartite, k_otimes, require_nonlocal
from .linalg import as_state, eig_hermitian, expm_i, reduced_state, von_neumann_entropy
from .product_sim import check_catalytic

ALPHA_BRACKET = (0.5 + 1e-9, 1.0 - 1e-9)
ALPHA_TOL = 1e-10
FD_STEP = 1e-4
_INVPHI = (math.sqrt(5) - 1) / 2


class AlphaResult(NamedTuple):
    alpha: float
    x0: float


def alpha_objective(x: float) -> float:
    """``2 sqrt(x(1-x)) log2(x/(1-x))``, extended by 0 at ``x = 0`` and ``x = 1``."""
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return 2.0 * math.sqrt(x * (1.0 - x)) * math.log2(x / (1.0 - x))


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[lo, hi]`` to bracket width ``tol``."""
    if not tol > 0:
        raise ValidationError("tolerance must be positive")
    if not lo < hi:
        raise ValidationError("empty bracket")
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


@lru_cache(maxsize=None)
def compute_alpha(tol: float = ALPHA_TOL) -> AlphaResult:
    x0, value = golden_section_max(alpha_objective, *ALPHA_BRACKET, tol)
    return AlphaResult(value, x0)


def entanglement_capacity(h: ProductHamiltonian) -> float:
    """Ebits per unit time; zero when a factor is proportional to the identity."""
    return compute_alpha().alpha * k_otimes(h)


def capability(h: ProductHamiltonian) -> float:
    """Single-shot optimal rate; for product Hamiltonians it equals the capacity."""
    return entanglement_capacity(h)


def capacity_boxplus(parts) -> float:
    """Capacity (and capability) of ``H_1 (+) H_2 (+) ...``: the sum over parts."""
    return sum(entanglement_capacity(p) for p in parts)


def capacity_catalytic(ja, jb, ga, gb) -> float:
    """``alpha (Delta_J^2 + Delta_G^2) / 4`` for ``J_A (x) J_B + G_A (x) G_B`` meeting the catalytic conditions."""
    chk = check_catalytic(ja, jb, ga, gb)
    if not chk.eligible:
        raise IneligibleError(chk.reason)
    return compute_alpha().alpha * (chk.delta_j ** 2 + chk.delta_g ** 2) / 4


def _plus_minus(op: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    _, vecs = eig_hermitian(op)
    top, bottom = vecs[:, 0], vecs[:, -1]
    return (top + bottom) / math.sqrt(2), (top - bottom) / math.sqrt(2)


def optimal_state(h: ProductHamiltonian) -> np.ndarray:
    """``sqrt(x0) |++> - i sqrt(1-x0) |-->`` with ``|+-> = (|max> +- |min>)/sqrt(2)`` per side.

    The phase ``-i`` makes entanglement grow under ``exp(-iHt)``; the conjugate
    state loses entanglement at the same rate.
    """
    require_nonlocal(h)
    x0 = compute_alpha().x0
    pa, ma = _plus_minus(h.a)
    pb, mb = _plus_minus(h.b)
    psi = math.sqrt(x0) * np.kron(pa, pb) - 1j * math.sqrt(1 - x0) * np.kron(ma, mb)
    return psi / np.linalg.norm(psi)


def entanglement_entropy(psi, dims: tuple[int, int]) -> float:
    """Entropy (bits) of the A-side reduced state of a pure bipartite state."""
    psi = as_state(psi)
    if psi.size != dims[0] * dims[1]:
        raise ValidationError(f"state of size {psi.size} does not match dims {dims}")
    return von_neumann_entropy(reduced_state(psi, dims))


def entanglement_rate(h, psi, step: float = FD_STEP) -> float:
    """Central difference ``[E(exp(-iHh) psi) - E(exp(iHh) psi)] / 2h``."""
    if not step > 0:
        raise ValidationError("finite-difference step must be positive")
    h = as_bipartite(h)
    psi = as_state(psi)
    m = h.matrix
    fwd = expm_i(m, step) @ psi
    bwd = expm_i(m, -step) @ psi
    return (entanglement_entropy(fwd, h.dims) - entanglement_entropy(bwd, h.dims)) / (2 * step)


class RateEstimate(NamedTuple):
    rate: float
    richardson: float
    discrepancy: float


def entanglement_rate_checked(h, psi, step: float = FD_STEP) -> RateEstimate:
    """Rate at ``step`` plus the Richardson extrapolation from ``step/2``."""
    coarse = entanglement_rate(h, psi, step)
    fine = entanglement_rate(h, psi, step / 2)
    extrapolated = (4 * fine - coarse) / 3
    return RateEstimate(coarse, extrapolated, abs(extrapolated - coarse))


__all__ = [
    "AlphaResult",
    "RateEstimate",
    "alpha_objective",
    "capability",
    "capacity_boxplus",
    "capacity_catalytic",
    "compute_alpha",
    "entanglement_capacity",
    "entanglement_entropy",
    "entanglement_rate",
    "entanglement_rate_checked",
    "golden_section_max",
    "optimal_state",
]
