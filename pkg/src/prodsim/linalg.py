"""Dense complex linear algebra used throughout the package.

Operators are plain ``numpy`` arrays of dtype ``complex128``. The ``as_*``
helpers validate and normalize inputs; everything else assumes validated data.

Conventions
-----------
- Eigenvalues are returned in descending order.
- Entropies are in bits (log base 2).
- Tensor products put the first factor in the more significant position,
  i.e. ``kron(A, B)[i*dB + j, k*dB + l] = A[i, k] * B[j, l]``.
"""

from __future__ import annotations

import math
from functools import reduce
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ValidationError

HERMITIAN_RTOL = 1e-12
UNITARY_TOL = 1e-10
STATE_NORM_TOL = 1e-12
DENSITY_TOL = 1e-10
EQUALITY_TOL = 1e-10

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def _as_matrix(m, name: str) -> np.ndarray:
    arr = np.array(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must be a non-empty 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite entries")
    return arr


def hermiticity_defect(m: np.ndarray) -> float:
    """Max-norm of ``m - m^dagger`` relative to the max-norm of ``m``."""
    scale = max(1.0, float(np.max(np.abs(m))))
    return float(np.max(np.abs(m - m.conj().T))) / scale


def as_hermitian(m, name: str = "operator") -> np.ndarray:
    """Validate ``m`` as a Hermitian matrix and return it symmetrized."""
    arr = _as_matrix(m, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    if hermiticity_defect(arr) > HERMITIAN_RTOL:
        raise ValidationError(
            f"{name} is not Hermitian (relative defect {hermiticity_defect(arr):.2e})"
        )
    return (arr + arr.conj().T) / 2


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) <= tol


def as_unitary(u, name: str = "unitary") -> np.ndarray:
    arr = _as_matrix(u, name)
    if not is_unitary(arr):
        raise ValidationError(f"{name} is not unitary")
    return arr


def as_state(psi, name: str = "state") -> np.ndarray:
    arr = np.array(psi, dtype=complex).reshape(-1)
    if arr.size < 1:
        raise ValidationError(f"{name} is empty")
    if abs(np.linalg.norm(arr) - 1.0) > STATE_NORM_TOL:
        raise ValidationError(f"{name} is not normalized (norm {np.linalg.norm(arr):.15g})")
    return arr


def as_density(rho, name: str = "density operator") -> np.ndarray:
    arr = as_hermitian(rho, name)
    if abs(np.trace(arr).real - 1.0) > DENSITY_TOL:
        raise ValidationError(f"{name} does not have unit trace")
    if np.linalg.eigvalsh(arr)[0] < -DENSITY_TOL:
        raise ValidationError(f"{name} is not positive semidefinite")
    return arr


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    # first component with non-negligible magnitude made real positive
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        idx = int(np.argmax(np.abs(col) > 1e-8))
        if abs(col[idx]) > 0:
            out[:, k] = col * (abs(col[idx]) / col[idx])
    return out


def eig_hermitian(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Each eigenvector column has its first non-negligible component made real
    and positive so that repeated calls give identical frames.
    """
    h = as_hermitian(h)
    vals, vecs = np.linalg.eigh(h)
    return vals[::-1].copy(), _fix_phases(vecs[:, ::-1])


def expm_i(h, t: float) -> np.ndarray:
    """``exp(-i h t)`` by spectral decomposition."""
    if not math.isfinite(t):
        raise ValidationError("time must be finite")
    h = as_hermitian(h)
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * vals * t)) @ vecs.conj().T


def kron(*ops) -> np.ndarray:
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def swap_factors(d1: int, d2: int) -> np.ndarray:
    """Permutation taking ``|i>|j>`` on ``d1 x d2`` to ``|j>|i>`` on ``d2 x d1``."""
    p = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for i in range(d1):
        for j in range(d2):
            p[j * d1 + i, i * d2 + j] = 1.0
    return p


def permutation_matrix(order: Sequence[int]) -> np.ndarray:
    """Unitary mapping basis vector ``order[k]`` to position ``k``."""
    d = len(order)
    if sorted(order) != list(range(d)):
        raise ValidationError(f"{order} is not a permutation")
    p = np.zeros((d, d), dtype=complex)
    for k, src in enumerate(order):
        p[k, src] = 1.0
    return p


def partial_trace(rho, dims: Sequence[int], keep: Sequence[int] | int) -> np.ndarray:
    """Reduced operator on the subsystems listed in ``keep`` (in their original order)."""
    rho = np.asarray(rho, dtype=complex)
    dims = [int(d) for d in dims]
    if isinstance(keep, (int, np.integer)):
        keep = [int(keep)]
    keep = sorted(set(int(k) for k in keep))
    total = math.prod(dims)
    if rho.shape != (total, total):
        raise ValidationError(f"operator of shape {rho.shape} does not match dims {dims}")
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValidationError(f"keep={keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    tensor = rho.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # einsum with explicit index letters; row index i, column index i + n
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    for i in traced:
        letters[i + n] = letters[i]
    out = [letters[i] for i in keep] + [letters[i + n] for i in keep]
    spec = "".join(letters) + "->" + "".join(out)
    dk = math.prod(dims[i] for i in keep) if keep else 1
    return np.einsum(spec, tensor).reshape(dk, dk)


def reduced_state(psi, dims: tuple[int, int]) -> np.ndarray:
    """A-side reduced density matrix of a bipartite pure state."""
    m = np.asarray(psi, dtype=complex).reshape(dims)
    return m @ m.conj().T


def von_neumann_entropy(rho) -> float:
    """Entropy in bits, with ``0 log 0 = 0``."""
    vals = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    vals = vals[vals > 1e-300]
    return float(max(0.0, -np.sum(vals * np.log2(vals))))


def spectral_norm(m) -> float:
    return float(np.linalg.norm(np.asarray(m), 2))


def _phase_spread(w: np.ndarray) -> float:
    # length of the shortest arc holding every eigenphase of the unitary w
    phases = np.sort(np.mod(np.angle(np.linalg.eigvals(w)), 2 * math.pi))
    gaps = np.diff(np.concatenate([phases, [phases[0] + 2 * math.pi]]))
    return 2 * math.pi - float(np.max(gaps))


def unitary_distance(u, v) -> float:
    """``min_phi || u - exp(i phi) v ||_2``.

    For unitaries this is ``2 sin(L/4)`` where ``L`` is the shortest arc
    covering the eigenphases of ``v^dagger u``. Non-unitary ``u`` (a leaky
    realization) falls back to a numerical minimization over ``phi``.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    if is_unitary(u, 1e-9) and is_unitary(v, 1e-9):
        return 2.0 * math.sin(_phase_spread(v.conj().T @ u) / 4.0)

    def cost(phi):
        return spectral_norm(u - np.exp(1j * phi) * v)

    grid = np.linspace(0.0, 2 * math.pi, 73)
    best = grid[int(np.argmin([cost(p) for p in grid]))]
    step = grid[1] - grid[0]
    res = minimize_scalar(cost, bounds=(best - step, best + step), method="bounded",
                          options={"xatol": 1e-12})
    return float(min(res.fun, cost(best)))


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    h = (g + g.conj().T) / 2
    return scale * h / spectral_norm(h)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)
