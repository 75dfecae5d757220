"""Simulation protocols as lazily generated pulse sequences, plus the simulation rules.

A :class:`Protocol` uses a native Hamiltonian to track ``exp(-i H_target t)``.
Its segment list is produced on demand for a target time ``t`` and a slicing
``n``, because the product-formula constructions depend on ``n``.

Register layout used by every segment list: the computation starts on the
target system. Ancillas are appended in the *least significant* position on
each side and discarded in stack order. ``Evolve`` always applies the native
Hamiltonian to the least significant ``(d_A, d_B)`` factors of the current
space, and ``LocalUnitary`` factors always span the full current A and B
registers. Sub-protocols embedded under extra registers have their local
unitaries padded with identities (:func:`pad_segments`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np

from . import _kernels
from .errors import AncillaContaminationError, NotLocalError, ValidationError
from .hamiltonians import (
    BipartiteHamiltonian,
    ProductHamiltonian,
    as_bipartite,
    hamiltonians_close,
    is_local,
    local_factors,
)
from .linalg import as_unitary, expm_i, spectral_norm, swap_factors, unitary_distance

LEAKAGE_TOL = 1e-8
RATE_TOL = 1e-12
COMMUTE_RTOL = 1e-12


@dataclass(frozen=True)
class Evolve:
    tau: float


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    ua: np.ndarray
    ub: np.ndarray
    label: str = ""


@dataclass(frozen=True, eq=False)
class AttachAncilla:
    da: int
    db: int
    init_a: np.ndarray
    init_b: np.ndarray


@dataclass(frozen=True)
class DiscardAncilla:
    da: int
    db: int


Segment = Union[Evolve, LocalUnitary, AttachAncilla, DiscardAncilla]
Builder = Callable[[float, int], list]


@dataclass(frozen=True, eq=False)
class Protocol:
    native: BipartiteHamiltonian
    target: BipartiteHamiltonian
    build: Builder
    rate: float
    label: str = "identity"
    info: dict = field(default_factory=dict)

    def segments(self, t: float, n: int = 1) -> list:
        if not (t >= 0 and math.isfinite(t)):
            raise ValidationError(f"target time must be finite and nonnegative, got {t}")
        if int(n) != n or n < 1:
            raise ValidationError(f"slicing must be a positive integer, got {n}")
        return simplify(self.build(float(t), int(n)))

    def native_time(self, t: float, n: int = 1) -> float:
        return sum(s.tau for s in self.segments(t, n) if isinstance(s, Evolve))


def basis_state(d: int, k: int = 0) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[k] = 1.0
    return e


def _is_identity(u: np.ndarray) -> bool:
    return u.shape[0] == u.shape[1] and np.allclose(u, np.eye(u.shape[0]), rtol=0, atol=1e-14)


def simplify(segments: Sequence) -> list:
    """Merge adjacent local unitaries and evolutions; drop identities and zero-length evolutions."""
    out: list = []
    for seg in segments:
        if isinstance(seg, Evolve):
            if seg.tau == 0.0:
                continue
            if out and isinstance(out[-1], Evolve):
                out[-1] = Evolve(out[-1].tau + seg.tau)
                continue
        elif isinstance(seg, LocalUnitary):
            if out and isinstance(out[-1], LocalUnitary):
                prev = out.pop()
                label = prev.label if seg.label in ("", prev.label) else f"{seg.label}*{prev.label}"
                seg = LocalUnitary(seg.ua @ prev.ua, seg.ub @ prev.ub, label)
            if _is_identity(seg.ua) and _is_identity(seg.ub):
                continue
        out.append(seg)
    return out


def pad_segments(segments: Sequence, ma: int, mb: int) -> list:
    """Embed a segment list under ``ma``/``mb``-dimensional more significant registers."""
    if ma == 1 and mb == 1:
        return list(segments)
    ia, ib = np.eye(ma), np.eye(mb)
    return [
        LocalUnitary(np.kron(ia, s.ua), np.kron(ib, s.ub), s.label) if isinstance(s, LocalUnitary) else s
        for s in segments
    ]


def _inner_slices(n: int, k: int) -> int:
    return max(1, -(-n // k))


def _commute(ops: Sequence[np.ndarray]) -> bool:
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            x, y = ops[i], ops[j]
            bound = COMMUTE_RTOL * max(spectral_norm(x) * spectral_norm(y), 1e-300)
            if spectral_norm(x @ y - y @ x) > bound:
                return False
    return True


def identity_protocol(h) -> Protocol:
    """``H`` simulating itself: a single evolution."""
    h = as_bipartite(h)
    return Protocol(h, h, lambda t, n: [Evolve(t)], 1.0, "identity")


def rule_rescale(p: Protocol, c: float) -> Protocol:
    """Target ``c H'`` at rate ``gamma / c`` (requires ``c > 0``)."""
    if not c > 0:
        raise ValidationError(f"rescaling constant must be positive, got {c}")
    if c == 1:
        return p
    return replace(p, target=p.target.scaled(c), build=lambda t, n: p.segments(c * t, n),
                   rate=p.rate / c, label=f"rescale({p.label})")


def rule_attach(p: Protocol, da: int, db: int) -> Protocol:
    """Target ``H' (x) I`` on extra ``da x db`` ancillas, same rate."""
    if da < 1 or db < 1:
        raise ValidationError("ancilla dimensions must be positive")
    if da == 1 and db == 1:
        return p
    ta, tb = p.target.dims
    # reorder (T A') -> (A' T) so the wrapped protocol sees T in the least significant slot
    sa, sb = swap_factors(ta, da), swap_factors(tb, db)

    def build(t, n):
        inner = pad_segments(p.segments(t, n), da, db)
        return [LocalUnitary(sa, sb, "reorder")] + inner + [LocalUnitary(sa.T, sb.T, "reorder^-1")]

    return replace(p, target=p.target.padded(da, db), build=build, label=f"attach({p.label})")


def rule_conjugate(p: Protocol, ua, ub) -> Protocol:
    """Target ``(U_A (x) U_B) H' (U_A (x) U_B)^+``, same rate."""
    ta, tb = p.target.dims
    ua, ub = as_unitary(ua, "U_A"), as_unitary(ub, "U_B")
    if ua.shape != (ta, ta) or ub.shape != (tb, tb):
        raise ValidationError(f"local unitary dims {ua.shape}, {ub.shape} do not match target dims {(ta, tb)}")
    if _is_identity(ua) and _is_identity(ub):
        return p
    uad, ubd = ua.conj().T, ub.conj().T

    def build(t, n):
        return [LocalUnitary(uad, ubd, "conj^-1")] + p.segments(t, n) + [LocalUnitary(ua, ub, "conj")]

    return replace(p, target=p.target.conjugated(ua, ub), build=build, label=f"conjugate({p.label})")


def rule_add_local(p: Protocol, h0) -> Protocol:
    """Target ``H' + H_0`` for local ``H_0``, interleaving free local evolution."""
    h0 = as_bipartite(h0)
    if h0.dims != p.target.dims:
        raise ValidationError(f"local term dims {h0.dims} do not match target dims {p.target.dims}")
    if not is_local(h0):
        raise NotLocalError("H_0 has a nonlocal part")
    m0 = h0.matrix
    if spectral_norm(m0) == 0.0:
        return p
    ha, hb = local_factors(m0, h0.dims)
    slices_fixed = 1 if _commute([p.target.matrix, m0]) else None

    def build(t, n):
        k = slices_fixed or n
        dt = t / k
        step = LocalUnitary(expm_i(ha, dt), expm_i(hb, dt), "local")
        segs: list = []
        for _ in range(k):
            segs += p.segments(dt, _inner_slices(n, k))
            segs.append(step)
        return segs

    return replace(p, target=p.target + h0, build=build, label=f"add_local({p.label})")


def rule_trotter_combine(p1: Protocol, p2: Protocol, prob: float) -> Protocol:
    """Target ``p T1 + (1-p) T2`` by time sharing, ``1/gamma = p/gamma1 + (1-p)/gamma2``."""
    if not 0.0 <= prob <= 1.0:
        raise ValidationError(f"p must lie in [0, 1], got {prob}")
    if not hamiltonians_close(p1.native, p2.native, 1e-12):
        raise ValidationError("protocols to combine must share the native Hamiltonian")
    if p1.target.dims != p2.target.dims:
        raise ValidationError("protocols to combine must act on the same target dims")
    if prob == 1.0:
        return p1
    if prob == 0.0:
        return p2
    target = p1.target.scaled(prob) + p2.target.scaled(1 - prob)
    rate = 1.0 / (prob / p1.rate + (1 - prob) / p2.rate)
    slices_fixed = 1 if _commute([p1.target.matrix, p2.target.matrix]) else None

    def build(t, n):
        k = slices_fixed or n
        dt, m = t / k, _inner_slices(n, k)
        segs: list = []
        for _ in range(k):
            segs += p1.segments(prob * dt, m)
            segs += p2.segments((1 - prob) * dt, m)
        return segs

    return Protocol(p1.native, target, build, rate, f"combine({p1.label},{p2.label})",
                    {**p2.info, **p1.info})


def rule_unitary_mix(p: Protocol, mix: Sequence[tuple]) -> Protocol:
    """Target ``sum_i p_i U_i H' U_i^+`` by time sharing conjugated copies, same rate.

    ``mix`` is a sequence of ``(p_i, U_A_i, U_B_i)``.
    """
    ta, tb = p.target.dims
    entries = []
    for item in mix:
        w, ua, ub = item
        if w < 0:
            raise ValidationError("mixing probabilities must be nonnegative")
        ua, ub = as_unitary(ua, "U_A"), as_unitary(ub, "U_B")
        if ua.shape != (ta, ta) or ub.shape != (tb, tb):
            raise ValidationError("mixing unitaries must match the target dims")
        if w > 0:
            entries.append((float(w), ua, ub))
    total = sum(w for w, _, _ in entries)
    if not entries or abs(total - 1.0) > 1e-12:
        raise ValidationError(f"mixing probabilities must sum to 1, got {total}")
    if len(entries) == 1 and _is_identity(entries[0][1]) and _is_identity(entries[0][2]):
        return p
    copies = [p.target.conjugated(ua, ub) for _, ua, ub in entries]
    target = BipartiteHamiltonian(sum((c.scaled(w).terms for (w, _, _), c in zip(entries, copies)), ()))
    slices_fixed = 1 if _commute([c.matrix for c in copies]) else None

    def build(t, n):
        k = slices_fixed or n
        dt, m = t / k, _inner_slices(n, k)
        segs: list = []
        for _ in range(k):
            for w, ua, ub in entries:
                segs.append(LocalUnitary(ua.conj().T, ub.conj().T, "mix^-1"))
                segs += p.segments(w * dt, m)
                segs.append(LocalUnitary(ua, ub, "mix"))
        return segs

    return replace(p, target=target, build=build, label=f"mix({p.label})")


def _embedding(m: int, d: int) -> tuple[int, int, np.ndarray]:
    """Ancilla dim ``k``, padding ``q`` and permutation ``V`` with ``V |j>|0>_k = |0>_q |j>_d``.

    ``k = d / gcd(m, d)`` is the smallest ancilla making ``m k`` a multiple of
    ``d``; ``q = m k / d`` is what the ``d``-dim register is padded with.
    """
    k = d // math.gcd(m, d)
    total = m * k
    logical = [j * k for j in range(m)]
    rest_src = [i for i in range(total) if i % k or i // k >= m]
    rest_dst = list(range(m, total))
    v = np.zeros((total, total), dtype=complex)
    for src, dst in zip(logical + rest_src, list(range(m)) + rest_dst):
        v[dst, src] = 1.0
    return k, total // d, v


def _block_sign(d: int, m: int) -> np.ndarray:
    return np.diag(np.r_[np.ones(m), -np.ones(d - m)]).astype(complex)


def _commutes_with_block(h: np.ndarray, da: int, db: int, ma: int, mb: int) -> tuple[bool, bool]:
    za = np.kron(_block_sign(da, ma), np.eye(db))
    zb = np.kron(np.eye(da), _block_sign(db, mb))
    bound = COMMUTE_RTOL * max(spectral_norm(h), 1e-300)
    return (spectral_norm(h @ za - za @ h) <= bound, spectral_norm(h @ zb - zb @ h) <= bound)


def rule_reduce_subspace(p: Protocol, ma: int, mb: int) -> Protocol:
    """Target the compression of ``H'`` onto the leading ``ma x mb`` basis block.

    The target is first block-diagonalized by mixing with ``diag(I, -I)`` on
    whichever side needs it; then the logical ``ma x mb`` system, extended by
    ancillas prepared in ``|0>``, is permuted into the leading block of the
    big registers, evolved, and permuted back.
    """
    da, db = p.target.dims
    if not (1 <= ma <= da and 1 <= mb <= db):
        raise ValidationError(f"subspace dims {(ma, mb)} exceed target dims {(da, db)}")
    if ma == da and mb == db:
        return p
    block_a, block_b = _commutes_with_block(p.target.matrix, da, db, ma, mb)
    mixed = p
    mix_a = [(np.eye(da), 1.0)] if block_a else [(np.eye(da), 0.5), (_block_sign(da, ma), 0.5)]
    mix_b = [(np.eye(db), 1.0)] if block_b else [(np.eye(db), 0.5), (_block_sign(db, mb), 0.5)]
    if not (block_a and block_b):
        mixed = rule_unitary_mix(p, [(wa * wb, za, zb) for za, wa in mix_a for zb, wb in mix_b])

    # per side: (ancilla dim, padding dim, embedding); untouched sides reuse their own register
    att_a, pad_a, va = _embedding(ma, da) if ma < da else (1, 1, np.eye(da))
    att_b, pad_b, vb = _embedding(mb, db) if mb < db else (1, 1, np.eye(db))

    def build(t, n):
        segs = [AttachAncilla(att_a, att_b, basis_state(att_a), basis_state(att_b)),
                LocalUnitary(va, vb, "embed")]
        segs += pad_segments(mixed.segments(t, n), pad_a, pad_b)
        segs += [LocalUnitary(va.T, vb.T, "embed^-1"), DiscardAncilla(att_a, att_b)]
        return segs

    return replace(p, target=p.target.restricted(ma, mb), build=build, label=f"reduce({p.label})")


def compose(outer: Protocol, inner: Protocol) -> Protocol:
    """Simulate ``outer.native`` with ``inner`` wherever ``outer`` evolves; rates multiply."""
    if not hamiltonians_close(outer.native, inner.target, 1e-9):
        raise ValidationError("inner protocol target must equal the outer native Hamiltonian")
    na, nb = outer.native.dims

    def build(t, n):
        outer_segs = outer.segments(t, n)
        k = max(1, sum(isinstance(s, Evolve) for s in outer_segs))
        m = _inner_slices(n, k)
        ca, cb = outer.target.dims
        segs: list = []
        for s in outer_segs:
            if isinstance(s, Evolve):
                segs += pad_segments(inner.segments(s.tau, m), ca // na, cb // nb)
                continue
            if isinstance(s, AttachAncilla):
                ca, cb = ca * s.da, cb * s.db
            elif isinstance(s, DiscardAncilla):
                ca, cb = ca // s.da, cb // s.db
            segs.append(s)
        return segs

    return Protocol(inner.native, outer.target, build, outer.rate * inner.rate,
                    f"{outer.label}<-{inner.label}", {**inner.info, **outer.info})


class Realization(NamedTuple):
    unitary: np.ndarray
    native_time: float
    leakage: float


def realize(p: Protocol, t: float, n: int = 1, leakage_tol: float | None = LEAKAGE_TOL) -> Realization:
    """Execute the segments for ``(t, n)`` and return the effective map on the target system.

    Raises :class:`AncillaContaminationError` when a discarded ancilla carries
    more than ``leakage_tol`` of norm outside its initial state (``None``
    disables the check; the leakage is still reported).
    """
    segs = p.segments(t, n)
    ta, tb = p.target.dims
    na, nb = p.native.dims
    k = ta * tb
    x = np.ascontiguousarray(np.eye(k, dtype=complex).reshape(ta, tb, k))
    ca, cb = ta, tb
    stack: list[AttachAncilla] = []
    cache: dict[float, np.ndarray] = {}
    native = p.native.matrix
    elapsed = 0.0
    worst = 0.0
    for s in segs:
        if isinstance(s, Evolve):
            if ca % na or cb % nb:
                raise ValidationError(f"native dims {(na, nb)} do not divide current dims {(ca, cb)}")
            w = cache.get(s.tau)
            if w is None:
                w = cache[s.tau] = np.ascontiguousarray(expm_i(native, s.tau))
            x = _kernels.apply_native(x, w, ca // na, na, cb // nb, nb)
            elapsed += s.tau
        elif isinstance(s, LocalUnitary):
            if s.ua.shape != (ca, ca) or s.ub.shape != (cb, cb):
                raise ValidationError(
                    f"local unitary dims {s.ua.shape[0], s.ub.shape[0]} do not match current dims {(ca, cb)}"
                )
            x = _kernels.apply_local(x, np.ascontiguousarray(s.ua, dtype=complex),
                                     np.ascontiguousarray(s.ub, dtype=complex))
        elif isinstance(s, AttachAncilla):
            x = np.einsum("abk,i,j->aibjk", x, s.init_a, s.init_b).reshape(ca * s.da, cb * s.db, k)
            x = np.ascontiguousarray(x)
            ca, cb = ca * s.da, cb * s.db
            stack.append(s)
        elif isinstance(s, DiscardAncilla):
            if not stack or (stack[-1].da, stack[-1].db) != (s.da, s.db):
                raise ValidationError("discard does not match the most recent attach")
            top = stack.pop()
            ca, cb = ca // s.da, cb // s.db
            x5 = x.reshape(ca, s.da, cb, s.db, k)
            x = np.ascontiguousarray(np.einsum("aibjk,i,j->abk", x5, top.init_a.conj(), top.init_b.conj()))
            smin = np.linalg.svd(x.reshape(ca * cb, k), compute_uv=False)[-1]
            leak = max(0.0, 1.0 - float(smin) ** 2)
            worst = max(worst, leak)
            if leakage_tol is not None and leak > leakage_tol:
                raise AncillaContaminationError(leak, leakage_tol)
        else:
            raise TypeError(f"unknown segment {s!r}")
    if stack or (ca, cb) != (ta, tb):
        raise ValidationError("segment list leaves ancillas attached")
    return Realization(x.reshape(k, k), elapsed, worst)


def verify(p: Protocol, t: float, n: int = 1, leakage_tol: float | None = LEAKAGE_TOL) -> float:
    """Phase-invariant spectral distance between the realized map and ``exp(-i H' t)``."""
    r = realize(p, t, n, leakage_tol)
    return unitary_distance(r.unitary, expm_i(p.target.matrix, t))


def rate_accounting_error(p: Protocol, t: float, n: int = 1) -> float:
    """Relative mismatch between summed evolution time and ``t / rate``."""
    expected = t / p.rate
    return abs(p.native_time(t, n) - expected) / max(1.0, abs(expected))


def segment_dims(p: Protocol, t: float, n: int = 1) -> list[tuple[int, int]]:
    """Current register dims seen by each segment (for listings and checks)."""
    ca, cb = p.target.dims
    dims = []
    for s in p.segments(t, n):
        if isinstance(s, AttachAncilla):
            ca, cb = ca * s.da, cb * s.db
        dims.append((ca, cb))
        if isinstance(s, DiscardAncilla):
            ca, cb = ca // s.da, cb // s.db
    return dims


def as_protocol_target(h) -> BipartiteHamiltonian:
    return as_bipartite(h)


__all__ = [
    "AttachAncilla",
    "DiscardAncilla",
    "Evolve",
    "LEAKAGE_TOL",
    "LocalUnitary",
    "Protocol",
    "Realization",
    "compose",
    "identity_protocol",
    "pad_segments",
    "rate_accounting_error",
    "realize",
    "rule_add_local",
    "rule_attach",
    "rule_conjugate",
    "rule_reduce_subspace",
    "rule_rescale",
    "rule_trotter_combine",
    "rule_unitary_mix",
    "segment_dims",
    "simplify",
    "verify",
]
