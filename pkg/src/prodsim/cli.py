"""Command-line interface: ``prodsim <command> ...``.

Every command prints a short human-readable summary followed by a JSON report
between ``--- report ---`` and ``--- end ---`` markers (``--json`` prints only
the JSON). Exit codes: 0 success, 2 domain rejection, 3 invalid input,
4 verification above threshold.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .capacity import capacity_boxplus, capacity_catalytic, compute_alpha, entanglement_capacity
from .errors import DomainError, ValidationError
from .hamiltonians import as_bipartite, gamma_product, k_otimes, require_nonlocal, standardize
from .io import encode_matrix, load_hamiltonian
from .linalg import expm_i, unitary_distance
from .product_sim import (
    catalytic_normal_form,
    check_catalytic,
    gamma_boxplus,
    product_to_product,
    round_trip,
)
from .protocol import AttachAncilla, DiscardAncilla, Evolve, LocalUnitary, realize, segment_dims
from .strength import (
    constant_measure,
    gamma_two_qubit,
    k1,
    k2,
    k3,
    k123,
    pauli_normal_form,
    product_domain,
    strength_property_suite,
    two_qubit_domain,
)

EXIT_OK, EXIT_DOMAIN, EXIT_INVALID, EXIT_VERIFY = 0, 2, 3, 4
MONOTONE_SLACK = 1e-12


class Report:
    def __init__(self, command: str, inputs=(), parameters=None):
        self.command = command
        self.inputs = [{"path": f.path, "sha256": f.sha256, "kind": f.kind} for f in inputs]
        self.parameters = parameters or {}
        self.results: dict = {}
        self.tolerances: dict = {}
        self.passed = True
        self.lines: list[str] = []

    def say(self, line: str) -> None:
        self.lines.append(line)

    def as_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "parameters": self.parameters,
            "results": self.results,
            "tolerances": self.tolerances,
            "pass": self.passed,
            "version": __version__,
        }

    def emit(self, json_only: bool, out=None) -> None:
        out = out or sys.stdout
        text = json.dumps(_plain(self.as_dict()), indent=2, sort_keys=True)
        if json_only:
            print(text, file=out)
            return
        for line in self.lines:
            print(line, file=out)
        print("--- report ---", file=out)
        print(text, file=out)
        print("--- end ---", file=out)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _require_product(f, what: str):
    h = f.product()
    if h is None:
        raise DomainError(f"{what} must be a product Hamiltonian (file {f.path} has kind {f.kind!r})")
    return h


def cmd_standardize(args) -> Report:
    f = load_hamiltonian(args.path)
    h = _require_product(f, "input")
    sf = standardize(h)
    rep = Report("standardize", [f])
    rep.results = {
        "a": sf.a, "b": sf.b, "scale": sf.scale, "delta": sf.delta,
        "delta_a": sf.delta_a, "delta_b": sf.delta_b,
        "shift_a": sf.shift_a, "shift_b": sf.shift_b, "balance": sf.balance,
        "k_otimes": k_otimes(h),
    }
    rep.say(f"a = {np.array2string(sf.a, precision=6)}")
    rep.say(f"b = {np.array2string(sf.b, precision=6)}")
    rep.say(f"scale = {sf.scale:.12g}  Delta = {sf.delta:.12g}")
    return rep


def _rate(fh, ft) -> tuple[float, str]:
    h, ht = fh.product(), ft.product()
    if h is not None and ht is not None:
        return gamma_product(h, ht), "product"
    if fh.kind == "boxplus" and ht is not None:
        return gamma_boxplus(ht, fh.terms), "boxplus"
    if as_bipartite(fh.hamiltonian).dims == (2, 2) and as_bipartite(ft.hamiltonian).dims == (2, 2):
        return gamma_two_qubit(fh.hamiltonian, ft.hamiltonian), "two-qubit"
    raise DomainError("no rate formula applies: need product inputs, a boxplus native with a product "
                      "target, or two-qubit inputs")


def cmd_rate(args) -> Report:
    fh, ft = load_hamiltonian(args.native), load_hamiltonian(args.target)
    gamma, formula = _rate(fh, ft)
    rep = Report("rate", [fh, ft])
    rep.results = {"rate": gamma, "formula": formula}
    if formula == "two-qubit":
        rep.results["k123_native"] = k123(pauli_normal_form(fh.hamiltonian))
        rep.results["k123_target"] = k123(pauli_normal_form(ft.hamiltonian))
    rep.say(f"rate = {gamma:.12g}  ({formula} formula)")
    return rep


def cmd_capacity(args) -> Report:
    f = load_hamiltonian(args.path)
    alpha = compute_alpha().alpha
    rep = Report("capacity", [f], {"catalytic": args.catalytic})
    if args.catalytic:
        if len(f.terms) != 2 or f.kind != "sum":
            raise DomainError("--catalytic needs a sum file with exactly two terms J and G")
        j, g = f.terms
        chk = check_catalytic(j.a, j.b, g.a, g.b)
        cap = capacity_catalytic(j.a, j.b, g.a, g.b)
        rep.results = {"capacity": cap, "formula": "catalytic", "delta_j": chk.delta_j,
                       "delta_g": chk.delta_g, "theta": chk.theta}
    elif f.kind == "boxplus":
        parts = [entanglement_capacity(p) for p in f.terms]
        rep.results = {"capacity": capacity_boxplus(f.terms), "formula": "boxplus", "parts": parts}
    else:
        h = _require_product(f, "input")
        rep.results = {"capacity": entanglement_capacity(h), "formula": "product", "k_otimes": k_otimes(h)}
    rep.results["alpha"] = alpha
    rep.say(f"capacity = {rep.results['capacity']:.12g} ebits per unit time ({rep.results['formula']})")
    return rep


def _protocol(args):
    fh, ft = load_hamiltonian(args.native), load_hamiltonian(args.target)
    h, ht = _require_product(fh, "native"), _require_product(ft, "target")
    require_nonlocal(h, "native Hamiltonian")
    require_nonlocal(ht, "target Hamiltonian")
    if args.direction == "forward":
        p = product_to_product(h, ht)
    elif args.direction == "reverse":
        p = product_to_product(ht, h)
    else:
        p = round_trip(h, ht)
    return p, [fh, ft]


def _matrix_kind(u: np.ndarray) -> str:
    nz = np.abs(u) > 1e-14
    if np.array_equal(nz, np.eye(u.shape[0], dtype=bool)):
        return "diagonal"
    if np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) == 1):
        return "monomial" if not np.allclose(u[nz], 1.0) else "permutation"
    return "dense"


def _segment_entry(seg, dims, with_matrices: bool) -> dict:
    if isinstance(seg, Evolve):
        return {"type": "evolve", "tau": seg.tau, "dims": dims}
    if isinstance(seg, LocalUnitary):
        entry = {"type": "local_unitary", "label": seg.label, "dims": dims,
                 "ua_kind": _matrix_kind(seg.ua), "ub_kind": _matrix_kind(seg.ub)}
        if with_matrices:
            entry["ua"] = encode_matrix(seg.ua)
            entry["ub"] = encode_matrix(seg.ub)
        return entry
    if isinstance(seg, AttachAncilla):
        return {"type": "attach", "da": seg.da, "db": seg.db, "dims": dims}
    if isinstance(seg, DiscardAncilla):
        return {"type": "discard", "da": seg.da, "db": seg.db, "dims": dims}
    raise TypeError(seg)


def cmd_compile(args) -> Report:
    p, files = _protocol(args)
    segs = p.segments(args.t, args.n)
    dims = segment_dims(p, args.t, args.n)
    native_time = sum(s.tau for s in segs if isinstance(s, Evolve))
    expected = args.t / p.rate
    rep = Report("compile", files, {"t": args.t, "n": args.n, "direction": args.direction})
    rep.results = {
        "label": p.label,
        "rate": p.rate,
        "native_time": native_time,
        "expected_native_time": expected,
        "accounting_error": abs(native_time - expected),
        "segment_count": len(segs),
        "segments": [_segment_entry(s, d, args.matrices) for s, d in zip(segs, dims)],
        "schedules": {k: v for k, v in p.info.items() if k.startswith("schedule")},
    }
    rep.tolerances = {"accounting": 1e-12}
    rep.passed = abs(native_time - expected) <= 1e-12 * max(1.0, expected)
    rep.say(f"{p.label}: rate {p.rate:.12g}, {len(segs)} segments, native time {native_time:.12g}")
    for k, v in rep.results["schedules"].items():
        rep.say(f"{k}: p = {np.array2string(np.array(v), precision=6)}")
    return rep


def cmd_verify(args) -> Report:
    p, files = _protocol(args)
    ns = []
    n = args.n
    while n <= max(args.n, args.n_max):
        ns.append(n)
        n *= 2
    table = []
    for n in ns:
        r = realize(p, args.t, n, leakage_tol=args.leakage_tol)
        err = unitary_distance(r.unitary, expm_i(p.target.matrix, args.t))
        table.append({"n": n, "error": err, "native_time": r.native_time, "leakage": r.leakage})
    errors = [row["error"] for row in table]
    monotone = all(b <= a + MONOTONE_SLACK for a, b in zip(errors, errors[1:]))
    rep = Report("verify", files, {"t": args.t, "n": args.n, "n_max": args.n_max, "direction": args.direction})
    rep.results = {"label": p.label, "rate": p.rate, "sweep": table, "monotone": monotone, "final_error": errors[-1]}
    rep.tolerances = {"threshold": args.threshold, "monotone_slack": MONOTONE_SLACK, "leakage": args.leakage_tol}
    rep.passed = errors[-1] < args.threshold
    for row in table:
        rep.say(f"n = {row['n']:5d}  error = {row['error']:.3e}")
    rep.say(f"monotone: {monotone}  final error {'<' if rep.passed else '>='} threshold {args.threshold:g}")
    return rep


def cmd_alpha(args) -> Report:
    res = compute_alpha(args.tol)
    rep = Report("alpha", [], {"tol": args.tol})
    rep.results = {"alpha": res.alpha, "x0": res.x0}
    rep.tolerances = {"bracket": args.tol}
    rep.say(f"alpha = {res.alpha:.10f}  at x0 = {res.x0:.10f}")
    return rep


def cmd_normal_form(args) -> Report:
    f = load_hamiltonian(args.path)
    nf = pauli_normal_form(f.hamiltonian)
    rep = Report("normal-form", [f])
    residual = nf.reconstruct() - as_bipartite(f.hamiltonian).matrix
    rep.results = {"lambdas": nf.lambdas, "k123": k123(nf),
                   "frame_a": encode_matrix(nf.frames[0]), "frame_b": encode_matrix(nf.frames[1]),
                   "reconstruction_error": float(np.max(np.abs(residual)))}
    rep.say("lambda = ({:.12g}, {:.12g}, {:.12g})".format(*nf.lambdas))
    return rep


def cmd_catalytic_check(args) -> Report:
    files = [load_hamiltonian(p) for p in args.paths]
    terms = [t for f in files for t in f.terms]
    if len(terms) != 2:
        raise ValidationError("catalytic check needs exactly two product terms J and G")
    j, g = terms
    chk = check_catalytic(j.a, j.b, g.a, g.b)
    rep = Report("catalytic-check", files)
    rep.results = {"eligible": chk.eligible, "theta": chk.theta if chk.eligible else None,
                   "delta_j": chk.delta_j, "delta_g": chk.delta_g, "traces": chk.traces, "reason": chk.reason}
    if chk.eligible:
        dx, dz = catalytic_normal_form(j.a, j.b, g.a, g.b)
        rep.results.update({"delta_x": dx, "delta_z": dz,
                            "capacity": compute_alpha().alpha * (chk.delta_j ** 2 + chk.delta_g ** 2) / 4})
    rep.passed = chk.eligible
    rep.say(f"eligible: {chk.eligible}" + (f" ({chk.reason})" if chk.reason else ""))
    return rep


MEASURES = {
    "k_otimes": (k_otimes, product_domain),
    "k1": (k1, two_qubit_domain),
    "k2": (k2, two_qubit_domain),
    "k3": (k3, two_qubit_domain),
    "constant": (constant_measure, product_domain),
}


def cmd_properties(args) -> Report:
    k, domain = MEASURES[args.measure]
    report = strength_property_suite(k, domain(), args.trials, args.seed, name=args.measure)
    rep = Report("properties", [], {"measure": args.measure, "trials": args.trials, "seed": args.seed})
    rep.results = report.as_dict()
    rep.passed = report.passed
    for name, r in report.results.items():
        rep.say(f"{name:28s} {'pass' if r.passed else 'FAIL'}  worst {r.worst:.3e}")
    return rep


class _Parser(argparse.ArgumentParser):
    # malformed command lines are invalid input, not domain rejections
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print only the JSON report")
    parser = _Parser(prog="prodsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("standardize", parents=[common], help="standard form of a product Hamiltonian")
    p.add_argument("path")
    p.set_defaults(func=cmd_standardize)

    p = sub.add_parser("rate", parents=[common], help="optimal simulation rate of TARGET by NATIVE")
    p.add_argument("native")
    p.add_argument("target")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("capacity", parents=[common], help="entanglement capacity")
    p.add_argument("path")
    p.add_argument("--catalytic", action="store_true", help="treat a two-term sum as J + G")
    p.set_defaults(func=cmd_capacity)

    for name, func, helptext in (("compile", cmd_compile, "segment listing of a protocol"),
                                 ("verify", cmd_verify, "verification error over a doubling sweep")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("native")
        p.add_argument("target")
        p.add_argument("--direction", choices=("forward", "reverse", "round-trip"), default="forward")
        p.add_argument("--t", type=float, default=1.0)
        p.set_defaults(func=func)
        if name == "compile":
            p.add_argument("--n", type=int, default=1)
            p.add_argument("--matrices", action="store_true", help="include unitary matrices in the listing")
        else:
            p.add_argument("--n", type=int, default=16)
            p.add_argument("--n-max", type=int, default=1024)
            p.add_argument("--threshold", type=float, default=1e-2)
            p.add_argument("--leakage-tol", type=float, default=1e-8)

    p = sub.add_parser("alpha", parents=[common], help="the capacity constant alpha")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("normal-form", parents=[common], help="two-qubit Pauli normal form")
    p.add_argument("path")
    p.set_defaults(func=cmd_normal_form)

    p = sub.add_parser("catalytic-check", parents=[common], help="check the catalytic conditions for J + G")
    p.add_argument("paths", nargs="+", help="one sum file with two terms, or two product files")
    p.set_defaults(func=cmd_catalytic_check)

    p = sub.add_parser("properties", parents=[common], help="strength-measure property suite")
    p.add_argument("--measure", choices=sorted(MEASURES), default="k_otimes")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_properties)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rep = args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    rep.emit(args.json)
    if args.command == "verify" and not rep.passed:
        return EXIT_VERIFY
    if args.command == "catalytic-check" and not rep.passed:
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
