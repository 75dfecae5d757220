"""Compare the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints micro-benchmarks for the two kernels and end-to-end timings of
``realize`` on a few protocols, once per backend.
"""

import argparse
import timeit
from contextlib import contextmanager

import numpy as np

from prodsim import _kernels, _pykernels
from prodsim.hamiltonians import ProductHamiltonian, ising
from prodsim.linalg import SIGMA_Z, random_unitary
from prodsim.product_sim import ising_to_product, product_to_boxplus, round_trip
from prodsim.protocol import identity_protocol, realize, rule_unitary_mix

try:
    from prodsim import _ckernels
except ImportError:
    _ckernels = None


@contextmanager
def backend(mod):
    saved = _kernels.apply_local, _kernels.apply_native
    _kernels.apply_local, _kernels.apply_native = mod.apply_local, mod.apply_native
    try:
        yield
    finally:
        _kernels.apply_local, _kernels.apply_native = saved


def best(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def fmt(sec):
    return f"{sec * 1e6:9.1f} us" if sec < 1e-3 else f"{sec * 1e3:9.2f} ms"


def kernel_cases(rng):
    def block(ca, cb, k):
        return rng.normal(size=(ca, cb, k)) + 1j * rng.normal(size=(ca, cb, k))

    cases = []
    for ca, cb, k in [(2, 2, 4), (6, 4, 6), (18, 96, 4), (64, 64, 16)]:
        x = block(ca, cb, k)
        pa = np.eye(ca, dtype=complex)[rng.permutation(ca)]
        pb = np.eye(cb, dtype=complex)[rng.permutation(cb)]
        cases.append((f"local  permutation {ca}x{cb} k={k}", "apply_local", (x, pa, pb)))
        ua, ub = random_unitary(rng, ca), random_unitary(rng, cb)
        cases.append((f"local  dense       {ca}x{cb} k={k}", "apply_local", (x, ua, ub)))
    for ma, na, mb, nb, k in [(1, 2, 1, 2, 4), (3, 2, 3, 2, 9), (9, 2, 48, 2, 4), (32, 2, 32, 2, 16)]:
        x = block(ma * na, mb * nb, k)
        w = np.ascontiguousarray(random_unitary(rng, na * nb))
        cases.append((f"native {ma * na}x{mb * nb} k={k}", "apply_native", (x, w, ma, na, mb, nb)))
    return cases


def protocol_cases(rng):
    u = [(0.25, random_unitary(rng, 2), random_unitary(rng, 2)) for _ in range(4)]
    mix = rule_unitary_mix(identity_protocol(ising()), u)
    diag310 = ProductHamiltonian(np.diag([3.0, 1.0, 0.0]), np.diag([1.0, -1.0]))
    return [
        ("random unitary mix, n=1024", mix, 1024),
        ("ising -> diag(3,1,0) x z, n=256", ising_to_product(diag310), 256),
        ("ising -> product -> boxplus, n=256", product_to_boxplus(2.0, 1.0), 256),
        ("round trip diag(3,1,0) x z via qutrit, n=4",
         round_trip(diag310, ProductHamiltonian(np.diag([1.0, 0.0, -1.0]), SIGMA_Z)), 4),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    mods = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"default backend: {_kernels.BACKEND}")
    header = f"{'case':44s}" + "".join(f"{name:>14s}" for name, _ in mods) + ("   speedup" if len(mods) > 1 else "")
    print(header)
    print("-" * len(header))
    for label, fn, argv in kernel_cases(rng):
        times = [best(lambda m=m: getattr(m, fn)(*argv), args.repeat) for _, m in mods]
        row = f"{label:44s}" + "".join(f"{fmt(t):>14s}" for t in times)
        if len(times) > 1:
            row += f"   {times[0] / times[1]:6.2f}x"
        print(row)
    for label, p, n in protocol_cases(rng):
        times = []
        for _, m in mods:
            with backend(m):
                times.append(best(lambda: realize(p, 1.0, n, leakage_tol=None), max(1, args.repeat // 2)))
        row = f"{'realize: ' + label:44s}" + "".join(f"{fmt(t):>14s}" for t in times)
        if len(times) > 1:
            row += f"   {times[0] / times[1]:6.2f}x"
        print(row)


if __name__ == "__main__":
    main()
