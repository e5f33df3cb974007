"""Compiled vs numpy kernels.

    python3 benchmarks/bench_kernels.py [--mo 8] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from polariton import _kernels_py
from polariton.liouville import assemble, bohr_clusters, thermal_rates
from polariton.model import PolaritonSpec, exciton_lowering

try:
    from polariton import _kernels as _compiled
except ImportError:
    _compiled = None


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mo", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--steps", type=int, default=200)
    args = ap.parse_args()

    spec = PolaritonSpec(V=2.0, chi=1e-4, A_X=0.05, A_P=0.05, m_o=args.mo)
    gen = assemble(spec)
    sp = gen.spectrum
    J = exciton_lowering(spec.m_o)
    X = sp.to_eigenbasis(J + J.T).astype(complex)
    X[np.abs(X) < 1e-14] = 0
    cluster, freqs = bohr_clusters(sp.energies)
    cluster = cluster.astype("l")
    rates = thermal_rates(freqs, 0.2, spec.beta)
    v = np.zeros(spec.N ** 2, dtype=complex)
    v[0] = 1

    cases = {
        "secular_sandwich": lambda k: k.secular_sandwich(X, cluster, rates),
        f"rk4_run x{args.steps}": lambda k: k.rk4_run(gen.A_o, gen.A_plus, gen.A_minus, v,
                                                     0.0, spec.period / 512, args.steps, 1.0),
    }
    backends = {"numpy": _kernels_py}
    if _compiled is not None:
        backends["cython"] = _compiled
    print(f"m_o={spec.m_o}  N^2={spec.N ** 2}")
    print(f"{'kernel':<20}" + "".join(f"{b:>12}" for b in backends) + "     speedup")
    for name, fn in cases.items():
        times = {b: min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat))
                 for b, k in backends.items()}
        line = f"{name:<20}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times.values())
        if "cython" in times:
            line += f"  {times['numpy'] / times['cython']:>8.1f}x"
        print(line)


if __name__ == "__main__":
    main()
