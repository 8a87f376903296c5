"""Compare the compiled and pure-Python evaluation kernels.

    python3 benchmarks/bench_eval.py [--points 2000] [--repeat 5]

Each workload is compiled once to bytecode, then evaluated on the same
random point cloud by both kernels.  Reported times are the best of
``--repeat`` runs.
"""

import argparse
import timeit

import numpy as np

from difinv.expr import BACKEND, compile_expr, parse
from difinv.fixtures import example1, pushforward
from difinv.invariants import universal_differential_invariant
from difinv.prolong import prolong


def workloads():
    f = example1()
    yield "rotation J", f.J
    yield "rotation first-order invariant", universal_differential_invariant(f.ui, 1, f.sampler)[1]
    p = pushforward(1)
    second = universal_differential_invariant(p.ui, 2, p.sampler)
    yield "pushforward second-order invariant", second[-1]
    yield "pushforward prolonged coefficient", prolong(p.Q, 2).eta(0, (1, 1))
    yield "trig polynomial", parse("sin(x)^3*cos(u)^2 + exp(-x^2-u^2)*arctan(x*u) + sqrt(1+x^2+u^2)")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    if BACKEND != "cython":
        print("compiled kernel not built; only the Python kernel is available")
        return
    rng = np.random.default_rng(a.seed)
    print(f"{'workload':38s} {'ops':>6s} {'cython ms':>10s} {'python ms':>10s} {'speedup':>8s}")
    for name, e in workloads():
        syms = tuple(sorted(e.free_symbols))
        prog = compile_expr(e, syms)
        pts = rng.uniform(0.5, 1.5, (a.points, len(syms)))
        fast, _ = prog.run(pts)
        slow, _ = prog.run(pts, backend="python")
        assert np.allclose(fast, slow, rtol=1e-12, equal_nan=True)
        tc = min(timeit.repeat(lambda: prog.run(pts), number=1, repeat=a.repeat))
        tp = min(timeit.repeat(lambda: prog.run(pts, backend="python"), number=1, repeat=a.repeat))
        print(f"{name:38s} {len(prog):6d} {tc * 1e3:10.2f} {tp * 1e3:10.1f} {tp / tc:7.0f}x")


if __name__ == "__main__":
    main()
