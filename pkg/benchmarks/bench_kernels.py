"""Compare the compiled and pure-Python sparse kernels on a random-quench Jacobian.

    python benchmarks/bench_kernels.py [--n 32] [--level 1] [--repeat 3]

Prints the best wall time per kernel for each backend, the speedup, and
whether the two backends produce identical results.
"""
import argparse
import time

import numpy as np

from pfcnks.energy import ModelParams
from pfcnks.grid import create_grid
from pfcnks.jacobian import assemble_jacobian
from pfcnks.kernels import get_backend
from pfcnks.scenarios import init_random_quench


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(backend, a, level, x, repeat):
    times, outs = {}, {}
    times["matvec"], outs["matvec"] = best_of(
        lambda: backend.csr_matvec(a.indptr, a.indices, a.data, x), repeat)
    times["ilu_symbolic"], sym = best_of(lambda: backend.iluk_symbolic(a.indptr, a.indices, level), repeat)
    pindptr, pindices, pdiag, _ = sym
    times["ilu_numeric"], lu = best_of(
        lambda: backend.ilu_numeric(a.indptr, a.indices, a.data, pindptr, pindices, pdiag), repeat)
    times["ilu_solve"], outs["ilu_solve"] = best_of(
        lambda: backend.ilu_solve(pindptr, pindices, pdiag, lu, x), repeat)
    outs["ilu_numeric"] = lu
    return times, outs


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=32, help="cells per axis of the 2D quench grid")
    ap.add_argument("--level", type=int, default=1, help="ILU fill level")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    g = create_grid(2, (args.n * 0.5, args.n * 0.5), (args.n, args.n))
    phi = init_random_quench(g, 0.07, 0.07, 0)
    a = assemble_jacobian(phi, phi, 0.01, g, ModelParams(0.025))
    x = np.random.default_rng(0).standard_normal(g.size)

    try:
        compiled = get_backend("compiled")
    except ImportError:
        print("compiled backend not built; run `pip install -e . --no-build-isolation` first")
        return 1
    tc, oc = bench(compiled, a, args.level, x, args.repeat)
    tp, op = bench(get_backend("python"), a, args.level, x, args.repeat)

    print(f"{args.n}x{args.n} quench Jacobian, {a.nnz} nonzeros, ILU({args.level})")
    print(f"{'kernel':<14}{'compiled [s]':>14}{'python [s]':>14}{'speedup':>10}  identical")
    for k in tc:
        same = np.array_equal(oc[k], op[k]) if k in oc else True
        print(f"{k:<14}{tc[k]:>14.5f}{tp[k]:>14.5f}{tp[k] / tc[k]:>10.1f}  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
