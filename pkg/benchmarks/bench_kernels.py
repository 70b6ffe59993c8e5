"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Times ``solve_rank_one`` and ``group_shrink`` on tracker-sized inputs for
every importable backend, then a full ``admm_solve`` with each backend
swapped in, and checks that the backends agree.
"""
import argparse
import timeit

import numpy as np

from gfsdcf import kernels
from gfsdcf.solver import AdmmConfig, RegularisationConfig, SelectionConfig, admm_solve, gaussian_label

SIZES = ((16, 21), (32, 21), (32, 64))


def _inputs(n, c, rng):
    m = n * n
    xf = rng.standard_normal((m, c)) + 1j * rng.standard_normal((m, c))
    bf = rng.standard_normal((m, c)) + 1j * rng.standard_normal((m, c))
    p = rng.standard_normal((n, n, c))
    return xf, bf, p


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(repeat):
    rng = np.random.default_rng(0)
    found = kernels.backends()
    print(f"{'kernel':<16}{'N':>4}{'C':>4}" + "".join(f"{name:>12}" for name in found) + "   speedup")
    for n, c in SIZES:
        xf, bf, p = _inputs(n, c, rng)
        for label, call in (
            ("solve_rank_one", lambda mod: mod.solve_rank_one(xf, bf, 2.5)),
            ("group_shrink", lambda mod: mod.group_shrink(p, 3.0, 0.5, 0.2)),
        ):
            times = {name: _best(lambda mod=mod: call(mod), repeat) for name, mod in found.items()}
            outs = [np.asarray(call(mod)) for mod in found.values()]
            assert all(np.allclose(o, outs[0], rtol=1e-10, atol=1e-12) for o in outs)
            row = "".join(f"{times[name] * 1e3:10.3f}ms" for name in found)
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            print(f"{label:<16}{n:>4}{c:>4}{row}{speed:9.2f}x")


def bench_solver(repeat):
    rng = np.random.default_rng(1)
    n, c = 32, 21
    x = rng.standard_normal((n, n, c)) / n
    y = gaussian_label(n, 0.1, (12.8, 12.8))
    reg = RegularisationConfig()
    sel = SelectionConfig()
    admm = AdmmConfig()
    saved = kernels.solve_rank_one, kernels.group_shrink
    results = {}
    try:
        for name, mod in kernels.backends().items():
            kernels.solve_rank_one, kernels.group_shrink = mod.solve_rank_one, mod.group_shrink
            t = _best(lambda: admm_solve(x, y, np.zeros_like(x), reg, sel, admm), repeat)
            results[name] = (t, admm_solve(x, y, np.zeros_like(x), reg, sel, admm).filter)
    finally:
        kernels.solve_rank_one, kernels.group_shrink = saved
    print(f"\nadmm_solve N={n} C={c}, {admm.max_iters} iterations max")
    for name, (t, _) in results.items():
        print(f"  {name:<8}{t * 1e3:9.2f} ms")
    filters = [f for _, f in results.values()]
    diff = max(float(np.max(np.abs(f - filters[0]))) for f in filters)
    print(f"  max backend difference {diff:.2e}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    bench_kernels(args.repeat)
    bench_solver(max(3, args.repeat // 5))


if __name__ == "__main__":
    main()
