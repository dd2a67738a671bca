"""Compiled vs numpy ascent kernel on the SO^sa search.

    python benchmarks/bench_ascent.py [--repeat 5] [--dims 2 3 4 9]

For each dimension a random channel difference is optimized with the default
budget on both backends; the table reports the best wall time of ``--repeat``
runs and the agreement of the returned values.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from qcc import channels, kernels, linalg, norms
from qcc.norms import OptBudget, SuperoperatorDelta


def _delta(d: int, rng: np.random.Generator) -> SuperoperatorDelta:
    u = linalg.random_unitary(d, rng)
    return SuperoperatorDelta.difference(channels.unitary_channel(u), channels.depolarizing(0.3, d))


def _time_kernel(backend: str, delta: SuperoperatorDelta, budget: OptBudget, repeat: int):
    mod = kernels.get(backend)
    L = np.ascontiguousarray(delta.liouville)
    starts = norms._starts(delta.dim_in, budget)
    step = budget.step / np.linalg.norm(L, 2)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        vals, _ = mod.ascend_batch(L, starts, delta.dim_out, budget.iters, step)
        best = min(best, time.perf_counter() - t0)
    return best, float(vals.max())


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4, 9])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    budget = OptBudget()
    rng = np.random.default_rng(args.seed)
    have_c = "cython" in kernels.BACKENDS
    print(f"restarts={budget.restarts} iters={budget.iters} compiled={'yes' if have_c else 'no'}")
    print(f"{'dim':>4} {'python_ms':>10} {'cython_ms':>10} {'speedup':>8} {'|dvalue|':>10}")
    for d in args.dims:
        delta = _delta(d, rng)
        t_py, v_py = _time_kernel("python", delta, budget, args.repeat)
        if have_c:
            t_c, v_c = _time_kernel("cython", delta, budget, args.repeat)
            print(f"{d:>4} {1e3 * t_py:>10.1f} {1e3 * t_c:>10.1f} {t_py / t_c:>8.2f} {abs(v_py - v_c):>10.1e}")
        else:
            print(f"{d:>4} {1e3 * t_py:>10.1f} {'-':>10} {'-':>8} {'-':>10}")


if __name__ == "__main__":
    main()
