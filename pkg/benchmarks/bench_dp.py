"""Time the compiled backward sweep against the numpy fallback.

    python3 benchmarks/bench_dp.py [--nt 4000] [--nx 2001] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from octsynth.core import ProblemParams
from octsynth.oracle import BACKEND, GridSpec, thread_count, value_table

INSTANCES = [
    ProblemParams(1.0, 0.9, 0.0, 4.5, 0.0),
    ProblemParams(2.0, 1.0, 0.0, 3.0, 0.0),
    ProblemParams(0.5, 0.1, 0.0, 9.0, 0.2),
]


def _best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(allow_abbrev=False)
    ap.add_argument("--nt", type=int, default=4000)
    ap.add_argument("--nx", type=int, default=2001)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    grid = GridSpec(args.nt, args.nx)

    print(f"compiled backend: {BACKEND}, threads: {thread_count()}, grid {grid.n_t}x{grid.n_x}x{len(grid.controls)}")
    print(f"{'instance':<34} {'numpy [s]':>10} {BACKEND + ' [s]':>12} {'speedup':>8} {'max |dV|':>10}")
    for p in INSTANCES:
        ref = {}
        fast = {}

        def run_numpy():
            ref["V"] = value_table(p, grid, "numpy")[0]

        def run_default():
            fast["V"] = value_table(p, grid)[0]

        t_np = _best_of(run_numpy, args.repeat)
        t_fast = _best_of(run_default, args.repeat)
        diff = float(np.max(np.abs(ref["V"] - fast["V"])))
        label = f"a={p.a:g} lam={p.lam:g} T={p.T:g} x0={p.x0:g}"
        print(f"{label:<34} {t_np:>10.3f} {t_fast:>12.3f} {t_np / t_fast:>8.1f} {diff:>10.1e}")


if __name__ == "__main__":
    main()
