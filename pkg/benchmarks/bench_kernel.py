"""Compare the compiled and numpy integration kernels.

    python3 benchmarks/bench_kernel.py [--scenario section5] [--t-end 5] [--repeat 3]

Prints wall time per kernel, the speed-up, and the largest state difference
between the two trajectories.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from circumnav import kernel, scenario
from circumnav.sim import run


def best_of(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="section5")
    ap.add_argument("--t-end", type=float, default=5.0)
    ap.add_argument("--dt", type=float, default=None)
    ap.add_argument("--integrator", choices=("euler", "rk4"), default=None)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    cfg = scenario.load(args.scenario).replace(t_end=args.t_end)
    if args.dt is not None:
        cfg = cfg.replace(dt=args.dt)
    if args.integrator is not None:
        cfg = cfg.replace(integrator=args.integrator)
    print(f"{cfg.scenario_id}: n={cfg.n}, {cfg.n_steps} {cfg.integrator} steps of dt={cfg.dt:g}")

    results = {}
    for name in kernel.available():
        seconds, log = best_of(lambda: run(cfg, backend=name), args.repeat)
        results[name] = (seconds, log)
        rate = cfg.n_steps / seconds
        print(f"  {name:7s} {seconds:9.4f} s  ({rate:,.0f} steps/s)")

    if "c" in results:
        t_c, log_c = results["c"]
        t_py, log_py = results["python"]
        diff = max(np.abs(log_c.positions - log_py.positions).max(),
                   np.abs(log_c.estimates - log_py.estimates).max())
        print(f"  speed-up {t_py / t_c:.1f}x, max state difference {diff:.3g}")
    else:
        print("  compiled kernel not built; only the numpy kernel was timed")


if __name__ == "__main__":
    main()
