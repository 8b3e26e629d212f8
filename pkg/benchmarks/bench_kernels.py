"""Compare the compiled RK4 kernel with the pure-Python fallback.

Runs the same closed loops on both backends, reports wall time per step and the largest state
difference. Usage: ``python benchmarks/bench_kernels.py [--repeat N]``.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ftes import sim
from ftes.harness import build_config
from ftes.harness.run import initial_state
from ftes.harness.scenarios import figure_configs

# (figure, simulated time); short horizons keep the Python path tolerable
CASES = [("fig-scalar-kappa", 0.2), ("fig-multivar", 0.02), ("fig-newton", 2.0), ("fig-plant", 5.0)]


def run_case(figure: str, horizon: float, backend: str):
    cfg = build_config(figure_configs(figure)[0])
    u0 = cfg.u0 if cfg.u0 is not None else np.ones(cfg.n)
    s0 = initial_state(cfg, u0)
    t0 = time.perf_counter()
    traj = sim.simulate(cfg.params, s0, cfg.dt, horizon, cost=None if cfg.plant else cfg.cost,
                        plant=cfg.plant, newton=cfg.newton, stride=cfg.stride, backend=backend)
    return time.perf_counter() - t0, traj, int(round(horizon / cfg.dt))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="best-of count for each timing")
    args = ap.parse_args(argv)
    if "compiled" not in sim.available_backends():
        print("compiled extension not built; only the Python backend is available")
        return 1
    print(f"{'scenario':<18}{'steps':>9}{'python us/step':>16}{'compiled us/step':>18}{'speedup':>10}{'max |diff|':>13}")
    for figure, horizon in CASES:
        best = {}
        trajs = {}
        for backend in ("python", "compiled"):
            times = []
            for _ in range(args.repeat):
                dt, traj, steps = run_case(figure, horizon, backend)
                times.append(dt)
            best[backend] = min(times)
            trajs[backend] = traj
        diff = float(np.max(np.abs(trajs["python"].states - trajs["compiled"].states)))
        py, cc = (1e6 * best[b] / steps for b in ("python", "compiled"))
        print(f"{figure:<18}{steps:>9}{py:>16.2f}{cc:>18.3f}{py / cc:>10.0f}{diff:>13.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
