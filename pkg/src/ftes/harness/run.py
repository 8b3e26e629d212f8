"""Running scenarios and writing CSV and metadata artifacts."""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dither import probe_input, torus_point
from ..flows import (ClosedLoopState, FtgesState, FtnesState, StateLayout, reduced_gradient_derivative,
                     reduced_newton_derivative)
from ..sim import NonFiniteStateError, Trajectory, convergence_time, integrate, simulate
from .config import ConfigError, ScenarioConfig, build_config, format_value

OUT_ENV = "FTES_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONFINITE = 3


def output_dir(out=None) -> Path:
    """``out`` if given, else ``$FTES_OUT``, else ``./ftes-out``."""
    return Path(out or os.environ.get(OUT_ENV) or "ftes-out")


def sample_initial(cfg: ScenarioConfig, index: int) -> np.ndarray:
    """Initial input for trajectory ``index``: fixed ``u0`` or a uniform draw from the box.

    Draws come from a Philox (counter-based) generator keyed by ``(seed, index)``, so each
    trajectory's start is independent of how many others are run or in which order.
    """
    if cfg.box is None:
        return np.array(cfg.u0, dtype=float)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, index])))
    lo, hi = cfg.box[:, 0], cfg.box[:, 1]
    return lo + (hi - lo) * rng.random(cfg.n)


def initial_state(cfg: ScenarioConfig, u0) -> np.ndarray:
    n = cfg.n
    if cfg.reduced:
        return np.array(u0, dtype=float)
    p = cfg.params
    mu = torus_point(n)
    w = None
    if p.washout > 0:
        # start the washout at the first measurement so the high-pass output starts at zero
        z = probe_input(u0, p.dither.amplitude, mu)
        w = cfg.cost.eval(z) if cfg.plant is None else cfg.plant.output(cfg.x0)
    if cfg.newton:
        ctrl = FtnesState(np.array(u0, float), cfg.xi1_0, cfg.xi0, mu, w)
    else:
        ctrl = FtgesState(np.array(u0, float), cfg.xi0, mu, w)
    layout = StateLayout(n, cfg.newton, cfg.plant.p if cfg.plant is not None else 0, p.washout > 0)
    state = ClosedLoopState(ctrl, cfg.x0) if cfg.plant is not None else ctrl
    return layout.pack(state)


def run_trajectory(cfg: ScenarioConfig, u0, backend: str | None = None) -> Trajectory:
    s0 = initial_state(cfg, u0)
    if cfg.reduced:
        fn = reduced_newton_derivative if cfg.newton else reduced_gradient_derivative
        cost, shape = cfg.cost, cfg.shape
        return integrate(lambda u: fn(u, cost, shape), s0, cfg.dt, cfg.horizon, cfg.stride,
                         measure=lambda u: (u, cost.eval(u)))
    return simulate(cfg.params, s0, cfg.dt, cfg.horizon, cost=None if cfg.plant else cfg.cost,
                    plant=cfg.plant, newton=cfg.newton, stride=cfg.stride, policy=cfg.policy,
                    backend=backend)


def csv_columns(cfg: ScenarioConfig) -> list[str]:
    n = cfg.n
    cols = ["t"] + [f"u_{i + 1}" for i in range(n)]
    if not cfg.reduced:
        if cfg.newton:
            cols += [f"xi1_{i + 1}{j + 1}" for i in range(n) for j in range(n)]
            cols += [f"xi2_{i + 1}" for i in range(n)]
        else:
            cols += [f"xi_{i + 1}" for i in range(n)]
    cols += [f"z_{i + 1}" for i in range(n)] + ["y"]
    if cfg.plant is not None:
        cols += [f"x_{i + 1}" for i in range(cfg.plant.p)]
    return cols


def trajectory_table(cfg: ScenarioConfig, traj: Trajectory) -> np.ndarray:
    n = cfg.n
    parts = [traj.t[:, None]]
    if cfg.reduced:
        parts.append(traj.states)
    else:
        L = traj.layout
        parts += [traj.states[:, L.u], traj.states[:, L.xi1], traj.states[:, L.xi]]
    parts += [np.asarray(traj.z).reshape(-1, n), np.asarray(traj.y)[:, None]]
    if cfg.plant is not None:
        parts.append(traj.states[:, traj.layout.x])
    return np.hstack(parts)


def write_csv(path: Path, columns, table) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in table:
            w.writerow([f"{v:.17g}" for v in row])


def write_metadata(path: Path, items: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, val in items.items():
            fh.write(f"{key}={format_value(val)}\n")


def read_metadata(path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line and "=" in line:
                k, v = line.split("=", 1)
                out[k] = v
    return out


@dataclass
class TrajectoryResult:
    index: int
    u0: np.ndarray
    convergence_time: float | None
    constraint_violation: float | None
    nonfinite: bool
    meets_deadline: bool | None
    xi1_error: float | None = None
    final_u: np.ndarray | None = None
    traj: Trajectory | None = field(default=None, repr=False)


def _evaluate(cfg: ScenarioConfig, index: int, u0, traj: Trajectory | None) -> TrajectoryResult:
    if traj is None:
        return TrajectoryResult(index, u0, None, None, True, False if cfg.acceptance else None)
    acc = cfg.acceptance
    tc = None
    meets = None
    xi1_err = None
    if acc is not None:
        tc = convergence_time(traj, acc.z_star, acc.nu, acc.channel)
        meets = tc is not None and tc <= acc.deadline
        if acc.xi1_tol is not None and cfg.newton and not cfg.reduced:
            Hinv = np.linalg.inv(cfg.cost.hessian())
            xi1_err = float(np.max(np.abs(traj.channel("xi1")[-1] - Hinv)))
            meets = meets and xi1_err <= acc.xi1_tol
    cv = traj.monitor.get("constraint_violation")
    final_u = traj.states[-1, : cfg.n].copy()
    return TrajectoryResult(index, u0, tc, cv, False, meets, xi1_err, final_u, traj)


def _run_one(cfg: ScenarioConfig, index: int, backend=None, keep=True) -> TrajectoryResult:
    u0 = sample_initial(cfg, index)
    try:
        traj = run_trajectory(cfg, u0, backend)
    except NonFiniteStateError:
        traj = None
    res = _evaluate(cfg, index, u0, traj)
    if not keep:
        res.traj = None
    return res


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    results: list[TrajectoryResult]
    out_dir: Path | None
    metadata: dict

    @property
    def fraction_meeting(self) -> float | None:
        if self.config.acceptance is None:
            return None
        return sum(bool(r.meets_deadline) for r in self.results) / len(self.results)

    @property
    def passed(self) -> bool | None:
        if self.config.acceptance is None:
            return None
        return self.fraction_meeting >= self.config.acceptance.min_fraction

    @property
    def any_nonfinite(self) -> bool:
        return any(r.nonfinite for r in self.results)

    def status_line(self) -> str:
        name = self.config.name
        if self.config.acceptance is None:
            return f"DONE {name}: {len(self.results)} trajectories, no acceptance block"
        acc = self.config.acceptance
        tcs = [r.convergence_time for r in self.results]
        worst = "never" if any(t is None for t in tcs) else f"{max(tcs):.6g}"
        tag = "PASS" if self.passed else "FAIL"
        return (f"{tag} {name}: {self.fraction_meeting:.0%} of {len(self.results)} within "
                f"{acc.nu:g} of z* on {acc.channel} by t={acc.deadline:.6g} (worst convergence time {worst})")


def _summary_rows(cfg, results):
    n = cfg.n
    header = ["index"] + [f"u0_{i + 1}" for i in range(n)] + [
        "convergence_time", "meets_deadline", "constraint_violation", "nonfinite"]
    rows = []
    for r in results:
        rows.append([str(r.index)] + [f"{v:.17g}" for v in r.u0] + [
            "" if r.convergence_time is None else f"{r.convergence_time:.17g}",
            "" if r.meets_deadline is None else str(int(bool(r.meets_deadline))),
            "" if r.constraint_violation is None else f"{r.constraint_violation:.17g}",
            str(int(r.nonfinite)),
        ])
    return header, rows


def _write_artifacts(cfg, results, out: Path | None, count: int) -> dict:
    meta = dict(cfg.resolved)
    meta["sim.batch"] = count
    if out is None:
        return meta
    out.mkdir(parents=True, exist_ok=True)
    cols = csv_columns(cfg)
    for r in results:
        if r.traj is not None:
            name = "trajectory.csv" if count == 1 else f"traj_{r.index:04d}.csv"
            write_csv(out / name, cols, trajectory_table(cfg, r.traj))
    header, rows = _summary_rows(cfg, results)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    (out / "summary.csv").write_text(buf.getvalue(), encoding="utf-8")
    return meta


def _finish_metadata(meta, res: ScenarioResult):
    rs = res.results
    if len(rs) == 1:
        r = rs[0]
        meta["result.convergence_time"] = "absent" if r.convergence_time is None else r.convergence_time
        meta["result.constraint_violation"] = "absent" if r.constraint_violation is None else r.constraint_violation
        meta["result.nonfinite"] = int(r.nonfinite)
        if r.xi1_error is not None:
            meta["result.xi1_max_error"] = r.xi1_error
        if r.traj is not None:
            meta["result.backend"] = r.traj.monitor.get("backend", "python")
            meta["result.max_torus_correction"] = r.traj.monitor.get("max_torus_correction", 0.0)
            if "symmetry_drift" in r.traj.monitor:
                meta["result.symmetry_drift"] = r.traj.monitor["symmetry_drift"]
    else:
        meta["result.nonfinite_count"] = sum(r.nonfinite for r in rs)
        meta["result.violation_count"] = sum(r.constraint_violation is not None for r in rs)
    if res.config.acceptance is not None:
        meta["result.fraction_meeting"] = res.fraction_meeting
        meta["result.passed"] = int(bool(res.passed))


def run_scenario(config, out=None, backend: str | None = None) -> ScenarioResult:
    """Run trajectory 0 of a scenario (``u0`` or the first draw from the box).

    Artifacts go to ``out`` when given: ``trajectory.csv``, ``summary.csv`` and ``metadata.txt``.
    """
    cfg = config if isinstance(config, ScenarioConfig) else build_config(config)
    return _run(cfg, 1, out, backend, workers=1)


def batch(config, n: int | None = None, seed: int | None = None, out=None, backend: str | None = None,
          workers: int = 1, keep_trajectories: bool = True) -> ScenarioResult:
    """Run ``n`` independent trajectories with starts drawn from the configured box."""
    cfg = config if isinstance(config, ScenarioConfig) else build_config(config)
    n = cfg.batch if n is None else n
    if n < 1:
        raise ConfigError("sim.batch", "batch count must be at least 1")
    if seed is not None:
        cfg.seed = seed
        cfg.resolved["sim.seed"] = seed
    if n > 1 and cfg.box is None:
        raise ConfigError("sim.box", "a batch needs a sampling box")
    return _run(cfg, n, out, backend, workers, keep_trajectories or out is not None)


def _run(cfg, count, out, backend, workers, keep=True) -> ScenarioResult:
    out = Path(out) if out is not None else None
    if workers > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = [ex.submit(_run_one, cfg, i, backend, keep) for i in range(count)]
            results = [f.result() for f in futures]
    else:
        results = [_run_one(cfg, i, backend, keep) for i in range(count)]
    meta = _write_artifacts(cfg, results, out, count)
    res = ScenarioResult(cfg, results, out, meta)
    _finish_metadata(meta, res)
    if out is not None:
        write_metadata(out / "metadata.txt", meta)
    return res
