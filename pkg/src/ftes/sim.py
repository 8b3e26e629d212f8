"""Fixed-step integration, trajectory recording and post-hoc monitors.

Closed-loop runs go through :func:`simulate`, which uses the compiled RK4 kernel when it is
importable and otherwise a pure-Python path built from :mod:`ftes.flows`. Set
``FTES_BACKEND=python`` to force the fallback or ``FTES_BACKEND=compiled`` to require the
extension.
"""

from __future__ import annotations

import logging
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .costmodel import CostSpec, LinearPlant
from .flows import ZERO_GUARD, SYMMETRY_WARN, FtgesParams, StateLayout, flat_field, symmetry_drift

log = logging.getLogger(__name__)

TORUS_LOG_TOL = 1e-9
DEFAULT_STRIDE = 10

try:
    from . import _kernels
except ImportError:  # pragma: no cover - exercised only without a compiler
    _kernels = None


def _select_backend() -> str:
    choice = os.environ.get("FTES_BACKEND", "").strip().lower()
    if choice == "python":
        return "python"
    if choice == "compiled":
        if _kernels is None:
            raise ImportError("FTES_BACKEND=compiled but the extension ftes._kernels is not built")
        return "compiled"
    if choice not in ("", "auto"):
        raise ValueError(f"unknown FTES_BACKEND value {choice!r}")
    return "compiled" if _kernels is not None else "python"


BACKEND = _select_backend()


def available_backends() -> list[str]:
    return ["python"] + (["compiled"] if _kernels is not None else [])


class NonFiniteStateError(RuntimeError):
    """Integration produced a NaN or infinity."""

    def __init__(self, time: float, channels: list[int], state=None):
        self.time = time
        self.channels = channels
        self.state = state
        super().__init__(f"non-finite state at t={time:.17g} in components {channels}")


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled run. ``states[i]`` is the flat state at ``t[i] = i * dt * stride``."""

    dt: float
    stride: int
    t: np.ndarray
    states: np.ndarray
    z: np.ndarray | None = None
    y: np.ndarray | None = None
    layout: StateLayout | None = None
    monitor: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.t, self.states, self.z, self.y):
            if arr is not None:
                arr.setflags(write=False)

    def __len__(self) -> int:
        return self.t.shape[0]

    def channel(self, name) -> np.ndarray:
        """Columns for ``u``, ``xi`` (gradient filter), ``xi1`` (as n x n), ``mu``, ``x``, ``w``,
        ``z`` or ``y``. A slice or integer selects state columns directly. Without a layout only
        ``u`` (the whole state), ``z`` and ``y`` are available."""
        if isinstance(name, (slice, int)):
            return self.states[:, name]
        if name == "z":
            return self.z
        if name == "y":
            return self.y
        if self.layout is None:
            # without a layout the state is the input itself, as in the reduced flows
            if name in ("state", "u"):
                return self.states
            raise ValueError("named channels need a state layout")
        if name == "xi2":
            name = "xi"
        if name == "xi1":
            n = self.layout.n
            return self.states[:, self.layout.xi1].reshape(-1, n, n)
        if name not in ("u", "xi", "mu", "x", "w"):
            raise ValueError(f"unknown channel {name!r}")
        return self.states[:, getattr(self.layout, name)]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _renormalize(s, torus) -> float:
    if torus is None:
        return 0.0
    mu = s[torus]
    c, sn = mu[0::2], mu[1::2]
    r = np.sqrt(c * c + sn * sn)
    mu[0::2] = c / r
    mu[1::2] = sn / r
    s[torus] = mu
    return float(np.max(np.abs(r - 1.0))) if r.size else 0.0


def integrate(derivative, s0, dt: float, horizon: float, stride: int = DEFAULT_STRIDE, torus=None,
              dt_limit: float | None = None, measure=None, halt=None, layout=None) -> Trajectory:
    """Classical four-stage Runge-Kutta with fixed step.

    Parameters
    ----------
    derivative : callable
        ``s -> ds`` on flat float vectors.
    s0 : array_like
        Initial state.
    dt, horizon : float
        Step and final time; ``round(horizon / dt)`` steps are taken.
    stride : int
        Record every ``stride``-th step.
    torus : slice, optional
        Oscillator block renormalized to unit pairs after every step.
    dt_limit : float, optional
        Warn when ``dt`` exceeds it.
    measure : callable, optional
        ``s -> (z, y)`` recorded alongside each sample.
    halt : callable, optional
        ``s -> bool``; integration stops after the first step where it is true.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    if stride < 1:
        raise ValueError("stride must be a positive integer")
    if dt_limit is not None and dt > dt_limit:
        warnings.warn(f"dt={dt:g} does not resolve the fastest time scale (limit {dt_limit:g})", stacklevel=2)
    s = np.array(s0, dtype=float)
    if not np.all(np.isfinite(s)):
        raise NonFiniteStateError(0.0, np.flatnonzero(~np.isfinite(s)).tolist(), s)
    nsteps = int(round(horizon / dt))
    rows, zs, ys = [s.copy()], [], []
    if measure is not None:
        z, y = measure(s)
        zs.append(np.atleast_1d(z).copy())
        ys.append(y)
    max_corr = 0.0
    halted = None
    h = dt
    for step in range(1, nsteps + 1):
        k1 = derivative(s)
        k2 = derivative(s + 0.5 * h * k1)
        k3 = derivative(s + 0.5 * h * k2)
        k4 = derivative(s + h * k3)
        s = s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        max_corr = max(max_corr, _renormalize(s, torus))
        bad = ~np.isfinite(s)
        if bad.any():
            raise NonFiniteStateError(step * dt, np.flatnonzero(bad).tolist(), s)
        if step % stride == 0:
            rows.append(s.copy())
            if measure is not None:
                z, y = measure(s)
                zs.append(np.atleast_1d(z).copy())
                ys.append(y)
        if halt is not None and halt(s):
            halted = step
            break
    if max_corr > TORUS_LOG_TOL:
        log.info("torus projection corrected pairs by up to %.3g", max_corr)
    states = np.array(rows)
    t = np.arange(states.shape[0]) * (dt * stride)
    return Trajectory(
        dt=dt,
        stride=stride,
        t=t,
        states=states,
        z=np.array(zs) if measure is not None else None,
        y=np.array(ys, dtype=float) if measure is not None else None,
        layout=layout,
        monitor={"max_torus_correction": max_corr, "halted_step": halted, "steps": halted or nsteps},
    )


def dt_limit(params: FtgesParams) -> float:
    """Largest step that takes 40 steps per period of the fastest oscillator."""
    return params.dither.eps1 / (40.0 * params.eps0 * float(params.freqs.as_array().max()))


def filter_norm(state, layout: StateLayout) -> float:
    """``max(|xi|, ||xi1||_F)`` for one flat state."""
    r = float(np.linalg.norm(state[layout.xi]))
    if layout.newton:
        r = max(r, float(np.linalg.norm(state[layout.xi1])))
    return r


def _empty_plant(n):
    return np.zeros((0, 0)), np.zeros((0, n)), np.zeros((0, 0)), np.zeros(0)


def simulate(params: FtgesParams, s0, dt: float, horizon: float, *, cost: CostSpec | None = None,
             plant: LinearPlant | None = None, newton: bool = False, stride: int = DEFAULT_STRIDE,
             policy: str = "warn", backend: str | None = None, guard: float = ZERO_GUARD) -> Trajectory:
    """Integrate a gradient (``newton=False``) or Newton controller in closed loop.

    Exactly one of ``cost`` (static map measured at the probe input) and ``plant`` (output
    measured from the plant state) is given. With ``policy="halt"`` integration stops after the
    first step where the filter norm exceeds ``eta``; ``"warn"`` only records the crossing.
    """
    if policy not in ("warn", "halt"):
        raise ValueError("policy must be 'warn' or 'halt'")
    if (cost is None) == (plant is None):
        raise ValueError("give exactly one of a static cost or a plant")
    backend = backend or BACKEND
    if backend not in available_backends():
        raise ValueError(f"backend {backend!r} is not available")
    n = params.n
    dim_check = cost.n if cost is not None else plant.n
    if dim_check != n:
        raise ValueError(f"controller has {n} inputs, the cost or plant has {dim_check}")
    layout = StateLayout(n, newton, plant.p if plant is not None else 0, params.washout > 0)
    s0 = np.array(s0, dtype=float)
    if s0.shape != (layout.dim,):
        raise ValueError(f"initial state has shape {s0.shape}, expected ({layout.dim},)")
    limit = dt_limit(params)
    if dt > limit:
        warnings.warn(f"dt={dt:g} does not resolve the fastest oscillator (limit {limit:g})", stacklevel=2)
    halt_norm = params.eta if policy == "halt" else math.inf

    if backend == "compiled":
        if cost is not None:
            Q, b, c = cost.quadratic_coefficients()
            A, B, P, r = _empty_plant(n)
        else:
            Q, b, c = np.zeros((n, n)), np.zeros(n), plant.c
            A, B, P, r = plant.A, plant.B, plant.P, plant.r
        f = np.ascontiguousarray
        res = _kernels.run_closed_loop(
            n, newton, s0, params.freqs.as_array(), params.dither.amplitude, params.dither.eps1,
            params.eps2, params.eps0, params.shape.k, params.shape.alpha1, params.shape.alpha2,
            f(Q, dtype=float), f(b, dtype=float), float(c), f(A, dtype=float), f(B, dtype=float),
            f(P, dtype=float), f(r, dtype=float), float(params.washout), float(dt),
            int(round(horizon / dt)), int(stride), float(halt_norm), float(guard),
        )
        if res["nonfinite_step"] >= 0:
            bad = np.flatnonzero(~np.isfinite(res["final"])).tolist()
            raise NonFiniteStateError(res["nonfinite_step"] * dt, bad, res["final"])
        states = res["samples"]
        halted = res["halted_step"] if res["halted_step"] >= 0 else None
        traj = Trajectory(
            dt=dt, stride=stride, t=np.arange(states.shape[0]) * (dt * stride), states=states,
            z=res["z"], y=res["y"], layout=layout,
            monitor={"max_torus_correction": res["max_torus_correction"], "halted_step": halted,
                     "steps": res["steps"]},
        )
        if res["max_torus_correction"] > TORUS_LOG_TOL:
            log.info("torus projection corrected pairs by up to %.3g", res["max_torus_correction"])
    else:
        field_fn, measure = flat_field(params, layout, cost=cost, plant=plant)
        halt = (lambda s: filter_norm(s, layout) > halt_norm) if policy == "halt" else None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traj = integrate(field_fn, s0, dt, horizon, stride, torus=layout.mu, measure=measure,
                             halt=halt, layout=layout)

    traj.monitor["backend"] = backend
    traj.monitor["constraint_violation"] = constraint_violation(traj, params.eta)
    if newton:
        drift = symmetry_drift(traj.channel("xi1"))
        traj.monitor["symmetry_drift"] = drift
        if drift > SYMMETRY_WARN:
            warnings.warn(f"Hessian estimate lost symmetry: drift {drift:.3g}", stacklevel=2)
    return traj


def convergence_time(traj: Trajectory, target, nu: float, channel="u") -> float | None:
    """Earliest sampled time after which ``|channel - target| <= nu`` at every later sample.

    Returns ``None`` when the last sample is outside the ball.
    """
    if not nu > 0:
        raise ValueError("radius nu must be positive")
    data = np.asarray(traj.channel(channel), dtype=float).reshape(len(traj), -1)
    target = np.broadcast_to(np.asarray(target, dtype=float).ravel(), data.shape[1:])
    err = np.linalg.norm(data - target, axis=1)
    outside = np.flatnonzero(~(err <= nu))
    if outside.size == 0:
        return float(traj.t[0])
    last = outside[-1]
    if last == len(traj) - 1:
        return None
    return float(traj.t[last + 1])


def constraint_violation(traj: Trajectory, eta: float, channel="xi") -> float | None:
    """Earliest sampled time where the channel norm exceeds ``eta``; ``None`` if never.

    The default channel is the gradient filter state; for Newton runs the Hessian estimate is
    included too (the larger of the two norms).
    """
    if not eta > 0:
        raise ValueError("radius eta must be positive")
    if math.isinf(eta):
        return None
    data = np.asarray(traj.channel(channel), dtype=float).reshape(len(traj), -1)
    norms = np.linalg.norm(data, axis=1)
    if channel == "xi" and traj.layout is not None and traj.layout.newton:
        norms = np.maximum(norms, np.linalg.norm(traj.states[:, traj.layout.xi1], axis=1))
    hit = np.flatnonzero(norms > eta)
    return float(traj.t[hit[0]]) if hit.size else None
