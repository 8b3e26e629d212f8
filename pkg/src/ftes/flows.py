"""Right-hand sides of the gradient and Newton extremum seeking loops.

Controller fields take the measured cost ``y`` as an argument and never evaluate a cost
handle, so the same code serves static maps and plants in the loop. The reduced flows
take an exact cost and serve as reference dynamics.

All controller rows are scaled by ``eps0`` (``k1 = eps0 k``, ``k2 = eps0 / eps2``,
``k3 = 2 pi eps0 / eps1``); ``eps0 = 1`` is the static-map case.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bounds import ShapeParams
from .costmodel import CostSpec, LinearPlant
from .dither import DitherParams, FrequencySet, grad_demod, hess_demod, oscillator_derivative, probe_input

ZERO_GUARD = 1e-14
SYMMETRY_WARN = 1e-6


class NotPositiveDefinite(ValueError):
    """Hessian oracle is not positive definite at the queried point."""


@dataclass(frozen=True)
class FtgesParams:
    """Parameters shared by the gradient and Newton controllers.

    ``washout`` is the time constant of an optional high-pass filter on the measurement
    (``0`` disables it, which is the default and the plain controller).
    """

    shape: ShapeParams
    dither: DitherParams
    freqs: FrequencySet
    eps2: float
    eta: float = 50.0
    eps0: float = 1.0
    washout: float = 0.0

    def __post_init__(self):
        if not self.eps2 > 0:
            raise ValueError("filter time scale eps2 must be positive")
        if not self.eta > 0:
            raise ValueError("filter ball radius eta must be positive")
        if not 0 < self.eps0 <= 1:
            raise ValueError("plant time scale eps0 must lie in (0, 1]")
        if self.washout < 0:
            raise ValueError("washout time constant must be non-negative")
        if self.dither.amplitude <= 0:
            raise ValueError("controllers need a positive dither amplitude")
        if not self.dither.eps1 < self.eps2:
            warnings.warn("eps1 should be much smaller than eps2", stacklevel=3)

    @property
    def n(self) -> int:
        return len(self.freqs)

    @property
    def gains(self) -> tuple[float, float, float]:
        """``(k1, k2, k3)`` after the ``eps0`` scaling."""
        e0 = self.eps0
        return e0 * self.shape.k, e0 / self.eps2, e0 * 2.0 * math.pi / self.dither.eps1


@dataclass
class FtgesState:
    u: np.ndarray
    xi: np.ndarray
    mu: np.ndarray
    w: float | None = None


@dataclass
class FtnesState:
    u: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    mu: np.ndarray
    w: float | None = None


@dataclass
class ClosedLoopState:
    controller: FtgesState | FtnesState
    x: np.ndarray


@dataclass(frozen=True)
class StateLayout:
    """Flat state vector ``[u, xi1 (Newton), xi, mu, x (plant), w (washout)]``."""

    n: int
    newton: bool = False
    p: int = 0
    washout: bool = False

    @property
    def u(self) -> slice:
        return slice(0, self.n)

    @property
    def xi1(self) -> slice:
        return slice(self.n, self.n + (self.n * self.n if self.newton else 0))

    @property
    def xi(self) -> slice:
        start = self.xi1.stop
        return slice(start, start + self.n)

    @property
    def mu(self) -> slice:
        start = self.xi.stop
        return slice(start, start + 2 * self.n)

    @property
    def x(self) -> slice:
        start = self.mu.stop
        return slice(start, start + self.p)

    @property
    def w(self) -> slice:
        start = self.x.stop
        return slice(start, start + int(self.washout))

    @property
    def dim(self) -> int:
        return self.w.stop

    def column_names(self) -> list[str]:
        n = self.n
        names = [f"u_{i + 1}" for i in range(n)]
        if self.newton:
            names += [f"xi1_{i + 1}{j + 1}" for i in range(n) for j in range(n)]
            names += [f"xi2_{i + 1}" for i in range(n)]
        else:
            names += [f"xi_{i + 1}" for i in range(n)]
        names += [f"mu_{i + 1}" for i in range(2 * n)]
        names += [f"x_{i + 1}" for i in range(self.p)]
        if self.washout:
            names.append("w")
        return names

    def pack(self, state) -> np.ndarray:
        x = None
        if isinstance(state, ClosedLoopState):
            state, x = state.controller, state.x
        s = np.zeros(self.dim)
        s[self.u] = state.u
        if self.newton:
            s[self.xi1] = np.asarray(state.xi1, dtype=float).ravel()
            s[self.xi] = state.xi2
        else:
            s[self.xi] = state.xi
        s[self.mu] = state.mu
        if self.p:
            s[self.x] = x
        if self.washout:
            s[self.w] = state.w if state.w is not None else 0.0
        return s

    def unpack(self, s):
        s = np.asarray(s, dtype=float)
        if s.shape != (self.dim,):
            raise ValueError(f"state has shape {s.shape}, layout expects ({self.dim},)")
        w = float(s[self.w][0]) if self.washout else None
        if self.newton:
            ctrl = FtnesState(s[self.u].copy(), s[self.xi1].reshape(self.n, self.n).copy(),
                              s[self.xi].copy(), s[self.mu].copy(), w)
        else:
            ctrl = FtgesState(s[self.u].copy(), s[self.xi].copy(), s[self.mu].copy(), w)
        if self.p:
            return ClosedLoopState(ctrl, s[self.x].copy())
        return ctrl


def nonsmooth_drive(v, alpha1: float, alpha2: float, guard: float = ZERO_GUARD) -> np.ndarray:
    """``v / |v|^alpha1 + v / |v|^alpha2``, set to zero when ``|v| <= guard``."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    r = float(np.sqrt(v @ v))
    if r <= guard:
        return np.zeros_like(v)
    return v * (r ** (-alpha1) + r ** (-alpha2))


def _signal(y: float, w, p: FtgesParams):
    """Measured signal after the optional washout, plus the washout derivative."""
    if p.washout > 0:
        if w is None:
            raise ValueError("washout is enabled but the state carries no washout value")
        return y - w, p.eps0 / p.washout * (y - w)
    return y, None


def ftges_derivative(s: FtgesState, y: float, p: FtgesParams) -> FtgesState:
    k1, k2, _ = p.gains
    ym, dw = _signal(y, s.w, p)
    a, e1 = p.dither.amplitude, p.dither.eps1
    du = -k1 * nonsmooth_drive(s.xi, p.shape.alpha1, p.shape.alpha2)
    dxi = -k2 * (np.asarray(s.xi, dtype=float) - ym * grad_demod(s.mu, a))
    dmu = p.eps0 * oscillator_derivative(s.mu, p.freqs, e1)
    return FtgesState(du, dxi, dmu, dw)


def ftnes_derivative(s: FtnesState, y: float, p: FtgesParams) -> FtnesState:
    k1, k2, _ = p.gains
    ym, dw = _signal(y, s.w, p)
    a, e1 = p.dither.amplitude, p.dither.eps1
    X = np.asarray(s.xi1, dtype=float)
    du = -k1 * X @ nonsmooth_drive(s.xi2, p.shape.alpha1, p.shape.alpha2)
    F = ym * hess_demod(s.mu, a)
    dX = -k2 * ((X @ F) @ X - X)
    dxi2 = -k2 * (np.asarray(s.xi2, dtype=float) - ym * grad_demod(s.mu, a))
    dmu = p.eps0 * oscillator_derivative(s.mu, p.freqs, e1)
    return FtnesState(du, dX, dxi2, dmu, dw)


def closed_loop_derivative(s: ClosedLoopState, plant: LinearPlant, p: FtgesParams) -> ClosedLoopState:
    """Controller driven by the plant output; the plant row runs at unit rate."""
    ctrl = s.controller
    z = probe_input(ctrl.u, p.dither.amplitude, ctrl.mu)
    y = plant.output(s.x)
    if isinstance(ctrl, FtnesState):
        dctrl = ftnes_derivative(ctrl, y, p)
    else:
        dctrl = ftges_derivative(ctrl, y, p)
    return ClosedLoopState(dctrl, plant.dynamics(s.x, z))


def flat_field(p: FtgesParams, layout: StateLayout, cost: CostSpec | None = None,
               plant: LinearPlant | None = None):
    """Derivative ``s -> ds`` on flat state vectors, for either a static cost or a plant.

    Returns the field together with a function giving ``(z, y)`` at a state.
    """
    if (cost is None) == (plant is None):
        raise ValueError("give exactly one of a static cost or a plant")
    a = p.dither.amplitude

    def measure(s):
        z = probe_input(s[layout.u], a, s[layout.mu])
        if not np.all(np.isfinite(s)):
            # let the integrator report the blow-up instead of the cost's input check
            return z, math.nan
        y = plant.output(s[layout.x]) if plant is not None else cost.eval(z)
        return z, y

    def field(s):
        st = layout.unpack(s)
        ctrl = st.controller if plant is not None else st
        z, y = measure(s)
        if layout.newton:
            d = ftnes_derivative(ctrl, y, p)
        else:
            d = ftges_derivative(ctrl, y, p)
        if plant is not None:
            d = ClosedLoopState(d, plant.dynamics(s[layout.x], z))
        return layout.pack(d)

    return field, measure


def reduced_gradient_derivative(u, cost: CostSpec, shape: ShapeParams) -> np.ndarray:
    g = cost.gradient(u)
    return -shape.k * nonsmooth_drive(g, shape.alpha1, shape.alpha2)


def reduced_newton_derivative(u, cost: CostSpec, shape: ShapeParams) -> np.ndarray:
    g = cost.gradient(u)
    H = cost.hessian(u)
    try:
        # the factorization doubles as the definiteness check
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("Hessian is not positive definite at u") from None
    d = nonsmooth_drive(g, shape.alpha1, shape.alpha2)
    return -shape.k * np.linalg.solve(H, d)


def symmetry_drift(xi1_samples) -> float:
    """Largest Frobenius norm of ``xi1 - xi1'`` over a stack of matrices."""
    X = np.asarray(xi1_samples, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(X - np.swapaxes(X, -1, -2), axis=(-2, -1))))
