"""Cost maps and plants with exact derivative oracles.

Three builtin families are supported. Every one of them is quadratic in the input, so each
exposes its coefficients ``(Q, b, c)`` with ``phi(z) = 0.5 z'Qz + b'z + c``; the compiled
integrator consumes that form directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """Input vector length does not match the cost or plant dimension."""


def _as_vector(z, n: int) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.ndim != 1 or z.shape[0] != n:
        raise DimensionError(f"expected a vector of length {n}, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("input contains non-finite entries")
    return z


@dataclass(frozen=True)
class LinearPlant:
    """Stable linear plant ``dx/dt = A x + B z`` with output ``y = x'Px + r'x + c``.

    ``box`` holds per-coordinate ``(low, high)`` bounds of the admissible state set; it is
    only monitored, never enforced.
    """

    A: np.ndarray
    B: np.ndarray
    P: np.ndarray
    r: np.ndarray
    c: float = 0.0
    box: tuple[tuple[float, float], ...] | None = None
    _L: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        r = np.atleast_1d(np.asarray(self.r, dtype=float))
        p = A.shape[0]
        if A.shape != (p, p) or B.shape[0] != p or P.shape != (p, p) or r.shape != (p,):
            raise DimensionError("plant matrices have inconsistent shapes")
        if np.any(np.linalg.eigvals(A).real >= 0):
            raise ValueError("plant matrix A must be Hurwitz")
        if not np.allclose(P, P.T):
            raise ValueError("output weight P must be symmetric")
        for name, val in (("A", A), ("B", B), ("P", P), ("r", r)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "c", float(self.c))
        L = -np.linalg.solve(A, B)
        L.setflags(write=False)
        object.__setattr__(self, "_L", L)
        if self.box is not None and len(self.box) != p:
            raise DimensionError("state box needs one (low, high) pair per plant state")

    @property
    def p(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.B.shape[1]

    @property
    def steady_state_gain(self) -> np.ndarray:
        """Matrix ``L`` of the quasi-steady-state map ``x = L z``."""
        return self._L

    def dynamics(self, x, z) -> np.ndarray:
        return self.A @ _as_vector(x, self.p) + self.B @ _as_vector(z, self.n)

    def output(self, x) -> float:
        x = _as_vector(x, self.p)
        return float(x @ self.P @ x + self.r @ x + self.c)

    def steady_state(self, z) -> np.ndarray:
        return self._L @ _as_vector(z, self.n)

    def in_box(self, x) -> bool:
        if self.box is None:
            return True
        x = np.asarray(x, dtype=float)
        return all(lo <= xi <= hi for xi, (lo, hi) in zip(x, self.box))


def reference_plant() -> LinearPlant:
    """The two-state example plant with output ``10|x|^2 + x1/2 + x2/5``."""
    return LinearPlant(
        A=np.array([[-20.0, 5.0], [0.0, -20.0]]),
        B=np.array([[5.0, 0.0], [0.0, 5.0]]),
        P=10.0 * np.eye(2),
        r=np.array([0.5, 0.2]),
        c=0.0,
    )


class CostSpec:
    """Base class for builtin quadratic cost families.

    Subclasses set ``n`` and the coefficients ``Q``, ``b``, ``c``; the minimizer and the
    optimal value are computed once at construction.
    """

    n: int
    Q: np.ndarray
    b: np.ndarray
    c: float
    z_star: np.ndarray
    phi_star: float

    def _finish(self, Q, b, c):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if Q.shape != (self.n, self.n) or b.shape != (self.n,):
            raise DimensionError("coefficient shapes do not match the dimension")
        if not np.allclose(Q, Q.T, rtol=0, atol=1e-12):
            raise ValueError("Hessian must be symmetric")
        try:
            np.linalg.cholesky(Q)
        except np.linalg.LinAlgError:
            raise ValueError("Hessian must be positive definite") from None
        z_star = np.linalg.solve(Q, -b)
        for arr in (Q, b, z_star):
            arr.setflags(write=False)
        self.Q, self.b, self.c = Q, b, float(c)
        self.z_star = z_star
        self.phi_star = float(self.c + 0.5 * b @ z_star)

    def quadratic_coefficients(self) -> tuple[np.ndarray, np.ndarray, float]:
        return self.Q, self.b, self.c

    def eval(self, z) -> float:
        z = _as_vector(z, self.n)
        return float(0.5 * z @ self.Q @ z + self.b @ z + self.c)

    def eval_batch(self, Z) -> np.ndarray:
        """Evaluate at each row of ``Z`` (shape ``(m, n)``)."""
        Z = np.asarray(Z, dtype=float).reshape(-1, self.n)
        return 0.5 * np.einsum("ij,jk,ik->i", Z, self.Q, Z) + Z @ self.b + self.c

    def gradient(self, z) -> np.ndarray:
        z = _as_vector(z, self.n)
        return self.Q @ z + self.b

    def hessian(self, z=None) -> np.ndarray:
        if z is not None:
            _as_vector(z, self.n)
        return np.array(self.Q)

    def pl_constant_estimate(self, box, grid_points_per_axis: int = 100) -> float:
        return pl_constant_estimate(self, box, grid_points_per_axis)


class ScalarQuadratic(CostSpec):
    """``phi(z) = curvature/2 * (z - z_opt)^2`` on the real line."""

    def __init__(self, curvature: float, z_opt: float = 0.0):
        if not curvature > 0:
            raise ValueError("curvature must be positive")
        self.n = 1
        self.curvature = float(curvature)
        self.z_opt = float(z_opt)
        k, zo = self.curvature, self.z_opt
        self._finish([[k]], [-k * zo], 0.5 * k * zo * zo)

    def __repr__(self):
        return f"ScalarQuadratic(curvature={self.curvature!r}, z_opt={self.z_opt!r})"

    def eval(self, z) -> float:
        z = _as_vector(z, 1)
        d = z[0] - self.z_opt
        return float(0.5 * self.curvature * d * d)

    def gradient(self, z) -> np.ndarray:
        z = _as_vector(z, 1)
        return np.array([self.curvature * (z[0] - self.z_opt)])


class QuadraticForm(CostSpec):
    """``phi(z) = 0.5 z'Hz + b'z + c`` with symmetric positive definite ``H``."""

    def __init__(self, H, b, c: float = 0.0):
        H = np.atleast_2d(np.asarray(H, dtype=float))
        self.n = H.shape[0]
        self._finish(H, b, c)

    @property
    def H(self) -> np.ndarray:
        return self.Q

    def __repr__(self):
        return f"QuadraticForm(H={self.Q.tolist()!r}, b={self.b.tolist()!r}, c={self.c!r})"


class PlantComposed(CostSpec):
    """Steady-state input-to-output map ``phi(z) = h(l(z))`` of a :class:`LinearPlant`.

    With ``l(z) = L z`` the map is quadratic: ``Q = 2 L'PL`` and ``b = L'r``.
    """

    def __init__(self, plant: LinearPlant):
        if not isinstance(plant, LinearPlant):
            raise TypeError("only the builtin linear plant family has an exact steady-state map")
        self.plant = plant
        self.n = plant.n
        L = plant.steady_state_gain
        self._finish(2.0 * L.T @ plant.P @ L, L.T @ plant.r, plant.c)

    def __repr__(self):
        return f"PlantComposed({self.plant!r})"

    def eval(self, z) -> float:
        return self.plant.output(self.plant.steady_state(z))

    def eval_batch(self, Z) -> np.ndarray:
        X = np.asarray(Z, dtype=float).reshape(-1, self.n) @ self.plant.steady_state_gain.T
        P, r = self.plant.P, self.plant.r
        return np.einsum("ij,jk,ik->i", X, P, X) + X @ r + self.plant.c


def eval_cost(cost: CostSpec, z) -> float:
    return cost.eval(z)


def gradient(cost: CostSpec, z) -> np.ndarray:
    return cost.gradient(z)


def hessian(cost: CostSpec, z=None) -> np.ndarray:
    return cost.hessian(z)


def pl_constant_estimate(cost: CostSpec, box, grid_points_per_axis: int = 100) -> float:
    """Smallest sampled ratio ``|grad|^2 / (2 (phi - phi*))`` over a regular grid on ``box``.

    Grid points where ``phi == phi*`` are skipped (the ratio is infinite there).
    """
    if not isinstance(cost, CostSpec):
        raise TypeError("optimal value is only known for builtin cost families")
    if grid_points_per_axis < 2:
        raise ValueError("need at least 2 grid points per axis")
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    if box.shape[0] != cost.n:
        raise DimensionError("box needs one (low, high) pair per coordinate")
    axes = [np.linspace(lo, hi, grid_points_per_axis) for lo, hi in box]
    best = np.inf
    for point in itertools.product(*axes):
        gap = cost.eval(point) - cost.phi_star
        if gap <= 0.0:
            continue
        g = cost.gradient(point)
        best = min(best, float(g @ g) / (2.0 * gap))
    return best
