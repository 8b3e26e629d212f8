"""Shaping exponents, fixed-time settling bounds and the inverse gain-design formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass


class InadmissibleParameters(ValueError):
    """Raised when a shaping or gain parameter violates its admissible range."""


def _check_q(q1: float, q2: float) -> None:
    if not q1 > 2:
        raise InadmissibleParameters(f"q1 must satisfy q1 > 2 (got {q1})")
    if not 1 < q2 < 2:
        raise InadmissibleParameters(f"q2 must satisfy 1 < q2 < 2 (got {q2})")


def _check_positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise InadmissibleParameters(f"{name} must be positive and finite (got {value})")


def alphas(q1: float, q2: float) -> tuple[float, float]:
    """Exponents ``alpha_i = (q_i - 2) / (q_i - 1)``.

    Returns
    -------
    tuple of float
        ``alpha1`` in (0, 1) and ``alpha2 < 0`` for admissible ``q1 > 2``, ``1 < q2 < 2``.
    """
    _check_q(q1, q2)
    return (q1 - 2.0) / (q1 - 1.0), (q2 - 2.0) / (q2 - 1.0)


@dataclass(frozen=True)
class ShapeParams:
    """Gain and shaping exponents of the nonsmooth drive.

    Use :meth:`classic` for the smooth variant with ``alpha1 = alpha2 = 0``; it has no
    ``q`` values and skips the admissibility check.
    """

    q1: float | None
    q2: float | None
    alpha1: float
    alpha2: float
    k: float

    @classmethod
    def from_q(cls, q1: float, q2: float, k: float) -> "ShapeParams":
        a1, a2 = alphas(q1, q2)
        _check_positive("k", k)
        return cls(float(q1), float(q2), a1, a2, float(k))

    @classmethod
    def classic(cls, k: float) -> "ShapeParams":
        _check_positive("k", k)
        return cls(None, None, 0.0, 0.0, float(k))

    @property
    def is_classic(self) -> bool:
        return self.q1 is None


def _gradient_constant(q1, q2, kappa_pl) -> float:
    _check_positive("kappa_pl", kappa_pl)
    a1, a2 = alphas(q1, q2)
    # 1/gamma_i in log space; gamma_2 overflows as q2 approaches 1
    try:
        inv_g1 = math.exp(-_log_gamma(a1, kappa_pl))
        inv_g2 = math.exp(-_log_gamma(a2, kappa_pl))
    except OverflowError:
        return math.inf
    return 4.0 * (inv_g1 / a1 - inv_g2 / a2)


def _log_gamma(alpha, kappa_pl) -> float:
    return (8.0 - 3.0 * alpha) / 4.0 * math.log(2.0) + (2.0 - alpha) / 2.0 * math.log(kappa_pl)


def _newton_constant(q1, q2) -> float:
    a1, a2 = alphas(q1, q2)
    return 2.0 ** (a1 / 2.0) / a1 - 2.0 ** (a2 / 2.0) / a2


def t_star_gradient(k: float, q1: float, q2: float, kappa_pl: float) -> float:
    """Settling-time bound of the gradient flow under a PL constant ``kappa_pl``."""
    _check_positive("k", k)
    return _gradient_constant(q1, q2, kappa_pl) / k


def gain_for_tstar_gradient(T: float, q1: float, q2: float, kappa_pl: float) -> float:
    """Gain ``k`` for which :func:`t_star_gradient` equals ``T``."""
    _check_positive("T", T)
    return _gradient_constant(q1, q2, kappa_pl) / T


def t_star_newton(k: float, q1: float, q2: float) -> float:
    """Settling-time bound of the Newton flow; it does not depend on the cost."""
    _check_positive("k", k)
    return _newton_constant(q1, q2) / k


def gain_for_tstar_newton(T: float, q1: float, q2: float) -> float:
    _check_positive("T", T)
    return _newton_constant(q1, q2) / T
