"""Numerical checks of the oscillator averaging identities.

Averages are taken over one exact common period ``T`` of the oscillator (with ``eps1 = 1``)
using the rectangle rule on uniform nodes, which is exact for trigonometric polynomials of
degree below the node count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .costmodel import CostSpec
from .dither import FrequencySet, common_period

MOMENT_TOL = 1e-8
NODES_PER_RADIAN = 10_000


def _nodes(freqs: FrequencySet, nodes_per_radian: int = NODES_PER_RADIAN) -> np.ndarray:
    """Odd oscillator components ``mu~(t_j)`` on uniform nodes over one period, shape ``(m, n)``."""
    T = common_period(freqs, 1.0)
    kap = freqs.as_array()
    m = int(math.ceil(nodes_per_radian * 2.0 * math.pi * kap.max() * T))
    t = np.arange(m) * (T / m)
    return np.cos(2.0 * math.pi * np.outer(t, kap))


def _hess_demod_nodes(mt: np.ndarray, a: float) -> np.ndarray:
    """``N(mu(t_j))`` for every node, shape ``(m, n, n)``."""
    N = (4.0 / a**2) * np.einsum("ti,tj->tij", mt, mt)
    idx = np.arange(mt.shape[1])
    N[:, idx, idx] = (16.0 / a**2) * (mt * mt - 0.5)
    return N


@dataclass
class FirstMomentReport:
    second_moment: np.ndarray
    mean: np.ndarray
    second_moment_deviation: float
    mean_deviation: float
    tol: float = MOMENT_TOL

    @property
    def passed(self) -> bool:
        return self.second_moment_deviation <= self.tol and self.mean_deviation <= self.tol


def moment_check_first(freqs: FrequencySet, nodes_per_radian: int = NODES_PER_RADIAN) -> FirstMomentReport:
    """Average of ``mu~ mu~'`` against ``I/2`` and of ``mu~`` against ``0``."""
    mt = _nodes(freqs, nodes_per_radian)
    S = mt.T @ mt / mt.shape[0]
    mean = mt.mean(axis=0)
    n = len(freqs)
    return FirstMomentReport(
        second_moment=S,
        mean=mean,
        second_moment_deviation=float(np.max(np.abs(S - 0.5 * np.eye(n)))),
        mean_deviation=float(np.max(np.abs(mean))),
    )


@dataclass
class MomentEntry:
    """One averaged product.

    ``value`` uses the excitation matrix with its ``16/a^2`` and ``4/a^2`` factors;
    ``normalized`` multiplies diagonal-``N`` integrals by ``a^2/16`` and off-diagonal ones by
    ``a^2/4``. ``expected`` is the stated constant, matched by ``normalized``.
    """

    name: str
    indices: tuple[int, ...]
    value: float
    normalized: float
    expected: float

    @property
    def matches_normalized(self) -> bool:
        return abs(self.normalized - self.expected) <= MOMENT_TOL

    @property
    def matches_raw(self) -> bool:
        return abs(self.value - self.expected) <= MOMENT_TOL


@dataclass
class SecondMomentReport:
    amplitude: float
    entries: list[MomentEntry] = field(default_factory=list)
    tol: float = MOMENT_TOL

    @property
    def zero_entries(self) -> list[MomentEntry]:
        return [e for e in self.entries if e.expected == 0.0]

    @property
    def max_zero_deviation(self) -> float:
        return max((abs(e.value) for e in self.zero_entries), default=0.0)

    @property
    def passed(self) -> bool:
        """All zero identities hold and the nonzero ones hold after normalization."""
        return all(abs(e.value) <= self.tol for e in self.zero_entries) and all(
            e.matches_normalized for e in self.entries
        )


def moment_check_second(freqs: FrequencySet, a: float,
                        nodes_per_radian: int = NODES_PER_RADIAN) -> SecondMomentReport:
    """Evaluate every product average used to estimate the Hessian."""
    if not a > 0:
        raise ValueError("dither amplitude must be positive")
    mt = _nodes(freqs, nodes_per_radian)
    N = _hess_demod_nodes(mt, a)
    n = len(freqs)
    diag_scale, off_scale = a**2 / 16.0, a**2 / 4.0
    rep = SecondMomentReport(amplitude=a)

    def add(name, idx, samples, scale, expected):
        v = float(samples.mean())
        rep.entries.append(MomentEntry(name, idx, v, v * scale, expected))

    for i in range(n):
        mi = mt[:, i]
        add("mu_i", (i,), mi, 1.0, 0.0)
        add("mu_i^2", (i,), mi * mi, 1.0, 0.5)
        add("mu_i^2 N_ii", (i,), mi * mi * N[:, i, i], diag_scale, 0.125)
        add("mu_i N_ii", (i,), mi * N[:, i, i], diag_scale, 0.0)
        for j in range(n):
            if i == j:
                continue
            mj = mt[:, j]
            if i < j:
                add("mu_i mu_j", (i, j), mi * mj, 1.0, 0.0)
                add("mu_i mu_j N_ij", (i, j), mi * mj * N[:, i, j], off_scale, 0.25)
            add("mu_i^2 N_jj", (i, j), mi * mi * N[:, j, j], diag_scale, 0.0)
            add("mu_i^2 N_ij", (i, j), mi * mi * N[:, i, j], off_scale, 0.0)
            add("mu_i N_ij", (i, j), mi * N[:, i, j], off_scale, 0.0)
            add("mu_i N_jj", (i, j), mi * N[:, j, j], diag_scale, 0.0)
            add("mu_i mu_j N_ii", (i, j), mi * mj * N[:, i, i], diag_scale, 0.0)
    return rep


def _cost_on_nodes(cost: CostSpec, u, a: float, mt: np.ndarray) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (mt.shape[1],):
        raise ValueError("input dimension does not match the frequency set")
    Z = u + a * mt
    if hasattr(cost, "eval_batch"):
        return cost.eval_batch(Z)
    return np.array([cost.eval(z) for z in Z])


def averaged_grad_demod(cost: CostSpec, u, a: float, freqs: FrequencySet,
                        nodes_per_radian: int = NODES_PER_RADIAN) -> np.ndarray:
    """Period average of ``phi(u + a mu~) M(mu)`` at frozen ``u``."""
    if not a > 0:
        raise ValueError("dither amplitude must be positive")
    mt = _nodes(freqs, nodes_per_radian)
    phi = _cost_on_nodes(cost, u, a, mt)
    return (2.0 / a) * (phi @ mt) / mt.shape[0]


def averaged_hess_demod(cost: CostSpec, u, a: float, freqs: FrequencySet,
                        nodes_per_radian: int = NODES_PER_RADIAN) -> np.ndarray:
    """Period average of ``phi(u + a mu~) N(mu)`` at frozen ``u``."""
    if not a > 0:
        raise ValueError("dither amplitude must be positive")
    mt = _nodes(freqs, nodes_per_radian)
    phi = _cost_on_nodes(cost, u, a, mt)
    A = (4.0 / a**2) * np.einsum("t,ti,tj->ij", phi, mt, mt) / mt.shape[0]
    diag = (16.0 / a**2) * (phi @ (mt * mt - 0.5)) / mt.shape[0]
    np.fill_diagonal(A, diag)
    # average of a symmetric integrand; the einsum is symmetric up to summation order
    return 0.5 * (A + A.T)
