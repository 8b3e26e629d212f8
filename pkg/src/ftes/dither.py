"""Torus oscillator, probing input and the gradient/Hessian demodulation signals.

The oscillator state ``mu`` has length ``2n`` and holds ``n`` consecutive (cos, sin) pairs.
Only its odd-indexed entries (``mu[0::2]`` in zero-based indexing) enter the probe.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

TORUS_TOL = 1e-9


@dataclass(frozen=True)
class FrequencySet:
    """Distinct positive rational oscillator gains, stored exactly."""

    values: tuple[Fraction, ...]

    def __init__(self, values):
        fracs = tuple(Fraction(v).limit_denominator(10**9) if isinstance(v, float) else Fraction(v)
                      for v in values)
        if not fracs:
            raise ValueError("need at least one frequency")
        if any(f <= 0 for f in fracs):
            raise ValueError("frequencies must be positive")
        if len(set(fracs)) != len(fracs):
            raise ValueError("frequencies must be pairwise distinct")
        object.__setattr__(self, "values", fracs)

    @classmethod
    def parse(cls, text: str) -> "FrequencySet":
        """Parse ``"1, 3/2, 7/4"``."""
        return cls(Fraction(tok.strip()) for tok in text.replace(";", ",").split(",") if tok.strip())

    def __len__(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def __str__(self) -> str:
        return ",".join(str(v) for v in self.values)


# Each successive entry keeps every integer combination of at most four gains away from zero.
_DEFAULT_GAINS = (Fraction(1), Fraction(3, 2), Fraction(7, 4), Fraction(19, 8))


def default_frequencies(n: int) -> FrequencySet:
    if not 1 <= n <= len(_DEFAULT_GAINS):
        raise ValueError(f"default frequency sets exist for 1 <= n <= {len(_DEFAULT_GAINS)}")
    return FrequencySet(_DEFAULT_GAINS[:n])


def resonances(freqs: FrequencySet, order: int = 4) -> list[tuple[int, ...]]:
    """Integer vectors ``c`` with ``0 < sum|c_i| <= order`` and ``c . kappa == 0``.

    A resonance of order ``m`` makes some degree-``m`` monomial in the probe signals
    have a phase-dependent (generally nonzero) average.
    """
    kap = freqs.values
    found = []
    for c in itertools.product(range(-order, order + 1), repeat=len(kap)):
        l1 = sum(abs(ci) for ci in c)
        if l1 == 0 or l1 > order:
            continue
        # keep one representative of each +/- pair
        first = next(ci for ci in c if ci != 0)
        if first < 0:
            continue
        if sum(ci * ki for ci, ki in zip(c, kap)) == 0:
            found.append(c)
    return found


def is_nonresonant(freqs: FrequencySet, order: int = 4) -> bool:
    return not resonances(freqs, order)


@dataclass(frozen=True)
class DitherParams:
    amplitude: float
    eps1: float

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise ValueError("dither amplitude must be non-negative")
        if not self.eps1 > 0:
            raise ValueError("oscillator time scale eps1 must be positive")


def torus_point(n: int, phases=None) -> np.ndarray:
    """A point on the n-torus; ``phases=None`` gives ``(1, 0, 1, 0, ...)``."""
    phases = np.zeros(n) if phases is None else np.asarray(phases, dtype=float)
    mu = np.empty(2 * n)
    mu[0::2] = np.cos(phases)
    mu[1::2] = -np.sin(phases)
    return mu


def check_torus(mu, tol: float = TORUS_TOL) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1 or mu.shape[0] % 2:
        raise ValueError("torus state must be a vector of even length")
    norms = mu[0::2] ** 2 + mu[1::2] ** 2
    if np.any(np.abs(norms - 1.0) > tol):
        raise ValueError("oscillator pairs are not on the unit circle")
    return mu


def _check_pair_count(mu, freqs):
    if mu.shape[0] != 2 * len(freqs):
        raise ValueError(f"torus state of length {mu.shape[0]} does not match {len(freqs)} frequencies")


def oscillator_derivative(mu, freqs: FrequencySet, eps1: float) -> np.ndarray:
    """``-(2 pi / eps1) R mu`` with 2x2 blocks ``[[0, -k_i], [k_i, 0]]``."""
    mu = np.asarray(mu, dtype=float)
    _check_pair_count(mu, freqs)
    w = 2.0 * math.pi / eps1 * freqs.as_array()
    d = np.empty_like(mu)
    d[0::2] = w * mu[1::2]
    d[1::2] = -w * mu[0::2]
    return d


def oscillator_at(mu0, freqs: FrequencySet, eps1: float, t: float) -> np.ndarray:
    """Closed-form oscillator solution from ``mu0`` after time ``t``."""
    mu0 = np.asarray(mu0, dtype=float)
    _check_pair_count(mu0, freqs)
    theta = 2.0 * math.pi / eps1 * freqs.as_array() * t
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty_like(mu0)
    out[0::2] = mu0[0::2] * c + mu0[1::2] * s
    out[1::2] = mu0[1::2] * c - mu0[0::2] * s
    return out


def odd_projection(mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1 or mu.shape[0] % 2:
        raise ValueError("torus state must be a vector of even length")
    return mu[0::2].copy()


def probe_input(u, amplitude: float, mu) -> np.ndarray:
    if amplitude < 0:
        raise ValueError("dither amplitude must be non-negative")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    mt = odd_projection(mu)
    if mt.shape != u.shape:
        raise ValueError("input and oscillator dimensions differ")
    return u + amplitude * mt


def grad_demod(mu, amplitude: float) -> np.ndarray:
    if not amplitude > 0:
        raise ValueError("demodulation needs a positive dither amplitude")
    return (2.0 / amplitude) * odd_projection(mu)


def hess_demod(mu, amplitude: float) -> np.ndarray:
    """Symmetric demodulation matrix: diagonal ``16/a^2 (m_i^2 - 1/2)``, off-diagonal ``4/a^2 m_i m_j``."""
    if not amplitude > 0:
        raise ValueError("demodulation needs a positive dither amplitude")
    mt = odd_projection(mu)
    N = (4.0 / amplitude**2) * np.outer(mt, mt)
    np.fill_diagonal(N, (16.0 / amplitude**2) * (mt * mt - 0.5))
    return N


def _gcd_fractions(values) -> Fraction:
    num = reduce(math.gcd, (v.numerator for v in values))
    den = reduce(lambda x, y: x * y // math.gcd(x, y), (v.denominator for v in values))
    return Fraction(num, den)


def common_period_exact(freqs: FrequencySet, eps1=1) -> Fraction:
    """Exact common period ``eps1 / gcd(kappa)``; ``eps1`` may be a Fraction."""
    return Fraction(eps1) / _gcd_fractions(freqs.values)


def common_period(freqs: FrequencySet, eps1: float = 1.0) -> float:
    return float(eps1) / float(_gcd_fractions(freqs.values))
