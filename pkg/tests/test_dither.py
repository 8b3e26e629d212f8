import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftes.dither import (FrequencySet, check_torus, common_period, common_period_exact, default_frequencies,
                         grad_demod, hess_demod, is_nonresonant, odd_projection, oscillator_at,
                         oscillator_derivative, probe_input, resonances, torus_point)


def test_oscillator_derivative_examples():
    assert np.allclose(oscillator_derivative([1, 0], FrequencySet([1]), 1.0), [0.0, -2 * math.pi])
    assert np.allclose(oscillator_derivative([0, 1], FrequencySet([2]), 1.0), [4 * math.pi, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 2 * math.pi), min_size=3, max_size=3))
def test_oscillator_derivative_is_tangent(phases):
    mu = torus_point(3, phases)
    d = oscillator_derivative(mu, default_frequencies(3), 0.1)
    assert np.allclose(mu[0::2] * d[0::2] + mu[1::2] * d[1::2], 0.0, atol=1e-9)


def test_oscillator_at_examples():
    f = FrequencySet([1])
    assert np.allclose(oscillator_at([1, 0], f, 1.0, 0.0), [1, 0])
    assert np.allclose(oscillator_at([1, 0], f, 1.0, 0.25), [0, -1], atol=1e-15)
    assert np.allclose(oscillator_at([1, 0], f, 1.0, 1.0), [1, 0], atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 100), st.lists(st.floats(0, 2 * math.pi), min_size=2, max_size=2))
def test_oscillator_at_preserves_norms(t, phases):
    mu = oscillator_at(torus_point(2, phases), default_frequencies(2), 0.3, t)
    assert np.allclose(mu[0::2] ** 2 + mu[1::2] ** 2, 1.0, atol=1e-12)


def test_oscillator_at_solves_the_derivative():
    f, e1 = default_frequencies(2), 0.2
    mu0 = torus_point(2, [0.3, 1.1])
    h = 1e-6
    for t in (0.0, 0.37, 2.5):
        d_fd = (oscillator_at(mu0, f, e1, t + h) - oscillator_at(mu0, f, e1, t - h)) / (2 * h)
        assert np.allclose(d_fd, oscillator_derivative(oscillator_at(mu0, f, e1, t), f, e1), atol=1e-6)


def test_odd_projection_examples():
    assert np.array_equal(odd_projection([1, 0, 0, 1]), [1, 0])
    assert np.array_equal(odd_projection([0.3, 0.7]), [0.3])
    assert np.array_equal(odd_projection([0.6, 0.8, -1, 0]), [0.6, -1])
    with pytest.raises(ValueError):
        odd_projection([1, 0, 0])


def test_probe_input_examples():
    assert np.array_equal(probe_input([1, 2], 0.0, torus_point(2, [0.4, 0.2])), [1, 2])
    assert np.allclose(probe_input([0, 0], 0.1, [1, 0, 0, 1]), [0.1, 0.0])
    assert np.allclose(probe_input([1], 0.1, [-1, 0]), [0.9])
    with pytest.raises(ValueError):
        probe_input([1, 2], 0.1, [1, 0])


def test_grad_demod_examples():
    assert np.allclose(grad_demod([1, 0, 0, 1], 0.1), [20, 0])
    assert np.allclose(grad_demod([0, 1, 1, 0], 2.0), [0, 1])
    with pytest.raises(ValueError):
        grad_demod([1, 0], 0.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 10), st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       st.lists(st.floats(0, 2 * math.pi), min_size=2, max_size=2))
def test_reconstruction_identity(a, u, phases):
    mu = torus_point(2, phases)
    lhs = probe_input(u, a, mu) - np.asarray(u)
    assert np.allclose(lhs, a * a / 2 * grad_demod(mu, a), atol=1e-12)
    assert np.allclose(grad_demod(mu, a) * a / 2, odd_projection(mu), atol=1e-15)


def test_hess_demod_examples():
    assert np.allclose(hess_demod([1, 0], 1.0), [[8.0]])
    assert hess_demod([1, 0, 1, 0], 1.0)[0, 1] == 4.0
    assert np.allclose(hess_demod([1, 0], 0.1), [[800.0]])
    with pytest.raises(ValueError):
        hess_demod([1, 0], -1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 2 * math.pi), min_size=3, max_size=3), st.floats(1e-3, 10))
def test_hess_demod_bitwise_symmetric(phases, a):
    N = hess_demod(torus_point(3, phases), a)
    assert np.array_equal(N, N.T)


def test_common_period_examples():
    assert common_period(FrequencySet([1]), 1.0) == 1.0
    assert common_period(FrequencySet([1, 2]), 1.0) == 1.0
    assert common_period(FrequencySet([Fraction(1, 2), Fraction(1, 3)]), 1.0) == 6.0
    assert common_period_exact(FrequencySet(["1", "3/2", "7/4"]), Fraction(1, 10)) == Fraction(2, 5)


def test_common_period_makes_every_pair_periodic():
    f = default_frequencies(3)
    T = common_period(f, 0.7)
    mu0 = torus_point(3, [0.1, 0.2, 0.3])
    assert np.allclose(oscillator_at(mu0, f, 0.7, T), mu0, atol=1e-12)


def test_default_sets_are_nonresonant():
    for n in range(1, 5):
        f = default_frequencies(n)
        assert is_nonresonant(f)
        assert len(set(f.values)) == n


def test_resonance_detection():
    # 2 * 1 - 2 = 0 and 1 + 1/2 - 3/2 = 0
    assert (2, -1) in resonances(FrequencySet([1, 2]))
    assert not is_nonresonant(FrequencySet(["1", "1/2", "3/2"]))


def test_frequency_set_validation():
    with pytest.raises(ValueError):
        FrequencySet([1, 1])
    with pytest.raises(ValueError):
        FrequencySet([1, -2])
    with pytest.raises(ValueError):
        FrequencySet([])
    assert FrequencySet.parse("1, 3/2").values == (Fraction(1), Fraction(3, 2))
    assert str(FrequencySet([1, Fraction(3, 2)])) == "1,3/2"


def test_torus_check():
    check_torus(torus_point(2, [0.5, 2.0]))
    with pytest.raises(ValueError):
        check_torus([1.0, 0.1])
