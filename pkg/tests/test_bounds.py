import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftes.bounds import (InadmissibleParameters, ShapeParams, alphas, gain_for_tstar_gradient,
                         gain_for_tstar_newton, t_star_gradient, t_star_newton)


def test_alphas_examples():
    assert alphas(3, 1.5) == (0.5, -1.0)
    a1, a2 = alphas(4, 1.5)
    assert a1 == pytest.approx(2 / 3) and a2 == -1.0
    assert 0.999 < alphas(1e6, 1.5)[0] < 1


@pytest.mark.parametrize("q1,q2,field", [(2, 1.5, "q1"), (1.5, 1.5, "q1"), (3, 2, "q2"), (3, 1, "q2")])
def test_alphas_name_failed_bound(q1, q2, field):
    with pytest.raises(InadmissibleParameters, match=field):
        alphas(q1, q2)


def test_gradient_bound_examples():
    # gamma1 = 2^1.625, gamma2 = 2^2.75 at kappa = 1
    by_hand = 4 * (1 / (2**1.625 * 0.5) + 1 / 2**2.75)
    assert t_star_gradient(1, 3, 1.5, 1) == pytest.approx(by_hand, rel=1e-14)
    assert t_star_gradient(1, 3, 1.5, 1) == pytest.approx(3.189, abs=1e-3)
    assert t_star_gradient(2, 3, 1.5, 1) == pytest.approx(1.5945, abs=1e-3)
    by_hand2 = 4 * (1 / (2**1.625 * 2**0.75 * 0.5) + 1 / (2**2.75 * 2**1.5))
    assert t_star_gradient(1, 3, 1.5, 2) == pytest.approx(by_hand2, rel=1e-14)
    assert t_star_gradient(1, 3, 1.5, 2) == pytest.approx(1.7524, abs=1e-3)


def test_gradient_gain_examples():
    assert gain_for_tstar_gradient(3.189, 3, 1.5, 1) == pytest.approx(1.0, abs=1e-3)
    assert gain_for_tstar_gradient(1, 3, 1.5, 1) == pytest.approx(3.189, abs=1e-3)


def test_newton_bound_examples():
    assert t_star_newton(0.025, 3, 1.5) == pytest.approx(123.4, abs=0.1)
    assert t_star_newton(0.03085, 3, 1.5) == pytest.approx(100.0, abs=0.1)
    assert t_star_newton(1, 3, 1.5) == pytest.approx(2**0.25 / 0.5 + 2**-0.5, rel=1e-14)
    assert t_star_newton(1, 3, 1.5) == pytest.approx(3.0855, abs=1e-3)
    assert gain_for_tstar_newton(100, 3, 1.5) == pytest.approx(0.030855, abs=1e-4)
    assert gain_for_tstar_newton(123.4, 3, 1.5) == pytest.approx(0.025, abs=1e-4)


admissible_q1 = st.floats(2.0001, 100.0)
admissible_q2 = st.floats(1.05, 1.95)


@settings(max_examples=200, deadline=None)
@given(admissible_q1, admissible_q2, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_round_trips(q1, q2, k, kappa):
    T = t_star_gradient(k, q1, q2, kappa)
    assert gain_for_tstar_gradient(T, q1, q2, kappa) == pytest.approx(k, rel=1e-12)
    Tn = t_star_newton(k, q1, q2)
    assert gain_for_tstar_newton(Tn, q1, q2) == pytest.approx(k, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(admissible_q1, admissible_q2, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_bound_scales_as_inverse_gain(q1, q2, k, kappa):
    assert t_star_gradient(k, q1, q2, kappa) * k == pytest.approx(t_star_gradient(1.0, q1, q2, kappa), rel=1e-12)


def test_positive_on_grid_and_monotone_in_kappa():
    for q1 in np.linspace(2.01, 100, 25):
        for q2 in np.linspace(1.01, 1.99, 25):
            assert t_star_newton(1.0, q1, q2) > 0
            vals = [t_star_gradient(1.0, q1, q2, kap) for kap in np.geomspace(0.01, 100, 30)]
            assert all(v > 0 for v in vals)
            assert all(a > b for a, b in zip(vals, vals[1:]))


def test_bad_gain_and_kappa():
    with pytest.raises(InadmissibleParameters, match="k"):
        t_star_newton(0.0, 3, 1.5)
    with pytest.raises(InadmissibleParameters, match="kappa_pl"):
        t_star_gradient(1.0, 3, 1.5, -1.0)
    with pytest.raises(InadmissibleParameters, match="T"):
        gain_for_tstar_newton(math.inf, 3, 1.5)


def test_shape_params():
    s = ShapeParams.from_q(3, 1.5, 0.2)
    assert (s.alpha1, s.alpha2, s.k) == (0.5, -1.0, 0.2)
    assert not s.is_classic
    c = ShapeParams.classic(0.5)
    assert (c.alpha1, c.alpha2) == (0.0, 0.0) and c.is_classic
    with pytest.raises(InadmissibleParameters):
        ShapeParams.from_q(3, 1.5, -1.0)


def test_extreme_q2_does_not_overflow():
    T = t_star_gradient(1.0, 3.0, 1.0001, 1.0)
    assert math.isfinite(T) and T == pytest.approx(4 / (2**1.625 * 0.5), rel=1e-9)
