import math

import numpy as np
import pytest

from ftes.costmodel import QuadraticForm, ScalarQuadratic
from ftes.dither import FrequencySet, oscillator_derivative, torus_point
from ftes.flows import FtgesState, FtnesState, StateLayout
from ftes.sim import (NonFiniteStateError, Trajectory, constraint_violation, convergence_time, dt_limit,
                      integrate, simulate)
from conftest import make_params


def _traj(t, values, stride=1):
    values = np.asarray(values, dtype=float).reshape(len(t), -1)
    return Trajectory(dt=float(t[1] - t[0]), stride=stride, t=np.asarray(t, dtype=float), states=values)


def test_exponential_decay():
    tr = integrate(lambda s: -s, [1.0], 1e-2, 1.0, stride=1)
    assert tr.final[0] == pytest.approx(math.exp(-1), abs=1e-8)
    assert np.all(np.diff(tr.t) > 0)
    assert np.allclose(np.diff(tr.t), 1e-2)


def test_oscillator_returns_after_one_period():
    f = FrequencySet([1])
    mu0 = np.array([1.0, 0.0])
    tr = integrate(lambda s: oscillator_derivative(s, f, 1.0), mu0, 1e-3, 1.0, torus=slice(0, 2))
    assert np.allclose(tr.final, mu0, atol=1e-8)
    assert tr.monitor["max_torus_correction"] <= 1e-9


def test_zero_derivative_is_constant():
    tr = integrate(lambda s: np.zeros_like(s), [1.0, -2.0], 0.1, 5.0)
    assert np.all(tr.states == [1.0, -2.0])


def test_convergence_order():
    # dy/dt = -y^3 + sin t is smooth; RK4 error ratio on halving dt is close to 16
    f = lambda s: np.array([-s[0] ** 3 + math.sin(s[1]), 1.0])
    exact = integrate(f, [1.0, 0.0], 1e-4, 2.0).final[0]
    e1 = abs(integrate(f, [1.0, 0.0], 0.1, 2.0).final[0] - exact)
    e2 = abs(integrate(f, [1.0, 0.0], 0.05, 2.0).final[0] - exact)
    assert 8 < e1 / e2 < 32


def test_nonfinite_reports_time_and_channel():
    with pytest.raises(NonFiniteStateError) as info, np.errstate(over="ignore"):
        integrate(lambda s: np.array([0.0, s[1] ** 2]), [0.0, 1.0], 0.1, 5.0)
    assert info.value.channels == [1]
    assert 0 < info.value.time <= 5.0


def test_argument_checks():
    with pytest.raises(ValueError):
        integrate(lambda s: s, [1.0], 0.0, 1.0)
    with pytest.raises(ValueError):
        integrate(lambda s: s, [1.0], 0.1, 1.0, stride=0)
    with pytest.warns(UserWarning):
        integrate(lambda s: -s, [1.0], 0.1, 0.2, dt_limit=0.01)


def test_convergence_time_examples():
    t = np.linspace(0, 10, 10001)
    assert convergence_time(_traj(t, np.zeros_like(t)), [0.0], 0.01, channel=0) == 0.0
    assert convergence_time(_traj(t, np.ones_like(t)), [0.0], 0.01, channel=0) is None
    tc = convergence_time(_traj(t, np.exp(-t)), [0.0], 0.01, channel=0)
    assert abs(tc - math.log(100)) <= t[1] - t[0]
    # re-exit after entering: the later entry counts
    v = np.where((t > 6) & (t < 7), 1.0, np.exp(-t))
    assert convergence_time(_traj(t, v), [0.0], 0.01, channel=0) == pytest.approx(7.0, abs=2e-3)
    with pytest.raises(ValueError):
        convergence_time(_traj(t, v), [0.0], 0.0, channel=0)


def test_constraint_violation_examples():
    t = np.linspace(0, 1, 1001)
    assert constraint_violation(_traj(t, 0.1 * np.ones_like(t)), 0.5, channel=0) is None
    assert abs(constraint_violation(_traj(t, t), 0.5, channel=0) - 0.5) <= t[1] - t[0] + 1e-12
    assert constraint_violation(_traj(t, t), math.inf, channel=0) is None


def _scalar_setup(u0=0.0):
    p = make_params(n=1, k=2.0, a=0.1, eps1=0.02, eps2=0.1)
    layout = StateLayout(1)
    s0 = layout.pack(FtgesState(np.array([u0]), np.zeros(1), torus_point(1)))
    return p, s0


def test_simulate_is_deterministic():
    p, s0 = _scalar_setup()
    cost = ScalarQuadratic(1.0, 1.0)
    a = simulate(p, s0, 1e-4, 0.5, cost=cost)
    b = simulate(p, s0, 1e-4, 0.5, cost=cost)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.y, b.y)
    assert a.monitor["max_torus_correction"] <= 1e-9
    with pytest.raises(ValueError):
        a.states[0, 0] = 1.0


def test_simulate_records_probe_and_measurement():
    p, s0 = _scalar_setup(0.3)
    cost = ScalarQuadratic(1.0, 1.0)
    tr = simulate(p, s0, 1e-4, 0.1, cost=cost)
    u, mu = tr.channel("u")[:, 0], tr.channel("mu")[:, 0]
    assert np.allclose(tr.z[:, 0], u + 0.1 * mu, atol=1e-15)
    assert np.allclose(tr.y, 0.5 * (tr.z[:, 0] - 1.0) ** 2, atol=1e-15)


def test_simulate_warns_on_coarse_step():
    p, s0 = _scalar_setup()
    assert dt_limit(p) == pytest.approx(0.02 / 40)
    with pytest.warns(UserWarning):
        simulate(p, s0, 1e-3, 0.01, cost=ScalarQuadratic(1.0, 1.0))


def test_halt_policy_stops_at_crossing():
    p = make_params(n=1, k=2.0, a=0.1, eps1=0.02, eps2=0.1, eta=0.5)
    layout = StateLayout(1)
    s0 = layout.pack(FtgesState(np.array([5.0]), np.zeros(1), torus_point(1)))
    cost = ScalarQuadratic(1.0, 0.0)
    warn = simulate(p, s0, 1e-4, 0.5, cost=cost, stride=1)
    halt = simulate(p, s0, 1e-4, 0.5, cost=cost, stride=1, policy="halt")
    tv = warn.monitor["constraint_violation"]
    assert tv is not None
    assert halt.monitor["halted_step"] is not None
    assert halt.t[-1] == pytest.approx(tv, abs=1e-4)
    assert len(halt) < len(warn)


def test_newton_run_monitors_symmetry():
    H = [[4.0, 1.0], [1.0, 2.0]]
    cost = QuadraticForm(H, [-4.0, -6.0], 11.0)
    p = make_params(n=2, k=0.5, a=0.1, eps1=0.1, eps2=10.0)
    layout = StateLayout(2, newton=True)
    s0 = layout.pack(FtnesState(np.zeros(2), 0.01 * np.eye(2), np.zeros(2), torus_point(2)))
    tr = simulate(p, s0, 2.5e-4, 1.0, cost=cost, newton=True, stride=100)
    assert tr.channel("xi1").shape == (len(tr), 2, 2)
    assert tr.monitor["symmetry_drift"] <= 1e-6


def test_simulate_rejects_mismatch():
    p, s0 = _scalar_setup()
    with pytest.raises(ValueError):
        simulate(p, s0, 1e-4, 0.1, cost=QuadraticForm(np.eye(2), [0.0, 0.0]))
    with pytest.raises(ValueError):
        simulate(p, s0[:-1], 1e-4, 0.1, cost=ScalarQuadratic(1.0))
    with pytest.raises(ValueError):
        simulate(p, s0, 1e-4, 0.1, cost=ScalarQuadratic(1.0), policy="stop")
