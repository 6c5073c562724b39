import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from slipcoarsen.integrator import (StepControl, StiffnessError, integrate, integrate_until_event,
                                    rk4_step, step)


def test_zero_rhs_leaves_state_unchanged():
    y = np.array([1.0, -2.0])
    assert np.array_equal(rk4_step(lambda t, y: np.zeros_like(y), 0.0, y, 0.37), y)


def test_exponential_decay_to_tolerance():
    ctrl = StepControl(rel_tol=1e-10, abs_tol=1e-12)
    ts, ys = integrate(lambda t, y: -y, [1.0], 0.0, 1.0, ctrl, t_eval=[0.0, 0.5, 1.0])
    assert ts.tolist() == [0.0, 0.5, 1.0]
    assert ys[-1, 0] == pytest.approx(math.exp(-1.0), rel=1e-9)


def test_fourth_order_convergence():
    def final_error(n):
        y, dt = np.array([1.0]), 1.0 / n
        for k in range(n):
            y = rk4_step(lambda t, y: -y, k * dt, y, dt)
        return abs(y[0] - math.exp(-1.0))
    for n in (10, 20, 40):
        assert final_error(n) / final_error(2 * n) == pytest.approx(16.0, rel=0.2)


def test_matches_independent_solver_on_nonlinear_system():
    # Lotka-Volterra against a high-order reference
    def f(t, y):
        return np.array([y[0] * (1.0 - y[1]), y[1] * (y[0] - 1.0)])
    ctrl = StepControl(rel_tol=1e-11, abs_tol=1e-11)
    te = np.linspace(0.0, 5.0, 11)
    _, ys = integrate(f, [2.0, 0.5], 0.0, 5.0, ctrl, te)
    ref = solve_ivp(f, (0.0, 5.0), [2.0, 0.5], method="DOP853", rtol=1e-13, atol=1e-13, t_eval=te)
    assert np.max(np.abs(ys - ref.y.T)) <= 1e-8


def test_linear_gap_closure_event():
    ctrl = StepControl(dt_init=0.1)
    res = integrate_until_event(lambda t, y: np.array([-1.0]), [1.0], 0.0,
                                [lambda t, y: y[0] - 0.5], ctrl, t_max=10.0)
    assert res.event == 0
    assert res.t == pytest.approx(0.5, abs=1e-9)
    assert res.y[0] <= 0.5


def test_no_event_times_out_at_horizon():
    res = integrate_until_event(lambda t, y: np.zeros(1), [1.0], 0.0,
                                [lambda t, y: y[0] - 0.5], StepControl(), t_max=3.0)
    assert res.timed_out and res.t == 3.0 and res.y[0] == 1.0


@given(st.integers(2, 30), st.floats(0.1, 5.0), st.floats(0.2, 3.0))
def test_absorption_drift_first_collision(N, d, B):
    # gaps drift by B/N each, the last closes at B(N-1)/N
    rate = np.full(N, B / N)
    rate[-1] = -B * (N - 1) / N
    res = integrate_until_event(lambda t, y: rate, np.full(N, d), 0.0,
                                [lambda t, y: y[-1]], StepControl(), t_max=1e3)
    # localisation brackets the crossing to 1e-10 in absolute time
    assert res.t == pytest.approx(d * N / ((N - 1) * B), rel=1e-9, abs=1e-9)


def test_event_already_fired_returns_immediately():
    res = integrate_until_event(lambda t, y: -y, [0.1], 2.0, [lambda t, y: y[0] - 0.5],
                                StepControl(), t_max=5.0)
    assert res.t == 2.0 and res.event == 0 and res.steps == 0


def test_step_underflow_raises():
    ctrl = StepControl(rel_tol=1e-12, abs_tol=1e-12, dt_init=1e-3, dt_min=1e-4)
    with pytest.raises(StiffnessError):
        step(lambda t, y: 1e8 * np.sin(1e6 * t) * np.ones_like(y), np.ones(1), 0.0, 1e-3, ctrl)


def test_control_validation():
    with pytest.raises(ValueError):
        StepControl(rel_tol=0.0)
    with pytest.raises(ValueError):
        StepControl(dt_min=1.0, dt_init=0.1)
    with pytest.raises(ValueError):
        StepControl(safety=1.5)
