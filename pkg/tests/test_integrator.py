import numba as nb
import numpy as np
import pytest
from scipy.integrate import solve_ivp

from orientnet.integrator import STEADY, IntegrationError, solve


@nb.njit(cache=True)
def decay(t, y, p):
    return -p[0, 0] * y


@nb.njit(cache=True)
def van_der_pol(t, y, p):
    mu = p[0, 0]
    return np.array([y[1], mu * (1.0 - y[0] ** 2) * y[1] - y[0]])


@nb.njit(cache=True)
def forced(t, y, p):
    return np.array([np.cos(t)])


@nb.njit(cache=True)
def blow_up(t, y, p):
    return y * y


NO_PARAMS = np.zeros((1, 1))


def test_exponential_closed_form():
    t = np.linspace(0, 5, 51)
    res = solve(decay, np.array([[0.7]]), np.array([1.0, -2.0]), 5.0, t_eval=t)
    exact = np.exp(-0.7 * t)[:, None] * np.array([1.0, -2.0])
    assert np.max(np.abs(res.y_eval - exact)) < 1e-8
    assert res.t == pytest.approx(5.0)


def test_dense_output_against_quadrature():
    # y' = cos t  =>  y = sin t
    t = np.linspace(0, 10, 997)
    res = solve(forced, NO_PARAMS, np.zeros(1), 10.0, t_eval=t)
    assert np.max(np.abs(res.y_eval[:, 0] - np.sin(t))) < 1e-8


def test_matches_reference_solver_on_nonlinear_problem():
    t = np.linspace(0, 20, 201)
    ours = solve(van_der_pol, np.array([[2.0]]), np.array([2.0, 0.0]), 20.0, t_eval=t,
                 rtol=1e-10, atol=1e-12)
    ref = solve_ivp(lambda s, y: [y[1], 2.0 * (1 - y[0] ** 2) * y[1] - y[0]], (0, 20),
                    [2.0, 0.0], method="DOP853", t_eval=t, rtol=1e-12, atol=1e-14)
    assert np.max(np.abs(ours.y_eval - ref.y.T)) < 1e-6


def test_tolerance_controls_error():
    t = np.array([3.0])
    errs = []
    for rtol in (1e-4, 1e-7, 1e-10):
        res = solve(decay, np.array([[1.3]]), np.array([1.0]), 3.0, t_eval=t, rtol=rtol,
                    atol=rtol * 1e-3)
        errs.append(abs(res.y_eval[0, 0] - np.exp(-3.9)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-10


def test_steady_state_stop():
    res = solve(decay, np.array([[1.0]]), np.array([1.0]), 1e4, eps_ss=1e-8,
                stop_at_steady_state=True)
    assert res.status == STEADY and res.steady
    # |y'| = |y| crosses 1e-8 at t = ln(1e8)
    assert res.t_steady == pytest.approx(np.log(1e8), rel=0.05)
    assert abs(res.y[0]) < 1e-8 and np.array_equal(res.y, res.y_steady)


def test_eval_points_past_stop_are_nan():
    t = np.array([1.0, 1e3])
    res = solve(decay, np.array([[1.0]]), np.array([1.0]), 1e4, t_eval=t, eps_ss=1e-8,
                stop_at_steady_state=True)
    assert np.isfinite(res.y_eval[0, 0]) and np.isnan(res.y_eval[1, 0])


def test_record_steps_monotone():
    res = solve(decay, np.array([[1.0]]), np.array([1.0]), 2.0, record_steps=True)
    assert res.t_steps[0] == 0.0 and res.t_steps[-1] == pytest.approx(2.0)
    assert np.all(np.diff(res.t_steps) > 0)
    assert len(res.t_steps) == res.n_steps + 1


def test_blow_up_raises():
    with pytest.raises(IntegrationError):
        solve(blow_up, NO_PARAMS, np.array([1.0]), 2.0)


def test_step_budget():
    with pytest.raises(IntegrationError, match="budget"):
        solve(forced, NO_PARAMS, np.zeros(1), 1e3, max_steps=5)


def test_bad_inputs():
    with pytest.raises(ValueError):
        solve(decay, np.zeros(3), np.ones(1), 1.0)
    with pytest.raises(ValueError):
        solve(decay, NO_PARAMS, np.ones(1), 1.0, t_eval=[0.5, 0.1])
