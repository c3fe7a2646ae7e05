"""Adaptive Dormand-Prince 5(4) integrator compiled with numba.

The right-hand side is any ``@numba.njit`` function ``fun(t, y, p)`` where
``p`` is a 2-D float64 parameter array.  Each accepted step reuses the last
stage (FSAL), so ``fun`` at the new state is available for free and drives
the optional steady-state stop.  Dense output uses the 4th-order continuous
extension of Hairer, Norsett & Wanner (Solving ODEs I, p. 192).
"""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

__all__ = ["IntegrationError", "SolverResult", "solve", "OK", "STEADY", "UNDERFLOW", "MAX_STEPS"]

OK, STEADY, UNDERFLOW, MAX_STEPS = 0, 1, 2, 3

# Butcher tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
A71, A73, A74, A75, A76 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
# 5th-order weights minus embedded 4th-order weights
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
# continuous extension
D1, D3, D4, D5, D6, D7 = (-12715105075.0 / 11282082432.0, 87487479700.0 / 32700410799.0,
                          -10690763975.0 / 1880347072.0, 701980252875.0 / 199316789632.0,
                          -1453857185.0 / 822651844.0, 69997945.0 / 29380423.0)

SAFETY, FAC_MIN, FAC_MAX = 0.9, 0.2, 10.0


class IntegrationError(RuntimeError):
    """Step-size underflow or step budget exhausted."""


@nb.njit(cache=True, nogil=True)
def _rms(v, sc):
    acc = 0.0
    for i in range(v.shape[0]):
        r = v[i] / sc[i]
        acc += r * r
    return np.sqrt(acc / max(v.shape[0], 1))


@nb.njit(cache=True, nogil=True)
def _inf_norm(v):
    m = 0.0
    for i in range(v.shape[0]):
        a = abs(v[i])
        if a > m:
            m = a
    return m


@nb.njit(cache=True, nogil=True)
def _initial_step(fun, p, t0, y0, f0, rtol, atol):
    sc = atol + rtol * np.abs(y0)
    d0 = _rms(y0, sc)
    d1 = _rms(f0, sc)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = fun(t0 + h0, y1, p)
    d2 = _rms(f1 - f0, sc) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1)


@nb.njit(cache=True, nogil=True)
def _dopri5(fun, p, t0, y0, t_end, t_eval, rtol, atol, eps_ss, stop_at_ss,
            record, max_steps):
    n = y0.shape[0]
    n_eval = t_eval.shape[0]
    y_eval = np.empty((n_eval, n))
    i_eval = 0

    cap = 256 if record else 1
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    n_rec = 0

    t = t0
    y = y0.copy()
    k1 = fun(t, y, p)
    t_ss = -1.0
    y_ss = y.copy()
    if eps_ss > 0.0 and _inf_norm(k1) < eps_ss:
        t_ss = t
    while i_eval < n_eval and t_eval[i_eval] <= t:
        y_eval[i_eval] = y
        i_eval += 1
    if record:
        ts[0] = t
        ys[0] = y
        n_rec = 1
    if stop_at_ss and t_ss >= 0.0:
        return STEADY, t, y, y_eval, i_eval, ts[:n_rec], ys[:n_rec], 0, t_ss, y_ss
    if n == 0 or t >= t_end:
        return OK, t, y, y_eval, i_eval, ts[:n_rec], ys[:n_rec], 0, t_ss, y_ss

    h = _initial_step(fun, p, t, y, k1, rtol, atol)
    rejected = False
    n_steps = 0
    status = OK
    while t < t_end:
        if n_steps >= max_steps:
            status = MAX_STEPS
            break
        if h < 1e-14 * max(1.0, abs(t)):
            status = UNDERFLOW
            break
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        k2 = fun(t + C2 * h, y + h * (A21 * k1), p)
        k3 = fun(t + C3 * h, y + h * (A31 * k1 + A32 * k2), p)
        k4 = fun(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3), p)
        k5 = fun(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4), p)
        k6 = fun(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5), p)
        y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        t_new = t_end if last else t + h
        k7 = fun(t_new, y_new, p)
        err_vec = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec, sc)
        if err <= 1.0:
            n_steps += 1
            # dense output over (t, t_new]
            if i_eval < n_eval and t_eval[i_eval] <= t_new:
                ydiff = y_new - y
                bspl = h * k1 - ydiff
                r4 = ydiff - h * k7 - bspl
                r5 = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)
                while i_eval < n_eval and t_eval[i_eval] <= t_new:
                    s = (t_eval[i_eval] - t) / h
                    s1 = 1.0 - s
                    y_eval[i_eval] = y + s * (ydiff + s1 * (bspl + s * (r4 + s1 * r5)))
                    i_eval += 1
            t = t_new
            y = y_new
            k1 = k7
            if record:
                if n_rec == cap:
                    cap *= 2
                    ts2 = np.empty(cap)
                    ys2 = np.empty((cap, n))
                    ts2[:n_rec] = ts[:n_rec]
                    ys2[:n_rec] = ys[:n_rec]
                    ts = ts2
                    ys = ys2
                ts[n_rec] = t
                ys[n_rec] = y
                n_rec += 1
            if eps_ss > 0.0 and t_ss < 0.0 and _inf_norm(k1) < eps_ss:
                t_ss = t
                y_ss = y.copy()
                if stop_at_ss:
                    status = STEADY
                    break
            if err == 0.0:
                fac = FAC_MAX
            else:
                fac = min(FAC_MAX, max(FAC_MIN, SAFETY * err ** -0.2))
            if rejected:
                fac = min(fac, 1.0)
            rejected = False
            h = h * fac
        else:
            rejected = True
            h = h * max(FAC_MIN, SAFETY * err ** -0.2)
    return status, t, y, y_eval, i_eval, ts[:n_rec], ys[:n_rec], n_steps, t_ss, y_ss


@dataclass
class SolverResult:
    status: int
    t: float
    y: np.ndarray
    t_eval: np.ndarray
    y_eval: np.ndarray
    t_steps: np.ndarray
    y_steps: np.ndarray
    n_steps: int
    t_steady: float | None
    y_steady: np.ndarray | None = None

    @property
    def steady(self) -> bool:
        return self.t_steady is not None


def solve(fun, params, y0, t_end, *, t_eval=None, rtol=1e-9, atol=1e-12,
          eps_ss=None, stop_at_steady_state=False, record_steps=False,
          max_steps=10_000_000, t0=0.0) -> SolverResult:
    """Integrate ``dy/dt = fun(t, y, params)`` from ``t0`` to ``t_end``.

    With ``eps_ss`` set, the first accepted state whose derivative has sup
    norm below ``eps_ss`` is reported as ``t_steady``; with
    ``stop_at_steady_state`` integration ends there.  ``t_eval`` points past
    the stopping time are returned as NaN.
    """
    y0 = np.ascontiguousarray(y0, dtype=np.float64)
    params = np.ascontiguousarray(params, dtype=np.float64)
    if params.ndim != 2:
        raise ValueError("params must be a 2-D array")
    if t_eval is None:
        t_eval = np.empty(0)
    t_eval = np.ascontiguousarray(t_eval, dtype=np.float64)
    if t_eval.size and np.any(np.diff(t_eval) < 0):
        raise ValueError("t_eval must be sorted")
    status, t, y, y_eval, n_filled, ts, ys, n_steps, t_ss, y_ss = _dopri5(
        fun, params, float(t0), y0, float(t_end), t_eval, float(rtol), float(atol),
        -1.0 if eps_ss is None else float(eps_ss), bool(stop_at_steady_state),
        bool(record_steps), int(max_steps))
    if status == UNDERFLOW:
        raise IntegrationError(f"step size underflow at t={t:.6g}")
    if status == MAX_STEPS:
        raise IntegrationError(f"step budget of {max_steps} exhausted at t={t:.6g}")
    y_eval[n_filled:] = np.nan
    if t_ss < 0:
        return SolverResult(status, t, y, t_eval, y_eval, ts, ys, n_steps, None, None)
    return SolverResult(status, t, y, t_eval, y_eval, ts, ys, n_steps, t_ss, y_ss)
