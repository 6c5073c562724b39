"""Classical RK4 with step-doubling error control and event localisation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np


class StiffnessError(RuntimeError):
    """The step size fell below ``dt_min``; carries the last good state."""

    def __init__(self, message, t=None, y=None, dt=None):
        super().__init__(message)
        self.t, self.y, self.dt = t, y, dt


@dataclass(frozen=True)
class StepControl:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-8
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = math.inf
    safety: float = 0.9
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if not 0 < self.safety < 1:
            raise ValueError("safety factor must lie in (0, 1)")


def rk4_step(f, t, y, dt):
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _double_step(f, t, y, dt):
    # two half steps; the difference to one full step estimates the error
    half = rk4_step(f, t, y, 0.5 * dt)
    return rk4_step(f, t + 0.5 * dt, half, 0.5 * dt)


def _extrapolate(y_full, y_two):
    # Richardson combination of the two RK4 results, fifth order
    return y_two + (y_two - y_full) / 15.0


def _advance(f, t, y, dt):
    return _extrapolate(rk4_step(f, t, y, dt), _double_step(f, t, y, dt))


def _error_norm(y_full, y_two, y_old, ctrl):
    scale = ctrl.abs_tol + ctrl.rel_tol * np.maximum(np.abs(y_old), np.abs(y_two))
    return float(np.max(np.abs(y_two - y_full) / (15.0 * scale))) if y_old.size else 0.0


def step(f, y, t, dt, ctrl: StepControl):
    """One accepted adaptive step.

    Returns ``(y_new, t_new, dt_next, err)`` where ``err <= 1`` is the scaled
    local error estimate of the accepted step and ``dt`` the size actually
    taken is ``t_new - t``.
    """
    # a step shorter than dt_min is allowed when it is clipped to a target
    dt = min(dt, ctrl.dt_max)
    while True:
        y_full = rk4_step(f, t, y, dt)
        y_two = _double_step(f, t, y, dt)
        err = _error_norm(y_full, y_two, y, ctrl)
        if err <= 1.0 and np.all(np.isfinite(y_two)):
            factor = 5.0 if err == 0.0 else min(5.0, ctrl.safety * err ** -0.2)
            dt_next = min(max(dt * factor, ctrl.dt_min), ctrl.dt_max)
            return _extrapolate(y_full, y_two), t + dt, dt_next, err
        if dt <= ctrl.dt_min:
            raise StiffnessError(f"step size underflow at t={t:.6g}", t=t, y=y, dt=dt)
        dt = max(0.5 * dt, ctrl.dt_min)


def integrate(f, y0, t0, t_end, ctrl: StepControl = StepControl(), t_eval=None):
    """Integrate without events; returns ``(ts, ys)`` at ``t_eval`` (or every step)."""
    y = np.array(y0, dtype=float)
    t, dt = float(t0), ctrl.dt_init
    targets = None if t_eval is None else list(np.asarray(t_eval, dtype=float))
    ts, ys = [], []
    if targets is not None:
        while targets and targets[0] <= t:
            ts.append(targets.pop(0))
            ys.append(y.copy())
    else:
        ts.append(t)
        ys.append(y.copy())
    n = 0
    while t < t_end:
        stop = t_end if targets is None or not targets else min(targets[0], t_end)
        h = min(dt, stop - t)
        y, t_new, dt_next, _ = step(f, y, t, h, ctrl)
        # a step clipped to a target must not shrink the controller's proposal
        dt = max(dt, dt_next) if (h < dt and t_new - t == h) else dt_next
        t = _snap(t_new, stop)
        if targets is None:
            ts.append(t)
            ys.append(y.copy())
        else:
            while targets and targets[0] <= t:
                ts.append(targets.pop(0))
                ys.append(y.copy())
        n += 1
        if n > ctrl.max_steps:
            raise StiffnessError("maximum number of steps exceeded", t=t, y=y, dt=dt)
    return np.array(ts), np.array(ys)


@dataclass
class EventResult:
    """Outcome of :func:`integrate_until_event`.

    ``event`` is the index of the triggered event function, or ``None`` when
    ``t_max`` was reached first (a timeout).
    """

    t: float
    y: np.ndarray
    event: Optional[int]
    steps: int = 0
    dt_next: Optional[float] = None

    @property
    def timed_out(self) -> bool:
        return self.event is None


def integrate_until_event(f, y0, t0, events: Sequence[Callable], ctrl: StepControl,
                          t_max: float, on_step: Optional[Callable] = None,
                          dt0: Optional[float] = None, loc_tol: float = 1e-10):
    """Step until an event function ``g(t, y)`` becomes non-positive.

    Event functions are positive while no event is pending. The crossing is
    bracketed by the last accepted step and located by bisection, re-taking
    the (double) RK4 step from the bracket start with shortened sizes until
    the bracket is below ``loc_tol * max(1, t)``. The returned state is at
    the right end of the final bracket, where the event has fired; when
    several fire there the lowest index wins.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    dt = ctrl.dt_init if dt0 is None else dt0
    fired = _fired(events, t, y)
    if fired:
        return EventResult(t, y, fired[0], 0, dt)

    n = 0
    while t < t_max:
        h = min(dt, t_max - t)
        y_new, t_new, dt_next, _ = step(f, y, t, h, ctrl)
        dt = max(dt, dt_next) if (h < dt and t_new - t == h) else dt_next
        t_new = _snap(t_new, t_max)
        n += 1
        fired = _fired(events, t_new, y_new)
        if fired:
            lo, hi, y_hi = 0.0, t_new - t, y_new
            tol = loc_tol * max(1.0, abs(t))
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                y_mid = _advance(f, t, y, mid)
                if _fired(events, t + mid, y_mid):
                    hi, y_hi = mid, y_mid
                else:
                    lo = mid
            t_ev = t + hi
            if on_step is not None:
                on_step(t_ev, y_hi)
            return EventResult(t_ev, y_hi, _fired(events, t_ev, y_hi)[0], n, dt)
        t, y = t_new, y_new
        if on_step is not None:
            on_step(t, y)
        if n > ctrl.max_steps:
            raise StiffnessError("maximum number of steps exceeded", t=t, y=y, dt=dt)
    return EventResult(t, y, None, n, dt)


def _snap(t, target):
    return target if abs(t - target) <= 1e-14 * max(1.0, abs(target)) else t


def _fired(events, t, y):
    return [k for k, g in enumerate(events) if g(t, y) <= 0.0]
