"""Collapse and collision events and the event-driven coarsening loop."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import (CoarseningCurve, DropletArray, EventKind, EventRecord, ModelParams,
                   StateError)
from .integrator import StepControl, StiffnessError, integrate_until_event
from .reduced_ode import Regime, vector_field


@dataclass(frozen=True)
class PendingEvent:
    """An event whose threshold is reached in the current state.

    ``index`` is the collapsing droplet or the left droplet of a colliding
    pair ``(index, index + 1)``.
    """

    kind: EventKind
    index: int

    @property
    def indices(self) -> tuple:
        if self.kind is EventKind.COLLAPSE:
            return (self.index,)
        return (self.index, self.index + 1)


def collapse_margins(state: DropletArray, params: ModelParams) -> np.ndarray:
    """``P_max/2 - P_i`` for the interior droplets; non-positive means collapse."""
    return params.collapse_pressure - state.pressures[1:-1]


def collision_margins(state: DropletArray, params: ModelParams) -> np.ndarray:
    """``d_i - delta`` for ``i = 1..N``; non-positive means collision."""
    return state.gaps(params.sigma) - params.delta


def detect(state: DropletArray, params: ModelParams) -> List[PendingEvent]:
    """All events at or beyond their (closed) thresholds, by droplet index.

    Pinned droplets never collapse: they are mirror images at the domain
    ends. A collapse at ``i`` sorts before a collision whose left droplet is
    ``i``.
    """
    out = [PendingEvent(EventKind.COLLAPSE, int(k) + 1)
           for k in np.flatnonzero(collapse_margins(state, params) <= 0.0)]
    out += [PendingEvent(EventKind.COLLISION, int(k))
            for k in np.flatnonzero(collision_margins(state, params) <= 0.0)]
    out.sort(key=lambda e: (e.index, e.kind is EventKind.COLLISION))
    return out


def merged_pressure(p_left: float, p_right: float) -> float:
    """Pressure of the droplet formed by two droplets; conserves ``P^-2``."""
    return (p_left ** -2.0 + p_right ** -2.0) ** -0.5


def apply_collision(state: DropletArray, i: int, params: ModelParams) -> DropletArray:
    """Merge droplets ``i`` and ``i + 1``.

    An interior pair becomes one droplet centred on the joint extent
    ``[X_i - R_i, X_{i+1} + R_{i+1}]`` (``merge_rule="extent-center"``) or at
    the mean of the two left edges (``"left-edges"``). A pinned droplet
    absorbs its partner and stays where it is. The merged droplet keeps the
    label of the pinned or left partner.
    """
    n = state.N
    if not 0 <= i < n:
        raise IndexError(f"no droplet pair ({i}, {i + 1}) in an array with N={n}")
    if i == 0 and i + 1 == n:
        raise StateError("the two pinned droplets cannot merge")
    X, P, lab = state.positions, state.pressures, state.labels
    R = state.radii(params.sigma)
    p_new = merged_pressure(P[i], P[i + 1])
    if i == 0:
        x_new, keep = X[0], lab[0]
    elif i + 1 == n:
        x_new, keep = X[n], lab[n]
    elif params.merge_rule == "extent-center":
        x_new, keep = 0.5 * ((X[i] - R[i]) + (X[i + 1] + R[i + 1])), lab[i]
    else:
        x_new, keep = 0.5 * ((X[i] - R[i]) + (X[i + 1] - R[i + 1])), lab[i]
    positions = np.concatenate([X[:i], [x_new], X[i + 2:]])
    pressures = np.concatenate([P[:i], [p_new], P[i + 2:]])
    labels = np.concatenate([lab[:i], [keep], lab[i + 2:]])
    return DropletArray(positions, pressures, labels)


def apply_collapse(state: DropletArray, i: int) -> DropletArray:
    """Remove interior droplet ``i``; its mass leaves the reduced model."""
    if not 0 < i < state.N:
        raise StateError(f"droplet {i} is pinned or out of range and cannot collapse")
    keep = np.ones(state.count, dtype=bool)
    keep[i] = False
    return DropletArray(state.positions[keep], state.pressures[keep], state.labels[keep])


def apply_event(state: DropletArray, event: PendingEvent, params: ModelParams) -> DropletArray:
    if event.kind is EventKind.COLLAPSE:
        return apply_collapse(state, event.index)
    return apply_collision(state, event.index, params)


def event_functions(params: ModelParams, count: int):
    """Scalar event functions ``g(t, y)`` on the packed state; ``g <= 0`` fires.

    One function per event kind, each the smallest margin over the array,
    so the integrator tracks the earliest crossing of any droplet.
    """
    sq = math.sqrt(3.0 * params.sigma)

    def g_collapse(t, y):
        P = y[count + 1:2 * count - 1]
        return params.collapse_pressure - P.max() if P.size else math.inf

    def g_collision(t, y):
        X, P = y[:count], y[count:]
        R = 1.0 / (sq * P)
        return float(np.min(np.diff(X) - R[1:] - R[:-1])) - params.delta

    return [g_collapse, g_collision]


@dataclass
class Snapshot:
    """State at one output time; ``marker`` names the event a row follows."""

    t: float
    labels: np.ndarray
    positions: np.ndarray
    pressures: np.ndarray
    marker: str = ""


@dataclass
class CoarseningRun:
    """Outcome of :func:`run_coarsening`.

    ``status`` is ``"completed"`` (two pinned droplets left), ``"timeout"``
    (``t_max`` reached) or ``"stiff"`` (step-size underflow; the results
    up to the failure are kept and ``message`` explains it).
    """

    snapshots: List[Snapshot]
    events: List[EventRecord]
    curve: CoarseningCurve
    final_state: DropletArray
    t_final: float
    status: str
    message: str = ""
    initial_labels: np.ndarray = field(default=None, repr=False)

    @property
    def first_event(self) -> Optional[EventRecord]:
        return self.events[0] if self.events else None


def run_coarsening(initial: DropletArray, params: ModelParams, regime: Regime = None,
                   t_max: float = math.inf, ctrl: StepControl = StepControl(),
                   snapshot_stride: int = 1, time_scale: float = 1.0,
                   max_events: Optional[int] = None) -> CoarseningRun:
    """Integrate the reduced model through successive coarsening events.

    Between events the state follows :func:`~slipcoarsen.reduced_ode.rhs`.
    At each localized event every threshold violation is resolved in index
    order (re-detecting after each update, since a merged droplet can reach
    its neighbour) before integration restarts. ``n(t)`` counts all droplets
    relative to the initial count. ``max_events`` stops the run early.
    """
    if regime is None:
        regime = Regime.for_params(params)
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    state = initial.copy()
    state.validate(params.sigma)
    n0 = state.count

    snapshots: List[Snapshot] = []
    events: List[EventRecord] = []
    times, counts = [0.0], [1.0]
    t, dt = 0.0, None
    status, message = "timeout", ""

    def record(t_, s, marker=""):
        snapshots.append(Snapshot(t_, s.labels.copy(), s.positions.copy(),
                                  s.pressures.copy(), marker))

    record(t, state)
    while True:
        pending = detect(state, params)
        while pending:
            ev = pending[0]
            state = apply_event(state, ev, params)
            events.append(EventRecord(t, ev.kind, ev.indices, state.count))
            times.append(t)
            counts.append(state.count / n0)
            record(t, state, ev.kind.value)
            pending = detect(state, params) if state.N > 1 else []
        if state.N <= 1:
            status = "completed"
            break
        if max_events is not None and len(events) >= max_events:
            status = "stopped"
            break
        if t >= t_max:
            break

        labels, count = state.labels, state.count
        step_no = [0]

        def on_step(t_, y):
            step_no[0] += 1
            if step_no[0] % snapshot_stride == 0:
                record(t_, DropletArray.from_vector(y, labels))

        f = vector_field(params, regime, time_scale)
        try:
            res = integrate_until_event(f, state.to_vector(), t, event_functions(params, count),
                                        ctrl, t_max, on_step=on_step, dt0=dt)
        except StiffnessError as exc:
            state = DropletArray.from_vector(np.asarray(exc.y), labels)
            t, status, message = exc.t, "stiff", str(exc)
            break
        state = DropletArray.from_vector(res.y, labels)
        t, dt = res.t, res.dt_next
        if snapshots[-1].t != t:
            record(t, state)
        if res.timed_out:
            break

    curve = CoarseningCurve(np.array(times), np.array(counts), "simulation")
    return CoarseningRun(snapshots, events, curve, state, t, status, message,
                         initial.labels.copy())
