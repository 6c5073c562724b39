import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from slipcoarsen.absorption import collision_time
from slipcoarsen.core import DropletArray, EventKind, ModelParams, StateError, mass_proxy
from slipcoarsen.events import (PendingEvent, apply_collapse, apply_collision, detect,
                                merged_pressure, run_coarsening)
from slipcoarsen.integrator import StepControl
from slipcoarsen.verification import four_droplet_profile

from conftest import spaced_state


def test_quiet_state_has_no_events():
    assert detect(spaced_state([0.5, 0.6, 0.4], [3.0, 3.0]), ModelParams()) == []


def test_collapse_detected_above_threshold():
    p = ModelParams(epsilon=0.1)
    s = spaced_state([0.3, 0.6, 0.3], [3.0, 3.0])
    assert detect(s, p) == [PendingEvent(EventKind.COLLAPSE, 1)]


def test_pinned_droplets_never_collapse():
    p = ModelParams(epsilon=0.1)
    assert detect(spaced_state([0.6, 0.3, 0.6], [3.0, 3.0]), p) == []
    with pytest.raises(StateError):
        apply_collapse(spaced_state([0.6, 0.3, 0.6], [3.0, 3.0]), 0)


def test_collision_threshold_is_closed():
    p = ModelParams(collision_delta=0.25)
    s = spaced_state([0.5, 0.5, 0.5], [3.0, 0.25])
    ev = detect(s, p)
    assert ev == [PendingEvent(EventKind.COLLISION, 1)]
    assert ev[0].indices == (1, 2)


def test_merge_pressure_examples():
    assert merged_pressure(2.0, 2.0) == pytest.approx(2.0 / math.sqrt(2.0), rel=1e-15)
    assert merged_pressure(3.0, 4.0) == pytest.approx(12.0 / 5.0, rel=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_collision_conserves_mass_proxy(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 10))
    s = spaced_state(rng.uniform(0.05, 3.0, n), rng.uniform(0.05, 2.0, n - 1))
    i = int(rng.integers(0, n - 1))
    after = apply_collision(s, i, ModelParams())
    assert after.count == n - 1
    assert mass_proxy(after) == pytest.approx(mass_proxy(s), rel=1e-14)


def test_collision_positions_and_labels():
    p = ModelParams()
    s = spaced_state([0.5, 0.8, 0.9, 0.5, 0.6], [2.0, 0.04, 2.0, 2.0])
    R = s.radii(p.sigma)
    after = apply_collision(s, 1, p)
    assert after.positions[1] == pytest.approx(0.5 * (s.positions[1] - R[1] + s.positions[2] + R[2]))
    assert after.labels.tolist() == [0, 1, 3, 4]
    left = apply_collision(s, 1, p.replace(merge_rule="left-edges"))
    assert left.positions[1] == pytest.approx(0.5 * (s.positions[1] - R[1] + s.positions[2] - R[2]))
    # a pinned partner absorbs the interior droplet and stays in place
    end = apply_collision(s, 3, p)
    assert end.positions[-1] == s.positions[-1] and end.labels[-1] == 4
    start = apply_collision(s, 0, p)
    assert start.positions[0] == 0.0 and start.labels[0] == 0
    with pytest.raises(StateError):
        apply_collision(DropletArray([0.0, 5.0], [1.0, 1.0]), 0, p)


def test_collapse_bookkeeping():
    s = spaced_state([0.5, 0.8, 1.2, 0.5], [1.0, 1.5, 0.7])
    after = apply_collapse(s, 2)
    assert mass_proxy(s) - mass_proxy(after) == pytest.approx(1.2 ** -2, rel=1e-13)
    R = s.radii(1.0)
    incremental = s.gaps(1.0)[1] + s.gaps(1.0)[2] + 2 * R[2]
    assert after.gaps(1.0)[1] == pytest.approx(incremental, rel=1e-14)


def test_three_droplets_middle_collapse_freezes():
    p = ModelParams(epsilon=0.025, beta=0.0)
    s = spaced_state([0.5, 5.0, 0.5], [2.0, 2.0])
    run = run_coarsening(s, p, t_max=1.0)
    assert run.status == "completed"
    assert run.first_event.kind is EventKind.COLLAPSE and run.final_state.count == 2


def test_four_droplet_profile_zero_slip_collapses():
    run = run_coarsening(four_droplet_profile(), ModelParams(epsilon=0.025, beta=0.0), t_max=1.0,
                         ctrl=StepControl(rel_tol=1e-10, abs_tol=1e-10))
    assert run.first_event.kind is EventKind.COLLAPSE and run.first_event.indices == (1,)


def test_four_droplet_profile_finite_slip_collides():
    run = run_coarsening(four_droplet_profile(), ModelParams(epsilon=0.025, beta=5.0), t_max=1.0,
                         ctrl=StepControl(rel_tol=1e-10, abs_tol=1e-10))
    assert run.first_event.kind is EventKind.COLLISION and run.first_event.indices == (0, 1)


def test_free_film_collision_time_matches_absorption_prediction():
    p = ModelParams(epsilon=0.025, beta=math.inf)
    hi, lo = 0.01, 0.002
    s = spaced_state([hi, hi, hi, lo], [80.0, 40.0, 8.0])
    run = run_coarsening(s, p, t_max=1e4, max_events=1)
    ev = run.first_event
    assert ev.kind is EventKind.COLLISION and ev.indices == (2, 3)
    B = (hi - lo) / (p.nu * p.integral_I)
    predicted = collision_time([80.0, 40.0, 8.0 - p.delta], B)
    assert ev.time == pytest.approx(predicted, rel=0.05)


def test_uniform_pressures_time_out_flat():
    s = spaced_state([0.7] * 4, [1.0, 1.0, 1.0])
    run = run_coarsening(s, ModelParams(beta=3.0), t_max=2.0)
    assert run.status == "timeout" and run.events == []
    assert all(np.array_equal(sn.positions, s.positions) for sn in run.snapshots)
    assert run.curve.counts.tolist() == [1.0]


@pytest.mark.parametrize("beta", [0.0, 2.0, math.inf])
def test_curve_structure_and_event_margins(beta):
    rng = np.random.default_rng(3)
    s = spaced_state(rng.uniform(0.3, 1.2, 7), rng.uniform(0.2, 1.0, 6))
    p = ModelParams(epsilon=0.05, beta=beta)
    run = run_coarsening(s, p, t_max=50.0, snapshot_stride=3)
    c = run.curve
    assert np.all(np.diff(c.counts) < 0) and np.all(np.diff(c.times) >= 0)
    assert c.counts[-1] * s.count >= 2 - 1e-12
    assert [e.count_after for e in run.events] == sorted((e.count_after for e in run.events), reverse=True)
    # pre-event snapshots stay within the thresholds
    for sn in run.snapshots:
        if sn.marker:
            continue
        st_ = DropletArray(sn.positions, sn.pressures)
        assert np.all(st_.gaps(p.sigma) >= p.delta * (1 - 1e-6))
        assert np.all(st_.pressures[1:-1] <= p.collapse_pressure * (1 + 1e-6))


def test_run_rejects_bad_stride():
    with pytest.raises(ValueError):
        run_coarsening(four_droplet_profile(), ModelParams(), snapshot_stride=0)
