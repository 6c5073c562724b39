import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from slipcoarsen.absorption import (FamilySpec, GapArray, coarsening_curve, collision_time,
                                    compensated_cumsum, drift_solution, simulate_exact,
                                    uniform_total_time)

gap_lists = arrays(float, st.integers(2, 60), elements=st.floats(0.01, 100.0))


def exact_times(gaps, B):
    """Rational-arithmetic oracle: update every gap at each collision."""
    g = [Fraction(x) for x in gaps]
    B = Fraction(B)
    t, out = Fraction(0), []
    while len(g) > 1:
        n = len(g)
        dt = g[-1] * n / ((n - 1) * B)
        inc = g[-1] / (n - 1)
        g = [x + inc for x in g[:-1]]
        t += dt
        out.append(t)
    return out


def harmonic(n):
    return sum(Fraction(1, k) for k in range(1, n + 1))


def test_hand_iteration_three_absorbable():
    res = simulate_exact(FamilySpec([1.0], [3]), 1.0)
    assert res.n_gaps == 4
    assert np.allclose(res.times, [4 / 3, 10 / 3, 22 / 3], rtol=1e-15)


@pytest.mark.parametrize("method", ["lazy", "suffix", "naive"])
@pytest.mark.parametrize("N", [2, 5, 50, 400])
def test_uniform_family_harmonic_closed_form(method, N):
    d, B = 1.7, 0.6
    res = simulate_exact(np.full(N, d), B, method=method)
    expected = float(Fraction(d) * N / Fraction(B) * harmonic(N - 1))
    assert res.total_time == pytest.approx(expected, rel=1e-13)
    assert uniform_total_time(d, N, B) == pytest.approx(expected, rel=1e-13)


def test_two_gaps_first_collision():
    assert simulate_exact([3.0, 0.5], 2.0).times[0] == pytest.approx(2 * 0.5 / 2.0)
    assert collision_time([3.0, 0.5], 2.0) == pytest.approx(0.5)


@given(gap_lists, st.floats(0.1, 10.0))
def test_all_methods_match_rational_oracle(gaps, B):
    ref = np.array([float(x) for x in exact_times(gaps, B)])
    for method in ("lazy", "suffix", "naive"):
        got = simulate_exact(gaps, B, method=method).times
        assert np.max(np.abs(got / ref - 1.0)) <= 1e-12


def test_drift_solution_examples():
    N, d, B = 6, 2.0, 1.5
    g = np.full(N, d)
    assert np.array_equal(drift_solution(g, B, 0.0), g)
    Tc = d * N / ((N - 1) * B)
    out = drift_solution(g, B, Tc)
    assert out[-1] == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(out[:-1], d * N / (N - 1), rtol=1e-14)
    with pytest.raises(ValueError):
        drift_solution(g, B, 1.01 * Tc)


@given(gap_lists, st.floats(0.1, 10.0), st.floats(0.0, 1.0))
def test_drift_conserves_span(gaps, B, frac):
    t = frac * collision_time(gaps, B)
    out = drift_solution(gaps, B, t)
    assert math.fsum(out) == pytest.approx(math.fsum(gaps), rel=1e-14)


@given(arrays(float, st.integers(2, 200), elements=st.floats(0.01, 10.0)), st.floats(0.2, 5.0))
def test_gap_array_span_and_order(gaps, B):
    ordered = np.sort(gaps)[::-1]
    ga = GapArray(ordered, B, ordered=True)
    span0 = ga.span()
    while ga.n > 1:
        ga.absorb_next()
        cur = ga.actual()
        assert np.all(np.diff(cur[:-1]) <= 1e-12 * cur.max())
        assert ga.span() == pytest.approx(span0, rel=1e-13)


def test_gap_array_partial_drift_then_continue():
    g = np.array([5.0, 4.0, 2.0, 1.0])
    ga = GapArray(g, 1.0)
    ga.drift(0.5 * ga.next_collision_in())
    assert ga.span() == pytest.approx(g.sum(), rel=1e-15)
    cont = simulate_exact(ga)
    full = simulate_exact(g, 1.0)
    assert np.allclose(cont.times, full.times, rtol=1e-14)
    with pytest.raises(ValueError):
        GapArray(g, 1.0).drift(10.0)


def test_ordered_mode_rejects_increasing():
    with pytest.raises(ValueError):
        GapArray([1.0, 2.0], 1.0, ordered=True)


def test_invalid_inputs():
    # one gap means no absorbable droplet: a frozen, empty run
    assert simulate_exact([1.0], 1.0).times.size == 0
    for bad in ([], [1.0, -1.0], [1.0, math.nan]):
        with pytest.raises(ValueError):
            simulate_exact(bad, 1.0)
    for B in (0.0, -1.0, math.inf):
        with pytest.raises(ValueError):
            simulate_exact([1.0, 1.0], B)
    with pytest.raises(ValueError):
        simulate_exact([1.0, 1.0], 1.0, method="other")
    with pytest.raises(ValueError):
        FamilySpec([1.0, 2.0], [1, 1])
    with pytest.raises(ValueError):
        FamilySpec([2.0, 1.0], [1, 0])


def test_lazy_large_run_keeps_span():
    g = np.sort(np.random.default_rng(0).pareto(0.5, 200_000) + 1.0)[::-1]
    res = simulate_exact(g, 1.0)
    assert res.span_defect <= 1e-12
    suffix = simulate_exact(g, 1.0, method="suffix")
    assert np.max(np.abs(res.times / suffix.times - 1.0)) <= 1e-12


def test_family_times_and_curve():
    fam = FamilySpec([3.0, 2.0, 1.0], [2, 3, 4])
    res = simulate_exact(fam, 1.0)
    ft = res.family_times()
    assert ft.shape == (3,) and np.all(np.diff(ft) < 0)
    assert ft[0] == res.total_time
    c = coarsening_curve(res)
    N = fam.n_gaps
    assert c.counts[0] == 1.0 and c.counts[-1] == pytest.approx(1.0 / N)
    c.check()
    cpg = coarsening_curve(res, per_gap=True)
    assert np.allclose(cpg.times * N, c.times)
    with pytest.raises(ValueError):
        simulate_exact([1.0, 1.0], 1.0).family_times()


def test_random_family_spec_is_valid():
    fam = FamilySpec.random(20, 10_000, np.random.default_rng(1))
    assert fam.k == 20 and fam.absorbable == 10_000 and fam.n_gaps == 10_001
    assert fam.gaps()[0] == fam.distances[0]


def test_compensated_cumsum_against_fsum():
    x = np.random.default_rng(2).uniform(0, 1, 10_000) * 10.0 ** np.random.default_rng(3).integers(-8, 8, 10_000)
    c = compensated_cumsum(x)
    assert c[-1] == pytest.approx(math.fsum(x), rel=1e-15)
