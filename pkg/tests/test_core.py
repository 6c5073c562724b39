import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from slipcoarsen.core import (CoarseningCurve, DropletArray, ModelParams, StateError,
                              cap_volume_coefficient, collapse_threshold, compute_integral_I,
                              integral_I_profile_form, mass_proxy, pressure_from_radius,
                              radius_from_pressure, reflected_mass)
from slipcoarsen.events import apply_collision


def test_integral_matches_high_precision_oracle():
    mpmath.mp.dps = 40
    oracle = mpmath.quad(lambda t: (5 * t**3 - t**2 - t) / mpmath.sqrt(6 * t + 3), [0, 1])
    assert abs(compute_integral_I() - float(oracle)) <= 1e-15
    # closed form of the same integral
    assert abs(float(oracle) - (3 + math.sqrt(3)) / 35) <= 1e-15


def test_integral_height_form_agrees():
    assert abs(integral_I_profile_form() - compute_integral_I()) <= 1e-9


def test_published_reciprocal_form_is_not_the_integral():
    published = 1.0 / (35.0 * (3.0 + math.sqrt(3.0)))
    assert abs(published - 0.0060379) < 1e-7
    assert abs(compute_integral_I() - published) > 0.1


@pytest.mark.parametrize("P,sigma,R", [(1.0, 1 / 3, 1.0), (2.0, 1 / 3, 0.5)])
def test_radius_examples(P, sigma, R):
    assert radius_from_pressure(P, sigma) == pytest.approx(R, rel=1e-15)


@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_radius_round_trip(logp, sigma):
    P = 10.0 ** logp
    assert pressure_from_radius(radius_from_pressure(P, sigma), sigma) == pytest.approx(P, rel=4e-16)


def test_radius_rejects_nonpositive():
    with pytest.raises(ValueError):
        radius_from_pressure(0.0, 1.0)
    with pytest.raises(ValueError):
        radius_from_pressure(1.0, -1.0)


def test_collapse_threshold_examples():
    assert collapse_threshold(0.1) == 0.52734375
    assert collapse_threshold(27 / 256) == 0.5
    assert collapse_threshold(0.01) / collapse_threshold(0.02) == 2.0
    with pytest.raises(ValueError):
        collapse_threshold(0.0)


def test_cap_volume_coefficient_from_volume():
    # V(P) = c P^-2 with c = 4/(9 sigma sqrt(12 sigma)); dP/dV = -P^3/(2c)
    for sigma in (0.5, 1.0, 3.0):
        c = 4.0 / (9.0 * sigma * math.sqrt(12.0 * sigma))
        assert cap_volume_coefficient(sigma) == pytest.approx(1.0 / (2.0 * c), rel=1e-14)


def test_mass_proxy_examples():
    assert mass_proxy(DropletArray([0.0, 5.0], [1.0, 1.0])) == 2.0
    s = DropletArray([0.0, 3.0, 6.0, 9.0], [1.0, 3.0, 4.0, 1.0])
    merged = apply_collision(s, 1, ModelParams())
    assert merged.pressures[1] == pytest.approx(12 / 5, rel=1e-15)
    assert Fraction(1, 9) + Fraction(1, 16) == Fraction(25, 144)
    assert mass_proxy(merged) == pytest.approx(mass_proxy(s), rel=1e-15)


def test_reflected_mass_weights_ends_by_half():
    s = DropletArray([0.0, 3.0, 6.0], [1.0, 2.0, 0.5])
    assert reflected_mass(s) == pytest.approx(0.25 + 0.5 * (1.0 + 4.0))


def test_model_params_validation():
    p = ModelParams()
    assert p.delta == pytest.approx(2 * p.epsilon)
    assert p.integral_I == compute_integral_I()
    assert ModelParams(collision_delta=0.3).delta == 0.3
    for bad in ({"epsilon": 0}, {"sigma": -1}, {"nu": 0}, {"beta": -1}, {"beta": math.nan},
                {"collapse_fraction": 0}, {"merge_rule": "x"}, {"collision_delta": 0}):
        with pytest.raises(ValueError):
            ModelParams(**bad)
    assert p.replace(beta=3.0).beta == 3.0


def test_droplet_array_validation():
    with pytest.raises(StateError):
        DropletArray([0.0], [1.0])
    with pytest.raises(StateError):
        DropletArray([0.0, 1.0], [1.0])
    with pytest.raises(StateError):
        DropletArray([1.0, 5.0], [1.0, 1.0]).validate(1.0)
    with pytest.raises(StateError):
        DropletArray([0.0, 0.5], [1.0, 1.0]).validate(1.0)  # overlapping caps
    s = DropletArray([0.0, 3.0, 6.0], [1.0, 1.0, 1.0])
    s.validate(1.0)
    assert np.allclose(s.gaps(1.0), 3.0 - 2.0 / math.sqrt(3.0))
    assert np.array_equal(DropletArray.from_vector(s.to_vector()).positions, s.positions)


def test_curve_evaluation_and_checks():
    c = CoarseningCurve([0.0, 1.0, 2.0], [1.0, 0.5, 0.25])
    assert c(-1.0) == 1.0
    assert c(1.0) == 0.5
    assert np.array_equal(c([0.5, 1.5, 9.0]), [1.0, 0.5, 0.25])
    c.check()
    with pytest.raises(ValueError):
        CoarseningCurve([0.0, 1.0], [0.5, 0.8]).check()
    with pytest.raises(ValueError):
        CoarseningCurve([0.0, 1.0], [1.0])
