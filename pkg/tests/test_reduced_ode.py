import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from slipcoarsen.core import DropletArray, ModelParams
from slipcoarsen.reduced_ode import (Regime, RegimeError, assemble_velocity_system, fluxes,
                                     pressure_rates, rescaled_gaps, rhs, vector_field,
                                     zero_slip_scaling)
from slipcoarsen.tridiagonal import TridiagonalSystem, solve_tridiagonal

from conftest import spaced_state

REGIMES = [(Regime.ZERO_BETA, 0.0), (Regime.FINITE_BETA, 3.0), (Regime.INFINITE_BETA, math.inf)]


# ---------------------------------------------------------------- tridiagonal

def test_identity_system_returns_rhs():
    b = np.array([1.0, -2.0, 3.5])
    sys_ = TridiagonalSystem(np.zeros(2), np.ones(3), np.zeros(2), b)
    assert np.array_equal(solve_tridiagonal(sys_), b)


@pytest.mark.parametrize("seed", range(5))
def test_dominant_system_matches_dense_solve(seed):
    rng = np.random.default_rng(seed)
    n = 50
    sub, sup = rng.uniform(-1, 1, n - 1), rng.uniform(-1, 1, n - 1)
    diag = 2.5 + rng.uniform(0, 1, n)
    b = rng.normal(size=n)
    s = TridiagonalSystem(sub, diag, sup, b)
    x = solve_tridiagonal(s)
    dense = np.diag(diag) + np.diag(sub, -1) + np.diag(sup, 1)
    assert np.array_equal(s.to_dense(), dense)
    assert np.max(np.abs(x - np.linalg.solve(dense, b))) <= 1e-10
    assert np.max(np.abs(s.matvec(x) - b)) <= 1e-10


def test_inconsistent_bands_rejected():
    with pytest.raises(ValueError):
        TridiagonalSystem(np.zeros(1), np.ones(3), np.zeros(2), np.ones(3))


# ---------------------------------------------------------------- rescaling

def test_rescaled_gaps_examples():
    p = ModelParams(beta=2.0)
    scale = p.integral_I * p.nu * p.beta
    s = spaced_state([1.0, 1.0, 1.0], [scale, 2 * scale])
    assert np.allclose(rescaled_gaps(s, p), [1.0, 2.0], rtol=1e-13)
    assert np.all(rescaled_gaps(s, p.replace(beta=1e12)) < 1e-9)
    with pytest.raises(RegimeError):
        rescaled_gaps(s, p.replace(beta=math.inf))


# ---------------------------------------------------------------- right-hand side

@pytest.mark.parametrize("regime,beta", REGIMES)
def test_uniform_pressure_is_fixed_point(regime, beta):
    s = spaced_state([0.7] * 5, [1.0, 2.0, 0.5, 3.0])
    d = rhs(s, ModelParams(beta=beta), regime)
    assert np.all(d.xdot == 0.0) and np.all(d.pdot == 0.0)


def test_free_film_single_interior_droplet_by_hand():
    p = ModelParams(beta=math.inf)
    s = spaced_state([1.0, 1.5, 2.0], [3.0, 4.0])
    d = rhs(s, p)
    assert d.xdot[1] == pytest.approx(-1.0 / (2.0 * p.integral_I), rel=1e-14)
    assert d.xdot[0] == 0.0 and d.xdot[2] == 0.0


def test_finite_slip_rows_converge_to_free_film_rows():
    s = spaced_state([0.8, 1.1, 0.6, 1.3, 0.9], [1.0, 0.7, 1.5, 0.9])
    inf_sys = assemble_velocity_system(s, ModelParams(beta=math.inf), Regime.INFINITE_BETA)
    errs = []
    for beta in (1e2, 1e4, 1e6):
        fin = assemble_velocity_system(s, ModelParams(beta=beta), Regime.FINITE_BETA)
        # finite rows carry a factor -1/4 relative to the Laplacian form in the limit
        e = max(np.max(np.abs(-4 * fin.to_dense() - inf_sys.to_dense())),
                np.max(np.abs(-4 * fin.rhs - inf_sys.rhs)))
        errs.append(e)
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-4
    assert errs[1] / errs[2] == pytest.approx(100.0, rel=0.05)


def test_zero_slip_three_droplets_by_hand():
    p = ModelParams(beta=0.0)
    s = spaced_state([2.0, 1.0, 2.0], [4.0, 4.0])
    d = s.gaps(p.sigma)[0]
    C1 = p.epsilon * p.kappa * 1.0
    # two higher-pressure neighbours feed the middle droplet, which grows, so its pressure drops
    assert rhs(s, p).pdot[1] == pytest.approx(-2.0 * C1 / d, rel=1e-14)


@pytest.mark.parametrize("regime,beta", REGIMES)
def test_reflected_mass_is_conserved(regime, beta):
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(3, 9))
        s = spaced_state(rng.uniform(0.2, 2.0, n), rng.uniform(0.3, 3.0, n - 1))
        d = rhs(s, ModelParams(beta=beta), regime)
        rate = -2.0 * s.pressures ** -3.0 * d.pdot
        w = np.ones(n)
        w[0] = w[-1] = 0.5
        scale = np.sum(np.abs(rate))
        assert abs(math.fsum(w * rate)) <= 1e-12 * max(scale, 1.0)


@given(arrays(float, st.integers(3, 8), elements=st.floats(0.2, 2.0)), st.floats(0.05, 50.0))
def test_finite_slip_velocities_solve_their_system(P, beta):
    s = spaced_state(P, np.linspace(0.5, 2.0, P.size - 1))
    p = ModelParams(beta=beta)
    sys_ = assemble_velocity_system(s, p, Regime.FINITE_BETA)
    v = rhs(s, p).xdot
    assert np.max(np.abs(sys_.matvec(v[1:-1]) - sys_.rhs)) <= 1e-12 * (1 + np.max(np.abs(sys_.rhs)))


def test_fluxes_run_downhill_in_pressure():
    s = spaced_state([2.0, 1.0, 0.5], [1.0, 1.0])
    J = fluxes(s, np.zeros(3), ModelParams(beta=0.0), Regime.ZERO_BETA)
    assert np.all(J < 0)


def test_zero_slip_scaling_approaches_zero_slip_rhs():
    s = spaced_state([0.8, 1.2, 0.6, 1.0], [0.7, 1.0, 1.4])
    base = ModelParams()
    target = vector_field(base.replace(beta=0.0), Regime.ZERO_BETA)(0.0, s.to_vector())
    devs = []
    for beta in (1e-1, 1e-2, 1e-3):
        p, scale = zero_slip_scaling(base, beta)
        f = vector_field(p, Regime.FINITE_BETA, scale)(0.0, s.to_vector())
        devs.append(np.max(np.abs(f - target)))
    assert devs[0] > devs[1] > devs[2]
    with pytest.raises(ValueError):
        zero_slip_scaling(base, 0.0)


def test_two_pinned_droplets_are_frozen():
    d = rhs(DropletArray([0.0, 5.0], [1.0, 2.0]), ModelParams(beta=0.0))
    assert np.all(d.xdot == 0) and np.all(d.pdot == 0)


def test_pressure_rates_with_zero_velocity_uniform():
    s = spaced_state([1.0] * 4, [1.0] * 3)
    assert np.all(pressure_rates(s, np.zeros(4), ModelParams(beta=3.0), Regime.FINITE_BETA) == 0)
