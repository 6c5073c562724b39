"""Right-hand sides of the reduced droplet ODEs in the three slip regimes.

Positions move on the fast time scale through a coupled (tridiagonal)
system; pressures change on the slow ``O(epsilon)`` scale through the
mass fluxes in the precursor layer between neighbouring droplets. All
three regimes share one flux representation:

* finite slip:   ``J_i = [(P_i - P_{i-1}) - I nu (Xd_i + Xd_{i-1})] / (I nu (dt_i + 2))``
  with the rescaled gap ``dt_i = d_i / (I nu beta)``;
* infinite slip: the same with ``dt_i = 0``;
* zero slip (time rescaled): ``J_i = (P_i - P_{i-1}) / d_i``.

``J_i`` is positive when mass flows from droplet ``i`` towards ``i - 1``.
Pressures follow ``Pd_i = -w_i C_i (J_{i+1} - J_i)`` with
``C_i = epsilon kappa P_i^3``, ``J_0 = J_{N+1} = 0`` and weight ``w = 2`` on
the pinned end droplets (they are half droplets under reflection).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import DropletArray, ModelParams
from .tridiagonal import TridiagonalSystem, solve_tridiagonal


class Regime(str, enum.Enum):
    FINITE_BETA = "finite"
    INFINITE_BETA = "infinite"
    ZERO_BETA = "zero"

    @classmethod
    def for_params(cls, params: ModelParams) -> "Regime":
        if math.isinf(params.beta):
            return cls.INFINITE_BETA
        if params.beta == 0:
            return cls.ZERO_BETA
        return cls.FINITE_BETA


class RegimeError(ValueError):
    pass


@dataclass
class StateDerivative:
    xdot: np.ndarray
    pdot: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.xdot, self.pdot])


def _check_finite_beta(params: ModelParams):
    if not (0 < params.beta < math.inf):
        raise RegimeError("rescaled gaps need a finite positive slip length")


def rescaled_gaps(state: DropletArray, params: ModelParams) -> np.ndarray:
    """``d_i / (I nu beta)`` for ``i = 1..N``."""
    _check_finite_beta(params)
    return state.gaps(params.sigma) / (params.integral_I * params.nu * params.beta)


def _gap_weights(state, params, regime):
    # 1/(dt_i + 2); the free-film limit has dt_i -> 0
    if regime is Regime.FINITE_BETA:
        return 1.0 / (rescaled_gaps(state, params) + 2.0)
    return np.full(state.N, 0.5)


def assemble_velocity_system(state: DropletArray, params: ModelParams,
                             regime: Regime) -> TridiagonalSystem:
    """Linear system for the interior velocities ``Xd_1..Xd_{N-1}``.

    The finite-slip row for droplet ``i`` reads ``(1 - c_i(w_i + w_{i+1})) Xd_i
    - c_i w_i Xd_{i-1} - c_i w_{i+1} Xd_{i+1} = -a_i [(P_{i+1}-P_i) w_{i+1} +
    (P_i-P_{i-1}) w_i]`` with ``a_i = P_i/(2/(sqrt(3 sigma) beta) + 2 I nu P_i)``
    and ``c_i = I nu a_i``. The free-film rows are the discrete Laplacian
    ``Xd_{i+1} - 2 Xd_i + Xd_{i-1} = (P_{i+1} - P_{i-1})/(nu I)``. The zero-slip
    velocities are explicit and come back as an identity system.
    """
    if state.N < 2:
        raise ValueError("velocity system needs at least one interior droplet")
    P = state.pressures
    I, nu = params.integral_I, params.nu
    n = state.N - 1

    if regime is Regime.ZERO_BETA:
        d = state.gaps(params.sigma)
        grad = np.diff(P) / d
        v = -(P[1:-1] * math.sqrt(3.0 * params.sigma) * I / 2.0) * (grad[1:] + grad[:-1])
        return TridiagonalSystem(np.zeros(n - 1), np.ones(n), np.zeros(n - 1), v)

    if regime is Regime.INFINITE_BETA:
        rhs = (P[2:] - P[:-2]) / (nu * I)
        return TridiagonalSystem(np.ones(n - 1), np.full(n, -2.0), np.ones(n - 1), rhs)

    _check_finite_beta(params)
    w = _gap_weights(state, params, regime)
    Pi = P[1:-1]
    a = Pi / (2.0 / (math.sqrt(3.0 * params.sigma) * params.beta) + 2.0 * I * nu * Pi)
    c = I * nu * a
    w_left, w_right = w[:-1], w[1:]
    diag = 1.0 - c * (w_left + w_right)
    sub = -(c * w_left)[1:]
    sup = -(c * w_right)[:-1]
    dP = np.diff(P)
    rhs = -a * (dP[1:] * w_right + dP[:-1] * w_left)
    return TridiagonalSystem(sub, diag, sup, rhs)


def solve_velocities(system: TridiagonalSystem) -> np.ndarray:
    """Interior velocities with the pinned end velocities (zero) appended."""
    v = solve_tridiagonal(system)
    return np.concatenate([[0.0], v, [0.0]])


def fluxes(state: DropletArray, xdot: np.ndarray, params: ModelParams,
           regime: Regime) -> np.ndarray:
    """Precursor-layer fluxes ``J_1..J_N`` between neighbouring droplets."""
    P = state.pressures
    dP = np.diff(P)
    if regime is Regime.ZERO_BETA:
        return dP / state.gaps(params.sigma)
    Inu = params.integral_I * params.nu
    w = _gap_weights(state, params, regime)
    return (dP - Inu * (xdot[1:] + xdot[:-1])) * w / Inu


def pressure_rates(state: DropletArray, velocities: np.ndarray, params: ModelParams,
                   regime: Regime) -> np.ndarray:
    """``Pd_i = -w_i epsilon kappa P_i^3 (J_{i+1} - J_i)``.

    Net inflow of mass lowers the pressure of a droplet; the pinned end
    droplets carry weight two.
    """
    J = fluxes(state, velocities, params, regime)
    div = np.diff(np.concatenate([[0.0], J, [0.0]]))
    weight = np.ones(state.count)
    weight[0] = weight[-1] = 2.0
    C = params.epsilon * params.kappa * state.pressures ** 3
    return -weight * C * div


def rhs(state: DropletArray, params: ModelParams, regime: Regime = None) -> StateDerivative:
    """Time derivative of positions and pressures.

    Two pinned droplets with nothing between them are a frozen terminal
    state.
    """
    if regime is None:
        regime = Regime.for_params(params)
    if state.N < 2:
        return StateDerivative(np.zeros(state.count), np.zeros(state.count))
    xdot = solve_velocities(assemble_velocity_system(state, params, regime))
    return StateDerivative(xdot, pressure_rates(state, xdot, params, regime))


def vector_field(params: ModelParams, regime: Regime = None, time_scale: float = 1.0):
    """``f(t, y)`` on the packed state ``y = [X_0..X_N, P_0..P_N]``.

    ``time_scale`` multiplies the derivative, i.e. integrates in the
    rescaled time ``tau = t / time_scale``.
    """
    if regime is None:
        regime = Regime.for_params(params)

    def f(t, y):
        state = DropletArray.from_vector(y)
        return time_scale * rhs(state, params, regime).to_vector()

    return f


def zero_slip_scaling(params: ModelParams, beta: float):
    """Finite-slip parameters and time factor that approach the zero-slip model.

    With ``beta -> 0`` the finite-slip velocities scale like ``beta^2 nu`` and
    the fluxes like ``beta``. Running the finite-slip model with slip length
    ``beta`` and pressure coefficient ``kappa beta nu`` in the time
    ``tau = beta^2 nu t`` reproduces the zero-slip right-hand side up to
    ``O(beta)``. Event thresholds are left untouched.

    Returns ``(finite_params, time_scale)`` for :func:`vector_field`.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    finite = params.replace(beta=beta, pressure_coefficient=params.kappa * beta * params.nu)
    return finite, 1.0 / (beta * beta * params.nu)
