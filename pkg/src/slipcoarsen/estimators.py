"""scikit-learn style wrappers around the simulators and the rate fit.

The "data" of a coarsening experiment is its initial configuration (a gap
list, or droplet positions and pressures); ``fit`` runs the dynamics and
``predict`` evaluates the resulting ``n(t)``. These wrappers exist so the
models plug into parameter sweeps (``get_params``/``set_params``/``clone``);
they add no numerics of their own.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .absorption import coarsening_curve, simulate_exact
from .core import DropletArray, ModelParams
from .events import run_coarsening
from .integrator import StepControl
from .laws import AsymptoteKind, fit_rate
from .core import CoarseningCurve


def _as_column(X, name="X"):
    arr = check_array(X, ensure_2d=False, dtype=float, input_name=name)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"{name} must be 1-D or a single column")
        arr = arr[:, 0]
    return arr


class AbsorptionCoarsening(BaseEstimator):
    """Absorption-model run on a gap list.

    Parameters
    ----------
    B : float
        Drift constant.
    sort : bool
        Sort the gaps non-increasingly before the run.
    per_gap : bool
        Report times divided by the number of gaps.
    method : {"lazy", "suffix", "naive"}
        Solver, see :func:`~slipcoarsen.absorption.simulate_exact`.

    Attributes
    ----------
    times_ : ndarray
        Collision times.
    curve_ : CoarseningCurve
    span_defect_ : float
    """

    def __init__(self, B=1.0, sort=True, per_gap=True, method="lazy"):
        self.B = B
        self.sort = sort
        self.per_gap = per_gap
        self.method = method

    def fit(self, X, y=None):
        gaps = _as_column(X)
        if self.sort:
            gaps = np.sort(gaps)[::-1]
        result = simulate_exact(gaps, self.B, method=self.method)
        self.times_ = result.times
        self.span_defect_ = result.span_defect
        self.curve_ = coarsening_curve(result, per_gap=self.per_gap)
        self.n_gaps_ = result.n_gaps
        return self

    def predict(self, T):
        """Relative droplet count ``n`` at times ``T``."""
        check_is_fitted(self, "curve_")
        return np.asarray(self.curve_(_as_column(T, "T")))


class RateFitter(RegressorMixin, BaseEstimator):
    """Fit of ``n(t)`` in linearising coordinates; ``X`` holds times, ``y`` counts.

    Parameters mirror :func:`~slipcoarsen.laws.fit_rate`.
    """

    def __init__(self, kind="power", n_window=None, t_window=None, A=None, B=None,
                 min_points=20):
        self.kind = kind
        self.n_window = n_window
        self.t_window = t_window
        self.A = A
        self.B = B
        self.min_points = min_points

    def fit(self, X, y):
        t = _as_column(X)
        n = _as_column(y, "y")
        if t.shape != n.shape:
            raise ValueError("X and y must have the same length")
        fit = fit_rate(CoarseningCurve(t, n), self.kind, t_window=self.t_window,
                       n_window=self.n_window, A=self.A, B=self.B,
                       min_points=self.min_points)
        self.fit_ = fit
        self.slope_, self.intercept_ = fit.slope, fit.intercept
        self.max_rel_residual_ = fit.max_rel_residual
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        t = _as_column(X)
        kind = AsymptoteKind(self.kind)
        if kind is AsymptoteKind.POWER:
            return np.exp(self.intercept_ + self.slope_ * np.log(t))
        if kind is AsymptoteKind.CR1:
            if self.A is not None and self.B is not None:
                x = np.sqrt(1.0 + 2.0 * self.B * t / self.A)
                return np.exp(self.intercept_ + self.slope_ * x)
            return np.exp(1.0 - np.sqrt(np.maximum(self.intercept_ + self.slope_ * t, 0.0)))
        return np.exp(self.intercept_ + self.slope_ * t)


class ReducedODECoarsening(BaseEstimator):
    """Reduced-ODE coarsening run; ``X`` is an ``(N+1, 2)`` array of
    positions and pressures.

    Parameters are those of :class:`~slipcoarsen.core.ModelParams` plus the
    run horizon ``t_max`` and the tolerances of the time stepper.
    """

    def __init__(self, epsilon=0.025, sigma=1.0, nu=1.0, beta=math.inf, collision_factor=2.0,
                 collapse_fraction=0.5, t_max=100.0, rel_tol=1e-8, abs_tol=1e-8):
        self.epsilon = epsilon
        self.sigma = sigma
        self.nu = nu
        self.beta = beta
        self.collision_factor = collision_factor
        self.collapse_fraction = collapse_fraction
        self.t_max = t_max
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol

    def fit(self, X, y=None):
        arr = check_array(X, dtype=float)
        if arr.shape[1] != 2:
            raise ValueError("X must have two columns: positions and pressures")
        params = ModelParams(epsilon=self.epsilon, sigma=self.sigma, nu=self.nu, beta=self.beta,
                             collision_factor=self.collision_factor,
                             collapse_fraction=self.collapse_fraction)
        ctrl = StepControl(rel_tol=self.rel_tol, abs_tol=self.abs_tol)
        run = run_coarsening(DropletArray(arr[:, 0], arr[:, 1]), params, t_max=self.t_max, ctrl=ctrl)
        self.run_ = run
        self.events_ = run.events
        self.curve_ = run.curve
        self.status_ = run.status
        return self

    def predict(self, T):
        check_is_fitted(self, "curve_")
        return np.asarray(self.curve_(_as_column(T, "T")))
