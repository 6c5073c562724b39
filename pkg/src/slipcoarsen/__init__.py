"""Reduced-model simulation of droplet coarsening in slipping thin films.

Submodules
----------
core          shared types, constants and conversions
reduced_ode   right-hand sides of the three slip regimes
integrator    adaptive RK4 with event localisation
events        collapse/collision rules and the coarsening loop
absorption    exact sequential-absorption solver
laws          discrete, limit and continuous coarsening laws, asymptotics, fits
distributions initial gap distributions and samplers
"""
from .core import (CoarseningCurve, DropletArray, EventKind, EventRecord, ModelParams,
                   collapse_threshold, compute_integral_I, mass_proxy, pressure_from_radius,
                   radius_from_pressure, reflected_mass)
from .reduced_ode import Regime, rhs
from .integrator import StepControl
from .events import run_coarsening
from .absorption import FamilySpec, GapArray, simulate_exact, coarsening_curve
from .laws import continuous_law, discrete_law, limit_law, asymptotic_curve, fit_rate
from .distributions import make_distribution

__version__ = "0.1.0"

__all__ = [
    "CoarseningCurve", "DropletArray", "EventKind", "EventRecord", "ModelParams",
    "collapse_threshold", "compute_integral_I", "mass_proxy", "pressure_from_radius",
    "radius_from_pressure", "reflected_mass", "Regime", "rhs", "StepControl",
    "run_coarsening", "FamilySpec", "GapArray", "simulate_exact", "coarsening_curve",
    "continuous_law", "discrete_law", "limit_law", "asymptotic_curve", "fit_rate",
    "make_distribution",
]
