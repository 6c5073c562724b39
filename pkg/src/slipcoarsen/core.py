"""Shared domain types and constants for the reduced droplet models.

All quantities are the nondimensional ones of the thin-film scaling:
positions and gaps are lengths, pressures are inverse lengths, and the
droplet mass is proportional to ``P**-2`` at leading order.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad


class QuadratureError(RuntimeError):
    """Raised when an adaptive quadrature does not reach its tolerance."""


class StateError(ValueError):
    """Raised when a droplet array violates its invariants."""


@functools.lru_cache(maxsize=None)
def compute_integral_I(tol: float = 1e-12) -> float:
    """Contact-line constant ``I`` by adaptive quadrature.

    Evaluates ``int_0^1 (5t^3 - t^2 - t) / sqrt(6t + 3) dt``, the form
    obtained from the contact-line profile after the substitution
    ``t = 1/H``. The integrand is smooth on ``[0, 1]``.
    """
    value, err = quad(
        lambda t: (5.0 * t**3 - t**2 - t) / math.sqrt(6.0 * t + 3.0),
        0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200,
    )
    if not err <= tol:
        raise QuadratureError(f"integral I: error estimate {err:.3e} exceeds {tol:.1e}")
    return value


def integral_I_profile_form() -> float:
    """``I`` evaluated in the contact-line height variable ``H`` on ``[1, inf)``.

    Independent route to :func:`compute_integral_I` (no change of variables).
    """
    def integrand(h):
        return (-5.0 / 3.0 + 2.0 * h - h**3 / 3.0) / (
            math.sqrt(2.0 / 3.0 - h + h**3 / 3.0) * h**4.5)

    # removable 0/0 at H = 1: the radicand has a double root there that
    # cancels a simple root of the numerator
    a, _ = quad(integrand, 1.0, 2.0, epsabs=1e-14, epsrel=1e-13, limit=400)
    b, _ = quad(integrand, 2.0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=400)
    return a + b


def radius_from_pressure(P, sigma: float):
    """Droplet radius ``R = 1/(sqrt(3 sigma) P)`` of the parabolic cap."""
    P = np.asarray(P, dtype=float)
    if sigma <= 0 or np.any(P <= 0):
        raise ValueError("pressure and sigma must be positive")
    R = 1.0 / (math.sqrt(3.0 * sigma) * P)
    return R if R.ndim else float(R)


def pressure_from_radius(R, sigma: float):
    """Inverse of :func:`radius_from_pressure`."""
    R = np.asarray(R, dtype=float)
    if sigma <= 0 or np.any(R <= 0):
        raise ValueError("radius and sigma must be positive")
    P = 1.0 / (math.sqrt(3.0 * sigma) * R)
    return P if P.ndim else float(P)


def collapse_threshold(epsilon: float, fraction: float = 0.5) -> float:
    """Pressure above which a droplet is declared collapsed.

    ``fraction * 27 / (256 epsilon)``; ``27/(256 epsilon)`` is the largest
    pressure a quasi-stationary droplet can sustain.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return fraction * 27.0 / (256.0 * epsilon)


def cap_volume_coefficient(sigma: float) -> float:
    """``kappa`` in ``dP/dV = -kappa P^3`` for the parabolic cap.

    The cap ``h = (R^2 - x^2)/(R sqrt(12 sigma))`` has volume
    ``V = 4/(9 sigma sqrt(12 sigma)) P^-2``.
    """
    return 9.0 * sigma * math.sqrt(12.0 * sigma) / 8.0


@dataclass(frozen=True)
class ModelParams:
    """Physical and regularisation constants of the reduced models.

    Parameters
    ----------
    epsilon : float
        Precursor-layer thickness scale.
    sigma, nu : float
        Surface tension and Trouton viscosity coefficients.
    beta : float
        Slip length; ``math.inf`` selects the free-film limit and ``0`` the
        intermediate-slip limit.
    collision_factor : float
        Collision threshold ``delta = collision_factor * epsilon`` unless
        ``collision_delta`` is given explicitly.
    collapse_fraction : float
        Fraction of the maximal pressure that triggers a collapse.
    pressure_coefficient : float, optional
        ``kappa`` in the pressure rate ``C_i = epsilon kappa P_i^3``;
        defaults to :func:`cap_volume_coefficient`.
    merge_rule : {"extent-center", "left-edges"}
        Where a merged droplet is placed after a collision.
    """

    epsilon: float = 0.025
    sigma: float = 1.0
    nu: float = 1.0
    beta: float = math.inf
    collision_factor: float = 2.0
    collision_delta: Optional[float] = None
    collapse_fraction: float = 0.5
    pressure_coefficient: Optional[float] = None
    merge_rule: str = "extent-center"
    integral_I: float = field(init=False, repr=False)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not self.beta >= 0 or math.isnan(self.beta):
            raise ValueError("beta must be >= 0 or inf")
        if self.collision_delta is not None and not self.collision_delta > 0:
            raise ValueError("collision_delta must be positive")
        if not 0 < self.collapse_fraction <= 1:
            raise ValueError("collapse_fraction must lie in (0, 1]")
        if self.merge_rule not in ("extent-center", "left-edges"):
            raise ValueError(f"unknown merge_rule {self.merge_rule!r}")
        object.__setattr__(self, "integral_I", compute_integral_I())

    @property
    def delta(self) -> float:
        if self.collision_delta is not None:
            return self.collision_delta
        return self.collision_factor * self.epsilon

    @property
    def kappa(self) -> float:
        if self.pressure_coefficient is not None:
            return self.pressure_coefficient
        return cap_volume_coefficient(self.sigma)

    @property
    def collapse_pressure(self) -> float:
        return collapse_threshold(self.epsilon, self.collapse_fraction)

    def replace(self, **changes) -> "ModelParams":
        kw = {f: getattr(self, f) for f in (
            "epsilon", "sigma", "nu", "beta", "collision_factor", "collision_delta",
            "collapse_fraction", "pressure_coefficient", "merge_rule")}
        kw.update(changes)
        return ModelParams(**kw)


class EventKind(str, enum.Enum):
    COLLAPSE = "collapse"
    COLLISION = "collision"


@dataclass(frozen=True)
class EventRecord:
    """One coarsening event; ``indices`` refer to the pre-event array."""

    time: float
    kind: EventKind
    indices: tuple
    count_after: int

    def to_dict(self) -> dict:
        return {"time": self.time, "kind": self.kind.value,
                "indices": list(self.indices), "count_after": self.count_after}


@dataclass
class DropletArray:
    """Positions and pressures of droplets ``0..N``.

    The first and last droplets are pinned at ``0`` and ``L``. ``labels``
    track droplet identity across events (a merged droplet keeps the label
    of its left partner, or of the pinned droplet it was absorbed into).
    """

    positions: np.ndarray
    pressures: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.positions = np.array(self.positions, dtype=float)
        self.pressures = np.array(self.pressures, dtype=float)
        if self.positions.shape != self.pressures.shape or self.positions.ndim != 1:
            raise StateError("positions and pressures must be 1-D of equal length")
        if self.positions.size < 2:
            raise StateError("at least the two pinned droplets are required")
        if self.labels is None:
            self.labels = np.arange(self.positions.size)
        else:
            self.labels = np.array(self.labels, dtype=int)

    @property
    def count(self) -> int:
        return self.positions.size

    @property
    def N(self) -> int:
        """Index of the last droplet (``count - 1``)."""
        return self.positions.size - 1

    @property
    def domain_length(self) -> float:
        return float(self.positions[-1])

    def radii(self, sigma: float) -> np.ndarray:
        return radius_from_pressure(self.pressures, sigma)

    def gaps(self, sigma: float) -> np.ndarray:
        """Edge-to-edge gaps ``d_i = X_i - X_{i-1} - R_i - R_{i-1}``, i = 1..N."""
        R = self.radii(sigma)
        return np.diff(self.positions) - R[1:] - R[:-1]

    def validate(self, sigma: float) -> None:
        if self.positions[0] != 0.0:
            raise StateError("first droplet must be pinned at x = 0")
        if np.any(np.diff(self.positions) <= 0):
            raise StateError("positions must be strictly increasing")
        if np.any(self.pressures <= 0):
            raise StateError("pressures must be positive")
        if np.any(self.gaps(sigma) <= 0):
            raise StateError("droplets overlap (non-positive gap)")

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.positions, self.pressures])

    @classmethod
    def from_vector(cls, y: np.ndarray, labels=None) -> "DropletArray":
        n = y.size // 2
        return cls(y[:n], y[n:], labels)

    def copy(self) -> "DropletArray":
        return DropletArray(self.positions.copy(), self.pressures.copy(), self.labels.copy())


def mass_proxy(state: DropletArray) -> float:
    """Leading-order total droplet mass ``sum_i P_i^-2`` (up to a constant)."""
    return math.fsum(state.pressures ** -2.0)


def reflected_mass(state: DropletArray) -> float:
    """Mass proxy with the pinned end droplets counted as half droplets.

    Under mirror reflection at ``x = 0`` and ``x = L`` only half of each
    pinned droplet lies inside the domain; this is the quantity the reduced
    pressure equations conserve.
    """
    w = state.pressures ** -2.0
    return math.fsum(w[1:-1]) + 0.5 * (w[0] + w[-1])


@dataclass
class CoarseningCurve:
    """Right-continuous step curve ``n(t)`` of the relative droplet count."""

    times: np.ndarray
    counts: np.ndarray
    source: str = "simulation"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if self.times.shape != self.counts.shape:
            raise ValueError("times and counts must have equal length")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.times, t, side="right") - 1
        out = np.where(idx < 0, 1.0, self.counts[np.clip(idx, 0, None)])
        return out if out.ndim else float(out)

    def __len__(self):
        return self.times.size

    def check(self) -> None:
        if np.any(np.diff(self.times) < 0):
            raise ValueError("curve times must be non-decreasing")
        if np.any(np.diff(self.counts) > 0):
            raise ValueError("curve counts must be non-increasing")
        if self.counts.size and self.counts[0] > 1.0:
            raise ValueError("n(0) must not exceed 1")


def as_array(values: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr
