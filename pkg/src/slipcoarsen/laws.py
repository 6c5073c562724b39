"""Coarsening laws of the absorption model and their asymptotics.

``T(d)`` is the time until every droplet whose initial gap is at most ``d``
has been absorbed. Three evaluations are provided: the exact law for
finitely many gap families, its many-droplet limit in terms of family
fractions, and the continuous law ``T(d) = (1/B) int_0^d n ln(n/n(d)) dx``
for a survivor function ``n``.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate, special

from .absorption import FamilySpec
from .core import CoarseningCurve
from .distributions import (Bump, DistanceDistribution, Exponential, HalfGaussian,
                            Mixture, PowerLaw)


class DivergenceWarning(RuntimeWarning):
    """A coarsening time is infinite (the survivor vanishes)."""


class FamilyCountError(ValueError):
    """Family counts leave no droplet to absorb into (zero denominator)."""


def _check_B(B):
    if not (B > 0 and math.isfinite(B)):
        raise ValueError("B must be positive and finite")


def discrete_law(families: FamilySpec, B: float, N: Optional[int] = None) -> np.ndarray:
    """Exact completion times ``T(d_m)``, ``m = 1..k``, for gap families.

    ``T(d_m) = sum_{p=m}^k (1/B)(N d_p + sum_{p'>p} (d_{p'} - d_p) i_{p'})
    sum_{r=1}^{i_p} 1/(N - S_{p+1} - r)`` with ``S_p = sum_{p' >= p} i_{p'}``.
    ``N`` is the number of gaps, ``sum(i_m) + 1`` by default.
    """
    _check_B(B)
    d = np.asarray(families.distances)
    c = np.asarray(families.counts, dtype=np.int64)
    k = d.size
    N = families.n_gaps if N is None else int(N)
    S = np.concatenate([np.cumsum(c[::-1])[::-1], [0]])
    if N <= S[0]:
        raise FamilyCountError(
            f"N={N} gaps cannot absorb {S[0]} droplets; N must exceed the total family count")
    terms = np.empty(k)
    for p in range(k):
        later = slice(p + 1, k)
        coeff = N * d[p] + math.fsum((d[later] - d[p]) * c[later])
        M = N - S[p + 1]
        harmonic = math.fsum(1.0 / (M - np.arange(1, c[p] + 1, dtype=float)))
        terms[p] = coeff * harmonic / B
    return np.cumsum(terms[::-1])[::-1]


def limit_law(distances: Sequence[float], fractions: Sequence[float], B: float) -> np.ndarray:
    """Per-droplet completion times in the many-droplet limit.

    ``T(d_m) = sum_{p=m}^k (1/B)(d_p + sum_{p'>p} (d_{p'} - d_p) i'_{p'})
    ln[(1 - s_{p+1})/(1 - s_p)]`` with ``s_p = sum_{p' >= p} i'_{p'}``. Equals
    ``discrete_law / N`` as ``N -> inf`` at fixed fractions ``i'_m = i_m/N``.
    Where ``s_p = 1`` the time is infinite and a :class:`DivergenceWarning`
    is issued.
    """
    _check_B(B)
    d = np.asarray(distances, dtype=float)
    w = np.asarray(fractions, dtype=float)
    if d.shape != w.shape or d.ndim != 1 or d.size == 0:
        raise ValueError("distances and fractions must be 1-D of equal length")
    if np.any(w <= 0) or np.any(np.diff(d) > 0) or np.any(d <= 0):
        raise ValueError("need positive fractions and positive non-increasing distances")
    if w.sum() > 1.0 + 1e-12:
        raise ValueError("fractions must sum to at most 1")
    k = d.size
    s = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
    rest = np.maximum(1.0 - s, 0.0)
    terms = np.empty(k)
    for p in range(k):
        coeff = d[p] + math.fsum((d[p + 1:] - d[p]) * w[p + 1:])
        if rest[p] <= 1e-15:
            terms[p] = math.inf
        else:
            terms[p] = coeff * (math.log(rest[p + 1]) - math.log(rest[p])) / B
    out = np.cumsum(terms[::-1])[::-1]
    if np.any(np.isinf(out)):
        warnings.warn("fractions exhaust all droplets; the largest family never completes",
                      DivergenceWarning, stacklevel=2)
    return out


def _survivor_pair(n):
    if isinstance(n, DistanceDistribution):
        return n.survivor, n.log_survivor, n.knots
    def log_n(x):
        with np.errstate(divide="ignore"):
            return np.log(n(x))
    return n, log_n, ()


def continuous_law(n: Union[DistanceDistribution, Callable], d, B: float,
                   knots: Sequence[float] = (), epsrel: float = 1e-11):
    """``T(d) = (1/B) int_0^d n(x) ln[n(x)/n(d)] dx`` by adaptive quadrature.

    Parameters
    ----------
    n : DistanceDistribution or callable
        Survivor function with ``n(0) = 1``, non-increasing.
    d : float or array_like
        Gap values at which to evaluate.
    B : float
        Drift constant.
    knots : sequence of float
        Extra points where ``n`` has kinks or jumps; the distribution's own
        knots are always used.

    Returns
    -------
    float or ndarray
        ``inf`` where ``n(d) = 0`` (with a :class:`DivergenceWarning`).
    """
    _check_B(B)
    surv, log_surv, own = _survivor_pair(n)
    cuts = sorted(set(float(k) for k in tuple(own) + tuple(knots) if k > 0))
    d_arr = np.atleast_1d(np.asarray(d, dtype=float))
    if np.any(d_arr < 0):
        raise ValueError("d must be non-negative")
    out = np.empty(d_arr.shape)
    diverged = False
    for j, dj in enumerate(d_arr):
        if dj == 0:
            out[j] = 0.0
            continue
        nd = float(surv(dj))
        if nd <= 0:
            out[j], diverged = math.inf, True
            continue
        lnd = float(log_surv(dj))

        def integrand(x):
            nx = float(surv(x))
            return 0.0 if nx == 0 else nx * (float(log_surv(x)) - lnd)

        pts = [0.0] + [c for c in cuts if c < dj] + [dj]
        # heavy tails: one panel per decade keeps each quad call well conditioned
        lo = max(pts[-2], 1.0)
        if dj > 10.0 * lo:
            decades = int(math.ceil(math.log10(dj / lo)))
            pts = sorted(set(pts[:-1]) | set(np.geomspace(lo, dj, decades + 1).tolist()))
        total = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            val, _ = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=epsrel, limit=500)
            total += val
        out[j] = total / B
    if diverged:
        warnings.warn("n(d) = 0: coarsening time diverges", DivergenceWarning, stacklevel=2)
    if np.any(np.diff(surv(np.sort(d_arr))) > 0):
        raise ValueError("survivor function is not non-increasing")
    return out if np.ndim(d) else float(out[0])


def power_law_time(d, alpha: float, A: float, B: float):
    """Closed-form ``T(d)`` for ``n = (A/x)^alpha`` (``d >= A``)."""
    z = np.log(np.asarray(d, dtype=float) / A)
    if alpha == 1.0:
        return A / B * (0.5 * z * z + z)
    a = alpha
    return a * A / (B * (a - 1.0)) * (np.expm1((1.0 - a) * z) / (a - 1.0) + a * z)


def exponential_time(d, B: float):
    """Closed-form ``T(d) = (e^{-d} - 1 + d)/B`` for ``n = e^{-x}``."""
    d = np.asarray(d, dtype=float)
    return (np.expm1(-d) + d) / B


def cr1_curve(t, A: float, B: float):
    """``n(t) = exp(1 - sqrt(1 + 2Bt/A))``, exact for ``alpha = 1``."""
    return np.exp(1.0 - np.sqrt(1.0 + 2.0 * B * np.asarray(t, dtype=float) / A))


def gaussian_constant() -> float:
    """``C`` in ``n(t) ~ exp(-C - B sqrt(pi) t)`` for the half-Gaussian.

    ``C = int_0^inf e^{-x^2} [2/(sqrt(pi) erfcx(x)) - 2x] dx``; the second
    piece integrates to 1 and is subtracted in closed form.
    """
    val, _ = integrate.quad(lambda x: 2.0 * math.exp(-x * x) / (math.sqrt(math.pi) * special.erfcx(x)),
                            0.0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=400)
    return val - 1.0


class AsymptoteKind(str, enum.Enum):
    POWER = "power"
    EXP = "exp"
    CR1 = "cr1"
    GAUSS = "gauss"


@dataclass(frozen=True)
class AsymptoteSpec:
    """Large-time form of ``n(t)``.

    * ``POWER``: ``n = (t / t0)^exponent`` (``exponent < 0``);
    * ``EXP``:   ``n = exp(log_prefactor - rate t)`` (``rate > 0``);
    * ``CR1``:   ``n = exp(1 - sqrt(1 + 2Bt/A))``;
    * ``GAUSS``: ``n = exp(-C - B sqrt(pi) t)``.
    """

    kind: AsymptoteKind
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        p = self.params
        if self.kind is AsymptoteKind.POWER and not p["exponent"] < 0:
            raise ValueError("power asymptote needs a negative exponent")
        if self.kind is AsymptoteKind.EXP and not p["rate"] > 0:
            raise ValueError("exponential asymptote needs a positive rate")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind is AsymptoteKind.POWER:
            return (t / p["t0"]) ** p["exponent"]
        if self.kind is AsymptoteKind.EXP:
            return np.exp(p["log_prefactor"] - p["rate"] * t)
        if self.kind is AsymptoteKind.CR1:
            return cr1_curve(t, p["A"], p["B"])
        return np.exp(-p["C"] - p["B"] * math.sqrt(math.pi) * t)

    @property
    def log_rate(self) -> float:
        """Decay rate of ``ln n`` for the exponential kinds."""
        if self.kind is AsymptoteKind.EXP:
            return self.params["rate"]
        if self.kind is AsymptoteKind.GAUSS:
            return self.params["B"] * math.sqrt(math.pi)
        raise ValueError(f"{self.kind.value} asymptote has no exponential rate")


def entropy_integral(dist: DistanceDistribution) -> float:
    """``int_0^inf n ln n dx`` (finite for finite-mean distributions)."""
    def g(x):
        nx = float(dist.survivor(x))
        return nx * float(dist.log_survivor(x)) if nx > 0 else 0.0
    a = dist.support_min
    head, _ = integrate.quad(g, a, a + 20.0, epsabs=1e-14, epsrel=1e-12, limit=500)
    tail, _ = integrate.quad(g, a + 20.0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=500)
    return head + tail


def asymptotic_curve(dist: DistanceDistribution, B: float) -> AsymptoteSpec:
    """Large-time coarsening law for a catalogued distribution.

    A finite mean ``mu = int n`` always gives ``n ~ exp(G/mu - B t/mu)`` with
    ``G = int n ln n``; heavy tails ``n ~ c x^{-alpha}``, ``alpha < 1``, give
    ``n ~ (t B (1-alpha)^2 / (alpha c^{1/alpha}))^{alpha/(alpha-1)}``.
    """
    _check_B(B)
    if isinstance(dist, PowerLaw):
        a, A = dist.alpha, dist.A
        if a == 1.0:
            return AsymptoteSpec(AsymptoteKind.CR1, {"A": A, "B": B})
        if a < 1.0:
            return AsymptoteSpec(AsymptoteKind.POWER, {
                "exponent": a / (a - 1.0), "t0": a * A / (B * (a - 1.0) ** 2)})
        return AsymptoteSpec(AsymptoteKind.EXP, {
            "rate": B * (a - 1.0) / (a * A), "log_prefactor": -1.0 / (a - 1.0)})
    if isinstance(dist, Exponential):
        return AsymptoteSpec(AsymptoteKind.EXP, {"rate": B, "log_prefactor": -1.0})
    if isinstance(dist, HalfGaussian):
        return AsymptoteSpec(AsymptoteKind.GAUSS, {"C": gaussian_constant(), "B": B})
    if isinstance(dist, Mixture) and dist.alpha < 1.0:
        a = dist.alpha
        A_eff = (1.0 + a) ** (-1.0 / a)
        return AsymptoteSpec(AsymptoteKind.POWER, {
            "exponent": a / (a - 1.0), "t0": a * A_eff / (B * (a - 1.0) ** 2)})
    if isinstance(dist, (Bump, Mixture)):
        mu = dist.mean
        return AsymptoteSpec(AsymptoteKind.EXP, {
            "rate": B / mu, "log_prefactor": entropy_integral(dist) / mu})
    raise ValueError(f"no asymptote catalogued for {dist!r}")


def law_curve(dist: DistanceDistribution, B: float, d) -> CoarseningCurve:
    """``(T(d), n(d))`` pairs from the continuous law."""
    d = np.sort(np.asarray(d, dtype=float))
    T = np.atleast_1d(continuous_law(dist, d, B))
    return CoarseningCurve(T, np.asarray(dist.survivor(d), dtype=float), "law")


@dataclass
class RateFit:
    """Least-squares fit in linearising coordinates.

    ``slope``/``intercept`` refer to ``ln n`` against ``ln t`` (POWER), ``t``
    (EXP, GAUSS) or ``sqrt(1 + 2Bt/A)`` (CR1 with known ``A``, ``B``). For CR1
    with unknown ``A``, ``B`` the fit is ``(1 - ln n)^2 = 1 + (2B/A) t`` and
    ``slope`` is ``2B/A``.
    """

    kind: AsymptoteKind
    slope: float
    intercept: float
    max_rel_residual: float
    n_points: int
    window: tuple

    @property
    def rate(self) -> float:
        if self.kind not in (AsymptoteKind.EXP, AsymptoteKind.GAUSS):
            raise ValueError("rate is defined for exponential fits")
        return -self.slope


def fit_rate(curve: CoarseningCurve, kind: Union[str, AsymptoteKind],
             t_window: Optional[tuple] = None, n_window: Optional[tuple] = None,
             A: Optional[float] = None, B: Optional[float] = None,
             min_points: int = 20) -> RateFit:
    """Fit a coarsening curve's large-time behaviour.

    The window defaults to the last decade of ``n``,
    ``[n_final, 10 n_final]``. Only the points where ``n`` changes (the
    curve's jump points) are used.
    """
    kind = AsymptoteKind(kind)
    t = np.asarray(curve.times, dtype=float)
    n = np.asarray(curve.counts, dtype=float)
    keep = (t > 0) & (n > 0)
    t, n = t[keep], n[keep]
    if t_window is not None:
        sel = (t >= t_window[0]) & (t <= t_window[1])
        window = ("t", float(t_window[0]), float(t_window[1]))
    else:
        if n_window is None:
            n_final = n.min() if n.size else 0.0
            n_window = (n_final, 10.0 * n_final)
        sel = (n >= n_window[0]) & (n <= n_window[1])
        window = ("n", float(n_window[0]), float(n_window[1]))
    t, n = t[sel], n[sel]
    if t.size < min_points:
        raise ValueError(f"only {t.size} points in the fit window; need {min_points}")
    y = np.log(n)
    if kind is AsymptoteKind.POWER:
        x = np.log(t)
    elif kind in (AsymptoteKind.EXP, AsymptoteKind.GAUSS):
        x = t
    elif A is not None and B is not None:
        x = np.sqrt(1.0 + 2.0 * B * t / A)
    else:
        x, y = t, (1.0 - y) ** 2
    if np.ptp(x) == 0:
        raise ValueError("degenerate fit window")
    slope, intercept = np.polyfit(x, y, 1)
    if kind is AsymptoteKind.CR1 and (A is None or B is None):
        fitted = np.exp(1.0 - np.sqrt(np.maximum(intercept + slope * x, 0.0)))
    else:
        fitted = np.exp(intercept + slope * x)
    resid = float(np.max(np.abs(fitted / n - 1.0)))
    return RateFit(kind, float(slope), float(intercept), resid, int(t.size), window)
