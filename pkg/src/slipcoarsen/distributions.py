"""Initial gap distributions: densities, survivor functions and samplers.

Every distribution lives on ``[support_min, inf)`` and exposes the survivor
``n(x) = P(D > x)``, clamped to 1 below the support. Samplers draw
``u in (0, 1]`` and invert ``n(x) = u``: in closed form where possible,
otherwise by a bracketed vectorised bisection.
"""
from __future__ import annotations

import inspect
import math
from typing import Sequence

import numpy as np
from scipy import integrate, special, stats


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


class DistanceDistribution:
    """Base class; subclasses provide ``pdf``, ``survivor`` and friends."""

    name = "abstract"
    support_min = 0.0

    # points where n(x) has a kink or jump; quadratures split there
    @property
    def knots(self) -> tuple:
        return (self.support_min,) if self.support_min > 0 else ()

    def params(self) -> dict:
        return {}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"

    def pdf(self, x):
        raise NotImplementedError

    def survivor(self, x):
        raise NotImplementedError

    def cdf(self, x):
        return 1.0 - self.survivor(x)

    def log_survivor(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.survivor(x))

    @property
    def mean(self) -> float:
        """``int_0^inf n(x) dx``; infinite for heavy tails."""
        raise NotImplementedError

    def inverse_survivor(self, u):
        """``x`` with ``n(x) = u`` for ``u in (0, 1]``."""
        out = _bisect_inverse(self, np.asarray(u, dtype=float))
        return out if np.ndim(u) else float(out[0])

    def _uniforms(self, count, rng, stratified):
        if stratified:
            # one draw per stratum ((i)/count, (i+1)/count]
            i = np.arange(count, dtype=float)
            u = (i + 1.0 - rng.random(count)) / count
            return rng.permutation(u)
        return 1.0 - rng.random(count)

    def sample(self, count: int, seed=None, sort: bool = False,
               stratified: bool = False) -> np.ndarray:
        """Draw ``count`` gaps.

        Parameters
        ----------
        count : int
            Number of samples, at least 1.
        seed : int or numpy.random.Generator, optional
            Seed or generator; identical seeds give identical output.
        sort : bool
            Return the gaps in non-increasing order.
        stratified : bool
            Draw one uniform per equal-probability stratum instead of iid
            uniforms (variance reduction for the empirical survivor).
        """
        count = int(count)
        if count < 1:
            raise ValueError("count must be >= 1")
        x = self.inverse_survivor(self._uniforms(count, _rng(seed), stratified))
        if sort:
            x = np.sort(x)[::-1].copy()
        return x


def _bisect_inverse(dist: DistanceDistribution, u: np.ndarray, tol: float = 1e-12,
                    max_iter: int = 400):
    u = np.atleast_1d(u)
    if np.any((u <= 0) | (u > 1)):
        raise ValueError("u must lie in (0, 1]")
    lo = np.full(u.shape, dist.support_min)
    hi = np.maximum(2.0 * lo, 1.0)
    # double the upper bracket until n(hi) < u
    todo = dist.survivor(hi) >= u
    while np.any(todo):
        hi[todo] *= 2.0
        todo[todo] = dist.survivor(hi[todo]) >= u[todo]
        if np.any(hi > 1e300):
            raise OverflowError("could not bracket the inverse survivor")
    # compare on the cdf side for u > 1/2, where 1 - n loses digits
    upper = u > 0.5
    target = np.where(upper, 1.0 - u, u)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        val = np.where(upper, dist.cdf(mid), dist.survivor(mid))
        right = np.where(upper, val <= target, val >= target)
        lo = np.where(right, mid, lo)
        hi = np.where(right, hi, mid)
        if np.all(hi - lo <= tol * np.maximum(1.0, hi)):
            break
    x = 0.5 * (lo + hi)
    x[u == 1.0] = dist.support_min
    return x


class PowerLaw(DistanceDistribution):
    """``f = alpha A^alpha x^{-1-alpha}`` on ``x >= A``; ``n = (A/x)^alpha``."""

    name = "power"

    def __init__(self, alpha: float, A: float = 1.0):
        if not (alpha > 0 and A > 0):
            raise ValueError("alpha and A must be positive")
        self.alpha, self.A = float(alpha), float(A)
        self.support_min = self.A

    def params(self):
        return {"alpha": self.alpha, "A": self.A}

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x >= self.A, self.alpha / self.A * (self.A / np.maximum(x, self.A)) ** (self.alpha + 1.0), 0.0)

    def survivor(self, x):
        x = np.asarray(x, dtype=float)
        return (self.A / np.maximum(x, self.A)) ** self.alpha

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return -np.expm1(self.alpha * np.log(self.A / np.maximum(x, self.A)))

    def log_survivor(self, x):
        x = np.asarray(x, dtype=float)
        return self.alpha * np.log(self.A / np.maximum(x, self.A))

    @property
    def mean(self):
        return self.A * self.alpha / (self.alpha - 1.0) if self.alpha > 1 else math.inf

    def inverse_survivor(self, u):
        u = np.asarray(u, dtype=float)
        return self.A * u ** (-1.0 / self.alpha)


class Exponential(DistanceDistribution):
    """``f = e^{-x}``."""

    name = "exponential"

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, np.exp(-np.maximum(x, 0.0)), 0.0)

    def survivor(self, x):
        return np.exp(-np.maximum(np.asarray(x, dtype=float), 0.0))

    def cdf(self, x):
        return -np.expm1(-np.maximum(np.asarray(x, dtype=float), 0.0))

    def log_survivor(self, x):
        return -np.maximum(np.asarray(x, dtype=float), 0.0)

    @property
    def mean(self):
        return 1.0

    def inverse_survivor(self, u):
        return -np.log(np.asarray(u, dtype=float))


class HalfGaussian(DistanceDistribution):
    """``f = (2/sqrt(pi)) e^{-x^2}`` on ``x > 0``; ``n = erfc(x)``."""

    name = "gaussian"

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, 2.0 / math.sqrt(math.pi) * np.exp(-x * x), 0.0)

    def survivor(self, x):
        return special.erfc(np.maximum(np.asarray(x, dtype=float), 0.0))

    def cdf(self, x):
        return special.erf(np.maximum(np.asarray(x, dtype=float), 0.0))

    def log_survivor(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return np.log(special.erfcx(x)) - x * x

    @property
    def mean(self):
        return 1.0 / math.sqrt(math.pi)

    def inverse_survivor(self, u):
        return special.erfcinv(np.asarray(u, dtype=float))


class Bump(DistanceDistribution):
    """``f = (1 - x)^2 e^{-x}``; ``n = (1 + x^2) e^{-x}``. Not monotone in ``f``."""

    name = "bump"

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, (1.0 - x) ** 2 * np.exp(-np.maximum(x, 0.0)), 0.0)

    def log_survivor(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return np.log1p(x * x) - x

    def survivor(self, x):
        return np.exp(self.log_survivor(x))

    def cdf(self, x):
        return -np.expm1(self.log_survivor(x))

    @property
    def mean(self):
        return 3.0


class Mixture(DistanceDistribution):
    """Bump plus shifted power tail,
    ``f = alpha/(1+alpha) [(1-x)^2 e^{-x} + (1+x)^{-1-alpha}]``."""

    name = "mixture"

    def __init__(self, alpha: float):
        if not alpha > 0 or alpha == 1:
            raise ValueError("mixture needs alpha > 0, alpha != 1")
        self.alpha = float(alpha)

    def params(self):
        return {"alpha": self.alpha}

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        a = self.alpha
        val = a / (1.0 + a) * ((1.0 - xp) ** 2 * np.exp(-xp) + (1.0 + xp) ** (-1.0 - a))
        return np.where(x >= 0, val, 0.0)

    def survivor(self, x):
        xp = np.maximum(np.asarray(x, dtype=float), 0.0)
        a = self.alpha
        return ((1.0 + xp) ** -a + a * np.exp(-xp) * (1.0 + xp * xp)) / (1.0 + a)

    def cdf(self, x):
        xp = np.maximum(np.asarray(x, dtype=float), 0.0)
        a = self.alpha
        return (-np.expm1(-a * np.log1p(xp)) - a * np.expm1(np.log1p(xp * xp) - xp)) / (1.0 + a)

    @property
    def mean(self):
        a = self.alpha
        return (1.0 / (a - 1.0) + 3.0 * a) / (1.0 + a) if a > 1 else math.inf


class DeltaMixture(DistanceDistribution):
    """Point masses ``i'_m`` at ``d_1 >= ... >= d_k``.

    A missing mass ``1 - sum i'_m`` sits beyond every ``d_m``. The survivor
    is right-continuous: ``n(d_m) = 1 - sum_{p >= m} i'_p``.
    """

    name = "delta"

    def __init__(self, distances: Sequence[float], fractions: Sequence[float]):
        d = np.asarray(distances, dtype=float)
        w = np.asarray(fractions, dtype=float)
        if d.shape != w.shape or d.ndim != 1 or d.size == 0:
            raise ValueError("distances and fractions must be 1-D of equal length")
        if np.any(d <= 0) or np.any(np.diff(d) > 0):
            raise ValueError("distances must be positive and non-increasing")
        if np.any(w <= 0) or w.sum() > 1.0 + 1e-12:
            raise ValueError("fractions must be positive with sum <= 1")
        self.distances, self.fractions = d, w

    def params(self):
        return {"distances": self.distances.tolist(), "fractions": self.fractions.tolist()}

    @property
    def knots(self):
        return tuple(sorted(set(self.distances.tolist())))

    def pdf(self, x):
        raise TypeError("a delta mixture has no density")

    def survivor(self, x):
        x = np.asarray(x, dtype=float)
        below = self.distances[None, :] <= x.reshape(-1, 1)
        out = 1.0 - (below * self.fractions[None, :]).sum(axis=1)
        out = np.maximum(out, 0.0).reshape(x.shape)
        return out if out.ndim else float(out)

    @property
    def mean(self):
        if self.fractions.sum() < 1.0:
            return math.inf
        return float(np.dot(self.distances, self.fractions))

    def inverse_survivor(self, u):
        raise TypeError("use sample() for a delta mixture")

    def sample(self, count, seed=None, sort=False, stratified=False):
        if not math.isclose(self.fractions.sum(), 1.0, rel_tol=1e-12):
            raise ValueError("cannot sample a defective delta mixture")
        x = _rng(seed).choice(self.distances, size=int(count), p=self.fractions / self.fractions.sum())
        return np.sort(x)[::-1].copy() if sort else x


class TabulatedSurvivor(DistanceDistribution):
    """Piecewise-linear survivor through tabulated points ``(x_j, n_j)``.

    ``n`` is 1 left of ``x_0`` and constant ``n_last`` right of the table.
    """

    name = "tabulated"

    def __init__(self, x: Sequence[float], n: Sequence[float]):
        x = np.asarray(x, dtype=float)
        n = np.asarray(n, dtype=float)
        if x.shape != n.shape or x.ndim != 1 or x.size < 2:
            raise ValueError("need at least two tabulated points")
        if np.any(np.diff(x) <= 0) or x[0] < 0:
            raise ValueError("x must be non-negative and strictly increasing")
        if np.any(np.diff(n) > 0) or n[0] > 1 or n[-1] < 0:
            raise ValueError("tabulated survivor must be non-increasing within [0, 1]")
        self.x, self.n = x, n
        self.support_min = float(x[0]) if n[0] == 1.0 else 0.0

    @classmethod
    def from_csv(cls, path) -> "TabulatedSurvivor":
        """Read ``x,n`` rows; ``#`` comments and one header row are skipped."""
        rows = []
        with open(path) as fh:
            for line in fh:
                s = line.strip()
                if not s or s.startswith("#"):
                    continue
                try:
                    rows.append([float(v) for v in s.split(",")[:2]])
                except ValueError:
                    if rows:
                        raise
        data = np.asarray(rows, dtype=float)
        return cls(data[:, 0], data[:, 1])

    @property
    def knots(self):
        return tuple(self.x.tolist())

    def survivor(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.x, self.n, left=1.0, right=self.n[-1])
        if self.x[0] > 0:
            out = np.where(x < self.x[0], 1.0, out)
        return out

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        slope = -np.diff(self.n) / np.diff(self.x)
        k = np.clip(np.searchsorted(self.x, x, side="right") - 1, 0, slope.size - 1)
        inside = (x >= self.x[0]) & (x < self.x[-1])
        return np.where(inside, slope[k], 0.0)

    @property
    def mean(self):
        if self.n[-1] > 0:
            return math.inf
        return float(self.x[0] + np.trapezoid(self.n, self.x))


_REGISTRY = {
    "power": PowerLaw,
    "exponential": Exponential,
    "gaussian": HalfGaussian,
    "bump": Bump,
    "mixture": Mixture,
}


def make_distribution(name: str, **params) -> DistanceDistribution:
    """Build a catalogued distribution by name (``power``, ``exponential``,
    ``gaussian``, ``bump``, ``mixture``)."""
    try:
        cls = _REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown distribution {name!r}; choose from {sorted(_REGISTRY)}") from None
    accepted = [p for p in inspect.signature(cls).parameters]
    unknown = sorted(set(params) - set(accepted))
    if unknown:
        raise ValueError(f"{name} does not take {unknown}; parameters: {accepted or 'none'}")
    try:
        return cls(**params)
    except TypeError as exc:
        raise ValueError(f"{name}: {exc}; parameters: {accepted}") from None


def normalization_check(dist: DistanceDistribution) -> float:
    """``|int f - 1|`` by adaptive quadrature, split at the support start."""
    if isinstance(dist, PowerLaw):
        # antiderivative of f is -n(x); n(A) = 1 and n -> 0 at infinity
        return abs(float(dist.survivor(dist.A)) - 1.0)
    a = dist.support_min
    f = lambda x: float(dist.pdf(x))
    head, _ = integrate.quad(f, a, a + 10.0, epsabs=1e-14, epsrel=1e-13, limit=400)
    tail, _ = integrate.quad(f, a + 10.0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=400)
    return abs(head + tail - 1.0)


def ks_distance(dist: DistanceDistribution, sample: np.ndarray) -> float:
    """Kolmogorov-Smirnov sup distance between a sample and ``dist``'s CDF."""
    return float(stats.kstest(np.asarray(sample, dtype=float),
                              lambda x: np.asarray(dist.cdf(x), dtype=float)).statistic)


def empirical_survivor(sample: np.ndarray, x) -> np.ndarray:
    """Fraction of ``sample`` strictly above each ``x``."""
    s = np.sort(np.asarray(sample, dtype=float))
    return 1.0 - np.searchsorted(s, np.asarray(x, dtype=float), side="right") / s.size
