"""Exact solver for sequential absorption by the large last droplet.

With the last droplet much larger than the rest, the free-film position
equations decouple: every gap opens at the rate ``B/N`` except the gap next
to the large droplet, which closes at ``B (N-1)/N``. Each time that gap
closes one droplet is absorbed and the remaining ``n - 1`` gaps share the
closed gap's length equally. The first gap (next to the pinned droplet at
``x = 0``) is never absorbed.

Gaps are indexed ``1..N`` from the pinned end towards the large droplet.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numba
import numpy as np

from .core import CoarseningCurve


@dataclass(frozen=True)
class FamilySpec:
    """Gap families ``(d_m, i_m)``, ``d_1 >= d_2 >= ... >= d_k``.

    ``i_m`` counts the absorbable droplets with initial gap ``d_m``. The gap
    array built from a spec has one extra leading gap (of length ``d_1``)
    next to the pinned droplet, so ``N = sum(i_m) + 1`` gaps in total.
    """

    distances: tuple
    counts: tuple

    def __init__(self, distances: Sequence[float], counts: Sequence[int]):
        d = tuple(float(x) for x in distances)
        c = tuple(int(x) for x in counts)
        if len(d) != len(c) or not d:
            raise ValueError("need equally many distances and counts (at least one)")
        if any(not (x > 0 and math.isfinite(x)) for x in d):
            raise ValueError("family distances must be positive and finite")
        if any(x <= 0 for x in c) or any(float(x) != y for x, y in zip(c, counts)):
            raise ValueError("family counts must be positive integers")
        if any(a < b for a, b in zip(d, d[1:])):
            raise ValueError("family distances must be non-increasing")
        object.__setattr__(self, "distances", d)
        object.__setattr__(self, "counts", c)

    @property
    def k(self) -> int:
        return len(self.distances)

    @property
    def absorbable(self) -> int:
        return sum(self.counts)

    @property
    def n_gaps(self) -> int:
        return self.absorbable + 1

    def gaps(self) -> np.ndarray:
        return np.concatenate([[self.distances[0]],
                               np.repeat(self.distances, self.counts)])

    @classmethod
    def random(cls, k: int, total: int, rng: np.random.Generator,
               d_range=(0.1, 10.0)) -> "FamilySpec":
        """``k`` families with random distances and counts summing to ``total``."""
        if not 1 <= k <= total:
            raise ValueError("need 1 <= k <= total")
        d = np.sort(rng.uniform(*d_range, size=k))[::-1]
        cuts = np.sort(rng.choice(np.arange(1, total), size=k - 1, replace=False))
        counts = np.diff(np.concatenate([[0], cuts, [total]]))
        return cls(d, counts)


def _check_B(B: float):
    if not (B > 0 and math.isfinite(B)):
        raise ValueError("drift constant B must be positive and finite (B <= 0 has no dynamics)")


def _check_gaps(gaps) -> np.ndarray:
    g = np.asarray(gaps, dtype=float)
    if g.ndim != 1 or g.size < 1:
        raise ValueError("gaps must be a non-empty 1-D array")
    if not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise ValueError("gaps must be positive and finite")
    return g


def collision_time(gaps, B: float) -> float:
    """Time until the last gap closes, ``d_N N / ((N - 1) B)``."""
    g = _check_gaps(gaps)
    _check_B(B)
    n = g.size
    if n < 2:
        return math.inf
    return g[-1] * n / ((n - 1) * B)


def drift_solution(gaps, B: float, t: float) -> np.ndarray:
    """Gaps after time ``t`` with no collision in between."""
    g = _check_gaps(gaps)
    _check_B(B)
    n = g.size
    tc = collision_time(g, B)
    if t < 0 or t > tc * (1.0 + 1e-12):
        raise ValueError(f"t={t!r} is outside [0, T_c={tc!r}]")
    out = g + B * t / n
    out[-1] = g[-1] - B * (n - 1) * t / n
    return out


def two_sum(a, b):
    """Error-free transformation ``a + b = s + e`` (elementwise)."""
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def compensated_cumsum(x: np.ndarray) -> np.ndarray:
    """Cumulative sum with the rounding error of every partial sum fed back."""
    x = np.asarray(x, dtype=float)
    s = np.cumsum(x)
    if x.size < 2:
        return s
    prev = s[:-1]
    bb = s[1:] - prev
    err = (prev - (s[1:] - bb)) + (x[1:] - bb)
    s[1:] += np.cumsum(err)
    return s


@numba.njit(cache=True)
def _lazy_absorb(base, prefix, B, t0, times):
    # Kahan-compensated offset and clock; returns the worst relative span defect
    n = base.size
    total = prefix[n - 1]
    off, off_c = 0.0, 0.0
    t, t_c = t0, 0.0
    worst = 0.0
    j = 0
    while n >= 2:
        g = base[n - 1] + off + off_c
        dt = g * n / ((n - 1) * B)
        inc = g / (n - 1)
        s = off + inc
        bb = s - off
        off_c += (off - (s - bb)) + (inc - bb)
        off = s
        s = t + dt
        bb = s - t
        t_c += (t - (s - bb)) + (dt - bb)
        t = s
        times[j] = t + t_c
        j += 1
        n -= 1
        span = prefix[n - 1] + n * (off + off_c)
        err = abs(span - total) / total
        if err > worst:
            worst = err
    return worst


class GapArray:
    """Ordered gaps with a lazy additive offset.

    The actual gap ``k`` is ``base[k] + offset`` for ``k < n - 1``; the last
    active gap is stored exactly in ``base``. The offset is accumulated with
    Kahan compensation.

    Parameters
    ----------
    gaps : array_like
        Initial gaps ``d_1..d_N``.
    B : float
        Drift constant ``(p - pbar)/(nu I)``.
    ordered : bool
        Require the gaps to be non-increasing (the ordering the analytic laws
        assume; it is preserved by the dynamics).
    """

    def __init__(self, gaps, B: float, ordered: bool = False):
        g = _check_gaps(gaps)
        _check_B(B)
        if ordered and np.any(np.diff(g) > 0):
            raise ValueError("ordered mode needs non-increasing gaps")
        self.base = g.copy()
        self.B = float(B)
        self.ordered = ordered
        self.n = g.size
        self.initial_size = g.size
        self._off = 0.0
        self._off_c = 0.0
        self._t = 0.0
        self._t_c = 0.0
        self.absorbed = 0

    @classmethod
    def from_family(cls, spec: FamilySpec, B: float) -> "GapArray":
        return cls(spec.gaps(), B, ordered=True)

    @property
    def offset(self) -> float:
        return self._off + self._off_c

    @property
    def elapsed(self) -> float:
        return self._t + self._t_c

    def actual(self) -> np.ndarray:
        out = self.base[:self.n] + self.offset
        out[-1] = self.base[self.n - 1]
        return out

    def span(self) -> float:
        return math.fsum(self.base[:self.n - 1]) + (self.n - 1) * self.offset + self.base[self.n - 1]

    def last_gap(self) -> float:
        return float(self.base[self.n - 1])

    def next_collision_in(self) -> float:
        if self.n < 2:
            return math.inf
        return self.last_gap() * self.n / ((self.n - 1) * self.B)

    def _add_offset(self, inc):
        s, e = two_sum(self._off, inc)
        self._off, self._off_c = s, self._off_c + e

    def _advance_clock(self, dt):
        s, e = two_sum(self._t, dt)
        self._t, self._t_c = s, self._t_c + e

    def drift(self, t: float) -> None:
        """Advance by ``t`` without crossing a collision."""
        if t < 0 or t > self.next_collision_in() * (1.0 + 1e-12):
            raise ValueError("drift would cross a collision")
        if self.n < 2 or t == 0:
            self._advance_clock(t)
            return
        last = self.base[self.n - 1] - self.B * (self.n - 1) * t / self.n
        self._add_offset(self.B * t / self.n)
        # the last gap is stored without the offset
        self.base[self.n - 1] = last
        self._advance_clock(t)

    def absorb_next(self) -> float:
        """Run to the next collision, absorb, and return its absolute time."""
        if self.n < 2:
            raise RuntimeError("no absorbable droplet left")
        g = self.last_gap()
        dt = g * self.n / ((self.n - 1) * self.B)
        self._add_offset(g / (self.n - 1))
        self._advance_clock(dt)
        self.n -= 1
        # the new last gap becomes exact
        self.base[self.n - 1] += self.offset
        self.absorbed += 1
        return self.elapsed


@dataclass
class AbsorptionResult:
    """Collision times ``t_1 < ... < t_{N-1}`` of an absorption run.

    ``span_defect`` is the largest relative deviation of the total span seen
    during a lazy-offset run (``nan`` for the other methods).
    """

    times: np.ndarray
    n_gaps: int
    method: str
    span_defect: float = float("nan")
    families: Optional[FamilySpec] = None

    @property
    def total_time(self) -> float:
        return float(self.times[-1]) if self.times.size else 0.0

    def family_times(self) -> np.ndarray:
        """Times at which families ``m..k`` are all absorbed, for each ``m``."""
        if self.families is None:
            raise ValueError("run was not started from a FamilySpec")
        c = np.asarray(self.families.counts)
        done = np.cumsum(c[::-1])[::-1]
        return self.times[done - 1]


def simulate_exact(initial: Union[np.ndarray, Sequence[float], FamilySpec, GapArray],
                   B: Optional[float] = None, method: str = "lazy") -> AbsorptionResult:
    """All collision times of the absorption model.

    Parameters
    ----------
    initial : array_like, FamilySpec or GapArray
        Initial gaps; a :class:`GapArray` continues from its current state.
    B : float
        Drift constant; taken from a :class:`GapArray` when omitted.
    method : {"lazy", "suffix", "naive"}
        ``lazy`` runs the O(N) lazy-offset recursion; ``suffix`` evaluates
        the closed form ``dt_n = (n b_n + sum_{j>n} b_j)/((n-1) B)``
        vectorised; ``naive`` updates every gap per collision (O(N^2)).
    """
    families = initial if isinstance(initial, FamilySpec) else None
    t0 = 0.0
    if isinstance(initial, GapArray):
        B = initial.B if B is None else B
        gaps, t0 = initial.actual(), initial.elapsed
    elif families is not None:
        gaps = families.gaps()
    else:
        gaps = initial
    g = _check_gaps(gaps)
    if B is None:
        raise ValueError("B is required")
    _check_B(B)
    n = g.size

    if method == "lazy":
        times = np.empty(n - 1)
        defect = _lazy_absorb(g, compensated_cumsum(g), float(B), t0, times) if n > 1 else 0.0
        return AbsorptionResult(times, n, method, float(defect), families)
    if method == "suffix":
        # suffix[k] = sum_{j >= k} g_j (0-based), then dt for n = N..2
        suffix = compensated_cumsum(g[::-1])[::-1]
        m = np.arange(n, 1, -1, dtype=float)
        idx = np.arange(n - 1, 0, -1)
        tail = np.append(suffix[1:], 0.0)[idx]
        dts = (m * g[idx] + tail) / ((m - 1.0) * B)
        del suffix, tail
        return AbsorptionResult(t0 + compensated_cumsum(dts), n, method, families=families)
    if method == "naive":
        cur = g.copy()
        times = np.empty(n - 1)
        t = t0
        for j, k in enumerate(range(n, 1, -1)):
            last = cur[k - 1]
            t += last * k / ((k - 1) * B)
            cur[:k - 1] += last / (k - 1)
            times[j] = t
        return AbsorptionResult(times, n, method, families=families)
    raise ValueError(f"unknown method {method!r}")


def coarsening_curve(result: AbsorptionResult, per_gap: bool = False) -> CoarseningCurve:
    """``n(t)`` with ``n = 1`` at ``t = 0`` and ``n(t_j) = (N - j)/N``.

    Absorption times grow linearly with the number of gaps ``N``; with
    ``per_gap=True`` times are divided by ``N``, the unit in which the
    many-droplet laws are stated.
    """
    n = result.n_gaps
    j = np.arange(1, n)
    times = np.concatenate([[0.0], result.times])
    if per_gap:
        times = times / n
    counts = np.concatenate([[1.0], (n - j) / n])
    return CoarseningCurve(times, counts, "simulation")


def uniform_total_time(d: float, n_gaps: int, B: float) -> float:
    """``(d N / B) H_{N-1}`` for ``N`` equal gaps."""
    h = math.fsum(1.0 / r for r in range(1, n_gaps))
    return d * n_gaps / B * h
