"""The acceptance checks, runnable from the library, the CLI and the tests.

Each check returns a :class:`CheckResult` with the measured quantities, the
tolerance it was judged against and its wall time. Random inputs come from
fixed seeds; nothing is tuned after the fact.
"""
from __future__ import annotations

import math
import time
import tracemalloc
import warnings
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .absorption import (FamilySpec, GapArray, coarsening_curve, collision_time, simulate_exact)
from .core import DropletArray, ModelParams, compute_integral_I, mass_proxy
from .distributions import Exponential, HalfGaussian, PowerLaw
from .events import apply_collision, run_coarsening
from .integrator import StepControl, integrate
from .laws import (DivergenceWarning, continuous_law, cr1_curve, discrete_law, exponential_time,
                   fit_rate, gaussian_constant, limit_law, power_law_time)
from .reduced_ode import Regime, rhs, vector_field, zero_slip_scaling

# value printed in the reference derivation of I
PUBLISHED_I = 1.0 / (35.0 * (3.0 + math.sqrt(3.0)))
# exact value of the same integral
EXACT_I = (3.0 + math.sqrt(3.0)) / 35.0


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    measured: Dict[str, object]
    tolerance: str
    runtime: float = 0.0
    budget: float = math.inf
    note: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items())
        return f"[{tag}] {self.number}. {self.name}: {shown} (tol: {self.tolerance}; {self.runtime:.2f}s/{self.budget:g}s)"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["measured"] = {k: _plain(v) for k, v in self.measured.items()}
        return d


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def four_droplet_profile() -> DropletArray:
    """Four droplets whose second droplet collapses under zero slip and
    collides with the first at slip length 5 (``epsilon = 0.025``)."""
    sq = math.sqrt(3.0)
    P = (0.5, 1.4, 1.4, 0.6)
    R = [1.0 / (sq * p) for p in P]
    x1 = R[0] + 0.32 + R[1]
    x2 = x1 + R[1] + 1.2 + R[2]
    x3 = x2 + R[2] + 1.5 + R[3]
    return DropletArray([0.0, x1, x2, x3], P)


# --------------------------------------------------------------------- checks

def check_integral_I() -> CheckResult:
    value = compute_integral_I.__wrapped__()
    err = abs(value - PUBLISHED_I)
    return CheckResult(1, "integral I vs published closed form", err <= 1e-10, {
        "quadrature": value, "published": PUBLISHED_I, "abs_err": err,
        "abs_err_vs_(3+sqrt3)/35": abs(value - EXACT_I)}, "1e-10 abs", budget=1.0,
        note="the published closed form is the reciprocal of the integral's exact value")


def check_discrete_law(seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    fam = FamilySpec.random(20, 10_000, rng)
    B = 1.0
    sim = simulate_exact(fam, B).family_times()
    law = discrete_law(fam, B)
    err = float(np.max(np.abs(sim / law - 1.0)))
    return CheckResult(2, "discrete law exactness (k=20, 1e4 droplets)", err <= 1e-9,
                       {"max_rel_err": err}, "1e-9 rel", budget=5.0)


def check_limit_law() -> CheckResult:
    d = [4.0, 3.0, 2.0, 1.0]
    frac = np.array([0.2, 0.3, 0.25])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DivergenceWarning)
        lim = limit_law(d, [1.0 - frac.sum(), *frac], 1.0)
    errs = []
    for N in (100, 1000, 10_000):
        counts = [int(round(f * N)) for f in frac]
        fam = FamilySpec(d, [N - 1 - sum(counts)] + counts)
        dl = discrete_law(fam, 1.0) / N
        # the first family takes the remaining droplets and never completes in the limit
        errs.append(float(np.max(np.abs(dl[1:] / lim[1:] - 1.0))))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = all(7.0 <= r <= 13.0 for r in ratios)
    return CheckResult(3, "discrete law / N -> limit law at O(1/N)", ok,
                       {"errors": errs, "ratios": ratios}, "ratio 10 +/- 30% per decade", budget=5.0)


def check_continuous_law() -> CheckResult:
    worst = {}
    d = np.geomspace(1.0, 1000.0, 31)[1:]
    for a in (0.5, 1.0, 2.0, 20.0):
        q = continuous_law(PowerLaw(a), d, 1.0)
        worst[f"alpha={a:g}"] = float(np.max(np.abs(q / power_law_time(d, a, 1.0, 1.0) - 1.0)))
    de = np.geomspace(0.01, 10.0, 31)
    q = continuous_law(Exponential(), de, 1.0)
    worst["exponential"] = float(np.max(np.abs(q / exponential_time(de, 1.0) - 1.0)))
    return CheckResult(4, "continuous law vs closed forms", max(worst.values()) <= 1e-7,
                       worst, "1e-7 rel", budget=10.0)


def check_sampled_rates(N: int = 1_000_000, seed: int = 0, stratified: bool = True) -> CheckResult:
    B = 1.0
    m = {}

    def curve(dist):
        g = dist.sample(N, seed=seed, sort=True, stratified=stratified)
        return coarsening_curve(simulate_exact(g, B), per_gap=True)

    c = curve(PowerLaw(0.5))
    m["a_power_slope"] = fit_rate(c, "power", n_window=(1e-4, 1e-2)).slope
    c = curve(PowerLaw(1.0))
    sel = (c.counts >= 1e-3) & (c.counts <= 0.5)
    m["b_cr1_max_rel_dev"] = float(np.max(np.abs(c.counts[sel] / cr1_curve(c.times[sel], 1.0, B) - 1.0)))
    c = curve(Exponential())
    m["c_exp_rate"] = fit_rate(c, "exp", n_window=(1e-4, 1e-2)).rate
    c = curve(HalfGaussian())
    fit = fit_rate(c, "gauss", n_window=(1e-4, 1e-2))
    m["d_gauss_rate"] = fit.rate
    m["d_gauss_C"] = -fit.intercept
    m["C_quadrature"] = gaussian_constant()
    ok = (abs(m["a_power_slope"] + 1.0) <= 0.05
          and m["b_cr1_max_rel_dev"] <= 0.02
          and abs(m["c_exp_rate"] / B - 1.0) <= 0.05
          and abs(m["d_gauss_rate"] / (B * math.sqrt(math.pi)) - 1.0) <= 0.05
          and abs(m["d_gauss_C"] - 0.74) <= 0.05)
    return CheckResult(5, f"sampled coarsening rates (N={N:.0e}, {'stratified' if stratified else 'iid'})", ok, m,
                       "slope -1+/-0.05; CR1 2%; rates 5%; C 0.74+/-0.05", budget=120.0)


def _trajectory_gap(params_a, regime_a, scale_a, params_b, regime_b, y0, t_end, ctrl):
    ts = np.linspace(0.0, t_end, 41)
    _, ya = integrate(vector_field(params_a, regime_a, scale_a), y0, 0.0, t_end, ctrl, ts)
    _, yb = integrate(vector_field(params_b, regime_b), y0, 0.0, t_end, ctrl, ts)
    return float(np.max(np.abs(ya - yb)))


def check_regime_limits() -> CheckResult:
    state = four_droplet_profile()
    y0 = state.to_vector()
    base = ModelParams(epsilon=0.025)
    ctrl = StepControl(rel_tol=1e-10, abs_tol=1e-10)
    # windows end before the first event of the limiting model
    inf_params = base.replace(beta=math.inf)
    big = [_trajectory_gap(base.replace(beta=b), Regime.FINITE_BETA, 1.0, inf_params,
                           Regime.INFINITE_BETA, y0, 0.08, ctrl) for b in (1e2, 1e3, 1e4)]
    zero_params = base.replace(beta=0.0)
    small = []
    for b in (1e-1, 1e-2):
        p, scale = zero_slip_scaling(base, b)
        small.append(_trajectory_gap(p, Regime.FINITE_BETA, scale, zero_params,
                                     Regime.ZERO_BETA, y0, 0.2, ctrl))
    ok = big[0] > big[1] > big[2] and small[0] > small[1]
    return CheckResult(6, "finite-slip trajectories approach both limits", ok,
                       {"dev_beta_1e2_1e3_1e4": big, "dev_beta_1e-1_1e-2": small},
                       "monotone decrease", budget=30.0)


def check_absorption_vs_full() -> CheckResult:
    params = ModelParams(epsilon=0.025, beta=math.inf)
    p, pbar, dN = 0.01, 0.001, 10.0
    P = np.array([p, p, p, p, pbar])
    R = 1.0 / (math.sqrt(3.0) * P)
    gaps = np.array([200.0, 150.0, 100.0, dN])
    X = np.concatenate([[0.0], np.cumsum(gaps + R[1:] + R[:-1])])
    run = run_coarsening(DropletArray(X, P), params, t_max=1e4, max_events=1)
    ev = run.first_event
    B = (p - pbar) / (params.nu * params.integral_I)
    # the full model collides at gap delta rather than zero
    predicted = collision_time(np.append(gaps[:-1], dN - params.delta), B)
    ok = ev is not None and ev.kind.value == "collision" and ev.indices == (3, 4) \
        and abs(ev.time / predicted - 1.0) <= 0.05
    return CheckResult(7, "full free-film model vs absorption prediction", ok, {
        "t_full": ev.time if ev else math.nan, "t_predicted": predicted,
        "rel_err": abs(ev.time / predicted - 1.0) if ev else math.nan,
        "pair": list(ev.indices) if ev else []}, "5% rel", budget=30.0)


def check_invariants(seed: int = 0, n_large: int = 10_000_000) -> CheckResult:
    rng = np.random.default_rng(seed)
    m = {}
    # mass proxy under collisions
    worst = 0.0
    params = ModelParams()
    for _ in range(200):
        n = int(rng.integers(3, 12))
        P = rng.uniform(0.05, 2.0, n)
        R = 1.0 / (math.sqrt(3.0) * P)
        X = np.concatenate([[0.0], np.cumsum(R[1:] + R[:-1] + rng.uniform(0.1, 2.0, n - 1))])
        s = DropletArray(X, P)
        after = apply_collision(s, int(rng.integers(0, n - 1)) if n > 2 else 0, params)
        worst = max(worst, abs(mass_proxy(after) / mass_proxy(s) - 1.0))
    m["mass_proxy_rel"] = worst
    # span at large N
    g = PowerLaw(0.5).sample(n_large, seed=seed, sort=True)
    m["span_defect_1e7"] = simulate_exact(g, 1.0).span_defect
    del g
    # ordering
    ga = GapArray(np.sort(rng.uniform(0.1, 5.0, 1000))[::-1], 1.0, ordered=True)
    ordered = True
    while ga.n > 1:
        ga.absorb_next()
        ordered &= bool(np.all(np.diff(ga.actual()[:-1]) <= 0))
    m["ordering_preserved"] = ordered
    # lazy vs naive
    g = rng.uniform(0.1, 5.0, 1000)
    lazy, naive = simulate_exact(g, 0.7).times, simulate_exact(g, 0.7, "naive").times
    m["lazy_vs_naive_rel"] = float(np.max(np.abs(lazy / naive - 1.0)))
    # monotone n(t)
    c = coarsening_curve(simulate_exact(g, 0.7))
    run = run_coarsening(four_droplet_profile(), ModelParams(beta=5.0), t_max=5.0)
    m["curves_monotone"] = bool(np.all(np.diff(c.counts) < 0) and np.all(np.diff(run.curve.counts) <= 0)
                                and np.all(np.diff(run.curve.times) >= 0))
    # uniform fixed points
    s = DropletArray([0.0, 2.0, 4.5, 7.0], [0.8, 0.8, 0.8, 0.8])
    fixed = 0.0
    for beta in (0.0, 3.0, math.inf):
        der = rhs(s, ModelParams(beta=beta))
        fixed = max(fixed, float(np.max(np.abs(der.to_vector()))))
    m["uniform_rhs_max"] = fixed
    ok = (m["mass_proxy_rel"] <= 1e-14 and m["span_defect_1e7"] <= 1e-12 and ordered
          and m["lazy_vs_naive_rel"] <= 1e-12 and m["curves_monotone"] and fixed == 0.0)
    return CheckResult(8, "structural invariants", ok, m,
                       "mass 1e-14; span 1e-12; lazy/naive 1e-12; exact fixed points", budget=120.0)


def check_performance(n: int = 10_000_000, seed: int = 0) -> CheckResult:
    g = PowerLaw(0.5).sample(n, seed=seed, sort=True)
    tracemalloc.start()
    t0 = time.perf_counter()
    res = simulate_exact(g, 1.0)
    curve = coarsening_curve(res, per_gap=True)
    elapsed = time.perf_counter() - t0
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    input_mb = g.nbytes / 2**20
    peak_mb = peak / 2**20 + input_mb
    ok = elapsed <= 60.0 and peak_mb <= 1024.0 and len(curve) == n
    return CheckResult(9, f"simulate_exact at N={n:.0e}", ok,
                       {"seconds": elapsed, "peak_MiB_incl_input": peak_mb}, "<= 60 s, <= 1 GiB",
                       budget=60.0)


CHECKS: Dict[int, Callable[[], CheckResult]] = {
    1: check_integral_I,
    2: check_discrete_law,
    3: check_limit_law,
    4: check_continuous_law,
    5: check_sampled_rates,
    6: check_regime_limits,
    7: check_absorption_vs_full,
    8: check_invariants,
    9: check_performance,
}


def run_check(number: int) -> CheckResult:
    t0 = time.perf_counter()
    res = CHECKS[number]()
    res.runtime = time.perf_counter() - t0
    if res.runtime > res.budget:
        res.passed = False
        res.note = (res.note + "; " if res.note else "") + "runtime budget exceeded"
    return res


def run_checks(only: Optional[Sequence[int]] = None) -> List[CheckResult]:
    numbers = sorted(CHECKS) if not only else sorted(set(only))
    unknown = [k for k in numbers if k not in CHECKS]
    if unknown:
        raise ValueError(f"unknown check numbers {unknown}; valid: {sorted(CHECKS)}")
    return [run_check(k) for k in numbers]
