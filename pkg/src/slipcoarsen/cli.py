"""Command-line entry point: ``slipcoarsen <subcommand> [--config FILE] ...``.

Exit codes: 0 success, 1 failed acceptance check, 2 invalid input or
configuration, 3 numerical failure (outputs written so far are kept and
flagged in ``status.json``).
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import config as cfgmod
from . import io
from .absorption import FamilySpec, coarsening_curve, simulate_exact
from .core import DropletArray, ModelParams, StateError, compute_integral_I, radius_from_pressure
from .distributions import ks_distance, make_distribution
from .events import run_coarsening
from .integrator import StepControl
from .laws import (DivergenceWarning, asymptotic_curve, continuous_law, discrete_law, fit_rate,
                   limit_law)
from .reduced_ode import Regime

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

# (flag, dotted config key, type) per subcommand; flags override the file
_FLAGS = {
    "simulate-ode": [
        ("--epsilon", "params.epsilon", float), ("--beta", "params.beta", str),
        ("--regime", "ode.regime", str), ("--t-max", "ode.t_max", float),
        ("--snapshot-stride", "ode.snapshot_stride", int), ("--profile", "ode.initial.profile", str),
    ],
    "simulate-absorption": [
        ("--B", "absorption.B", float), ("--method", "absorption.method", str),
        ("--gaps-file", "absorption.gaps_file", str),
        ("--distribution", "absorption.sample.distribution", str),
        ("--count", "absorption.sample.count", int),
        ("--curve-max-points", "absorption.curve_max_points", int),
    ],
    "law": [
        ("--kind", "law.kind", str), ("--B", "law.B", float),
        ("--distribution", "law.distribution", str), ("--points", "law.points", int),
    ],
    "sample": [
        ("--distribution", "sample.distribution", str), ("--count", "sample.count", int),
    ],
    "fit": [
        ("--input", "fit.input", str), ("--kind", "fit.kind", str),
    ],
    "verify": [],
    "integral-i": [],
}


class CLIError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slipcoarsen",
                                     description="Droplet coarsening under slip: reduced models and laws.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate-ode": "integrate the reduced ODE through coarsening events",
        "simulate-absorption": "exact collision times of the absorption model",
        "law": "coarsening law curve (discrete, limit, continuous or asymptote)",
        "sample": "draw an initial gap list from a catalogued distribution",
        "fit": "fit the large-time coarsening rate of a curve CSV",
        "verify": "run the acceptance checks",
        "integral-i": "print the integral I",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, help="YAML configuration file")
        p.add_argument("--seed", type=int, help="random seed (config key 'seed')")
        p.add_argument("--out", help="output directory (config key 'output.dir')")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key, e.g. --set params.beta=5")
        for flag, key, typ in _FLAGS[name]:
            p.add_argument(flag, dest=key.replace(".", "__"), type=typ, help=f"config key '{key}'")
        if name == "verify":
            p.add_argument("--only", help="comma-separated check numbers (config key 'verify.only')")
            p.add_argument("--json", dest="json_out", help="write a JSON report (config key 'verify.json')")
        if name == "integral-i":
            p.add_argument("--json", dest="json_out", action="store_true", help="print JSON")
    return parser


def resolve_config(args) -> dict:
    cfg = cfgmod.load_config(args.config, args.set)
    if args.seed is not None:
        cfgmod.set_value(cfg, "seed", args.seed)
    if args.out is not None:
        cfgmod.set_value(cfg, "output.dir", args.out)
    for _, key, _ in _FLAGS[args.command]:
        v = getattr(args, key.replace(".", "__"))
        if v is not None:
            cfgmod.set_value(cfg, key, v)
    if args.command == "verify":
        if args.only:
            try:
                cfgmod.set_value(cfg, "verify.only", [int(x) for x in args.only.split(",")])
            except ValueError:
                raise CLIError(f"--only expects comma-separated integers, got {args.only!r}")
        if args.json_out:
            cfgmod.set_value(cfg, "verify.json", args.json_out)
    return cfg


def _experiment_hash(cfg) -> str:
    # where results are written does not change them
    return io.config_hash({k: v for k, v in cfg.items() if k != "output"})


def _meta(cfg):
    return io.meta_line(_experiment_hash(cfg), cfg["seed"])


def _out(cfg) -> Path:
    out = Path(cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_status(out: Path, cfg: dict, status: str, partial: bool, **extra) -> None:
    info = {"status": status, "partial": partial, "config_sha256": _experiment_hash(cfg),
            "seed": cfg["seed"], **extra}
    (out / "status.json").write_text(json.dumps(info, indent=2, default=float) + "\n")


def _floats(values, path) -> np.ndarray:
    try:
        arr = np.asarray([float(v) for v in values], dtype=float)
    except (TypeError, ValueError):
        raise CLIError(f"{path}: expected a list of numbers")
    return arr


# ------------------------------------------------------------------ commands

def initial_droplets(cfg: dict, params: ModelParams) -> DropletArray:
    init = cfg["ode"]["initial"]
    given = [init["profile"] is not None, init["positions"] is not None,
             init["random"]["count"] is not None]
    if sum(given) != 1:
        raise CLIError("ode.initial: set exactly one of profile, positions/pressures, random.count")
    if init["profile"] == "four-droplet":
        from .verification import four_droplet_profile
        return four_droplet_profile()
    if init["positions"] is not None:
        if init["pressures"] is None:
            raise CLIError("ode.initial.pressures is required with positions")
        x = _floats(init["positions"], "ode.initial.positions")
        p = _floats(init["pressures"], "ode.initial.pressures")
        if x.size != p.size:
            raise CLIError("ode.initial: positions and pressures differ in length")
        return DropletArray(x, p)
    r = init["random"]
    m = r["count"]
    if m < 2:
        raise CLIError("ode.initial.random.count must be >= 2")
    if not (0 < r["gap_min"] <= r["gap_max"] and 0 < r["p_min"] <= r["p_max"]):
        raise CLIError("ode.initial.random: need 0 < gap_min <= gap_max and 0 < p_min <= p_max")
    rng = np.random.default_rng(cfg["seed"])
    p = rng.uniform(r["p_min"], r["p_max"], m)
    gaps = rng.uniform(r["gap_min"], r["gap_max"], m - 1)
    R = radius_from_pressure(p, params.sigma)
    x = np.concatenate([[0.0], np.cumsum(R[:-1] + gaps + R[1:])])
    return DropletArray(x, p)


def cmd_simulate_ode(cfg: dict) -> int:
    params = ModelParams(**cfgmod.model_params_kwargs(cfg))
    ode = cfg["ode"]
    regime = None if ode["regime"] == "auto" else Regime(ode["regime"])
    ctrl = StepControl(rel_tol=ode["rel_tol"], abs_tol=ode["abs_tol"], dt_init=ode["dt_init"],
                       dt_max=ode["dt_max"])
    state = initial_droplets(cfg, params)
    run = run_coarsening(state, params, regime=regime, t_max=ode["t_max"], ctrl=ctrl,
                         snapshot_stride=ode["snapshot_stride"], max_events=ode["max_events"])
    out, meta = _out(cfg), _meta(cfg)
    io.write_trajectory(out / "trajectory.csv", run.snapshots, run.initial_labels, meta)
    io.write_events(out / "events.jsonl", run.events)
    io.write_columns(out / "curve.csv", ["t", "n"], [run.curve.times, run.curve.counts], meta)
    failed = run.status == "stiff"
    _write_status(out, cfg, run.status, failed, t_final=run.t_final, events=len(run.events),
                  message=run.message)
    first = run.first_event
    desc = f"{first.kind.value} {list(first.indices)} at t={first.time:.6g}" if first else "none"
    print(f"status={run.status} t_final={run.t_final:.6g} events={len(run.events)} first_event={desc}")
    if failed:
        print(f"numerical failure: {run.message}; partial outputs in {out}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _families(section: dict, path: str) -> Optional[FamilySpec]:
    fam = section["families"]
    if fam["distances"] is None and fam["counts"] is None:
        return None
    if fam["distances"] is None or fam["counts"] is None:
        raise CLIError(f"{path}.families needs both distances and counts")
    return FamilySpec(_floats(fam["distances"], f"{path}.families.distances"), fam["counts"])


def absorption_input(cfg: dict):
    a = cfg["absorption"]
    fam = _families(a, "absorption")
    smp = a["sample"]
    sources = [a["gaps_file"] is not None, fam is not None, smp["distribution"] is not None]
    if sum(sources) != 1:
        raise CLIError("absorption: set exactly one of gaps_file, families, sample.distribution")
    if fam is not None:
        return fam
    if a["gaps_file"] is not None:
        gaps = io.read_gap_file(a["gaps_file"])
        return np.sort(gaps)[::-1] if a["sort"] else gaps
    if smp["count"] is None or smp["count"] < 2:
        raise CLIError("absorption.sample.count must be >= 2")
    dist = make_distribution(smp["distribution"], **smp["params"])
    return dist.sample(smp["count"], seed=cfg["seed"], sort=a["sort"], stratified=smp["stratified"])


def cmd_simulate_absorption(cfg: dict) -> int:
    a = cfg["absorption"]
    initial = absorption_input(cfg)
    result = simulate_exact(initial, a["B"], method=a["method"])
    out, meta = _out(cfg), _meta(cfg)
    j = np.arange(1, result.times.size + 1, dtype=float)
    io.write_columns(out / "collision_times.csv", ["j", "t"], [j, result.times], meta)
    curve = coarsening_curve(result, per_gap=a["per_gap"])
    io.write_curve(out / "curve.csv", curve, meta, max_points=a["curve_max_points"])
    extra = {"n_gaps": result.n_gaps, "total_time": result.total_time,
             "span_defect": result.span_defect}
    if result.families is not None:
        fam = result.families
        io.write_columns(out / "family_times.csv", ["m", "d_m", "i_m", "t_simulated", "t_law"],
                         [np.arange(1, fam.k + 1), fam.distances, fam.counts,
                          result.family_times(), discrete_law(fam, a["B"])], meta)
    _write_status(out, cfg, "completed", False, **extra)
    print(f"n_gaps={result.n_gaps} total_time={result.total_time:.12g} method={result.method}")
    return EXIT_OK


def cmd_law(cfg: dict) -> int:
    law = cfg["law"]
    B = law["B"]
    out, meta = _out(cfg), _meta(cfg)
    kind = law["kind"]
    if kind in ("discrete", "limit"):
        fam = law["families"]
        if fam["distances"] is None:
            raise CLIError(f"law.kind={kind} needs law.families.distances")
        d = _floats(fam["distances"], "law.families.distances")
        if kind == "discrete":
            spec = _families(law, "law")
            T = discrete_law(spec, B)
            n = 1.0 - np.cumsum(spec.counts[::-1])[::-1] / (spec.n_gaps)
        else:
            if law["fractions"] is None:
                raise CLIError("law.kind=limit needs law.fractions")
            fr = _floats(law["fractions"], "law.fractions")
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", DivergenceWarning)
                T = limit_law(d, fr, B)
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
            n = 1.0 - np.cumsum(fr[::-1])[::-1]
        io.write_columns(out / "law.csv", ["d", "T", "n"], [d, T, n], meta)
        print(f"{kind} law: {d.size} families, T_max={np.max(T[np.isfinite(T)], initial=0.0):.12g}")
        return EXIT_OK
    dist = make_distribution(law["distribution"], **law["params"])
    if kind == "continuous":
        d = (_floats(law["d"], "law.d") if law["d"] is not None
             else np.geomspace(law["d_min"], law["d_max"], law["points"]))
        if np.any(d < 0):
            raise CLIError("law.d must be non-negative")
        T = np.atleast_1d(continuous_law(dist, d, B))
        io.write_columns(out / "law.csv", ["d", "T", "n"],
                         [d, T, np.asarray(dist.survivor(d), dtype=float)], meta)
        print(f"continuous law: {d.size} points, T(d_max)={T[-1]:.12g}")
        return EXIT_OK
    spec = asymptotic_curve(dist, B)
    t_max = law["t_max"] if law["t_max"] is not None else 100.0
    t = np.linspace(t_max / law["points"], t_max, law["points"])
    io.write_columns(out / "law.csv", ["t", "n"], [t, np.asarray(spec(t), dtype=float)], meta)
    print(f"asymptote: {spec.kind.value} {json.dumps(spec.params, default=float)}")
    return EXIT_OK


def cmd_sample(cfg: dict) -> int:
    s = cfg["sample"]
    if s["count"] < 1:
        raise CLIError("sample.count must be >= 1")
    dist = make_distribution(s["distribution"], **s["params"])
    x = dist.sample(s["count"], seed=cfg["seed"], sort=s["sort"], stratified=s["stratified"])
    out = _out(cfg)
    io.write_gap_file(out / "gaps.txt", x, _meta(cfg))
    print(f"{dist!r}: {x.size} gaps, ks_distance={ks_distance(dist, x):.3g}")
    return EXIT_OK


def cmd_fit(cfg: dict) -> int:
    f = cfg["fit"]
    if f["input"] is None:
        raise CLIError("fit.input (curve CSV with t,n columns) is required")
    curve = io.read_curve(f["input"])
    fit = fit_rate(curve, f["kind"],
                   t_window=tuple(_floats(f["t_window"], "fit.t_window")) if f["t_window"] else None,
                   n_window=tuple(_floats(f["n_window"], "fit.n_window")) if f["n_window"] else None,
                   A=f["A"], B=f["B"], min_points=f["min_points"])
    report = {"kind": fit.kind.value, "slope": fit.slope, "intercept": fit.intercept,
              "max_rel_residual": fit.max_rel_residual, "n_points": fit.n_points,
              "window": list(fit.window)}
    if fit.kind.value in ("exp", "gauss"):
        report["rate"] = fit.rate
    print(json.dumps(report))
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    from .verification import run_checks
    results = run_checks(cfg["verify"]["only"])
    for r in results:
        print(r.line(), flush=True)
    if cfg["verify"]["json"]:
        path = Path(cfg["verify"]["json"])
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps([r.to_dict() for r in results], indent=2, default=float) + "\n")
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed"
          + (f"; failed: {failed}" if failed else ""))
    return EXIT_CHECK if failed else EXIT_OK


def cmd_integral_i(cfg: dict, as_json: bool = False) -> int:
    from .verification import EXACT_I, PUBLISHED_I
    value = compute_integral_I()
    if as_json:
        print(json.dumps({"quadrature": value, "exact": EXACT_I, "published": PUBLISHED_I}))
    else:
        print(f"I (quadrature)      = {value:.17g}")
        print(f"(3 + sqrt 3) / 35   = {EXACT_I:.17g}")
        print(f"1 / (35 (3+sqrt 3)) = {PUBLISHED_I:.17g}")
    return EXIT_OK


_COMMANDS = {
    "simulate-ode": cmd_simulate_ode,
    "simulate-absorption": cmd_simulate_absorption,
    "law": cmd_law,
    "sample": cmd_sample,
    "fit": cmd_fit,
    "verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "integral-i":
            return cmd_integral_i(cfg, args.json_out)
        return _COMMANDS[args.command](cfg)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (cfgmod.ConfigError, StateError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
