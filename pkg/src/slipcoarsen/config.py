"""Experiment configuration: YAML file, defaults and strict validation.

The schema is the nested dictionary :data:`DEFAULTS`. Every key a user
supplies must exist there; unknown keys and wrongly typed values are
rejected with the dotted field path and, for file input, the line number.
"""
from __future__ import annotations

import copy
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

# None means "no default"; the listed type then decides what is accepted.
DEFAULTS: Dict[str, Any] = {
    "seed": 0,
    "output": {"dir": "out"},
    "params": {
        "epsilon": 0.025,
        "sigma": 1.0,
        "nu": 1.0,
        "beta": math.inf,
        "collision_factor": 2.0,
        "collision_delta": None,
        "collapse_fraction": 0.5,
        "pressure_coefficient": None,
        "merge_rule": "extent-center",
    },
    "ode": {
        "regime": "auto",
        "t_max": 10.0,
        "rel_tol": 1e-8,
        "abs_tol": 1e-8,
        "dt_init": 1e-3,
        "dt_max": math.inf,
        "snapshot_stride": 1,
        "max_events": None,
        "initial": {
            "profile": None,
            "positions": None,
            "pressures": None,
            "random": {
                "count": None,
                "gap_min": 0.5,
                "gap_max": 2.0,
                "p_min": 0.3,
                "p_max": 1.5,
            },
        },
    },
    "absorption": {
        "B": 1.0,
        "method": "lazy",
        "sort": True,
        "per_gap": False,
        "gaps_file": None,
        "families": {"distances": None, "counts": None},
        "sample": {"distribution": None, "params": {}, "count": None, "stratified": False},
        "curve_max_points": 0,
    },
    "law": {
        "kind": "continuous",
        "B": 1.0,
        "distribution": "exponential",
        "params": {},
        "d": None,
        "d_min": 1.0,
        "d_max": 1000.0,
        "points": 200,
        "t_max": None,
        "families": {"distances": None, "counts": None},
        "fractions": None,
    },
    "sample": {
        "distribution": "exponential",
        "params": {},
        "count": 1000,
        "sort": True,
        "stratified": False,
    },
    "fit": {
        "input": None,
        "kind": "power",
        "n_window": None,
        "t_window": None,
        "A": None,
        "B": None,
        "min_points": 20,
    },
    "verify": {"only": None, "json": None},
}

# expected types where the default alone does not say (None defaults, free dicts)
_TYPES: Dict[str, tuple] = {
    "seed": (int,),
    "output.dir": (str,),
    "params.collision_delta": (float,),
    "params.pressure_coefficient": (float,),
    "params.merge_rule": (str,),
    "ode.regime": (str,),
    "ode.max_events": (int,),
    "ode.initial.profile": (str,),
    "ode.initial.positions": (list,),
    "ode.initial.pressures": (list,),
    "ode.initial.random.count": (int,),
    "absorption.method": (str,),
    "absorption.gaps_file": (str,),
    "absorption.families.distances": (list,),
    "absorption.families.counts": (list,),
    "absorption.sample.distribution": (str,),
    "absorption.sample.count": (int,),
    "law.kind": (str,),
    "law.distribution": (str,),
    "law.d": (list,),
    "law.t_max": (float,),
    "law.families.distances": (list,),
    "law.families.counts": (list,),
    "law.fractions": (list,),
    "sample.distribution": (str,),
    "fit.input": (str,),
    "fit.kind": (str,),
    "fit.n_window": (list,),
    "fit.t_window": (list,),
    "fit.A": (float,),
    "fit.B": (float,),
    "verify.only": (list,),
    "verify.json": (str,),
}

# dictionaries whose keys are free (distribution parameters)
_FREE = {"absorption.sample.params", "law.params", "sample.params"}

_CHOICES = {
    "params.merge_rule": ("extent-center", "left-edges"),
    "ode.regime": ("auto", "finite", "infinite", "zero"),
    "ode.initial.profile": ("four-droplet",),
    "absorption.method": ("lazy", "suffix", "naive"),
    "law.kind": ("discrete", "limit", "continuous", "asymptote"),
    "law.distribution": ("power", "exponential", "gaussian", "bump", "mixture"),
    "sample.distribution": ("power", "exponential", "gaussian", "bump", "mixture"),
    "absorption.sample.distribution": ("power", "exponential", "gaussian", "bump", "mixture"),
    "fit.kind": ("power", "exp", "cr1", "gauss"),
}


class ConfigError(ValueError):
    """Invalid configuration; the message names the field and, if known, the line."""


def _where(path: str, line: Optional[int], source: str) -> str:
    loc = f"{source}:{line}: " if line is not None else ""
    return f"{loc}{path or '<root>'}"


def _yaml_line(node) -> Optional[int]:
    return node.start_mark.line + 1 if node is not None else None


def _line_index(node, prefix="") -> Dict[str, int]:
    """Dotted key path -> line number for every mapping key in a YAML tree."""
    out: Dict[str, int] = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}.{k.value}" if prefix else str(k.value)
            out[path] = _yaml_line(k)
            out.update(_line_index(v, path))
    return out


def _parse_float(value, path, where):
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("inf", "+inf", "infinity", ".inf"):
            return math.inf
        try:
            return float(s)
        except ValueError:
            pass
    raise ConfigError(f"{where}: expected a number, got {value!r}")


def _coerce(value, default, path, where):
    if value is None:
        return None
    kind = _TYPES.get(path)
    if kind is None:
        if isinstance(default, bool):
            kind = (bool,)
        elif isinstance(default, int):
            kind = (int,)
        elif isinstance(default, float):
            kind = (float,)
        elif isinstance(default, str):
            kind = (str,)
        elif isinstance(default, dict):
            kind = (dict,)
    t = kind[0] if kind else None
    if t is float:
        return _parse_float(value, path, where)
    if t is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if t is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true or false, got {value!r}")
        return value
    if t is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        choices = _CHOICES.get(path)
        if choices and value not in choices:
            raise ConfigError(f"{where}: {value!r} is not one of {list(choices)}")
        return value
    if t is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return value
    if t is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a mapping, got {value!r}")
        return value
    return value


def _merge(base: dict, user: dict, prefix: str, lines: Dict[str, int], source: str) -> None:
    for key, value in user.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        where = _where(path, lines.get(path), source)
        if key not in base:
            raise ConfigError(f"{where}: unknown key (allowed: {sorted(base)})")
        default = base[key]
        if isinstance(default, dict) and path not in _FREE:
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: expected a mapping, got {value!r}")
            _merge(default, value, path, lines, source)
        elif path in _FREE:
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: expected a mapping, got {value!r}")
            base[key] = {str(k): _parse_float(v, f"{path}.{k}", where) for k, v in value.items()}
        else:
            base[key] = _coerce(value, default, path, where)


def defaults() -> dict:
    return copy.deepcopy(DEFAULTS)


def load_config(path=None, overrides: Optional[List[str]] = None) -> dict:
    """Defaults updated by a YAML file and ``key.path=value`` overrides."""
    cfg = defaults()
    if path is not None:
        path = Path(path)
        text = path.read_text()
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: malformed YAML: {exc}") from None
        if data is not None:
            if not isinstance(data, dict):
                raise ConfigError(f"{path}:1: top level must be a mapping")
            _merge(cfg, data, "", _line_index(node), str(path))
    for item in overrides or ():
        key, value = parse_override(item)
        nested: dict = {}
        cur = nested
        parts = key.split(".")
        for p in parts[:-1]:
            cur = cur.setdefault(p, {})
        cur[parts[-1]] = value
        _merge(cfg, nested, "", {}, f"--set {item}")
    return cfg


def parse_override(item: str) -> Tuple[str, Any]:
    if "=" not in item:
        raise ConfigError(f"--set expects key.path=value, got {item!r}")
    key, raw = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"--set expects key.path=value, got {item!r}")
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError:
        value = raw
    return key, value


def get(cfg: dict, dotted: str):
    cur = cfg
    for p in dotted.split("."):
        cur = cur[p]
    return cur


def set_value(cfg: dict, dotted: str, value) -> None:
    """Apply a typed value (e.g. a parsed CLI flag) through the same validation."""
    parts = dotted.split(".")
    nested: dict = {}
    cur = nested
    for p in parts[:-1]:
        cur = cur.setdefault(p, {})
    cur[parts[-1]] = value
    _merge(cfg, nested, "", {}, "flag")


def model_params_kwargs(cfg: dict) -> dict:
    return dict(cfg["params"])


def dump(cfg: dict) -> str:
    def plain(x):
        if isinstance(x, dict):
            return {k: plain(v) for k, v in x.items()}
        if isinstance(x, float) and math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return yaml.safe_dump(plain(cfg), sort_keys=False)
