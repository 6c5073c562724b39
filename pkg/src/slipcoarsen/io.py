"""Plot-ready output files and gap-list input.

Every CSV starts with a comment line ``# config_sha256=<hex> seed=<seed>``
followed by a header row. Event logs are JSON lines.
"""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .core import CoarseningCurve, EventRecord


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical JSON form of a resolved configuration."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(blob.encode()).hexdigest()


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"not serialisable: {type(x).__name__}")


def meta_line(config_sha: str, seed) -> str:
    return f"# config_sha256={config_sha} seed={seed}"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "inf" if math.isinf(v) and v > 0 else repr(float(v))
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], meta: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(meta + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_columns(path, header: Sequence[str], columns: Sequence[np.ndarray], meta: str) -> Path:
    """Fast path for large numeric tables."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    with open(path, "w") as fh:
        fh.write(meta + "\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.17g", header=",".join(header), comments="")
    return path


def write_curve(path, curve: CoarseningCurve, meta: str, max_points: int = 0) -> Path:
    """``t,n`` rows; ``max_points > 0`` keeps a subset of jumps log-spaced
    from both ends, so early times and the small-``n`` tail stay resolved."""
    t, n = curve.times, curve.counts
    if max_points and t.size > max_points:
        last = t.size - 1
        g = np.round(np.geomspace(1, last, max(max_points // 2, 2))).astype(np.int64)
        idx = np.unique(np.concatenate([[0, last], g, last - g]))
        t, n = t[idx], n[idx]
    return write_columns(path, ["t", "n"], [t, n], meta)


def read_numeric_csv(path) -> np.ndarray:
    """Numeric rows of a CSV; ``#`` comments and a leading header row are skipped."""
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                rows.append([float(v) for v in s.split(",")])
            except ValueError:
                if rows:
                    raise ValueError(f"{path}:{lineno}: non-numeric row") from None
    return np.asarray(rows, dtype=float).reshape(len(rows), -1)


def read_curve(path) -> CoarseningCurve:
    data = read_numeric_csv(path)
    if data.shape[1] < 2:
        raise ValueError(f"{path}: need t,n columns")
    return CoarseningCurve(data[:, 0], data[:, 1], "file")


def write_trajectory(path, snapshots, labels: Sequence[int], meta: str) -> Path:
    """Columns ``t, event, X_<label>..., P_<label>...``; blank once a droplet is gone.

    ``labels`` are the initial droplet labels, so columns stay fixed across
    events. Rows written right after an event carry its kind in ``event``.
    """
    labels = list(labels)
    col = {lab: k for k, lab in enumerate(labels)}
    header = ["t", "event"] + [f"X_{l}" for l in labels] + [f"P_{l}" for l in labels]
    m = len(labels)

    def rows():
        for s in snapshots:
            X: List[Optional[float]] = [None] * m
            P: List[Optional[float]] = [None] * m
            for lab, x, p in zip(s.labels, s.positions, s.pressures):
                X[col[int(lab)]] = x
                P[col[int(lab)]] = p
            yield [s.t, s.marker] + X + P

    return write_csv(path, header, rows(), meta)


def write_events(path, events: Sequence[EventRecord]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for ev in events:
            fh.write(json.dumps(ev.to_dict()) + "\n")
    return path


def read_events(path) -> List[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def read_gap_file(path) -> np.ndarray:
    """One decimal per line; blank lines and ``#`` comments are ignored."""
    values = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            try:
                values.append(float(s))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {s!r}") from None
    if not values:
        raise ValueError(f"{path}: no gaps found")
    return np.asarray(values)


def write_gap_file(path, gaps: np.ndarray, meta: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(meta + "\n")
        np.savetxt(fh, np.asarray(gaps, dtype=float), fmt="%.17g")
    return path
