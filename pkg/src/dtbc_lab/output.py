"""Writers for run artifacts: log-scale PGM images, CSV tables and JSON summaries."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

LOG_RANGE_1D = (-16.0, 0.0)
LOG_RANGE_2D = (-10.0, 0.0)


def log_levels(field, lo, hi):
    """``clamp(log10|u|, lo, hi)`` mapped linearly onto 0..65535.

    Zeros map to ``lo``; non-finite entries map to the top level.
    """
    a = np.abs(np.asarray(field, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.log10(a)
    lg = np.where(np.isfinite(lg), lg, np.where(a == 0, lo, hi))
    lg = np.clip(lg, lo, hi)
    return np.rint((lg - lo) / (hi - lo) * 65535).astype(">u2")


def write_logfield(field, path, lo=-10.0, hi=0.0):
    """16-bit binary PGM of ``log10|u|``.

    A 2D field ``u[j, k]`` is drawn with ``x`` to the right and ``y`` upwards;
    a ``(time, j)`` history is drawn with time running downwards.
    """
    field = np.asarray(field)
    if field.ndim != 2:
        raise ValueError("write_logfield needs a 2D array")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    levels = log_levels(field, lo, hi)
    rows, cols = levels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n65535\n".encode("ascii"))
        fh.write(levels.tobytes())


def write_field_image(u, path, lo=-10.0, hi=0.0):
    """Write a 2D snapshot ``u[j, k]`` oriented as a map (top row is the top side)."""
    write_logfield(np.asarray(u).T[::-1], path, lo, hi)


def read_pgm(path):
    """Read back a binary 16-bit PGM written by ``write_logfield``."""
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM")
    cols, rows, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 65535:
        raise ValueError("expected a 16-bit PGM")
    return np.frombuffer(parts[4], dtype=">u2").reshape(rows, cols)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def write_metrics_1d(report, path, every=1):
    steps = range(0, report.steps + 1, max(1, every))
    write_csv(path, ["n", "t", "l2", "max_abs"],
              ((n, report.times[n], report.l2[n], report.max_abs[n]) for n in steps))


def write_field_1d(report, path, every=1):
    """Long-format ``n, j, u`` over the recorded levels that are multiples of ``every``.

    Boundary points ``j = 0`` and ``j = J+1`` are included.
    """
    if report.fields is None:
        raise ValueError("the run kept no field history (field_every = 0)")

    def rows():
        for n, u in zip(report.field_steps, report.fields):
            if n % every:
                continue
            for j, val in enumerate(u):
                yield n, j, val

    write_csv(path, ["n", "j", "u"], rows())


def write_l2_2d(report, path, every=1):
    steps = range(0, report.steps + 1, max(1, every))
    write_csv(path, ["n", "t", "l2"], ((n, report.times[n], report.l2[n]) for n in steps))


def snapshot_name(t):
    return f"logfield_t{t:g}.pgm"
