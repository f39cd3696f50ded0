"""Named experiments E1-E9 with expected metric bands.

Every preset names the acceptance criterion (numbered as in
``tests/test_acceptance.py``) that its expected block checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import output
from .core import config_from_mapping
from .solver1d import run_1d
from .solver2d import run_2d, reflection_magnitude

REFLECTION_WINDOW = (5.5, 8.0)
REFERENCE_2D = {"dim": 2, "J": 300, "K": 200, "cfl": 0.5, "T": 8}
REFERENCE_1D = {"dim": 1, "J": 999, "cfl": "5/6", "T": 10}


@dataclass
class Check:
    name: str
    value: float
    lo: float = -math.inf
    hi: float = math.inf

    @property
    def ok(self) -> bool:
        return bool(self.lo <= self.value <= self.hi)

    def line(self) -> str:
        band = f"[{self.lo:.3g}, {self.hi:.3g}]"
        return f"{'ok  ' if self.ok else 'FAIL'} {self.name} = {self.value:.4g}  expected {band}"


@dataclass
class Preset:
    id: str
    title: str
    criterion: int
    runs: dict
    notes: str = ""

    def describe(self) -> str:
        return f"{self.id}  {self.title}  (acceptance criterion {self.criterion})"


@dataclass
class PresetResult:
    preset: Preset
    checks: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)


def _sides(x, y):
    return {"left": x, "right": x, "bottom": y, "top": y}


PRESETS = {
    "E1": Preset("E1", "1D exact transparent closure, post-exit residual", 6,
                 {"dtbc": {**REFERENCE_1D, "scheme": "dtbc"}}),
    "E2": Preset("E2", "1D Neumann closure, reflected residual", 7,
                 {"neumann": {**REFERENCE_1D, "scheme": "neumann"}}),
    "E3": Preset("E3", "1D compressed closure (M,N)=(50,49) against the exact one", 8,
                 {"soe": {**REFERENCE_1D, "scheme": "soe", "soe_M": 50, "soe_N": 49},
                  "dtbc": {**REFERENCE_1D, "scheme": "dtbc"}}),
    "E4": Preset("E4", "2D c=(1,0) order 0, decoupled rows", 6,
                 {"order0": {**REFERENCE_2D, "c_y": 0, **_sides("dtbc0", "dtbc0")}}),
    "E5": Preset("E5", "2D c=(1,0.1) reflection ladder, orders 0 / 1 / 2x-1y", 9,
                 {"order0": {**REFERENCE_2D, "c_y": 0.1, **_sides("dtbc0", "dtbc0")},
                  "order1": {**REFERENCE_2D, "c_y": 0.1, **_sides("dtbc1", "dtbc1")},
                  "order2x1y": {**REFERENCE_2D, "c_y": 0.1, **_sides("dtbc2", "dtbc1")}}),
    "E6": Preset("E6", "2D c=(1,0.3) stable couplings", 10,
                 {"order0": {**REFERENCE_2D, "c_y": 0.3, **_sides("dtbc0", "dtbc0")},
                  "order1": {**REFERENCE_2D, "c_y": 0.3, **_sides("dtbc1", "dtbc1")},
                  "order2x1y": {**REFERENCE_2D, "c_y": 0.3, **_sides("dtbc2", "dtbc1")}}),
    "E7": Preset("E7", "2D c=(1,2/3) stable couplings and mixed-order comparison", 10,
                 {"order0": {**REFERENCE_2D, "c_y": "2/3", **_sides("dtbc0", "dtbc0")},
                  "order1": {**REFERENCE_2D, "c_y": "2/3", **_sides("dtbc1", "dtbc1")},
                  "order2x1y": {**REFERENCE_2D, "c_y": "2/3", **_sides("dtbc2", "dtbc1")}}),
    "E8": Preset("E8", "2D c=(1,0.3) order 2 on all sides, instability", 11,
                 {"order2": {**REFERENCE_2D, "c_y": 0.3, **_sides("dtbc2", "dtbc2"),
                             "allow_unstable": "true", "snapshots": "4"}}),
    "E9": Preset("E9", "2D order-1 closure time, exact against compressed (M,N)=(50,20)", 13,
                 {"exact": {**REFERENCE_2D, "c_y": 0.1, **_sides("dtbc1", "dtbc1")},
                  "soe": {**REFERENCE_2D, "c_y": 0.1, **_sides("dtbc1", "dtbc1"),
                          "soe": "true", "soe_M": 50, "soe_N": 20}}),
}


def config_for(preset_id, run):
    return config_from_mapping(PRESETS[preset_id].runs[run])


def stays_bounded(l2):
    """``max l2 <= 2 * max(l2 over the first quarter of the run)``; returns the ratio."""
    l2 = np.asarray(l2, dtype=float)
    quarter = max(1, len(l2) // 4)
    return float(np.nanmax(l2) / np.nanmax(l2[: quarter + 1]))


def near_top_or_right(u, cells=10):
    """True when the largest ``|u|`` sits within ``cells`` of the top or the right side."""
    j, k = np.unravel_index(np.nanargmax(np.abs(u)), u.shape)
    J2, K2 = u.shape
    return bool(j >= J2 - 1 - cells or k >= K2 - 1 - cells), (int(j), int(k))


def _write_1d(report, out: Path | None):
    if out is None:
        return
    output.write_metrics_1d(report, out / "metrics.csv", report.config.metrics_every)
    if report.fields is not None:
        output.write_field_1d(report, out / "field.csv", every=10)
        output.write_logfield(report.fields, out / "logfield.pgm", *output.LOG_RANGE_1D)


def _write_2d(report, out: Path | None, window=REFLECTION_WINDOW):
    if out is None:
        return
    output.write_l2_2d(report, out / "l2norm.csv", report.config.metrics_every)
    output.write_csv(out / "reflections.csv", ["n", "t", "max_abs_interior"],
                     ((n, report.times[n], report.probe_max[n]) for n in range(report.steps + 1)))
    for t, u in sorted(report.snapshots.items()):
        output.write_field_image(u, out / output.snapshot_name(t), *output.LOG_RANGE_2D)
    output.write_json(out / "summary.json", summary_2d(report, window))


def summary_2d(report, window=REFLECTION_WINDOW):
    try:
        refl = reflection_magnitude(report, window)
    except ValueError:
        refl = None
    return {"stable": report.stable, "growth_rate": report.growth_rate,
            "unstable_step": report.unstable_step, "truncated_at": report.truncated_at,
            "reflection_window": list(window), "reflection_magnitude": refl,
            "steps": report.steps, "dt": report.dt, "mu_x": report.mu_x, "mu_y": report.mu_y,
            "sides": dict(report.config.sides), "closure_seconds": report.closure_seconds,
            "total_seconds": report.total_seconds}


def run_preset(preset_id, out_dir=None) -> PresetResult:
    """Run one preset, write its artifacts under ``out_dir/<id>/<run>`` and check its bands."""
    preset = PRESETS[preset_id]
    res = PresetResult(preset)
    base = None if out_dir is None else Path(out_dir) / preset_id

    def where(run):
        return None if base is None else base / run

    if preset_id in ("E1", "E2", "E3"):
        reports = {}
        for run, values in preset.runs.items():
            keep = {"field_every": 1} if base is not None else {}
            rep = run_1d(config_from_mapping({**values, **keep}))
            _write_1d(rep, where(run))
            reports[run] = rep
            res.metrics[f"{run}.residual"] = rep.residual
        if preset_id == "E1":
            res.checks.append(Check("post-exit residual", reports["dtbc"].residual, hi=1e-13))
        elif preset_id == "E2":
            res.checks.append(Check("post-exit residual", reports["neumann"].residual, lo=1e-4))
        else:
            ratio = reports["soe"].residual / reports["dtbc"].residual
            res.checks.append(Check("residual ratio compressed/exact", ratio, hi=10.0))
        return res

    reports = {}
    for run, values in preset.runs.items():
        rep = run_2d(config_from_mapping(values))
        _write_2d(rep, where(run))
        reports[run] = rep
        res.metrics[f"{run}.stable"] = rep.stable
        res.metrics[f"{run}.closure_seconds"] = rep.closure_seconds
        if rep.stable:
            res.metrics[f"{run}.reflection"] = reflection_magnitude(rep, REFLECTION_WINDOW)
    if preset_id == "E4":
        res.checks.append(Check("reflection magnitude", res.metrics["order0.reflection"], hi=1e-13))
    elif preset_id == "E5":
        for run, target in (("order0", 1e-3), ("order1", 1e-5), ("order2x1y", 1e-8)):
            res.checks.append(Check(f"{run} reflection", res.metrics[f"{run}.reflection"],
                                    lo=target / 10, hi=target * 10))
    elif preset_id in ("E6", "E7"):
        for run, rep in reports.items():
            res.checks.append(Check(f"{run} l2 growth over first quarter", stays_bounded(rep.l2), hi=2.0))
        if preset_id == "E7":
            ratio = res.metrics["order1.reflection"] / res.metrics["order2x1y.reflection"]
            res.checks.append(Check("order1 / order2x1y reflection", ratio, hi=2.0))
    elif preset_id == "E8":
        rep = reports["order2"]
        res.metrics["order2.growth_rate"] = rep.growth_rate
        res.checks.append(Check("instability flag", float(rep.unstable), lo=1.0))
        res.checks.append(Check("growth rate", rep.growth_rate, lo=1e-12))
        near, where_max = near_top_or_right(rep.snapshots[4.0])
        res.metrics["order2.t4_argmax"] = where_max
        res.checks.append(Check("t=4 maximum within 10 cells of top/right", float(near), lo=1.0))
    elif preset_id == "E9":
        res.metrics["steps"] = reports["exact"].steps
        ratio = reports["soe"].closure_seconds / reports["exact"].closure_seconds
        res.checks.append(Check("closure time compressed/exact", ratio, hi=1.0 - 1e-12))
    return res


def list_presets():
    return [p.describe() for p in PRESETS.values()]
