"""Two-dimensional leap-frog transport on a rectangle with per-side closures.

Sides are closed independently, in the fixed order left, right, bottom, top.
Each closure reads only levels up to ``n + 1`` of the line next to its side;
the two end values of that line are earlier boundary values of the adjacent
sides, so the corners of the grid are never read.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import coefficients
from .closures import SideClosure
from .core import SIDES, Grid2D, SimulationConfig, derive_timestep, gaussian_init
from .solver1d import step_count
from .soe import compress

ORDERS = {"dtbc0": 0, "dtbc1": 1, "dtbc2": 2}
INSTABILITY_FACTOR = 1e3
PROBE_MARGIN = 10


def lax_wendroff_first_step_2d(u0, mu_x, mu_y):
    """Nine-point Lax-Wendroff start; boundary entries of the result are 0.

    The cross-derivative term touches the corner entries at the four interior
    points next to the corners; corners enter as 0 there.
    """
    u = u0.copy()
    for jk in ((0, 0), (0, -1), (-1, 0), (-1, -1)):
        u[jk] = 0.0
    c = u[1:-1, 1:-1]
    e, w = u[2:, 1:-1], u[:-2, 1:-1]
    n, s = u[1:-1, 2:], u[1:-1, :-2]
    u1 = np.zeros_like(u0)
    u1[1:-1, 1:-1] = (c - 0.5 * mu_x * (e - w) - 0.5 * mu_y * (n - s)
                      + 0.5 * mu_x**2 * (e - 2 * c + w) + 0.5 * mu_y**2 * (n - 2 * c + s)
                      + 0.25 * mu_x * mu_y * (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]))
    return u1


def leapfrog_step_2d(prev, curr, mu_x, mu_y, out=None):
    """Interior leap-frog update; boundary lines and corners of ``out`` are left untouched."""
    if out is None:
        out = np.zeros_like(curr)
    inner = out[1:-1, 1:-1]
    np.subtract(curr[2:, 1:-1], curr[:-2, 1:-1], out=inner)
    inner *= -mu_x
    inner += prev[1:-1, 1:-1]
    inner -= mu_y * (curr[1:-1, 2:] - curr[1:-1, :-2])
    return out


def _trace(u, side):
    if side == "left":
        return u[1, :]
    if side == "right":
        return u[-2, :]
    if side == "bottom":
        return u[:, 1]
    return u[:, -2]


def _write(u, side, values):
    if side == "left":
        u[0, 1:-1] = values
    elif side == "right":
        u[-1, 1:-1] = values
    elif side == "bottom":
        u[1:-1, 0] = values
    else:
        u[1:-1, -1] = values


class SideBoundary:
    """Closure of one side: transparent of order 0/1/2 (optionally compressed) or Neumann."""

    def __init__(self, side, scheme, mu_x, mu_y, width, steps, soe=False,
                 soe_M=50, soe_N=20, precision=80):
        self.side = side
        self.scheme = scheme
        self.closure = None
        if scheme == "neumann":
            return
        order = ORDERS[scheme]
        x_side = side in ("left", "right")
        normal = mu_x if x_side else mu_y
        tangent = mu_y if x_side else mu_x
        # the outward normal CFL number decides the sign of every kernel
        outward = normal if side in ("right", "top") else -normal
        sign = 1.0 if outward >= 0 else -1.0
        a = abs(normal)
        prefix = "S" if x_side else "T"
        fam_args = (a, tangent) if x_side else (tangent, a)
        # one extra term: the tangential kernel is used shifted by one
        count = steps // 2 + 3
        if tangent == 0.0:
            order = 0
        kern = {k: coefficients.kernel(prefix + str(k), *fam_args, count) for k in range(order + 1)}
        soe0 = soe1 = None
        if soe and a > 0:
            digits = precision
            ker0 = coefficients.kernel_mp(prefix + "0", *fam_args, soe_M + soe_N + 1, digits)
            soe0 = _compress_cached(prefix + "0", fam_args, soe_N, soe_M, digits, ker0)
            if order >= 1:
                ker1 = coefficients.kernel_mp(prefix + "1", *fam_args, soe_M + soe_N + 2, digits)[1:]
                soe1 = _compress_cached(prefix + "1", fam_args, soe_N, soe_M, digits, ker1)
        self.closure = SideClosure(order, sign, width, steps, kern[0], kern.get(1), kern.get(2),
                                   soe0=soe0, soe1=soe1)

    def record(self, t, u):
        if self.closure is not None:
            self.closure.record(t, _trace(u, self.side))

    def apply(self, n, curr, nxt):
        if self.closure is None:
            _write(nxt, self.side, _trace(curr, self.side)[1:-1])
        else:
            _write(nxt, self.side, self.closure.compute(n))


_SOE_CACHE = {}


def _compress_cached(family, args, N, M, digits, kernel):
    key = (family, float(args[0]), float(args[1]), N, M, digits)
    if key not in _SOE_CACHE:
        _SOE_CACHE[key] = compress(kernel, N, M, digits)
    return _SOE_CACHE[key]


@dataclass
class RunReport2D:
    config: SimulationConfig
    dt: float
    mu_x: float
    mu_y: float
    steps: int
    times: np.ndarray
    l2: np.ndarray
    probe_max: np.ndarray
    snapshots: dict = field(default_factory=dict)
    field_steps: np.ndarray | None = None
    fields: list | None = None
    unstable: bool = False
    unstable_step: int | None = None
    truncated_at: int | None = None
    growth_rate: float = 0.0
    closure_seconds: float = 0.0
    total_seconds: float = 0.0

    @property
    def stable(self) -> bool:
        return not self.unstable


def reflection_magnitude(report: RunReport2D, window) -> float:
    """Largest ``|u|`` at least 10 cells away from every boundary over ``t0 <= t <= t1``."""
    t0, t1 = window
    mask = (report.times >= t0) & (report.times <= t1) & np.isfinite(report.probe_max)
    if not mask.any():
        raise ValueError(f"no recorded step in the window [{t0}, {t1}]")
    return float(report.probe_max[mask].max())


def build_sides(config: SimulationConfig, mu_x, mu_y, steps):
    grid = config.grid
    widths = {"left": grid.K + 2, "right": grid.K + 2, "bottom": grid.J + 2, "top": grid.J + 2}
    return [SideBoundary(side, config.sides[side], mu_x, mu_y, widths[side], steps,
                         soe=config.soe, soe_M=config.soe_M, soe_N=config.soe_N,
                         precision=config.precision)
            for side in SIDES]


def run_2d(config: SimulationConfig, corner_value=0.0) -> RunReport2D:
    """Gaussian start, Lax-Wendroff first step, then leap-frog plus four side closures.

    ``corner_value`` is written into the four corner entries of every level;
    setting it to NaN checks that nothing ever reads them.
    """
    from .stability import estimate_growth_rate

    start = time.perf_counter()
    grid = config.grid
    if not isinstance(grid, Grid2D):
        raise ValueError("run_2d needs a 2D grid")
    dt, mu_x, mu_y = derive_timestep(config.velocity, grid, config.cfl_cap)
    steps = step_count(config.final_time, dt)
    sides = build_sides(config, mu_x, mu_y, steps)
    corners = grid.corner_mask()

    u_prev = gaussian_init(grid, "2d", config.init_exponent)
    u_curr = lax_wendroff_first_step_2d(u_prev, mu_x, mu_y)
    u_next = np.zeros_like(u_curr)
    for u in (u_prev, u_curr, u_next):
        u[corners] = corner_value

    times = np.arange(steps + 1) * dt
    l2 = np.full(steps + 1, np.nan)
    probe = np.full(steps + 1, np.nan)
    snap_steps = {int(round(t / dt)): t for t in config.snapshot_times}
    snapshots = {}
    every = config.field_every
    fields = [] if every else None
    m = PROBE_MARGIN
    area = grid.dx * grid.dy
    state = {"unstable_step": None}

    def observe(k, u):
        inner = u[1:-1, 1:-1]
        l2[k] = math.sqrt(area * float(np.vdot(inner, inner)))
        probe[k] = float(np.max(np.abs(u[m:-m, m:-m])))
        if k in snap_steps:
            snapshots[snap_steps[k]] = u.copy()
        if every and k % every == 0:
            fields.append(u.copy())
        if state["unstable_step"] is None and l2[k] > INSTABILITY_FACTOR * l2[0]:
            state["unstable_step"] = k
        return math.isfinite(l2[k])

    observe(0, u_prev)
    observe(1, u_curr)
    for s in sides:
        s.record(0, u_prev)
        s.record(1, u_curr)
    spent = 0.0
    truncated = None
    for n in range(steps - 1):
        leapfrog_step_2d(u_prev, u_curr, mu_x, mu_y, out=u_next)
        tic = time.perf_counter()
        for s in sides:
            s.apply(n, u_curr, u_next)
        for s in sides:
            s.record(n + 2, u_next)
        spent += time.perf_counter() - tic
        u_prev, u_curr, u_next = u_curr, u_next, u_prev
        if not observe(n + 2, u_curr):
            if state["unstable_step"] is None:
                raise FloatingPointError(f"non-finite value at step {n + 2}")
            truncated = n + 2
            break

    unstable = state["unstable_step"] is not None
    rate = 0.0
    if unstable:
        last = truncated if truncated is not None else steps + 1
        ok = np.isfinite(l2[:last])
        rate = estimate_growth_rate(np.column_stack([times[:last][ok], l2[:last][ok]]))
    return RunReport2D(config, dt, mu_x, mu_y, steps, times, l2, probe, snapshots,
                       np.arange(0, steps + 1, every) if every else None, fields,
                       unstable, state["unstable_step"], truncated, rate, spent,
                       time.perf_counter() - start)
