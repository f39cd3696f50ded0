"""One-dimensional leap-frog transport with transparent, compressed or Neumann closures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import coefficients
from .closures import SideClosure
from .core import Grid1D, SimulationConfig, derive_timestep, gaussian_init
from .soe import compress


def lax_wendroff_first_step(u0, mu):
    """Second-order start ``u^1`` from ``u^0``; both boundary entries are set to 0."""
    u1 = np.zeros_like(u0)
    du = u0[2:] - u0[:-2]
    d2u = u0[2:] - 2 * u0[1:-1] + u0[:-2]
    u1[1:-1] = u0[1:-1] - 0.5 * mu * du + 0.5 * mu**2 * d2u
    return u1


def leapfrog_step_1d(prev, curr, mu, out=None):
    """Interior update ``u^(n+2)_j = u^n_j - mu (u^(n+1)_(j+1) - u^(n+1)_(j-1))``.

    Boundary entries of the result are left at 0 for the closure to fill.
    """
    if out is None:
        out = np.zeros_like(curr)
    else:
        out[0] = out[-1] = 0.0
    np.subtract(prev[1:-1], mu * (curr[2:] - curr[:-2]), out=out[1:-1])
    return out


def apply_dtbc_1d(s0, trace_left, trace_right, n):
    """Exact transparent boundary values at level ``n + 2``.

    ``trace_left[sigma] = u_1^sigma`` and ``trace_right[sigma] = u_J^sigma`` for
    ``sigma = 0..n+1``. Returns ``(u_0^(n+2), u_(J+1)^(n+2))``.
    """
    if len(trace_left) < n + 2 or len(trace_right) < n + 2:
        raise ValueError(f"traces must cover levels 0..{n + 1}")
    m = np.arange((n + 1) // 2 + 1)
    if len(s0) < len(m):
        raise ValueError("kernel prefix too short")
    idx = n + 1 - 2 * m
    left = -np.dot(s0[: len(m)], np.asarray(trace_left)[idx])
    right = np.dot(s0[: len(m)], np.asarray(trace_right)[idx])
    return left, right


def apply_neumann_1d(curr):
    """``u_0^(n+2) = u_1^(n+1)`` and ``u_(J+1)^(n+2) = u_J^(n+1)``."""
    return curr[1], curr[-2]


def step_count(final_time, dt):
    """Number of steps to reach ``final_time`` (rounding when within 1e-9 of an integer)."""
    ratio = final_time / dt
    near = round(ratio)
    return int(near) if abs(ratio - near) < 1e-9 * max(1.0, ratio) else int(math.ceil(ratio))


@dataclass
class RunReport1D:
    config: SimulationConfig
    dt: float
    mu_x: float
    steps: int
    times: np.ndarray
    l2: np.ndarray
    max_abs: np.ndarray
    snapshots: dict = field(default_factory=dict)
    field_steps: np.ndarray | None = None
    fields: np.ndarray | None = None
    exit_time: float = 5.0
    closure_seconds: float = 0.0

    @property
    def residual(self) -> float:
        """Largest ``|u_j^n|`` over the interior at times after ``exit_time``."""
        mask = self.times > self.exit_time
        if not mask.any():
            raise ValueError("no step after the exit time")
        return float(self.max_abs[mask].max())


class Closure1D:
    """Boundary closure of the 1D scheme: ``dtbc``, ``soe`` or ``neumann``."""

    def __init__(self, scheme, mu, steps, soe_M=50, soe_N=49, precision=80):
        self.scheme = scheme
        self.side = None
        self.soe = None
        if scheme == "neumann":
            return
        count = steps // 2 + 2
        if scheme == "dtbc":
            s0 = coefficients.kernel("S0", abs(mu), 0.0, count)
            self.side = SideClosure(0, 1.0, 2, steps, s0, tangential=False)
        elif scheme == "soe":
            ker = coefficients.kernel_mp("S0", abs(mu), 0.0, soe_M + soe_N + 1, precision)
            self.soe = compress(ker, soe_N, soe_M, precision)
            self.side = SideClosure(0, 1.0, 2, steps, None, soe0=self.soe, tangential=False)
        else:
            raise ValueError(f"unknown 1D scheme {scheme!r}")
        # for mu < 0 the roles of the two sides swap, which flips every sign
        self.orient = 1.0 if mu > 0 else -1.0

    def record(self, t, u):
        if self.side is not None:
            self.side.record(t, (u[1], u[-2]))

    def apply(self, n, curr, nxt):
        if self.side is None:
            nxt[0], nxt[-1] = apply_neumann_1d(curr)
            return
        out = self.side.compute(n)
        nxt[0] = -self.orient * out[0]
        nxt[-1] = self.orient * out[1]


def run_1d(config: SimulationConfig) -> RunReport1D:
    """Gaussian start, Lax-Wendroff first step, then leap-frog plus closure up to ``final_time``."""
    import time

    grid = config.grid
    if not isinstance(grid, Grid1D):
        raise ValueError("run_1d needs a 1D grid")
    dt, mu, _ = derive_timestep(config.velocity, grid, config.cfl_cap)
    steps = step_count(config.final_time, dt)
    closure = Closure1D(config.scheme, mu, steps, config.soe_M, config.soe_N, config.precision)

    u_prev = gaussian_init(grid, "1d", config.init_exponent)
    u_curr = lax_wendroff_first_step(u_prev, mu)
    times = np.arange(steps + 1) * dt
    l2 = np.empty(steps + 1)
    max_abs = np.empty(steps + 1)
    snap_steps = {int(round(t / dt)): t for t in config.snapshot_times}
    snapshots = {}
    every = config.field_every
    field_steps = np.arange(0, steps + 1, every) if every else None
    fields = np.empty((len(field_steps), grid.J + 2)) if every else None

    def observe(k, u):
        inner = u[1:-1]
        l2[k] = math.sqrt(grid.dx * float(np.dot(inner, inner)))
        max_abs[k] = float(np.max(np.abs(inner)))
        if not math.isfinite(max_abs[k]):
            raise FloatingPointError(f"non-finite value at step {k}")
        if k in snap_steps:
            snapshots[snap_steps[k]] = u.copy()
        if every and k % every == 0:
            fields[k // every] = u

    observe(0, u_prev)
    observe(1, u_curr)
    closure.record(0, u_prev)
    closure.record(1, u_curr)
    spent = 0.0
    u_next = np.zeros_like(u_curr)
    for n in range(steps - 1):
        leapfrog_step_1d(u_prev, u_curr, mu, out=u_next)
        tic = time.perf_counter()
        closure.apply(n, u_curr, u_next)
        closure.record(n + 2, u_next)
        spent += time.perf_counter() - tic
        u_prev, u_curr, u_next = u_curr, u_next, u_prev
        observe(n + 2, u_curr)

    exit_time = 5.0 if config.exit_time is None else config.exit_time
    return RunReport1D(config, dt, mu, steps, times, l2, max_abs, snapshots,
                       field_steps, fields, exit_time, spent)


def run_whole_line_1d(config: SimulationConfig, pad=None):
    """Reference run on a zero-padded line so wide that its ends are never reached.

    The initial datum is sampled on the original grid and padded by ``pad``
    zero cells on each side (default: the step count plus 2, the exact domain
    of dependence of the scheme). Returns the interior values ``u_1..u_J`` at
    every level as an array of shape ``(steps + 1, J)``.
    """
    grid = config.grid
    dt, mu, _ = derive_timestep(config.velocity, grid, config.cfl_cap)
    steps = step_count(config.final_time, dt)
    P = steps + 2 if pad is None else int(pad)
    u0 = gaussian_init(grid, "1d", config.init_exponent)
    big = np.zeros(grid.J + 2 + 2 * P)
    big[P:P + grid.J + 2] = u0
    inner = slice(P + 1, P + grid.J + 1)
    out = np.empty((steps + 1, grid.J))
    u_prev = big
    u_curr = lax_wendroff_first_step(big, mu)
    out[0] = u_prev[inner]
    out[1] = u_curr[inner]
    u_next = np.zeros_like(big)
    for n in range(steps - 1):
        leapfrog_step_1d(u_prev, u_curr, mu, out=u_next)
        u_prev, u_curr, u_next = u_curr, u_next, u_prev
        out[n + 2] = u_curr[inner]
    return out
