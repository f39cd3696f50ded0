"""Grids, CFL parameters, initial data and run configuration.

Fields live on full ``(J+2)`` or ``(J+2, K+2)`` arrays indexed ``[j]`` / ``[j, k]``.
In two dimensions the four corner entries are kept at 0 and are never read by
the interior scheme or by any boundary closure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

SIDES = ("left", "right", "bottom", "top")
SIDE_SCHEMES_2D = ("dtbc0", "dtbc1", "dtbc2", "neumann")
SCHEMES_1D = ("dtbc", "soe", "neumann")


@dataclass(frozen=True)
class Velocity:
    c_x: float
    c_y: float = 0.0

    def __post_init__(self):
        if self.c_x == 0.0 and self.c_y == 0.0:
            raise ValueError("velocity must be nonzero")


@dataclass(frozen=True)
class Grid1D:
    x_l: float
    x_r: float
    J: int

    def __post_init__(self):
        if not self.x_l < self.x_r:
            raise ValueError(f"degenerate bounds ({self.x_l}, {self.x_r})")
        if self.J < 2:
            raise ValueError(f"J must be >= 2, got {self.J}")

    @property
    def dx(self) -> float:
        return (self.x_r - self.x_l) / (self.J + 1)

    @property
    def x(self) -> np.ndarray:
        """Grid points x_0..x_{J+1}."""
        return self.x_l + np.arange(self.J + 2) * self.dx


@dataclass(frozen=True)
class Grid2D:
    x_l: float
    x_r: float
    y_b: float
    y_t: float
    J: int
    K: int

    def __post_init__(self):
        if not (self.x_l < self.x_r and self.y_b < self.y_t):
            raise ValueError("degenerate bounds")
        if self.J < 2 or self.K < 2:
            raise ValueError(f"J and K must be >= 2, got J={self.J}, K={self.K}")

    @property
    def dx(self) -> float:
        return (self.x_r - self.x_l) / (self.J + 1)

    @property
    def dy(self) -> float:
        return (self.y_t - self.y_b) / (self.K + 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_l + np.arange(self.J + 2) * self.dx

    @property
    def y(self) -> np.ndarray:
        return self.y_b + np.arange(self.K + 2) * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.J + 2, self.K + 2)

    @property
    def corners(self) -> tuple[tuple[int, int], ...]:
        J, K = self.J, self.K
        return ((0, 0), (0, K + 1), (J + 1, 0), (J + 1, K + 1))

    def corner_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for jk in self.corners:
            mask[jk] = True
        return mask


def build_grid(bounds, J, K=None):
    """Build a uniform grid.

    ``bounds`` is ``(x_l, x_r)`` for a 1D grid (``K`` omitted) or
    ``(x_l, x_r, y_b, y_t)`` for a 2D grid.
    """
    bounds = tuple(float(b) for b in bounds)
    if K is None:
        if len(bounds) != 2:
            raise ValueError("1D grid needs bounds (x_l, x_r)")
        return Grid1D(*bounds, int(J))
    if len(bounds) != 4:
        raise ValueError("2D grid needs bounds (x_l, x_r, y_b, y_t)")
    return Grid2D(*bounds, int(J), int(K))


def derive_timestep(velocity: Velocity, grid, cfl_cap: float):
    """Time step and CFL numbers with ``|mu_x| + |mu_y| == cfl_cap``.

    Returns ``(dt, mu_x, mu_y)``; ``mu_y`` is 0 on a 1D grid.
    """
    if not 0.0 < cfl_cap < 1.0:
        raise ValueError(f"cfl_cap must lie in (0, 1), got {cfl_cap}")
    if isinstance(grid, Grid1D):
        if velocity.c_x == 0.0:
            raise ValueError("zero velocity")
        dt = cfl_cap * grid.dx / abs(velocity.c_x)
        return dt, math.copysign(cfl_cap, velocity.c_x), 0.0
    rate_x = abs(velocity.c_x) / grid.dx
    rate_y = abs(velocity.c_y) / grid.dy
    dt = cfl_cap / (rate_x + rate_y)
    # split cfl_cap so that the two moduli add up to it to within one rounding
    ax = cfl_cap * rate_x / (rate_x + rate_y)
    ay = cfl_cap - ax
    return dt, math.copysign(ax, velocity.c_x), math.copysign(ay, velocity.c_y)


def gaussian_init(grid, kind=None, exponent=None):
    """Sample the Gaussian initial datum at every grid point.

    ``kind="1d"`` gives ``exp(-10 x^2)`` and ``kind="2d"`` gives
    ``exp(-5 (x^2 + y^2))``; ``exponent`` overrides the factor in front of the
    squared radius. 2D corners are set to 0.
    """
    if kind is None:
        kind = "1d" if isinstance(grid, Grid1D) else "2d"
    if kind == "1d":
        a = 10.0 if exponent is None else exponent
        return np.exp(-a * grid.x**2)
    if kind == "2d":
        a = 5.0 if exponent is None else exponent
        X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
        u = np.exp(-a * (X**2 + Y**2))
        u[grid.corner_mask()] = 0.0
        return u
    raise ValueError(f"unknown initial condition kind {kind!r}")


@dataclass
class State2D:
    """Two consecutive time levels of the 2D scheme."""

    level_prev: np.ndarray
    level_curr: np.ndarray
    n: int = 0

    def __post_init__(self):
        if self.level_prev.shape != self.level_curr.shape:
            raise ValueError("time levels must share the same shape")

    def swap(self):
        self.level_prev, self.level_curr = self.level_curr, self.level_prev

    def push(self, level_next: np.ndarray):
        """Advance by one step: ``curr`` becomes ``prev``, ``level_next`` becomes ``curr``."""
        self.level_prev, self.level_curr = self.level_curr, level_next
        self.n += 1


@dataclass
class SimulationConfig:
    """Everything needed to run one experiment.

    1D runs use ``scheme`` (one of ``dtbc``, ``soe``, ``neumann``); 2D runs use
    ``sides`` (``dtbc0|dtbc1|dtbc2|neumann`` per side) and ``soe`` to compress
    the order-0 and order-1 kernels.
    """

    grid: Grid1D | Grid2D
    velocity: Velocity
    cfl_cap: float
    final_time: float
    scheme: str = "dtbc"
    sides: dict = field(default_factory=lambda: dict.fromkeys(SIDES, "dtbc0"))
    soe: bool = False
    soe_M: int = 50
    soe_N: int = 49
    precision: int = 80
    init_exponent: float | None = None
    snapshot_times: tuple = ()
    field_every: int = 0
    metrics_every: int = 1
    exit_time: float | None = None
    allow_unstable: bool = False

    def __post_init__(self):
        if self.final_time <= 0:
            raise ValueError("final_time must be positive")
        if not 0.0 < self.cfl_cap < 1.0:
            raise ValueError("cfl_cap must lie in (0, 1)")
        for t in self.snapshot_times:
            if not 0.0 <= t <= self.final_time:
                raise ValueError(f"snapshot time {t} outside [0, {self.final_time}]")
        if self.dim == 1:
            if self.scheme not in SCHEMES_1D:
                raise ValueError(f"unknown 1D scheme {self.scheme!r}")
        else:
            unknown = set(self.sides) - set(SIDES)
            if unknown:
                raise ValueError(f"unknown sides {sorted(unknown)}")
            for side in SIDES:
                self.sides.setdefault(side, "dtbc0")
                if self.sides[side] not in SIDE_SCHEMES_2D:
                    raise ValueError(f"unknown scheme {self.sides[side]!r} on {side}")
            if not self.allow_unstable and self.order2_corners():
                raise ValueError(
                    "order-2 closures on two adjacent sides "
                    f"({', '.join('/'.join(c) for c in self.order2_corners())}) "
                    "are unstable; pass allow_unstable to run them anyway")

    @property
    def dim(self) -> int:
        return 1 if isinstance(self.grid, Grid1D) else 2

    def order2_corners(self):
        """Adjacent side pairs that both use the order-2 closure."""
        if self.dim == 1:
            return []
        return [(a, b) for a in ("left", "right") for b in ("bottom", "top")
                if self.sides[a] == "dtbc2" and self.sides[b] == "dtbc2"]

    def with_(self, **changes) -> SimulationConfig:
        return replace(self, **changes)


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def _parse_float(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


def config_from_mapping(values: dict) -> SimulationConfig:
    """Build a config from flat string keys (the key=value file format).

    Recognised keys: ``dim, x_l, x_r, y_b, y_t, J, K, c_x, c_y, cfl, T, scheme,
    left, right, bottom, top, soe, soe_M, soe_N, precision, init_exponent,
    snapshots, field_every, metrics_every, exit_time, allow_unstable``.
    Fractions such as ``5/6`` are accepted for real values.
    """
    v = {k.strip(): str(val).strip() for k, val in values.items()}
    known = {"dim", "x_l", "x_r", "y_b", "y_t", "J", "K", "c_x", "c_y", "cfl", "T",
             "scheme", "left", "right", "bottom", "top", "soe", "soe_M", "soe_N",
             "precision", "init_exponent", "snapshots", "field_every",
             "metrics_every", "exit_time", "allow_unstable"}
    unknown = set(v) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    dim = int(v.get("dim", "2" if "K" in v else "1"))
    f = lambda key, default: _parse_float(v[key]) if key in v else default  # noqa: E731
    if dim == 1:
        grid = Grid1D(f("x_l", -3.0), f("x_r", 3.0), int(v.get("J", 999)))
        velocity = Velocity(f("c_x", 1.0))
    else:
        grid = Grid2D(f("x_l", -3.0), f("x_r", 3.0), f("y_b", -2.0), f("y_t", 2.0),
                      int(v.get("J", 300)), int(v.get("K", 200)))
        velocity = Velocity(f("c_x", 1.0), f("c_y", 0.0))
    snaps = tuple(_parse_float(s) for s in v["snapshots"].split(",") if s.strip()) \
        if v.get("snapshots") else ()
    sides = {s: v[s] for s in SIDES if s in v}
    if dim == 2:
        sides = {**dict.fromkeys(SIDES, "dtbc0"), **sides}
    return SimulationConfig(
        grid=grid,
        velocity=velocity,
        cfl_cap=f("cfl", 5 / 6 if dim == 1 else 0.5),
        final_time=f("T", 10.0 if dim == 1 else 8.0),
        scheme=v.get("scheme", "dtbc"),
        sides=sides,
        soe=_BOOL[v.get("soe", "false").lower()],
        soe_M=int(v.get("soe_M", 50)),
        soe_N=int(v.get("soe_N", 49)),
        precision=int(v.get("precision", 80)),
        init_exponent=f("init_exponent", None),
        snapshot_times=snaps,
        field_every=int(v.get("field_every", 0)),
        metrics_every=int(v.get("metrics_every", 1)),
        exit_time=f("exit_time", None),
        allow_unstable=_BOOL[v.get("allow_unstable", "false").lower()],
    )


def load_config(path) -> SimulationConfig:
    """Read a flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, val = line.split("=", 1)
        values[key.strip()] = val.strip()
    return config_from_mapping(values)
