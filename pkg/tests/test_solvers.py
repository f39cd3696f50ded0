import math

import numpy as np
import pytest

from dtbc_lab import coefficients as coef
from dtbc_lab.closures import ExactHistory, SideClosure
from dtbc_lab.core import Grid1D, Grid2D, Velocity, build_grid, config_from_mapping, derive_timestep, gaussian_init
from dtbc_lab.soe import compress
from dtbc_lab.solver1d import (apply_dtbc_1d, apply_neumann_1d, lax_wendroff_first_step, leapfrog_step_1d,
                               run_1d, run_whole_line_1d)
from dtbc_lab.solver2d import lax_wendroff_first_step_2d, leapfrog_step_2d, run_2d


# grid and time step ------------------------------------------------------------

def test_grid_points():
    g = build_grid((0, 1), 4)
    assert g.dx == pytest.approx(0.2)
    assert np.allclose(g.x, [0, 0.2, 0.4, 0.6, 0.8, 1.0])


def test_timestep_2d_reference():
    g = Grid2D(-3, 3, -2, 2, 300, 200)
    dt, mx, my = derive_timestep(Velocity(1, 0.1), g, 0.5)
    assert dt == pytest.approx(0.5 / (301 / 6 + 0.1 * 201 / 4), rel=1e-15)
    assert mx + my == 0.5
    _, mx, my = derive_timestep(Velocity(1, 0), g, 0.5)
    assert (mx, my) == (0.5, 0.0)


def test_gaussian_values():
    g1 = Grid1D(-3, 3, 999)
    u = gaussian_init(g1)
    assert u[0] == pytest.approx(math.exp(-90), rel=1e-12)
    assert u[0] == pytest.approx(8.19e-40, rel=1e-3)
    g2 = Grid2D(-3, 3, -2, 2, 300, 200)
    v = gaussian_init(g2)
    assert v.max() <= 1.0
    assert v.max() == pytest.approx(np.exp(-5 * (g2.x[150] ** 2 + g2.y[100] ** 2)))
    assert v[0, 0] == v[-1, -1] == 0.0


def test_config_rejects_adjacent_order2():
    with pytest.raises(ValueError):
        config_from_mapping({"dim": 2, "left": "dtbc2", "top": "dtbc2"})
    cfg = config_from_mapping({"dim": 2, "left": "dtbc2", "top": "dtbc2", "allow_unstable": "yes"})
    assert cfg.order2_corners() == [("left", "top")]
    with pytest.raises(ValueError):
        config_from_mapping({"dim": 1, "bogus": 1})


# 1D scheme -------------------------------------------------------------------

def test_lax_wendroff_constant_and_linear():
    u = np.full(12, 2.5)
    assert np.allclose(lax_wendroff_first_step(u, 0.4)[1:-1], 2.5)
    x = np.linspace(0, 1, 12)
    dx = x[1] - x[0]
    out = lax_wendroff_first_step(x, 0.4)
    assert np.allclose(out[1:-1], x[1:-1] - 0.4 * dx, atol=1e-15)


def test_leapfrog_fourier_mode_amplification():
    mu, xi = 0.6, 0.7
    j = np.arange(64)
    mode = np.exp(1j * xi * j)
    # z^2 + 2 i mu sin(xi) z - 1 = 0
    for z in np.roots([1, 2j * mu * math.sin(xi), -1]):
        prev, curr = mode, z * mode
        nxt = np.zeros_like(mode)
        np.subtract(prev[1:-1], mu * (curr[2:] - curr[:-2]), out=nxt[1:-1])
        assert np.allclose(nxt[1:-1], z * z * mode[1:-1], atol=1e-13)


def test_leapfrog_trivial_cases():
    c = np.full(10, 1.5)
    assert np.allclose(leapfrog_step_1d(c, c, 0.3)[1:-1], 1.5)
    rng = np.random.default_rng(0)
    prev, curr = rng.standard_normal(10), rng.standard_normal(10)
    assert np.array_equal(leapfrog_step_1d(prev, curr, 0.0)[1:-1], prev[1:-1])


def test_dtbc_1d_first_step_and_zero_history():
    s0 = coef.gen_s0(0.5, 5).values
    assert apply_dtbc_1d(s0, [0, 0], [0, 0], 0) == (0.0, 0.0)
    left, right = apply_dtbc_1d(s0, [0, 0.8], [0, 0.8], 0)
    assert right == pytest.approx(0.5 * 0.8)
    assert left == pytest.approx(-0.5 * 0.8)
    assert apply_neumann_1d(np.array([9, 0.3, 1, 0.7, 9])) == (0.3, 0.7)


def test_compressed_closure_matches_direct_convolution_1d():
    mu = 5 / 6
    soe = compress(coef.kernel_mp("S0", mu, 0.0, 71, 80), 20, 50, 80)
    nu = soe.coefficients(400)
    rng = np.random.default_rng(11)
    steps = 300
    left, right = rng.standard_normal(steps + 2), rng.standard_normal(steps + 2)
    side = SideClosure(0, 1.0, 2, steps, None, soe0=soe, tangential=False)
    side.record(0, (left[0], right[0]))
    side.record(1, (left[1], right[1]))
    for n in range(steps - 1):
        got = side.compute(n)
        want = apply_dtbc_1d(nu, left[: n + 2], right[: n + 2], n)
        assert abs(got[0] + want[0]) < 1e-10 and abs(got[1] - want[1]) < 1e-10
        side.record(n + 2, (left[n + 2], right[n + 2]))


def test_1d_whole_line_oracle_short_run():
    cfg = config_from_mapping({"dim": 1, "J": 199, "T": 6, "field_every": 1})
    rep = run_1d(cfg)
    ref = run_whole_line_1d(cfg)
    assert np.max(np.abs(rep.fields[:, 1:-1] - ref)) < 1e-13


def test_1d_negative_velocity_mirrors():
    a = run_1d(config_from_mapping({"dim": 1, "J": 199, "T": 4, "c_x": 1, "field_every": 1}))
    b = run_1d(config_from_mapping({"dim": 1, "J": 199, "T": 4, "c_x": -1, "field_every": 1}))
    assert np.max(np.abs(a.fields - b.fields[:, ::-1])) < 1e-14


def test_history_rejects_gaps_and_short_kernels():
    h = ExactHistory(3, 10)
    h.record(0, np.zeros(3))
    with pytest.raises(RuntimeError):
        h.record(2 + 2, np.zeros(3))
    with pytest.raises(ValueError):
        h.reverse(np.zeros(3))


# 2D closures -----------------------------------------------------------------

def _direct_order2(s0, s1, s2, hist, n):
    """Right-side boundary values summed term by term; missing levels count as 0."""
    K = hist.shape[1] - 2
    out = np.zeros(K)

    def level(t):
        return hist[t] if 0 <= t < len(hist) else np.zeros(K + 2)

    for k in range(1, K + 1):
        acc = 0.0
        for m in range(len(s0)):
            w = level(n + 1 - 2 * m)
            acc += s0[m] * w[k]
            acc += s2[m] * (w[k + 1] - 2 * w[k] + w[k - 1])
        for m in range(1, len(s1)):
            w = level(n + 2 - 2 * m)
            acc += s1[m] * (w[k + 1] - w[k - 1])
        out[k - 1] = acc
    return out


def test_side_closure_against_termwise_sums():
    rng = np.random.default_rng(2)
    mx, my, width, steps = 0.3, 0.25, 9, 30
    count = steps // 2 + 3
    s0, s1, s2 = (coef.gen_family(f, mx, my, count).values for f in ("S0", "S1", "S2"))
    hist = rng.standard_normal((steps + 1, width))
    side = SideClosure(2, 1.0, width, steps, s0, s1, s2)
    side.record(0, hist[0])
    side.record(1, hist[1])
    for n in range(steps - 1):
        assert np.allclose(side.compute(n), _direct_order2(s0, s1, s2, hist, n), rtol=0, atol=1e-12)
        side.record(n + 2, hist[n + 2])


def test_y_independent_history_order1_equals_order0():
    rng = np.random.default_rng(4)
    steps, width = 20, 7
    s0 = coef.gen_s0(0.4, steps).values
    s1 = coef.gen_s1(0.4, 0.3, steps).values
    a = SideClosure(0, -1.0, width, steps, s0)
    b = SideClosure(1, -1.0, width, steps, s0, s1)
    for t in range(steps):
        line = np.full(width, rng.standard_normal())
        for c in (a, b):
            c.record(t, line)
        if t >= 1 and t < steps - 1:
            assert np.allclose(a.compute(t - 1), b.compute(t - 1), atol=1e-15)


# 2D scheme -------------------------------------------------------------------

def test_lax_wendroff_2d_reduces_to_rows():
    g = Grid2D(-1, 1, -1, 1, 20, 10)
    u0 = gaussian_init(g)
    u1 = lax_wendroff_first_step_2d(u0, 0.4, 0.0)
    for k in range(1, 11):
        row = lax_wendroff_first_step(u0[:, k], 0.4)
        assert np.allclose(u1[1:-1, k], row[1:-1], atol=1e-16)


def test_lax_wendroff_2d_bilinear():
    x = np.linspace(0, 1, 9)
    y = np.linspace(0, 2, 7)
    dx, dy = x[1] - x[0], y[1] - y[0]
    X, Y = np.meshgrid(x, y, indexing="ij")
    mx, my = 0.3, 0.2
    u1 = lax_wendroff_first_step_2d(X * Y, mx, my)
    # the exact shift of x*y by (mx dx, my dy); second order in the shift
    exact = (X - mx * dx) * (Y - my * dy)
    inner = (slice(2, -2), slice(2, -2))
    assert np.allclose(u1[inner], exact[inner], atol=1e-14)


def test_leapfrog_2d_plane_wave():
    mx, my, xi, eta = 0.35, 0.25, 0.6, 1.1
    j = np.arange(20)[:, None]
    k = np.arange(15)[None, :]
    mode = np.exp(1j * (xi * j + eta * k))
    b = 2 * (mx * math.sin(xi) + my * math.sin(eta))
    for z in np.roots([1, 1j * b, -1]):
        nxt = np.zeros_like(mode)
        inner = nxt[1:-1, 1:-1]
        inner[...] = mode[1:-1, 1:-1] - mx * z * (mode[2:, 1:-1] - mode[:-2, 1:-1]) \
            - my * z * (mode[1:-1, 2:] - mode[1:-1, :-2])
        assert np.allclose(inner, z * z * mode[1:-1, 1:-1], atol=1e-13)
    c = np.full((6, 5), 0.7)
    assert np.allclose(leapfrog_step_2d(c, c, mx, my)[1:-1, 1:-1], 0.7)


SMALL = {"dim": 2, "x_l": -2, "x_r": 2, "y_b": -2, "y_t": 2, "J": 80, "K": 80, "T": 3}


def test_corners_are_never_read():
    values = {**SMALL, "c_y": 0.3, "left": "dtbc2", "right": "dtbc2", "bottom": "dtbc1", "top": "dtbc1",
              "snapshots": "3"}
    rep = run_2d(config_from_mapping(values), corner_value=np.nan)
    u = rep.snapshots[3.0]
    mask = np.ones_like(u, dtype=bool)
    mask[[0, 0, -1, -1], [0, -1, 0, -1]] = False
    assert np.all(np.isfinite(u[mask]))
    ref = run_2d(config_from_mapping(values))
    assert np.array_equal(u[mask], ref.snapshots[3.0][mask])


def test_transpose_symmetry():
    a = run_2d(config_from_mapping({**SMALL, "c_x": 1, "c_y": 0.3, "left": "dtbc2", "right": "dtbc2",
                                    "bottom": "dtbc1", "top": "dtbc1", "snapshots": "3"}))
    b = run_2d(config_from_mapping({**SMALL, "c_x": 0.3, "c_y": 1, "left": "dtbc1", "right": "dtbc1",
                                    "bottom": "dtbc2", "top": "dtbc2", "snapshots": "3"}))
    assert np.max(np.abs(a.snapshots[3.0] - b.snapshots[3.0].T)) < 1e-14


def test_mirror_symmetry():
    a = run_2d(config_from_mapping({**SMALL, "c_x": 1, "c_y": 0.3, "left": "dtbc1", "right": "dtbc1",
                                    "bottom": "dtbc1", "top": "dtbc1", "snapshots": "3"}))
    b = run_2d(config_from_mapping({**SMALL, "c_x": -1, "c_y": 0.3, "left": "dtbc1", "right": "dtbc1",
                                    "bottom": "dtbc1", "top": "dtbc1", "snapshots": "3"}))
    assert np.max(np.abs(a.snapshots[3.0] - b.snapshots[3.0][::-1, :])) < 1e-14


def test_zero_tangential_speed_rows_match_1d_oracle():
    values = {"dim": 2, "J": 300, "K": 200, "cfl": 0.5, "T": 8, "c_y": 0, "snapshots": "2,8"}
    rep = run_2d(config_from_mapping(values))
    one_d = config_from_mapping({"dim": 1, "J": 300, "cfl": 0.5, "T": 8, "init_exponent": 5})
    oracle = run_whole_line_1d(one_d)
    grid = rep.config.grid
    assert rep.dt == pytest.approx(one_d.grid.dx * 0.5, rel=1e-15)
    for t, n in ((2.0, int(round(2 / rep.dt))), (8.0, rep.steps)):
        u = rep.snapshots[t]
        for k in (1, 50, 100, 150, 200):
            want = np.exp(-5 * grid.y[k] ** 2) * oracle[n]
            assert np.max(np.abs(u[1:-1, k] - want)) < 1e-13


def test_soe_2d_matches_exact_closely():
    base = {**SMALL, "c_y": 0.1, "left": "dtbc1", "right": "dtbc1", "bottom": "dtbc1", "top": "dtbc1",
            "snapshots": "3"}
    exact = run_2d(config_from_mapping(base))
    soe = run_2d(config_from_mapping({**base, "soe": "true", "soe_M": 50, "soe_N": 20}))
    assert np.max(np.abs(exact.snapshots[3.0] - soe.snapshots[3.0])) < 1e-8
