"""Invariants checked over generated inputs."""

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st_

from dtbc_lab import coefficients as coef
from dtbc_lab import output
from dtbc_lab import stability as st
from dtbc_lab.closures import SideClosure
from dtbc_lab.soe import BlockedChannelBank, ConvolutionChannelBank, SumOfExponentials

# subnormal tangential speeds only exercise denormal arithmetic, so start at 1e-6
tangential = st_.one_of(st_.just(0.0), st_.floats(1e-6, 0.95))
speeds = st_.tuples(st_.floats(0.02, 0.95), tangential).filter(lambda p: p[0] + p[1] < 0.98)
outside = st_.tuples(st_.floats(1e-3, 2.0), st_.floats(0, 2 * math.pi)).map(
    lambda p: (1 + p[0]) * complex(math.cos(p[1]), math.sin(p[1])))


@settings(max_examples=40, deadline=None)
@given(speeds)
def test_routes_agree(mu):
    mx, my = mu
    w = coef.oscillation_window(mx)
    for fam in ("S0", "S1", "S2"):
        a = coef.gen_family(fam, mx, my, 300, "closed").values
        b = coef.gen_family(fam, mx, my, 300, "inductive").values
        assert coef.close_relative(a, b, 1e-12, w).all()


@settings(max_examples=40, deadline=None)
@given(speeds, st_.integers(-3, 3))
def test_tangential_kernels_scale_with_speed(mu, e):
    mx, my = mu
    f = 2.0**e
    a = coef.gen_s1(mx, my, 100).values
    b = coef.gen_s1(mx, my * f, 100).values
    assert np.array_equal(f * a, b)
    a2 = coef.gen_s2(mx, my, 100).values
    b2 = coef.gen_s2(mx, my * f, 100).values
    assert np.array_equal(f * f * a2, b2)


@settings(max_examples=60, deadline=None)
@given(outside, st_.floats(0, math.pi), speeds)
def test_root_pair_product_and_split(z, theta, mu):
    mx, my = mu
    pair = st.kappa_roots_2d(z, theta, mx, my)
    assert abs(pair.kappa_s) < 1 < abs(pair.kappa_u)
    assert abs(pair.kappa_s * pair.kappa_u + 1) < 1e-12
    # both are roots of the characteristic equation
    for k in (pair.kappa_s, pair.kappa_u):
        res = mx * z * k * k + (z * z - 1 + 2j * my * math.sin(theta) * z) * k - mx * z
        assert abs(res) <= 1e-11 * (abs(mx * z * k * k) + abs(z * z * k) + 1)


@settings(max_examples=25, deadline=None)
@given(st_.floats(0.05, 0.9), st_.floats(0.05, 0.9), st_.floats(0.01, 0.99))
def test_order2_roots_closed_under_inversion(mx, my, frac):
    if mx + my >= 0.98:
        return
    th = frac * math.pi
    z, info = st.order2_polynomial_roots(th, mx, my)
    assert len(z) == 8
    assert info["inversion_mismatch"] < 1e-9


def _random_soe(rng, n):
    q = (1.05 + rng.uniform(0, 3, n)) * np.exp(1j * rng.uniform(0, math.pi, n))
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    # close the set under conjugation so the kernel is real
    q = np.concatenate([q, q.conj()])
    b = np.concatenate([b, b.conj()])
    return SumOfExponentials(b, q, float(np.min(np.abs(q))), 0.0)


@settings(max_examples=25, deadline=None)
@given(st_.integers(0, 2**32 - 1), st_.integers(1, 6), st_.integers(1, 40), st_.integers(1, 9))
def test_banks_equal_direct_convolution(seed, n, steps, block):
    rng = np.random.default_rng(seed)
    soe = _random_soe(rng, n)
    v = rng.standard_normal((steps, 2))
    nu = soe.coefficients(steps)
    plain = ConvolutionChannelBank(soe, 2)
    blocked = BlockedChannelBank([soe], 2, block=block)
    for k in range(steps):
        direct = nu[: k + 1][::-1] @ v[: k + 1]
        out = plain.feed(v[k])
        blocked.push(v[k])
        scale = 1 + np.abs(v[: k + 1]).sum() * np.abs(soe.b).sum()
        assert np.max(np.abs(out - direct)) <= 1e-12 * scale
        assert np.max(np.abs(blocked.output()[0] - direct)) <= 1e-12 * scale


@settings(max_examples=25, deadline=None)
@given(st_.integers(0, 2**32 - 1), st_.floats(-3, 3))
def test_closure_is_linear(seed, a):
    rng = np.random.default_rng(seed)
    steps, width = 16, 6
    s = [coef.gen_family(f, 0.4, 0.3, steps).values for f in ("S0", "S1", "S2")]
    x = rng.standard_normal((steps, width))
    y = rng.standard_normal((steps, width))
    sides = [SideClosure(2, 1.0, width, steps, *s) for _ in range(3)]
    for t in range(steps - 1):
        for side, line in zip(sides, (x[t], y[t], a * x[t] + y[t])):
            side.record(t, line)
        if t >= 1:
            ox, oy, oz = (side.compute(t - 1) for side in sides)
            assert np.allclose(oz, a * ox + oy, rtol=1e-12, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st_.lists(st_.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=40))
def test_log_levels_monotone_in_modulus(vals):
    a = np.abs(np.array(vals))
    levels = output.log_levels(a, -10, 0).astype(int)
    order = np.argsort(a, kind="stable")
    assert np.all(np.diff(levels[order]) >= 0)
    assert levels.min() >= 0 and levels.max() <= 65535
