import mpmath
import numpy as np
import pytest

from dtbc_lab import coefficients as coef
from dtbc_lab.soe import (BlockedChannelBank, ConvolutionChannelBank, NonSimpleRoots, PadeApproximant,
                          RootInsideOrOnCircle, build_pade, compress, find_roots, soe_coefficient,
                          to_soe, vieta_residuals)


def _pade(q, p=(1,)):
    with mpmath.workdps(30):
        return PadeApproximant(len(p) - 1, len(q) - 1, tuple(mpmath.mpf(v) for v in p),
                               tuple(mpmath.mpf(v) for v in q), 30)


def test_single_exponential_is_its_own_approximant():
    ker = [3 * 0.5**k for k in range(3)]
    pade = build_pade(ker, 0, 1, 30)
    assert float(pade.p[0]) == 3.0
    assert float(pade.q[1]) == pytest.approx(-0.5, abs=1e-28)
    soe = to_soe(pade, find_roots(pade))
    assert soe.b[0] == pytest.approx(3.0, abs=1e-14)
    assert soe.q[0] == pytest.approx(2.0, abs=1e-14)


def test_linear_denominator_root():
    roots = find_roots(_pade([1, -0.5]))
    assert len(roots) == 1
    assert complex(roots[0]) == pytest.approx(2.0, abs=1e-25)


def test_vieta_on_known_roots():
    # (1 - x/2)(1 - x/3)(1 + x/5)
    q = np.polynomial.polynomial.polyfromroots([2, 3, -5])
    q = q / q[0]
    pade = _pade(list(q))
    roots = find_roots(pade)
    assert sorted(round(complex(r).real, 12) for r in roots) == [-5, 2, 3]
    prod, total = vieta_residuals(pade, roots)
    assert prod < 1e-25 and total < 1e-25


def test_root_inside_circle_is_reported():
    pade = _pade([1, -2])            # root at 1/2
    with pytest.raises(RootInsideOrOnCircle):
        to_soe(pade, find_roots(pade))


def test_coincident_roots_are_reported():
    with mpmath.workdps(30):
        pade = _pade([1, -1, 0.25])   # double root at 2
        roots = [mpmath.mpc(2), mpmath.mpc(2) + mpmath.mpf(10) ** -12]
    with pytest.raises(NonSimpleRoots):
        to_soe(pade, roots)


@pytest.fixture(scope="module")
def soe_small():
    return compress(coef.kernel_mp("S0", 5 / 6, 0.0, 31, 60), 10, 20, 60)


def test_soe_coefficient_endpoints(soe_small):
    assert soe_coefficient(soe_small, 0) == pytest.approx(float(np.sum(soe_small.b).real), rel=1e-14)
    assert abs(soe_coefficient(soe_small, 5000)) < 1e-12
    assert np.allclose(soe_small.coefficients(31), coef.gen_s0(5 / 6, 31).values, rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        soe_coefficient(soe_small, -1)


def test_impulse_response(soe_small):
    bank = ConvolutionChannelBank(soe_small)
    nu = soe_small.coefficients(40)
    out = [bank.feed(v) for v in [0.0, 1.0] + [0.0] * 38]
    assert out[0] == 0.0
    assert np.allclose(out[1:], nu[:39], rtol=0, atol=1e-15)


def test_zero_stream_stays_zero(soe_small):
    bank = BlockedChannelBank([soe_small], 4)
    for _ in range(100):
        bank.push(np.zeros(4))
        assert not bank.output().any()


def test_blocked_and_recursive_banks_agree(soe_small):
    rng = np.random.default_rng(3)
    v = rng.standard_normal((200, 5))
    a = ConvolutionChannelBank([soe_small, soe_small], 5)
    b = BlockedChannelBank([soe_small, soe_small], 5, block=8)
    nu = soe_small.coefficients(200)
    for k in range(200):
        out_a = a.feed(v[k])
        b.push(v[k])
        out_b = b.output()
        direct = nu[: k + 1][::-1] @ v[: k + 1]
        assert np.max(np.abs(out_a - out_b)) < 1e-12
        assert np.max(np.abs(out_b[0] - direct)) < 1e-10


def test_high_modulus_roots_do_not_overflow():
    soe = compress(coef.kernel_mp("S0", 5 / 6, 0.0, 100, 80), 49, 50, 80)
    assert np.all(np.isfinite(soe.coefficients(3000)))
    assert soe.min_root_modulus > 1


def test_pade_rejects_bad_orders():
    with pytest.raises(ValueError):
        build_pade([1.0] * 10, 5, 5)
    with pytest.raises(ValueError):
        build_pade([1.0] * 5, 2, 4)
