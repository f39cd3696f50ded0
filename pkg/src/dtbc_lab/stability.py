"""Normal-mode (Godunov-Ryabenkii) checks of the half-space closures.

A normal mode ``z^n kappa^j exp(i k theta)`` of the leap-frog scheme solves

    mu_x z kappa^2 + (z^2 - 1 + 2 i mu_y sin(theta) z) kappa - mu_x z = 0,

whose two roots multiply to -1. For ``|z| > 1`` one lies inside the unit disk
(``kappa_s``) and one outside (``kappa_u``). A closure of tangential order
``p`` admits an unstable eigenvalue when ``kappa_u`` equals its symbol; these
routines sample that condition and the auxiliary polynomial facts behind the
order-2 case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from numpy.polynomial import Polynomial

Z_GUARD = 1e-12
DENOMINATOR_FLOOR = 1e-14
UNIT_TOL = 1e-9


@dataclass(frozen=True)
class RootPair:
    kappa_s: complex
    kappa_u: complex
    z: complex
    theta: float


@dataclass
class StabilityReport:
    order: int
    mu_x: float
    mu_y: float
    samples: int
    margin: float
    theta_max: float | None = None
    invariant_failures: int = 0
    conjecture_failures: int = 0
    anomalies: int = 0
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if self.invariant_failures:
            return "fail-invariant"
        if self.conjecture_failures or self.anomalies:
            return "fail-conjecture"
        return "pass"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


def _roots(z, theta, mu_x, mu_y):
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) <= 1 + Z_GUARD):
        raise ValueError("|z| must exceed 1 + 1e-12 for a reliable classification")
    if mu_x == 0:
        raise ValueError("mu_x must be nonzero")
    b = z * z - 1 + 2j * mu_y * np.sin(theta) * z
    a = mu_x * z
    disc = np.sqrt(b * b + 4 * a * a)
    # pick the sign that avoids cancellation, then use the product of the roots
    sgn = np.where((np.conj(b) * disc).real >= 0, 1.0, -1.0)
    q = -0.5 * (b + sgn * disc)
    r1 = q / a
    r2 = -a / q
    inner = np.abs(r1) < np.abs(r2)
    return np.where(inner, r1, r2), np.where(inner, r2, r1)


def kappa_roots_2d(z, theta, mu_x, mu_y) -> RootPair:
    """Stable and unstable roots of the characteristic equation at ``(z, theta)``."""
    ks, ku = _roots(z, theta, mu_x, mu_y)
    return RootPair(complex(ks), complex(ku), complex(z), float(theta))


def kappa_s0(z, mu_x):
    """Stable root of the one-dimensional characteristic equation."""
    return _roots(z, 0.0, mu_x, 0.0)[0]


def kappa_u0(z, mu_x):
    return _roots(z, 0.0, mu_x, 0.0)[1]


def _denominator(z, k0, mu_x):
    d = z * z - 1 + 2 * mu_x * z * k0
    if np.any(np.abs(d) < DENOMINATOR_FLOOR):
        raise ValueError("too close to a glancing point")
    return d


def kappa_s1(z, mu_x, mu_y):
    """First tangential corrector ``-mu_y z k0 / (z^2 - 1 + 2 mu_x z k0)``."""
    z = np.asarray(z, dtype=complex)
    k0 = kappa_s0(z, mu_x)
    return -mu_y * z * k0 / _denominator(z, k0, mu_x)


def kappa_s2(z, mu_x, mu_y):
    """Second tangential corrector ``-4 z k1 (mu_y + mu_x k1) / (z^2 - 1 + 2 mu_x z k0)``."""
    z = np.asarray(z, dtype=complex)
    k0 = kappa_s0(z, mu_x)
    d = _denominator(z, k0, mu_x)
    k1 = -mu_y * z * k0 / d
    return -4 * z * k1 * (mu_y + mu_x * k1) / d


def glancing_limits(mu_x, mu_y):
    """Limits of the three symbols as ``z -> -i`` from outside the unit disk."""
    r = math.sqrt(1 - mu_x**2)
    k0 = 1j * (1 - r) / mu_x
    k1 = mu_y * (1 - r) / (2 * mu_x * r)
    k2 = -1j * mu_y**2 * mu_x / (2 * (1 - mu_x**2) ** 1.5)
    return k0, k1, k2


def theta_max(mu_x, mu_y):
    """Angle below which the order-2 polynomial has a root outside the unit circle."""
    if not (mu_x > 0 and mu_y > 0 and mu_x + mu_y < 1):
        raise ValueError("need 0 < mu_x, 0 < mu_y, mu_x + mu_y < 1")
    den = (1 - mu_x**2) ** 2 - mu_x**2 * mu_y**2
    assert den > 0
    return 2 * math.atan(2 * mu_y * (1 - mu_x**2) / den)


def sample_z(rng, count, r_min=1 + 1e-6, r_max=10.0):
    """``r e^(i phi)`` with ``r`` log-uniform in ``(r_min, r_max]`` and ``phi`` uniform."""
    r = np.exp(rng.uniform(math.log(r_min), math.log(r_max), count))
    phi = rng.uniform(0, 2 * math.pi, count)
    return r * np.exp(1j * phi)


def _pair_failures(ks, ku, tol=1e-12):
    bad = (np.abs(ks) >= 1) | (np.abs(ku) <= 1) | (np.abs(ks * ku + 1) > tol)
    return int(np.count_nonzero(bad))


def gr_check_order0(mu_x, mu_y, samples=10_000, rng=None) -> StabilityReport:
    """``kappa_u(z, theta) = kappa_s0(z)`` is impossible: moduli on opposite sides of 1."""
    rng = np.random.default_rng(rng)
    z = sample_z(rng, samples)
    theta = rng.uniform(0, math.pi, samples)
    ks, ku = _roots(z, theta, mu_x, mu_y)
    k0 = kappa_s0(z, mu_x)
    gap = np.abs(ku) - np.abs(k0)
    rep = StabilityReport(0, mu_x, mu_y, samples, float(gap.min()))
    rep.invariant_failures = _pair_failures(ks, ku)
    rep.conjecture_failures = int(np.count_nonzero(gap <= 0))
    return rep


def gr_check_order1(mu_x, mu_y, samples=10_000, rng=None) -> StabilityReport:
    """Order-1 symbol ``R = k0 + 2 i sin(theta) k1`` never equals ``kappa_u``.

    Plugging ``R`` into the characteristic polynomial ``F`` leaves
    ``F(R) = (2 i sin theta)^2 z k1 (mu_y + mu_x k1)``, with
    ``mu_y + mu_x k1 = -mu_x mu_y z kappa_u0 / (z^2 - 1 + 2 mu_x z k0)``; both
    identities are checked. The margin is the smallest relative distance
    ``|R - kappa_u| / |kappa_u|`` over the samples.
    """
    rng = np.random.default_rng(rng)
    z = sample_z(rng, samples)
    theta = rng.uniform(0, math.pi, samples)
    ks, ku = _roots(z, theta, mu_x, mu_y)
    k0 = kappa_s0(z, mu_x)
    d = _denominator(z, k0, mu_x)
    k1 = -mu_y * z * k0 / d
    eps = 2j * np.sin(theta)
    R = k0 + eps * k1
    F = mu_x * z * R**2 + (z * z - 1 + mu_y * eps * z) * R - mu_x * z
    predicted = eps**2 * z * k1 * (mu_y + mu_x * k1)
    scale = np.abs(mu_x * z * R**2) + np.abs((z * z - 1 + mu_y * eps * z) * R) + np.abs(mu_x * z)
    identity_err = np.abs(F - predicted) / scale
    factor = mu_y + mu_x * k1
    factor_err = np.abs(factor + mu_x * mu_y * z * kappa_u0(z, mu_x) / d) / np.maximum(np.abs(factor), 1e-300)
    # the symbol must never coincide with the unstable root
    distance = np.abs(R - ku) / np.abs(ku)
    ok = distance > 1e-12
    margin = float(distance.min())
    rep = StabilityReport(1, mu_x, mu_y, samples, margin)
    rep.invariant_failures = (_pair_failures(ks, ku)
                              + int(np.count_nonzero(identity_err > 1e-10))
                              + (int(np.count_nonzero(factor_err > 1e-10)) if mu_y > 0 else 0))
    rep.conjecture_failures = int(np.count_nonzero(~ok))
    rep.details = {"identity_error": float(identity_err.max()),
                   "factor_error": float(factor_err.max()) if mu_y > 0 else 0.0,
                   "min_abs_factor": float(np.abs(factor).min())}
    return rep


def order2_polynomial(theta, mu_x, mu_y) -> Polynomial:
    """Degree-8 polynomial in ``z`` whose roots are the candidate order-2 eigenvalues."""
    z = Polynomial([0, 1])
    w = z * z - 1
    s = math.sin(theta / 2)
    c = math.cos(theta / 2)
    first = w**4 + 8 * mu_x**2 * z**2 * w**2 + 16 * mu_x**2 * (mu_x**2 - mu_y**2) * z**4
    second = z * w * (w**2 + 4 * mu_x**2 * z**2)
    return Polynomial(1j * s * first.coef.astype(complex)) - 4 * c * mu_y * second


def order2_polynomial_direct(z, theta, mu_x, mu_y):
    """The same polynomial evaluated from its factored form."""
    z = np.asarray(z, dtype=complex)
    w = z * z - 1
    return (1j * math.sin(theta / 2) * (w**4 + 8 * mu_x**2 * z**2 * w**2
                                        + 16 * mu_x**2 * (mu_x**2 - mu_y**2) * z**4)
            - 4 * math.cos(theta / 2) * mu_y * z * w * (w**2 + 4 * mu_x**2 * z**2))


def order2_real_form(theta, mu_x, mu_y) -> Polynomial:
    """Real polynomial in ``w`` obtained by ``z = i w`` and division by ``i``."""
    p = order2_polynomial(theta, mu_x, mu_y).coef
    k = np.arange(len(p))
    return Polynomial(p * (1j) ** k / 1j)


def _pmul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _padd(a, b):
    n = max(len(a), len(b))
    return [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]


def _real_form_mp(sin_half, cos_half, mu_x, mu_y):
    """Real-form coefficients (ascending) built in mpmath arithmetic."""
    mx, my = mpmath.mpf(mu_x), mpmath.mpf(mu_y)
    q = [1, 0, 1]                      # w^2 + 1
    q2 = _pmul(q, q)
    first = _padd(_padd(_pmul(q2, q2), _pmul([0, 0, -8 * mx**2], q2)),
                  [0, 0, 0, 0, 16 * mx**2 * (mx**2 - my**2)])
    second = _pmul(_pmul([0, 1], q), _padd(q2, [0, 0, -4 * mx**2]))
    return _padd([sin_half * v for v in first], [4 * cos_half * my * v for v in second])


def _deflate(coeffs, root):
    """Synthetic division of a descending coefficient list by ``(w - root)``."""
    out = [coeffs[0]]
    for c in coeffs[1:]:
        out.append(c + root * out[-1])
    return out[:-1], out[-1]


def order2_polynomial_roots(theta, mu_x, mu_y, digits=40, at_theta_max=False):
    """Roots of the order-2 polynomial and their classification against the unit circle.

    The real form is assembled and solved in mpmath (so that the near-double
    roots around ``theta_max`` are resolved) and mapped back by ``z = i w``.
    With ``at_theta_max`` the angle is taken as ``theta_max`` computed at the
    working precision, which keeps the double root at ``-i`` intact.
    Returns ``(roots, info)`` with counts outside / on / inside the circle and
    the worst mismatch of the root set under ``z -> -1/z``.
    """
    if not at_theta_max and math.sin(theta) == 0:
        raise ValueError("sin(theta) must be nonzero")
    with mpmath.workdps(digits + 20):
        if at_theta_max:
            mx, my = mpmath.mpf(mu_x), mpmath.mpf(mu_y)
            t = 2 * my * (1 - mx**2) / ((1 - mx**2) ** 2 - mx**2 * my**2)
            sh, ch = t / mpmath.sqrt(1 + t * t), 1 / mpmath.sqrt(1 + t * t)
        else:
            th = mpmath.mpf(theta)
            sh, ch = mpmath.sin(th / 2), mpmath.cos(th / 2)
        coeffs = _real_form_mp(sh, ch, mu_x, mu_y)[::-1]
        known = []
        if at_theta_max:
            # divide out the double root w = -1 (z = -i) exactly
            for _ in range(2):
                coeffs, rem = _deflate(coeffs, -1)
                if abs(rem) > mpmath.mpf(10) ** (-digits) * max(abs(c) for c in coeffs):
                    raise ArithmeticError("w = -1 is not a double root at theta_max")
                known.append(mpmath.mpf(-1))
        w = list(mpmath.polyroots(coeffs, maxsteps=400, extraprec=4 * digits)) + known
    z = np.array([1j * complex(v) for v in w])
    mod = np.abs(z)
    outside = mod > 1 + UNIT_TOL
    inside = mod < 1 - UNIT_TOL
    images = -1 / z
    mismatch = max(float(np.min(np.abs(z - im))) / max(1.0, abs(im)) for im in images)
    info = {"outside": int(outside.sum()), "on": int((~outside & ~inside).sum()),
            "inside": int(inside.sum()), "inversion_mismatch": mismatch}
    return z, info


def order2_symbol(z, theta, mu_x, mu_y):
    """``k0 + 2 i sin(theta) k1 - 4 sin^2(theta/2) k2`` at ``z``."""
    k0 = kappa_s0(z, mu_x)
    return k0 + 2j * math.sin(theta) * kappa_s1(z, mu_x, mu_y) \
        - 4 * math.sin(theta / 2) ** 2 * kappa_s2(z, mu_x, mu_y)


def glancing_symbol_modulus(mu_x, mu_y):
    """Modulus of the order-2 symbol in the limit ``theta -> theta_max``, ``z -> -i``."""
    k0, k1, k2 = glancing_limits(mu_x, mu_y)
    t = math.tan(theta_max(mu_x, mu_y) / 2)
    sin_max = 2 * t / (1 + t * t)
    sin2_half = t * t / (1 + t * t)
    return abs(k0 + 2j * sin_max * k1 - 4 * sin2_half * k2)


def _is_eigenvalue(z, theta, mu_x, mu_y, tol=1e-8):
    """True when the order-2 symbol at ``z`` equals the unstable root there."""
    ku = kappa_roots_2d(z, theta, mu_x, mu_y).kappa_u
    return abs(order2_symbol(z, theta, mu_x, mu_y) - ku) <= tol * abs(ku)


def gr_check_order2(mu_x, mu_y, theta_samples=64, above_samples=16, rng=None) -> StabilityReport:
    """Sampled order-2 facts at one ``(mu_x, mu_y)``.

    For ``theta`` in ``(0, theta_max)``: a unique root ``z_theta`` outside the
    circle, purely imaginary, and ``|symbol(z_theta)| < 1``. For ``theta`` in
    ``[theta_max, pi)``: all roots on the circle. Every root set must be closed
    under ``z -> -1/z``. The glancing-limit modulus must also stay below 1.
    The margin is ``1 - max |symbol|`` over the imaginary roots and the limit.

    A root set with the wrong shape counts as an anomaly. Every extra root
    outside the circle is also tested directly: if the symbol equals the
    unstable root there, it is an unstable eigenvalue of the half-space
    problem (a conjecture failure), and the largest such ``|z|`` is reported.
    """
    rng = np.random.default_rng(rng)
    tmax = theta_max(mu_x, mu_y)
    below = rng.uniform(0, tmax, theta_samples)
    below = below[below > 0]
    above = rng.uniform(tmax, math.pi, above_samples - 1)
    rep = StabilityReport(2, mu_x, mu_y, len(below) + len(above) + 1, 0.0, theta_max=tmax)
    worst = glancing_symbol_modulus(mu_x, mu_y)
    inversion = 0.0
    not_imag = 0.0
    eigen = 0
    eigen_modulus = 0.0

    def extra(z_out, th):
        nonlocal eigen, eigen_modulus
        for zz in z_out:
            if _is_eigenvalue(zz, th, mu_x, mu_y):
                eigen += 1
                eigen_modulus = max(eigen_modulus, float(abs(zz)))

    for th in below:
        z, info = order2_polynomial_roots(th, mu_x, mu_y)
        inversion = max(inversion, info["inversion_mismatch"])
        out = z[np.abs(z) > 1 + UNIT_TOL]
        imag = np.abs(out.real) <= UNIT_TOL * np.abs(out)
        if len(out) != 1 or not imag.all():
            rep.anomalies += 1
        if len(out) == 1:
            not_imag = max(not_imag, abs(out[0].real) / abs(out[0]))
        if imag.any():
            zt = out[imag][0]
            worst = max(worst, float(abs(order2_symbol(zt, th, mu_x, mu_y))))
            extra(out[~imag], th)
        else:
            extra(out, th)
    for th in [None, *above]:
        z, info = order2_polynomial_roots(th, mu_x, mu_y, at_theta_max=th is None)
        inversion = max(inversion, info["inversion_mismatch"])
        if info["on"] != 8:
            rep.anomalies += 1
            extra(z[np.abs(z) > 1 + UNIT_TOL], tmax if th is None else th)
    if inversion > UNIT_TOL:
        rep.invariant_failures += 1
    if worst >= 1 or eigen:
        rep.conjecture_failures += 1
    rep.margin = 1 - worst
    rep.details = {"max_symbol_modulus": worst, "inversion_mismatch": inversion,
                   "max_real_part_ratio": not_imag, "unstable_eigenvalues": eigen,
                   "max_eigenvalue_modulus": eigen_modulus}
    return rep


def estimate_growth_rate(l2_series) -> float:
    """Slope of ``log l2`` against ``t`` over the longest increasing trailing window.

    ``l2_series`` is an array of ``(t, l2)`` rows. Returns 0 when the series
    does not end on a growing stretch of at least three points.
    """
    data = np.asarray(l2_series, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or len(data) < 10:
        raise ValueError("need at least 10 (t, l2) pairs")
    t, v = data[:, 0], np.log(data[:, 1])
    start = len(v) - 1
    while start > 0 and v[start - 1] < v[start]:
        start -= 1
    if len(v) - start < 3:
        return 0.0
    slope = np.polyfit(t[start:], v[start:], 1)[0]
    return float(max(slope, 0.0))
