"""Convolution kernels of the leap-frog transparent boundary conditions.

The stable root of the characteristic equation and its two tangential
correctors have Laurent expansions

    kappa0(z) = sum_n s0_n z^(-2n-1)
    kappa1(z) = sum_n s1_n z^(-2n)
    kappa2(z) = sum_n s2_n z^(-2n-1)

Each family is generated two ways: from Legendre / Chebyshev polynomial
expressions (``Route.CLOSED_FORM``) and by plugging the series into the
characteristic equation (``Route.INDUCTIVE``). The ``T*`` families are the
same sequences with the two CFL numbers exchanged; they serve the bottom and
top sides of the rectangle.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np


class Family(str, enum.Enum):
    S0 = "S0"
    S1 = "S1"
    S2 = "S2"
    T0 = "T0"
    T1 = "T1"
    T2 = "T2"


class Route(str, enum.Enum):
    CLOSED_FORM = "closed"
    INDUCTIVE = "inductive"


@dataclass(frozen=True)
class CoefficientSequence:
    family: Family
    mu_x: float
    mu_y: float
    values: np.ndarray
    route: Route

    def __len__(self):
        return len(self.values)

    def __getitem__(self, n):
        return self.values[n]


def legendre_table(nmax, x, x_minus_1=None):
    """``P_0(x), ..., P_nmax(x)`` stacked along the first axis.

    The three-term recurrence is run on the increments ``P_n - P_(n-1)``,
    which is the same recurrence rearranged around ``x - 1``; it keeps full
    accuracy when ``x`` is close to 1, where the plain form loses digits.
    Pass ``x_minus_1`` when it is known more accurately than ``x - 1``.
    """
    x = np.asarray(x, dtype=float)
    P = np.empty((nmax + 1,) + x.shape)
    P[0] = 1.0
    xm1 = x - 1 if x_minus_1 is None else np.asarray(x_minus_1, dtype=float)
    if nmax >= 1:
        P[1] = x
    d = xm1
    for n in range(1, nmax):
        d = ((2 * n + 1) * xm1 * P[n] + n * d) / (n + 1)
        P[n + 1] = P[n] + d
    return P


def legendre(n, x):
    """Legendre polynomial ``P_n(x)`` by the three-term recurrence."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return legendre_table(n, x)[n]


def chebyshev_u_table(nmax, x, x_minus_1=None):
    """``U_0(x), ..., U_nmax(x)`` (second kind) stacked along the first axis."""
    x = np.asarray(x, dtype=float)
    U = np.empty((nmax + 1,) + x.shape)
    U[0] = 1.0
    # increment form of U_(n+1) = 2 x U_n - U_(n-1), accurate near x = 1
    xm1 = x - 1 if x_minus_1 is None else np.asarray(x_minus_1, dtype=float)
    if nmax >= 1:
        U[1] = 2 * x
    d = 1 + 2 * xm1
    for n in range(1, nmax):
        d = d + 2 * xm1 * U[n]
        U[n + 1] = U[n] + d
    return U


def chebyshev_u(n, x):
    """Chebyshev polynomial of the second kind ``U_n(x)``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return chebyshev_u_table(n, x)[n]


def _check(mu_x, count, minimum=2):
    if count < minimum:
        raise ValueError(f"count must be >= {minimum}, got {count}")
    if not -1.0 < mu_x < 1.0:
        raise ValueError(f"mu_x must lie in (-1, 1), got {mu_x}")


def _s0_closed(mu_x, count):
    s = np.empty(count)
    s[0] = mu_x
    s[1] = mu_x * (1 - mu_x**2)
    # (n+1) s_n = (2n-1)(1 - 2 mu_x^2) s_(n-1) - (n-2) s_(n-2), run on the
    # increments d_n = s_n - s_(n-1) so that small mu_x loses no digits
    m2 = 2 * mu_x**2
    d = s[1] - s[0]
    for n in range(2, count):
        d = ((n - 2) * d - m2 * (2 * n - 1) * s[n - 1]) / (n + 1)
        s[n] = s[n - 1] + d
    return s


def _s0_inductive(mu_x, count):
    s = np.empty(count)
    s[0] = mu_x
    for n in range(count - 1):
        s[n + 1] = s[n] - mu_x * np.dot(s[: n + 1], s[n::-1])
    return s


def _s1_closed(mu_x, mu_y, count):
    if mu_x == 0.0:
        raise ValueError("closed-form s1 needs mu_x != 0")
    P = legendre_table(count - 1, 1 - 2 * mu_x**2, -2 * mu_x**2)
    # E_n = (P_n - P_(n-1)) / mu_x by its own recurrence: the plain difference
    # cancels catastrophically when alpha is close to 1 (small mu_x)
    E = np.zeros(count)
    if count > 1:
        E[1] = -2 * mu_x
    for n in range(1, count - 1):
        E[n + 1] = (n * E[n] - 2 * mu_x * (2 * n + 1) * P[n]) / (n + 1)
    return 0.5 * mu_y * E


def _s1_inductive(mu_x, mu_y, count, s0=None):
    if s0 is None:
        s0 = _s0_inductive(mu_x, count)
    s = np.zeros(count)
    for n in range(count - 1):
        s[n + 1] = s[n] - 2 * mu_x * np.dot(s[: n + 1], s0[n::-1]) - mu_y * s0[n]
    return s


def _s2_closed(mu_x, mu_y, count):
    if mu_x == 0.0:
        raise ValueError("closed-form s2 needs mu_x != 0")
    alpha = 1 - 2 * mu_x**2
    P = legendre_table(count - 2, alpha, -2 * mu_x**2)
    U = chebyshev_u_table(count - 2, alpha, -2 * mu_x**2)
    s = np.zeros(count)
    s[1:] = 4 * mu_x * mu_y**2 * np.convolve(U, P)[: count - 1]
    return s


def _s2_inductive(mu_x, mu_y, count, s0=None, s1=None):
    if s0 is None:
        s0 = _s0_inductive(mu_x, count)
    if s1 is None:
        s1 = _s1_inductive(mu_x, mu_y, count, s0)
    s = np.zeros(count)
    for n in range(count - 1):
        s[n + 1] = (s[n]
                    - 2 * mu_x * np.dot(s[1: n + 1], s0[n - 1::-1] if n else s0[:0])
                    - 4 * mu_y * s1[n + 1]
                    - 4 * mu_x * np.dot(s1[1: n + 1], s1[n:0:-1]))
    return s


def gen_s0(mu_x, count, route=Route.CLOSED_FORM) -> CoefficientSequence:
    """First ``count`` coefficients of the 1D kernel ``s0``."""
    _check(mu_x, count)
    route = Route(route)
    values = _s0_closed(mu_x, count) if route is Route.CLOSED_FORM \
        else _s0_inductive(mu_x, count)
    return CoefficientSequence(Family.S0, mu_x, 0.0, values, route)


def gen_s1(mu_x, mu_y, count, route=Route.CLOSED_FORM) -> CoefficientSequence:
    """First ``count`` coefficients of the first-order tangential kernel ``s1``."""
    _check(mu_x, count)
    route = Route(route)
    values = _s1_closed(mu_x, mu_y, count) if route is Route.CLOSED_FORM \
        else _s1_inductive(mu_x, mu_y, count)
    return CoefficientSequence(Family.S1, mu_x, mu_y, values, route)


def gen_s2(mu_x, mu_y, count, route=Route.CLOSED_FORM) -> CoefficientSequence:
    """First ``count`` coefficients of the second-order tangential kernel ``s2``."""
    _check(mu_x, count)
    route = Route(route)
    values = _s2_closed(mu_x, mu_y, count) if route is Route.CLOSED_FORM \
        else _s2_inductive(mu_x, mu_y, count)
    return CoefficientSequence(Family.S2, mu_x, mu_y, values, route)


_S_GENERATORS = {"0": gen_s0, "1": gen_s1, "2": gen_s2}


def gen_family(family, mu_x, mu_y, count, route=Route.CLOSED_FORM) -> CoefficientSequence:
    """Generate any of the six families; ``T*`` swaps the roles of mu_x and mu_y."""
    family = Family(family)
    order = family.value[1]
    swap = family.value[0] == "T"
    a, b = (mu_y, mu_x) if swap else (mu_x, mu_y)
    seq = gen_s0(a, count, route) if order == "0" else _S_GENERATORS[order](a, b, count, route)
    return CoefficientSequence(family, mu_x, mu_y, seq.values, seq.route)


def gen_t_family(family, mu_x, mu_y, count, route=Route.CLOSED_FORM) -> CoefficientSequence:
    family = Family(family)
    if family.value[0] != "T":
        raise ValueError(f"{family.value} is not a T family")
    return gen_family(family, mu_x, mu_y, count, route)


@functools.lru_cache(maxsize=64)
def _cached_kernel(family, mu_x, mu_y, count):
    values = gen_family(family, mu_x, mu_y, count).values
    values.setflags(write=False)
    return values


def kernel(family, mu_x, mu_y, count) -> np.ndarray:
    """Cached, read-only closed-form kernel prefix used by the solvers.

    When the normal CFL number of the family is 0 the closure is never read by
    the interior scheme, and an all-zero kernel is returned.
    """
    family = Family(family)
    normal = mu_y if family.value[0] == "T" else mu_x
    if normal == 0.0:
        return np.zeros(count)
    return _cached_kernel(family, float(mu_x), float(mu_y), int(count))


def sigma_inductive(mu_x, mu_y, count):
    """Raw Laurent coefficients ``sigma^0, sigma^1, sigma^2`` of ``z^-n``, n < count.

    Computed directly from the full-index recurrences, without using the
    parity structure; used to cross-check the ``s`` families.
    """
    s0 = np.zeros(count)
    s1 = np.zeros(count)
    s2 = np.zeros(count)
    s0[1] = mu_x
    for n in range(count - 2):
        s0[n + 2] = s0[n] - mu_x * np.dot(s0[1: n + 1], s0[n:0:-1])
    for n in range(1, count - 1):
        conv0 = lambda a: np.dot(a[: n + 1], s0[n::-1])  # noqa: E731
        s1[n + 1] = s1[n - 1] - 2 * mu_x * conv0(s1) - mu_y * s0[n]
        s2[n + 1] = (s2[n - 1] - 2 * mu_x * conv0(s2) - 4 * mu_y * s1[n]
                     - 4 * mu_x * np.dot(s1[: n + 1], s1[n::-1]))
    return s0, s1, s2


def theta_x(mu_x):
    return math.acos(1 - 2 * mu_x**2)


def asymptotic_s0(n, mu_x):
    """Leading large-``n`` behaviour of ``s0_n`` (decays like ``n^-3/2``)."""
    n = np.asarray(n, dtype=float)
    th = theta_x(mu_x)
    return (1 - mu_x**2) ** 0.25 / np.sqrt(math.pi * mu_x * n**3) \
        * np.sin((n + 0.5) * th - math.pi / 4)


def asymptotic_s1(n, mu_x, mu_y):
    """Leading large-``n`` behaviour of ``s1_n`` (decays like ``n^-1/2``)."""
    n = np.asarray(n, dtype=float)
    th = theta_x(mu_x)
    return -(mu_y / mu_x) * np.sqrt(math.tan(th / 2) / (math.pi * n)) \
        * np.sin(n * th - math.pi / 4)


def oscillation_window(mu):
    """Quarter period (in indices) of the kernel oscillation ``sin(n theta_x)``."""
    return max(1, math.ceil(math.pi / (2 * theta_x(abs(mu)))))


def close_relative(a, b, rtol, window=1):
    """Elementwise ``|a-b| <= rtol * scale`` with a neighbourhood scale.

    The scale at index n is the largest modulus of either sequence over
    indices ``n-window .. n+window``. With ``window`` set to a quarter of the
    oscillation period every neighbourhood holds a crest, so oscillating
    sequences are judged against their local envelope rather than against
    their value at a zero crossing.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    m = np.maximum(np.abs(a), np.abs(b))
    scale = m.copy()
    for shift in range(1, window + 1):
        scale[shift:] = np.maximum(scale[shift:], m[:-shift])
        scale[:-shift] = np.maximum(scale[:-shift], m[shift:])
    return np.abs(a - b) <= rtol * scale


def kernel_mp(family, mu_x, mu_y, count, digits=80):
    """Closed-form kernel prefix evaluated in mpmath at ``digits`` decimal digits.

    Used as the input of the Padé stage, which fits every digit it is given:
    feeding it double-rounded values makes it model the rounding noise, and
    spurious poles appear. ``mu_x`` and ``mu_y`` are taken as exact binary values.
    """
    import mpmath

    family = Family(family)
    if family.value[0] == "T":
        mu_x, mu_y = mu_y, mu_x
    order = family.value[1]
    with mpmath.workdps(digits + 10):
        mx = mpmath.mpf(mu_x)
        my = mpmath.mpf(mu_y)
        alpha = 1 - 2 * mx**2
        if order == "0":
            s = [mx, mx * (1 - mx**2)]
            for n in range(2, count):
                s.append((2 * n - 1) * alpha * s[n - 1] / (n + 1) - (n - 2) * s[n - 2] / mpmath.mpf(n + 1))
            return s[:count]
        P = [mpmath.mpf(1), alpha]
        for n in range(1, count):
            P.append(((2 * n + 1) * alpha * P[n] - n * P[n - 1]) / (n + 1))
        if order == "1":
            return [mpmath.mpf(0)] + [my / (2 * mx) * (P[n] - P[n - 1]) for n in range(1, count)]
        U = [mpmath.mpf(1), 2 * alpha]
        for n in range(1, count):
            U.append(2 * alpha * U[n] - U[n - 1])
        return [mpmath.mpf(0)] + [4 * mx * my**2 * mpmath.fsum(U[m] * P[n - 1 - m] for m in range(n))
                                  for n in range(1, count)]
