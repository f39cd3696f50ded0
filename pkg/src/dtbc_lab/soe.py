"""Sum-of-exponentials compression of convolution kernels.

A kernel ``nu_k`` with generating function ``f(x) = sum nu_k x^k`` is replaced
by the ``[N, M]`` Padé approximant ``P_N / Q_M`` (``N < M``). Partial fractions
over the simple roots ``q_m`` of ``Q_M`` give

    nu~_k = sum_m b_m q_m^(-k),    b_m = -P_N(q_m) / (q_m Q_M'(q_m)),

and ``nu~_k = nu_k`` for ``k <= N + M``. A discrete convolution with ``nu~`` is
then a bank of first-order recursions (one per root), O(M) work per step.

The Padé coefficients, the roots and the weights are computed in mpmath at a
configurable number of decimal digits; only the runtime bank uses doubles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
import numpy as np


class SoeError(ValueError):
    """Base class for rejected compressions."""


class SingularSchur(SoeError):
    pass


class RootInsideOrOnCircle(SoeError):
    pass


class NonSimpleRoots(SoeError):
    pass


class RootFinderFailure(SoeError):
    pass


@dataclass(frozen=True)
class PadeApproximant:
    """``P_N(x) / Q_M(x)`` with ``q[0] == 1``; coefficients are mpmath numbers, lowest degree first."""

    N: int
    M: int
    p: tuple
    q: tuple
    precision_digits: int
    kernel: tuple = field(repr=False, default=())
    condition_estimate: float = float("nan")

    def series(self, count):
        """First ``count`` Taylor coefficients of ``P_N / Q_M``."""
        with mpmath.workdps(self.precision_digits):
            out = []
            for k in range(count):
                acc = self.p[k] if k <= self.N else mpmath.mpf(0)
                for j in range(1, min(k, self.M) + 1):
                    acc -= self.q[j] * out[k - j]
                out.append(acc)
            return out


def _lower_toeplitz_inverse(first_col):
    """First column of the inverse of a lower-triangular Toeplitz matrix."""
    n = len(first_col)
    inv0 = 1 / first_col[0]
    a = [inv0]
    for k in range(1, n):
        a.append(-inv0 * mpmath.fdot(first_col[1:k + 1], a[k - 1::-1]))
    return a


def _lower_toeplitz_apply(a, v):
    return [mpmath.fdot(a[r::-1], v[: r + 1]) for r in range(len(v))]


def build_pade(kernel, N, M, precision_digits=80) -> PadeApproximant:
    """``[N, M]`` Padé approximant of ``sum kernel[k] x^k`` normalised by ``q_0 = 1``.

    The ``M + N`` unknowns ``(q_1..q_M, p_1..p_N)`` solve the block system
    ``[[A, B], [C, 0]]`` where ``A`` is the lower-triangular Toeplitz matrix of
    ``nu_0..nu_(M-1)``. ``A`` is inverted through its first column, ``p`` comes
    from the Schur complement ``C A^-1 B`` and then ``q = A^-1 (Y1 - B p)``.
    """
    N = int(N)
    M = int(M)
    if not 0 <= N < M:
        raise ValueError(f"need 0 <= N < M, got N={N}, M={M}")
    if len(kernel) < N + M + 1:
        raise ValueError(f"kernel needs at least {N + M + 1} terms, got {len(kernel)}")
    if kernel[0] == 0:
        raise ValueError("kernel[0] must be nonzero")
    with mpmath.workdps(precision_digits):
        nu = [v if isinstance(v, mpmath.mpf) else mpmath.mpf(float(v)) for v in kernel[: N + M + 1]]
        a = _lower_toeplitz_inverse(nu[:M])
        y1 = [-v for v in nu[1:M + 1]]
        y2 = [-v for v in nu[M + 1:M + N + 1]]
        ainv_y1 = _lower_toeplitz_apply(a, y1)
        if N == 0:
            pcoef = []
            cond = 1.0
        else:
            # rows n = M+1..M+N of the system: C[n, k] = nu_(n-k), k = 1..M
            crow = [nu[n - M:n][::-1] for n in range(M + 1, M + N + 1)]
            # column j of A^-1 B is -a shifted down by j
            schur = mpmath.matrix(N, N)
            rhs = mpmath.matrix(N, 1)
            for r in range(N):
                for j in range(N):
                    schur[r, j] = -mpmath.fdot(crow[r][j:], a[: M - j])
                rhs[r] = mpmath.fdot(crow[r], ainv_y1) - y2[r]
            try:
                sol = mpmath.lu_solve(schur, rhs)
            except ZeroDivisionError as exc:
                raise SingularSchur(f"Schur complement of the [{N},{M}] system is singular "
                                    "(condition estimate inf)") from exc
            pcoef = [sol[i] for i in range(N)]
            snorm = mpmath.mnorm(schur, 1)
            cond = float(snorm * mpmath.norm(sol, 1) / max(mpmath.norm(rhs, 1), mpmath.mpf(10) ** -precision_digits))
            if not all(mpmath.isfinite(v) for v in pcoef) or cond > 10.0 ** (precision_digits - 2):
                raise SingularSchur(f"Schur complement of the [{N},{M}] system is numerically singular "
                                    f"(condition estimate {cond:.3g})")
        # q = A^-1 (Y1 - B p), with B p = -(p_1..p_N, 0..0)
        rhs_q = [y1[i] + (pcoef[i] if i < N else 0) for i in range(M)]
        qcoef = _lower_toeplitz_apply(a, rhs_q)
        return PadeApproximant(N, M, tuple([nu[0]] + pcoef), tuple([mpmath.mpf(1)] + qcoef),
                               int(precision_digits), tuple(nu), cond)


def _seed_roots(coeffs_low_first):
    """Double-precision eigenvalue seeds, with a circle fallback for non-finite entries."""
    c = np.array([complex(v) for v in coeffs_low_first])
    scale = np.max(np.abs(c))
    roots = np.roots((c / scale)[::-1]) if np.all(np.isfinite(c / scale)) else np.array([])
    M = len(c) - 1
    if len(roots) != M or not np.all(np.isfinite(roots)):
        radius = abs(c[0] / c[-1]) ** (1.0 / M) if c[-1] != 0 else 1.0
        roots = radius * np.exp(2j * np.pi * (np.arange(M) + 0.25) / M)
    # break exact coincidences so the simultaneous iteration is well defined
    jitter = 1e-10 * (1 + np.abs(roots)) * np.exp(1j * (0.4 + np.arange(M)))
    return roots + jitter


def find_roots(pade: PadeApproximant, max_iter=500):
    """All ``M`` roots of ``Q_M`` by Aberth simultaneous iteration at full precision.

    Each root is accepted when its backward error
    ``|Q(z)| / sum_k |q_k| |z|^k`` is below ``10^-(digits - 10)``.
    Returns a list of mpmath complex numbers.
    """
    dps = pade.precision_digits
    with mpmath.workdps(dps + 10):
        coeffs = list(pade.q)
        high_first = coeffs[::-1]
        abs_high = [abs(c) for c in high_first]
        z = [mpmath.mpc(complex(r)) for r in _seed_roots(coeffs)]
        M = len(z)
        # a root stops when its Newton-Aberth step is negligible, or once it is
        # accurate to half the digits and the step no longer shrinks (the
        # attainable accuracy is limited by the conditioning of Q)
        step_tol = mpmath.mpf(10) ** -(dps - 5)
        plateau = mpmath.mpf(10) ** -(dps // 2)
        last = [mpmath.inf] * M
        active = [True] * M
        for _ in range(max_iter):
            moved = False
            for i in range(M):
                if not active[i]:
                    continue
                val, der = mpmath.polyval(high_first, z[i], derivative=True)
                if val == 0:
                    active[i] = False
                    continue
                ratio = val / der
                repulse = mpmath.fsum(1 / (z[i] - z[j]) for j in range(M) if j != i)
                w = ratio / (1 - ratio * repulse)
                z[i] -= w
                rel = abs(w) / abs(z[i])
                if rel <= step_tol or (rel <= plateau and rel > last[i] / 4):
                    active[i] = False
                else:
                    moved = True
                last[i] = rel
            if not moved:
                break
        bad = []
        tol = mpmath.mpf(10) ** -(dps - 10)
        for i, zi in enumerate(z):
            backward = abs(mpmath.polyval(high_first, zi)) / mpmath.polyval(abs_high, abs(zi))
            if not backward <= tol:
                bad.append((i, complex(zi), float(backward)))
        if bad:
            desc = ", ".join(f"#{i} at {r:.6g} (backward error {e:.2e})" for i, r, e in bad[:5])
            raise RootFinderFailure(f"{len(bad)} roots did not converge: {desc}")
    with mpmath.workdps(dps):
        return [+zi for zi in z]


def vieta_residuals(pade: PadeApproximant, roots):
    """Relative mismatch of the product and the sum of the roots against the coefficients.

    The product is compared against ``(-1)^M / q_M``; the sum against
    ``-q_(M-1) / q_M`` on the scale ``sum |roots|``.
    """
    M = pade.M
    with mpmath.workdps(pade.precision_digits):
        prod = mpmath.fprod(roots)
        want_prod = (-1) ** M * pade.q[0] / pade.q[M]
        total = mpmath.fsum(roots)
        want_sum = -pade.q[M - 1] / pade.q[M]
        rel_prod = abs(prod - want_prod) / abs(want_prod)
        rel_sum = abs(total - want_sum) / mpmath.fsum(abs(r) for r in roots)
        return float(rel_prod), float(rel_sum)


@dataclass(frozen=True)
class SumOfExponentials:
    """Compressed kernel ``nu~_k = sum_m b_m q_m^-k`` with validity diagnostics."""

    b: np.ndarray
    q: np.ndarray
    min_root_modulus: float
    min_root_separation: float
    b_mp: tuple = field(repr=False, default=())
    q_mp: tuple = field(repr=False, default=())
    precision_digits: int = 80

    @property
    def terms(self):
        return list(zip(self.b, self.q))

    def __len__(self):
        return len(self.q)

    def coefficients(self, count) -> np.ndarray:
        """``Re nu~_k`` for ``k < count`` in double precision."""
        k = np.arange(count)
        out = np.zeros(count, dtype=complex)
        for bm, qm in zip(self.b, self.q):
            out += bm * (1.0 / qm) ** k
        return out.real

    def coefficients_mp(self, count):
        """``nu~_k`` at the build precision (mpmath complex)."""
        with mpmath.workdps(self.precision_digits):
            inv = [1 / qm for qm in self.q_mp]
            powers = [mpmath.mpf(1)] * len(inv)
            out = []
            for _ in range(count):
                out.append(mpmath.fsum(bm * pw for bm, pw in zip(self.b_mp, powers)))
                powers = [pw * iv for pw, iv in zip(powers, inv)]
            return out


def to_soe(pade: PadeApproximant, roots, root_modulus_floor=1e-8, separation_floor=1e-8):
    """Weights ``b_m = -P_N(q_m) / (q_m Q_M'(q_m))`` and validity checks.

    Raises ``RootInsideOrOnCircle`` when some ``|q_m| <= 1 + root_modulus_floor``
    and ``NonSimpleRoots`` when ``|q_i - q_j| / max(|q_i|, |q_j|)`` falls below
    ``separation_floor`` (default ``1e-8``) for some pair.
    """
    with mpmath.workdps(pade.precision_digits):
        q_high = list(pade.q)[::-1]
        p_high = list(pade.p)[::-1]
        moduli = [abs(r) for r in roots]
        min_mod = min(moduli)
        max_mod = max(moduli)
        # separation of each pair is measured relative to the larger modulus of
        # the two, so one huge root does not swamp the test for the others
        sep = mpmath.inf
        for i in range(len(roots)):
            for j in range(i + 1, len(roots)):
                gap = abs(roots[i] - roots[j]) / max(moduli[i], moduli[j])
                sep = min(sep, gap)
        if min_mod <= 1 + root_modulus_floor:
            worst = roots[moduli.index(min_mod)]
            raise RootInsideOrOnCircle(
                f"root {complex(worst):.6g} has modulus {float(min_mod):.6g} <= 1 + {root_modulus_floor:g}")
        if sep < separation_floor:
            raise NonSimpleRoots(f"roots separated by only {float(sep):.3g} (floor {separation_floor:.3g})")
        b = []
        for r in roots:
            _, dq = mpmath.polyval(q_high, r, derivative=True)
            b.append(-mpmath.polyval(p_high, r) / (r * dq))
        return SumOfExponentials(
            b=np.array([complex(v) for v in b]),
            q=np.array([complex(v) for v in roots]),
            min_root_modulus=float(min_mod),
            min_root_separation=float(sep),
            b_mp=tuple(b),
            q_mp=tuple(roots),
            precision_digits=pade.precision_digits,
        )


def compress(kernel, N, M, precision_digits=80, root_modulus_floor=1e-8, separation_floor=1e-8):
    """Padé, roots and weights in one call."""
    pade = build_pade(kernel, N, M, precision_digits)
    roots = find_roots(pade)
    return to_soe(pade, roots, root_modulus_floor, separation_floor)


def soe_coefficient(soe: SumOfExponentials, k: int) -> float:
    """``Re sum_m b_m q_m^-k``; the imaginary residue must stay below 1e-10."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    val = np.sum(soe.b * (1.0 / soe.q) ** k)
    if abs(val.imag) >= 1e-10:
        raise ValueError(f"imaginary residue {val.imag:.3g} at k={k}")
    return float(val.real)


def _pair_conjugates(b, q):
    """Keep one member of each conjugate pair with weight 2; real roots keep weight 1."""
    scale = np.maximum(np.abs(q), 1.0)
    real = np.abs(q.imag) <= 1e-12 * scale
    upper = q.imag > 0
    if np.count_nonzero(upper & ~real) != np.count_nonzero(~upper & ~real):
        return b, q, np.ones(len(q))
    keep = real | upper
    weight = np.where(real[keep], 1.0, 2.0)
    qk = q[keep].copy()
    qk[real[keep]] = qk[real[keep]].real
    return b[keep], qk, weight


class ConvolutionChannelBank:
    """Recursive evaluation of ``sum_k v_k nu~_(n-k)`` over a batch of streams.

    Channels are stored divided by their weight, ``D_m = C_m / b_m``, so a feed
    is ``D <- D / q + v`` and the output is ``Re sum_m b_m D_m``. Conjugate
    roots share one channel. ``width`` independent streams (e.g. the points of
    a boundary line) are advanced together.

    ``soe`` may also be a list of compressed kernels fed by the same stream;
    their channels are stacked and ``output`` then returns one row per kernel.
    """

    def __init__(self, soe, width=None):
        stacked = isinstance(soe, (list, tuple))
        parts = [_pair_conjugates(np.asarray(k.b), np.asarray(k.q)) for k in (soe if stacked else [soe])]
        sizes = [len(q) for _, q, _ in parts]
        self.inv_q = 1.0 / np.concatenate([q for _, q, _ in parts])
        weights = np.zeros((len(parts), sum(sizes)), dtype=complex)
        start = 0
        for row, (b, q, w) in enumerate(parts):
            weights[row, start:start + len(q)] = b * w
            start += len(q)
        self.weights = weights if stacked else weights[0]
        self.scalar = width is None
        shape = (len(self.inv_q),) if width is None else (len(self.inv_q), int(width))
        self.channels = np.zeros(shape, dtype=complex)
        self._decay = self.inv_q if self.scalar else self.inv_q[:, None]
        self.count = 0

    def reset(self):
        self.channels[...] = 0
        self.count = 0

    def push(self, v):
        """Advance every channel by one stream value without forming the output."""
        ch = self.channels
        ch *= self._decay
        ch += v
        self.count += 1

    def feed(self, v):
        """Push the next stream value(s) and return the convolution output."""
        self.push(v)
        return self.output()

    def output(self):
        return (self.weights @ self.channels).real


class BlockedChannelBank:
    """Same convolution as ``ConvolutionChannelBank``, advanced in blocks.

    The channels absorb the stream ``block`` values at a time with one matrix
    product. Between two absorptions the output combines the frozen channels,
    weighted by ``b_m q_m^-P`` for ``P`` pending values, with a short direct
    convolution of the pending values against ``nu~_0 .. nu~_(P-1)``. Every
    step then costs two small real matrix products instead of an elementwise
    complex update of all channels. Channels are kept as stacked real and
    imaginary planes so that the output is a single real product.
    """

    def __init__(self, soes, width, block=32):
        soes = list(soes) if isinstance(soes, (list, tuple)) else [soes]
        parts = [_pair_conjugates(np.asarray(k.b), np.asarray(k.q)) for k in soes]
        self.block = int(block)
        self.width = int(width)
        inv_q = np.concatenate([1.0 / q for _, q, _ in parts])
        nk, nc = len(parts), len(inv_q)
        self.nc = nc
        # Re(w D) = Re(w) Re(D) - Im(w) Im(D)
        weights = np.zeros((self.block, nk, 2 * nc))
        start = 0
        for row, (b, q, w) in enumerate(parts):
            sl = slice(start, start + len(q))
            for P in range(self.block):
                wp = b * w * (1.0 / q) ** P
                weights[P, row, sl] = wp.real
                weights[P, row, nc + start:nc + start + len(q)] = -wp.imag
            start += len(q)
        self.weights = weights
        self.nu_reversed = np.array([k.coefficients(self.block) for k in soes])[:, ::-1].copy()
        self.decay = (inv_q ** self.block)[:, None]
        # absorb[m, r] = q_m^-(block-1-r)
        absorb = inv_q[:, None] ** (self.block - 1 - np.arange(self.block))[None, :]
        self.absorb = np.vstack([absorb.real, absorb.imag])
        self.planes = np.zeros((2 * nc, self.width))
        self.pending = np.zeros((self.block, self.width))
        self.count = 0
        self.npending = 0

    def push(self, v):
        self.pending[self.npending] = v
        self.npending += 1
        self.count += 1
        if self.npending == self.block:
            nc = self.nc
            ch = (self.planes[:nc] + 1j * self.planes[nc:]) * self.decay
            self.planes[:nc] = ch.real
            self.planes[nc:] = ch.imag
            self.planes += self.absorb @ self.pending
            self.npending = 0

    def output(self):
        """One row per kernel: the convolution up to the newest pushed value."""
        P = self.npending
        out = self.weights[P] @ self.planes
        if P:
            out += self.nu_reversed[:, self.block - P:] @ self.pending[:P]
        return out


def channel_feed(bank: ConvolutionChannelBank, v_n):
    return bank.feed(v_n)
