"""Time convolutions over parity-split boundary traces.

Every transparent closure reads sums of the form

    sum_{m >= 0} nu_m line^(t - 2m)

over the line of values next to a boundary: only time levels of the parity of
``t`` contribute. A trace is therefore stored (or fed) per parity, and a
convolution at ``t`` reads the stream of parity ``t % 2`` up to its newest
entry ``t``. Levels before 0 count as zero.

Two interchangeable engines are provided: ``ExactHistory`` keeps the whole
parity history and evaluates the sums directly, ``SoeStream`` keeps one
channel bank per parity for a compressed kernel.
"""

from __future__ import annotations

import numpy as np

from .soe import BlockedChannelBank


class ExactHistory:
    """Parity-split history of a traced line, convolved with stacked kernels."""

    def __init__(self, width, steps):
        self.width = int(width)
        self.capacity = steps // 2 + 2
        self.rows = [np.zeros((self.capacity, self.width)), np.zeros((self.capacity, self.width))]
        self.last = [-1, -1]

    def record(self, t, line):
        p = t % 2
        i = t // 2
        if i != self.last[p] + 1:
            raise RuntimeError(f"trace of level {t} recorded out of order")
        self.rows[p][i] = line
        self.last[p] = i

    def convolve(self, reversed_kernels, t):
        """``sum_m nu_m line^(t-2m)`` for each row of ``reversed_kernels``.

        ``reversed_kernels`` has shape ``(nk, capacity)`` and holds each kernel
        reversed, so that the newest trace meets ``nu_0`` in the last column.
        """
        if t < 0:
            return np.zeros((reversed_kernels.shape[0], self.width))
        p = t % 2
        i = t // 2
        if i != self.last[p]:
            raise RuntimeError(f"history of parity {p} ends at {2 * self.last[p] + p}, not {t}")
        return reversed_kernels[:, self.capacity - 1 - i:] @ self.rows[p][: i + 1]

    def reverse(self, kernels):
        """Cut each kernel to the history capacity and reverse it."""
        kernels = np.atleast_2d(np.asarray(kernels, dtype=float))
        if kernels.shape[1] < self.capacity:
            raise ValueError(f"kernel prefix of {kernels.shape[1]} terms, need {self.capacity}")
        out = kernels[:, : self.capacity]
        return np.ascontiguousarray(out[:, ::-1])


class SoeStream:
    """Channel banks for the even and odd levels of one traced line.

    Several compressed kernels can share the stream; the outputs of a bank are
    formed once, when it is fed, and kept until its next feed.
    """

    def __init__(self, soes, width):
        self.soes = list(soes)
        self.banks = [BlockedChannelBank(self.soes, width), BlockedChannelBank(self.soes, width)]
        self.outputs = [np.zeros((len(self.soes), int(width))), np.zeros((len(self.soes), int(width)))]
        self.last = [-1, -1]
        self.width = int(width)

    def record(self, t, line):
        p = t % 2
        if t // 2 != self.last[p] + 1:
            raise RuntimeError(f"trace of level {t} fed out of order")
        self.banks[p].push(line)
        self.outputs[p] = self.banks[p].output()
        self.last[p] = t // 2

    def convolve(self, t, which=0):
        if t < 0:
            return np.zeros(self.width)
        p = t % 2
        if t // 2 != self.last[p]:
            raise RuntimeError(f"bank of parity {p} is not at level {t}")
        return self.outputs[p][which]


class SideClosure:
    """Transparent closure of one side, of tangential order 0, 1 or 2.

    The traced line has ``width`` points: the values next to the boundary plus
    the two end values, which belong to the neighbouring sides' boundary lines
    in 2D. The closure returns the new boundary values at the ``width - 2``
    inner points (all ``width`` points when ``tangential`` is False, as in 1D).

    With kernels ``s0, s1, s2`` and trace ``w`` the new value at level ``n+2`` is

        sign * ( sum_m s0_m w^(n+1-2m)
               + sum_m s1_(m+1) (w_(k+1) - w_(k-1))^(n-2m)
               + sum_m s2_m (w_(k+1) - 2 w_k + w_(k-1))^(n+1-2m) ).

    ``soe0`` / ``soe1`` replace the ``s0`` and shifted ``s1`` kernels by channel
    banks; ``s2`` is always convolved exactly.
    """

    def __init__(self, order, sign, width, steps, s0, s1=None, s2=None,
                 soe0=None, soe1=None, tangential=True):
        if order not in (0, 1, 2):
            raise ValueError(f"order must be 0, 1 or 2, got {order}")
        if order >= 1 and s1 is None and soe1 is None:
            raise ValueError("order-1 closure needs the s1 kernel")
        if order == 2 and s2 is None:
            raise ValueError("order-2 closure needs the s2 kernel")
        self.order = order
        self.sign = float(sign)
        self.tangential = tangential
        self.width = int(width)
        self.history = None
        compressed = [k for k in (soe0, soe1 if order >= 1 else None) if k is not None]
        self.stream = SoeStream(compressed, width) if compressed else None
        self.soe0 = soe0
        self.soe1 = soe1 if order >= 1 else None
        exact_a = []
        if self.soe0 is None:
            exact_a.append(np.asarray(s0))
        if order == 2:
            exact_a.append(np.asarray(s2))
        need_b = order >= 1 and self.soe1 is None
        if exact_a or need_b:
            self.history = ExactHistory(width, steps)
            self.kernels_a = self.history.reverse(exact_a) if exact_a else None
            self.kernels_b = self.history.reverse([np.asarray(s1)[1:]]) if need_b else None

    def record(self, t, line):
        if self.history is not None:
            self.history.record(t, line)
        if self.stream is not None:
            self.stream.record(t, line)

    def compute(self, n):
        """Boundary values at level ``n + 2`` from traces of levels ``<= n + 1``."""
        if self.history is not None and self.kernels_a is not None:
            conv_a = self.history.convolve(self.kernels_a, n + 1)
        else:
            conv_a = np.zeros((0, self.width))
        if self.soe0 is not None:
            normal = self.stream.convolve(n + 1, 0)
            second = conv_a[0] if self.order == 2 else None
        else:
            normal = conv_a[0]
            second = conv_a[1] if self.order == 2 else None
        if not self.tangential:
            return self.sign * normal
        out = normal[1:-1].copy()
        if self.order >= 1:
            if self.soe1 is not None:
                tang = self.stream.convolve(n, 1 if self.soe0 is not None else 0)
            else:
                tang = self.history.convolve(self.kernels_b, n)[0]
            out += tang[2:] - tang[:-2]
        if self.order == 2:
            out += second[2:] - 2 * second[1:-1] + second[:-2]
        out *= self.sign
        return out
