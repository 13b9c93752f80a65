"""Weighted integrals of step-function residuals, one sorted sample at a time.

Every quantity the marginal kernels need is an integral over ``(0, 1)`` of a
polynomial in ``u`` (degree <= 2) against ``W(u)``, with coefficients that are
constant between consecutive order statistics.  On a piece ``[a, b]`` all of
them are combinations of three basis integrals

    I0 = int u^2 W,   I1 = int u (1 - u) W,   I2 = int (1 - u)^2 W,

which stay finite for weights singular at the endpoints (Anderson-Darling,
optimal normal) wherever the combination is actually used.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


class UniformBasis:
    """Exact piece integrals for ``W = 1``."""

    def __init__(self, scale: float = 1.0):
        self.scale = float(scale)

    def __call__(self, a, b):
        i0 = (b**3 - a**3) / 3.0
        i1 = (b**2 - a**2) / 2.0 - i0
        i2 = ((1.0 - a) ** 3 - (1.0 - b) ** 3) / 3.0
        return self.scale * i0, self.scale * i1, self.scale * i2


class AndersonDarlingBasis:
    """Exact piece integrals for ``W = 1 / (u (1 - u))``."""

    def __call__(self, a, b):
        with np.errstate(divide="ignore", invalid="ignore"):
            i0 = (a - b) + np.log1p(-a) - np.log1p(-b)
            i1 = b - a
            i2 = np.log(b) - np.log(a) - (b - a)
        return i0, i1, i2


@dataclass(frozen=True)
class VariableMap:
    """Integration variable ``x`` with ``u = u(x)``.

    ``log_parts(x)`` returns ``(log u, log(1 - u), log(W(u) du/dx))`` so that
    integrands are formed in log space.
    """

    name: str
    lo: float
    hi: float
    to_x: object
    log_parts: object


def u_space(weight_fn) -> VariableMap:
    def log_parts(x):
        with np.errstate(divide="ignore"):
            return np.log(x), np.log1p(-x), np.log(weight_fn(x))

    return VariableMap("u", 0.0, 1.0, lambda u: np.asarray(u, dtype=float), log_parts)


def _theta_parts(x):
    ls, lc = np.log(np.sin(x)), np.log(np.cos(x))
    return 2.0 * ls, 2.0 * lc, np.log(2.0) - ls - lc


THETA_SPACE = VariableMap(
    "theta", 0.0, np.pi / 2.0, lambda u: np.arcsin(np.sqrt(u)), _theta_parts
)


def _z_parts(x):
    return special.log_ndtr(x), special.log_ndtr(-x), 0.5 * x * x + _LOG_SQRT_2PI


Z_SPACE = VariableMap("z", -np.inf, np.inf, special.ndtri, _z_parts)


class QuadratureBasis:
    """Piece integrals by Gauss-Legendre in a mapped variable.

    ``order`` nodes per piece; unbounded end pieces are truncated at
    ``tail_width`` and split into ``tail_panels`` panels.
    """

    def __init__(self, vmap: VariableMap, order: int = 16,
                 tail_width: float = 16.0, tail_panels: int = 8):
        self.vmap = vmap
        self.order = int(order)
        self.tail_width = float(tail_width)
        self.tail_panels = int(tail_panels)
        self._nodes, self._weights = np.polynomial.legendre.leggauss(self.order)

    def _integrate(self, xa, xb):
        half = 0.5 * (xb - xa)
        mid = 0.5 * (xb + xa)
        x = mid[:, None] + half[:, None] * self._nodes[None, :]
        lu, l1mu, ljw = self.vmap.log_parts(x)
        w = half[:, None] * self._weights[None, :]
        with np.errstate(over="ignore", invalid="ignore"):
            i0 = np.sum(w * np.exp(2.0 * lu + ljw), axis=1)
            i1 = np.sum(w * np.exp(lu + l1mu + ljw), axis=1)
            i2 = np.sum(w * np.exp(2.0 * l1mu + ljw), axis=1)
        return i0, i1, i2

    def _tail(self, x_inner, direction):
        edges = x_inner + direction * np.linspace(0.0, self.tail_width, self.tail_panels + 1)
        lo, hi = np.minimum(edges[:-1], edges[1:]), np.maximum(edges[:-1], edges[1:])
        return tuple(float(v.sum()) for v in self._integrate(lo, hi))

    def pieces_x(self, xa, xb):
        xa, xb = np.array(xa, dtype=float), np.array(xb, dtype=float)
        finite = np.isfinite(xa) & np.isfinite(xb)
        out = [np.zeros(xa.shape) for _ in range(3)]
        if np.any(finite):
            vals = self._integrate(xa[finite], xb[finite])
            for o, v in zip(out, vals):
                o[finite] = v
        for k in np.flatnonzero(~finite):
            if np.isinf(xa[k]) and np.isfinite(xb[k]):
                vals = self._tail(xb[k], -1.0)
            elif np.isfinite(xa[k]) and np.isinf(xb[k]):
                vals = self._tail(xa[k], 1.0)
            else:
                raise ValueError("a piece may have at most one unbounded end")
            for o, v in zip(out, vals):
                o[k] = v
        return tuple(out)

    def __call__(self, a, b):
        vm = self.vmap
        xa = np.where(a <= 0.0, vm.lo, vm.to_x(np.clip(a, 0.0, 1.0)))
        xb = np.where(b >= 1.0, vm.hi, vm.to_x(np.clip(b, 0.0, 1.0)))
        return self.pieces_x(xa, xb)


@dataclass
class PieceSums:
    """Cumulative integrals at each data point (original order) plus ``B``."""

    head: np.ndarray   # P(s) + M(s)
    tail: np.ndarray   # R(s) - M(s)
    a_corr: np.ndarray
    b_corr: float


def piece_sums(data: np.ndarray, basis) -> PieceSums:
    x = np.asarray(data, dtype=float)
    n = x.size
    order = np.argsort(x, kind="stable")
    y = x[order]
    a = np.concatenate(([0.0], y))
    b = np.concatenate((y, [1.0]))
    i0, i1, i2 = (np.asarray(v, dtype=float).copy() for v in basis(a, b))
    # these basis pieces only ever enter with a zero coefficient, and may diverge
    i0[n] = 0.0
    i2[0] = 0.0
    i1[0] = i1[n] = 0.0

    c = np.arange(n + 1) / n
    p_at = np.cumsum(i0)[:-1]                 # pieces 0..i-1
    m_at = np.cumsum(i1)[:-1]                 # piece 0 is zeroed, so anchored at y_(1)
    r_at = np.cumsum(i2[::-1])[::-1][1:]      # pieces i..n
    left = np.cumsum((1.0 - c) * i0 - c * i1)[:-1]
    right = np.cumsum(((1.0 - c) * i1 - c * i2)[::-1])[::-1][1:]
    b_corr = float(np.sum((1.0 - c) ** 2 * i0 - 2.0 * c * (1.0 - c) * i1 + c**2 * i2))

    head = np.empty(n)
    tail = np.empty(n)
    a_corr = np.empty(n)
    head[order] = p_at + m_at
    tail[order] = r_at - m_at
    a_corr[order] = right - left
    return PieceSums(head=head, tail=tail, a_corr=a_corr, b_corr=b_corr)


def kernel_from_sums(data: np.ndarray, sums: PieceSums) -> np.ndarray:
    """``G[i, j] = head[min] + tail[max]`` with min/max by data value."""
    x = np.asarray(data, dtype=float)
    le = x[:, None] <= x[None, :]
    h, t = sums.head, sums.tail
    return np.where(le, h[:, None] + t[None, :], h[None, :] + t[:, None])
