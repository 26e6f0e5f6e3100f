"""Numerical probes of regularity phenomena: weak-Harnack ratios over paired
space-time boxes, critical-exponent scans and discrete Hoelder seminorms.

Everything here measures; thresholds for the experiments live in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Chebyshev

from .fdsolver import Trajectory
from .fullspace import invert_Y
from .mlf import relaxation_values

__all__ = [
    "BoxPair",
    "HarnackRatioRecord",
    "HarnackScan",
    "SourceFamily",
    "SpectralFamily",
    "critical_exponent",
    "weak_harnack_ratio",
    "harnack_scan",
    "holder_seminorm",
]


def critical_exponent(alpha: float, d: int) -> float:
    """``(2 + d alpha) / (2 + d alpha - 2 alpha)``; tends to ``1 + 2/d`` as ``alpha -> 1``."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if int(d) != d or d < 1:
        raise ValueError("dimension must be a positive integer")
    return (2 + d * alpha) / (2 + d * alpha - 2 * alpha)


@dataclass(frozen=True)
class BoxPair:
    """``Q- = (t0, t0 + delta tau R) x B(x0, delta r)`` and
    ``Q+ = (t0 + (2 - delta) tau R, t0 + 2 tau R) x B(x0, delta r)``, ``R = r^{2/alpha}``."""

    alpha: float
    t0: float
    x0: float
    r: float
    delta: float = 0.5
    tau: float = 1.0

    def __post_init__(self):
        if not (self.t0 >= 0 and self.r > 0 and 0 < self.delta < 1 and self.tau > 0):
            raise ValueError("need t0 >= 0, r > 0, 0 < delta < 1, tau > 0")

    @property
    def R(self) -> float:
        return self.r ** (2 / self.alpha)

    @property
    def minus_t(self) -> tuple[float, float]:
        return self.t0, self.t0 + self.delta * self.tau * self.R

    @property
    def plus_t(self) -> tuple[float, float]:
        return (self.t0 + (2 - self.delta) * self.tau * self.R, self.t0 + 2 * self.tau * self.R)

    @property
    def ball(self) -> tuple[float, float]:
        return self.x0 - self.delta * self.r, self.x0 + self.delta * self.r

    @property
    def gap(self) -> float:
        return self.plus_t[0] - self.minus_t[1]

    def inside(self, T: float, a: float, b: float) -> bool:
        lo, hi = self.ball
        return self.plus_t[1] <= T * (1 + 1e-12) and lo >= a and hi <= b


@dataclass(frozen=True)
class HarnackRatioRecord:
    p: float
    r: float
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


# ---------------------------------------------------------------------------
# solution families
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _profile_interpolant(alpha, zmax, nodes):
    # Phi is entire in z, so Chebyshev interpolation converges spectrally
    return Chebyshev.interpolate(lambda z: invert_Y(alpha, 1, 1.0, z, estimate=False).Z, nodes - 1, domain=[0.0, zmax])


class SourceFamily:
    """``u(t, x) = Y(t, x - x0)`` in ``d = 1``: the response to a unit point
    source at ``(0, x0)``, a nonnegative solution away from the source.

    The profile ``Phi = Y(1, .)`` is interpolated once; self-similarity
    ``Y(t, x) = t^{alpha/2 - 1} Phi(|x| t^{-alpha/2})`` reduces box integrals of
    ``u^p`` to one-dimensional quadratures.
    """

    d = 1

    def __init__(self, alpha: float, x0: float = 0.0, zmax: float = 30.0, nodes: int = 121):
        self.alpha = float(alpha)
        self.x0 = float(x0)
        self._phi = _profile_interpolant(self.alpha, float(zmax), int(nodes))
        self.zmax = zmax
        self._cum = {}

    @property
    def exponent(self) -> float:
        return self.alpha / 2 - 1

    def profile(self, z):
        z = np.abs(np.asarray(z, dtype=float))
        return np.where(z < self.zmax, np.clip(self._phi(np.minimum(z, self.zmax)), 0.0, None), 0.0)

    def __call__(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        ts = np.where(t > 0, t, 1.0)
        val = ts**self.exponent * self.profile((x - self.x0) * ts ** (-self.alpha / 2))
        return np.where(t > 0, val, 0.0)

    def _cumulative(self, p):
        """Antiderivative of ``Phi^p`` on ``[0, zmax]``."""
        if p not in self._cum:
            cheb = Chebyshev.interpolate(lambda z: self.profile(z) ** p, 200, domain=[0.0, self.zmax])
            self._cum[p] = cheb.integ(lbnd=0.0)
        return self._cum[p]

    def harnack_sides(self, box: BoxPair, p: float) -> tuple[float, float]:
        if box.x0 != self.x0:
            raise ValueError("boxes must be centred on the source")
        a = self.alpha
        t1, t2 = box.minus_t
        if t1 <= 0:
            raise ValueError("Q- must start after the source time")
        F = self._cumulative(p)
        # int_B u^p dx = 2 t^{p e + a/2} int_0^{delta r t^{-a/2}} Phi^p
        edges = np.exp(np.linspace(math.log(t1), math.log(t2), 8 * int(math.ceil(math.log(t2 / t1) + 1)) + 1))
        xg, wg = np.polynomial.legendre.leggauss(16)
        lo, hi = edges[:-1, None], edges[1:, None]
        tq = (0.5 * (lo + hi) + 0.5 * (hi - lo) * xg).ravel()
        wq = (0.5 * (hi - lo) * wg).ravel()
        zc = np.minimum(box.delta * box.r * tq ** (-a / 2), self.zmax)
        inner = 2 * tq ** (p * self.exponent + a / 2) * F(zc)
        vol = (t2 - t1) * 2 * box.delta * box.r
        lhs = (np.sum(wq * inner) / vol) ** (1 / p)
        s1, s2 = box.plus_t
        bl, bh = box.ball
        T, X = np.meshgrid(np.linspace(s1, s2, 33), np.linspace(bl, bh, 33), indexing="ij")
        rhs = float(np.min(self(T, X)))
        return float(lhs), rhs

    def boxes(self, r_list, eps: float, delta: float = 0.5, tau: float = 1.0) -> list[BoxPair]:
        """Boxes starting a time ``eps`` after the source."""
        return [BoxPair(self.alpha, eps, self.x0, float(r), delta, tau) for r in r_list]


class SpectralFamily:
    """``u = s_{lambda_1}(t) phi_1(x)`` on ``(0, L)``, ``lambda_1 = (pi/L)^2``."""

    d = 1

    def __init__(self, alpha: float, L: float = math.pi):
        self.alpha = float(alpha)
        self.L = float(L)

    def __call__(self, t, x):
        lam = (math.pi / self.L) ** 2
        return relaxation_values(self.alpha, lam, np.asarray(t, dtype=float)) * \
            math.sqrt(2 / self.L) * np.sin(math.pi * np.asarray(x, dtype=float) / self.L)

    def boxes(self, r_list, t0: float = 0.0, delta: float = 0.5, tau: float = 1.0) -> list[BoxPair]:
        return [BoxPair(self.alpha, t0, self.L / 2, float(r), delta, tau) for r in r_list]


# ---------------------------------------------------------------------------
# ratios
# ---------------------------------------------------------------------------

def _dual_weights(nodes, a, b):
    """Lengths of the dual cells of ``nodes`` intersected with ``[a, b]``."""
    mid = 0.5 * (nodes[1:] + nodes[:-1])
    left = np.concatenate([[nodes[0]], mid])
    right = np.concatenate([mid, [nodes[-1]]])
    return np.clip(np.minimum(right, b) - np.maximum(left, a), 0.0, None)


def _trajectory_sides(traj: Trajectory, box: BoxPair, p: float):
    t, x, u = traj.t, traj.x, traj.u
    if not box.inside(t[-1], x[0], x[-1]):
        raise ValueError("boxes must lie inside the computational domain")
    upto = t <= box.plus_t[1] * (1 + 1e-12)
    scale = max(float(np.max(np.abs(u[upto]))), 1e-300)
    if np.min(u[upto]) < -1e-12 * scale:
        raise ValueError("weak Harnack ratio needs u >= 0 on the whole slab up to the box end")
    wt = _dual_weights(t, *box.minus_t)
    wx = _dual_weights(x, *box.ball)
    if wt.sum() == 0 or wx.sum() == 0:
        raise ValueError("box Q- contains no grid cell")
    up = np.clip(u, 0.0, None) ** p
    lhs = (wt @ up @ wx / (wt.sum() * wx.sum())) ** (1 / p)
    s1, s2 = box.plus_t
    lo, hi = box.ball
    it = (t >= s1 * (1 - 1e-12)) & (t <= s2 * (1 + 1e-12))
    ix = (x >= lo) & (x <= hi)
    if not it.any() or not ix.any():
        raise ValueError("box Q+ contains no grid node")
    return float(lhs), float(np.min(u[np.ix_(it, ix)]))


def _callable_sides(u: Callable, box: BoxPair, p: float):
    xg, wg = np.polynomial.legendre.leggauss(32)
    t1, t2 = box.minus_t
    lo, hi = box.ball
    tq = 0.5 * (t1 + t2) + 0.5 * (t2 - t1) * xg
    xq = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xg
    vals = np.asarray(u(tq[:, None], xq[None, :]), dtype=float)
    s1, s2 = box.plus_t
    T, X = np.meshgrid(np.linspace(s1, s2, 33), np.linspace(lo, hi, 33), indexing="ij")
    plus = np.asarray(u(T, X), dtype=float)
    if vals.min() < 0 or plus.min() < 0:
        raise ValueError("weak Harnack ratio needs a nonnegative function")
    lhs = (0.25 * wg @ vals**p @ wg) ** (1 / p)
    return float(lhs), float(plus.min())


def weak_harnack_ratio(u, box: BoxPair, p: float) -> HarnackRatioRecord:
    """``(mean_{Q-} u^p)^{1/p}`` against ``min_{Q+} u``.

    ``u`` is a :class:`Trajectory` (dual-cell mean over ``Q-``, node minimum
    over ``Q+``; the node minimum overestimates the essential infimum of a
    rough field), a family with ``harnack_sides`` or a vectorised callable
    ``u(t, x)`` (Gauss quadrature on ``Q-``, ``33 x 33`` node minimum on ``Q+``).
    """
    if not p > 0:
        raise ValueError("p must be positive")
    if isinstance(u, Trajectory):
        lhs, rhs = _trajectory_sides(u, box, p)
    elif hasattr(u, "harnack_sides"):
        lhs, rhs = u.harnack_sides(box, p)
    else:
        lhs, rhs = _callable_sides(u, box, p)
    return HarnackRatioRecord(float(p), box.r, lhs, rhs)


@dataclass(frozen=True)
class HarnackScan:
    records: tuple

    def ratios(self, p: float) -> np.ndarray:
        return np.array([q.ratio for q in self.records if q.p == p])

    def radii(self, p: float) -> np.ndarray:
        return np.array([q.r for q in self.records if q.p == p])

    def spread(self, p: float) -> float:
        """``max / min`` of the ratio across radii."""
        v = self.ratios(p)
        return float(v.max() / v.min())

    @property
    def p_values(self) -> list:
        return sorted({q.p for q in self.records})


def harnack_scan(family, p_list: Sequence[float], boxes: Sequence[BoxPair]) -> HarnackScan:
    """Records for every ``(p, box)`` pair, ordered by ``p`` then box."""
    recs = [weak_harnack_ratio(family, b, p) for p in p_list for b in boxes]
    return HarnackScan(tuple(recs))


# ---------------------------------------------------------------------------
# Hoelder seminorm
# ---------------------------------------------------------------------------

def holder_seminorm(u, t, x, q: tuple[float, float, float, float],
                    beta1: float, beta2: float, chunk: int = 512) -> float:
    """Exact discrete ``sup |u(t,x) - u(s,y)| / (|t - s|^beta1 + |x - y|^beta2)``
    over all distinct node pairs in ``Q = [t0, t1] x [x0, x1]``.

    ``u`` is a :class:`Trajectory` (``t``, ``x`` then ignored) or an
    array ``u[n, i]`` on nodes ``t``, ``x``.  A single-node ``Q`` gives 0.
    """
    if not (0 < beta1 < 1 and 0 < beta2 < 1):
        raise ValueError("exponents must lie in (0, 1)")
    if isinstance(u, Trajectory):
        t, x, u = u.t, u.x, u.u
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    t0, t1, x0, x1 = q
    if t0 < t[0] or t1 > t[-1] * (1 + 1e-12) or x0 < x[0] or x1 > x[-1] * (1 + 1e-12):
        raise ValueError("Q must lie inside the grid")
    it = np.flatnonzero((t >= t0) & (t <= t1))
    ix = np.flatnonzero((x >= x0) & (x <= x1))
    T, X = np.meshgrid(t[it], x[ix], indexing="ij")
    pts_t, pts_x = T.ravel(), X.ravel()
    vals = u[np.ix_(it, ix)].ravel()
    n = vals.size
    if n < 2:
        return 0.0
    best = 0.0
    for a in range(0, n, chunk):
        dt = np.abs(pts_t[a:a + chunk, None] - pts_t[None, :])
        dx = np.abs(pts_x[a:a + chunk, None] - pts_x[None, :])
        den = dt**beta1 + dx**beta2
        num = np.abs(vals[a:a + chunk, None] - vals[None, :])
        ratio = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        best = max(best, float(ratio.max()))
    return best
