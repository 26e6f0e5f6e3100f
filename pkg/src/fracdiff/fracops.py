"""Half-line convolutions, Caputo L1 weights and discrete chain-rule identities.

Convolutions ``(k * v)(t) = int_0^t k(t - s) v(s) ds`` are evaluated for
piecewise-linear ``v`` in two ways:

* against the standard kernel ``g_beta`` by product integration, where the
  kernel is integrated exactly near the singularity and by Gauss-Legendre
  on subintervals well separated from it;
* against a sampled kernel ``k`` on a uniform grid, as the exact integral of
  the product of the two piecewise-linear interpolants.

The second form is what the identity checkers use: ``d/dt (k * w)`` is
written as ``k(0) w(t) + (kdot * w)(t)`` with user-supplied ``kdot``, so no
differentiation of ``k`` ever happens numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

__all__ = [
    "TimeGrid",
    "GKernel",
    "SampledPath",
    "KernelWeights",
    "IdentityRecord",
    "default_grading",
    "gkernel_weights",
    "conv_halfline",
    "caputo_weights",
    "caputo_apply",
    "fundamental_identity_residual",
    "ident1_residual",
    "convexity_gap",
    "l2norm_gap",
]


def default_grading(alpha: float) -> float:
    """Mesh grading ``min((2 - alpha)/alpha, 4)`` for solutions with a ``t^alpha`` start."""
    return min((2.0 - alpha) / alpha, 4.0)


@dataclass(frozen=True)
class TimeGrid:
    """Nodes ``t_j = T (j/N)**gamma``, ``j = 0..N``."""

    T: float
    N: int
    gamma: float = 1.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if not self.gamma >= 1:
            raise ValueError("gamma must be >= 1")

    @property
    def nodes(self) -> np.ndarray:
        t = self.T * (np.arange(self.N + 1) / self.N) ** self.gamma
        t[-1] = self.T
        return t

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def uniform(self) -> bool:
        return self.gamma == 1.0


@dataclass(frozen=True)
class GKernel:
    """Descriptor for the standard kernel ``g_beta``."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"kernel order beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class SampledPath:
    """Values ``u_j`` at the nodes of ``grid``; trailing axes are spatial."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape[0] != self.grid.N + 1:
            raise ValueError(
                f"path has {vals.shape[0]} samples, grid has {self.grid.N + 1} nodes")
        object.__setattr__(self, "values", vals)


# ---------------------------------------------------------------------------
# product integration against g_beta
# ---------------------------------------------------------------------------

_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


def _g(beta, s):
    return np.power(s, beta - 1.0) * special.rgamma(beta)


def _gdiff(beta, a, b):
    """``g_beta(b) - g_beta(a)`` for ``0 <= a < b`` without cancellation."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = np.log1p((b - a) / a)
        far = np.power(a, beta - 1.0) * np.expm1((beta - 1.0) * ratio)
    out = np.where(a > 0, far, np.power(b, beta - 1.0))
    return out * special.rgamma(beta)


def _interval_weights(beta, target, left, right, h):
    """Contributions to the nodes ``left`` / ``right`` of the lag integral.

    For one target time and the grid intervals ``[t_j, t_j + h]`` (clipped to
    ``[t_j, right]``) returns the weights multiplying ``v_j`` and
    ``v_{j+1}`` of the linear interpolant.
    """
    a = target - right          # lag at the clipped right end
    b = target - left           # lag at the left end
    near = a < 4.0 * h
    w_left = np.empty_like(a)
    w_right = np.empty_like(a)
    if near.any():
        an, bn, hn = a[near], b[near], h[near]
        g1 = _gdiff(beta + 1.0, an, bn)
        m1 = beta * _gdiff(beta + 2.0, an, bn)
        # int (b - s) g_beta(s) ds over [a, b]: tau - t_j = b - s
        lin = (bn * g1 - m1) / hn
        w_left[near] = g1 - lin
        w_right[near] = lin
    far = ~near
    if far.any():
        af, bf, hf = a[far, None], b[far, None], h[far, None]
        s = 0.5 * (af + bf) + 0.5 * (bf - af) * _GL8_X
        ws = 0.5 * (bf - af) * _GL8_W * _g(beta, s)
        frac = (bf - s) / hf
        w_left[far] = np.sum(ws * (1.0 - frac), axis=1)
        w_right[far] = np.sum(ws * frac, axis=1)
    return w_left, w_right


def gkernel_weights(beta: float, nodes, targets=None, chunk: int = 256) -> np.ndarray:
    """Matrix ``W`` with ``(g_beta * v)(targets) ~= W @ v(nodes)``.

    ``v`` is the piecewise-linear interpolant of its node values; targets may
    be arbitrary times in ``[0, nodes[-1]]``.  Intervals within four of their
    own lengths of the singularity are integrated in closed form, the rest by
    8-point Gauss-Legendre, which is accurate to rounding at that separation.
    """
    GKernel(beta)
    nodes = np.asarray(nodes, dtype=float)
    targets = nodes if targets is None else np.atleast_1d(np.asarray(targets, dtype=float))
    if np.any(targets < nodes[0]) or np.any(targets > nodes[-1] * (1 + 1e-14)):
        raise ValueError("targets must lie inside the grid")
    n_iv = nodes.size - 1
    W = np.zeros((targets.size, nodes.size))
    h_all = np.diff(nodes)
    for start in range(0, targets.size, chunk):
        tg = targets[start:start + chunk]
        rows, cols = np.nonzero(nodes[None, :-1] < tg[:, None])
        if rows.size == 0:
            continue
        left = nodes[cols]
        right = np.minimum(nodes[cols + 1], tg[rows])
        wl, wr = _interval_weights(beta, tg[rows], left, right, h_all[cols])
        block = np.zeros((tg.size, n_iv + 1))
        np.add.at(block, (rows, cols), wl)
        np.add.at(block, (rows, cols + 1), wr)
        W[start:start + chunk] = block
    return W


def _sampled_conv(k, v, h):
    """Exact integral of the product of linear interpolants, uniform spacing ``h``.

    Returns ``c_n = int_0^{t_n} k(t_n - s) v(s) ds`` for every node; ``v`` may
    carry trailing spatial axes.
    """
    k = np.asarray(k, dtype=float)
    v = np.asarray(v, dtype=float)
    n = k.shape[0]
    flat = v.reshape(n, -1)
    out = np.zeros_like(flat)
    for col in range(flat.shape[1]):
        vc = flat[:, col]
        c1 = np.convolve(k, vc)[:n]
        e = np.convolve(k[1:], vc[1:])[: n - 1]
        a_ = c1 - k[0] * vc                     # sum_{j<n} k_{n-j} v_j
        d_ = c1 - k * vc[0]                     # sum_{j<n} k_{n-j-1} v_{j+1}
        b_ = np.concatenate([[0.0], e])         # sum_{j<n} k_{n-j} v_{j+1}
        c_ = np.concatenate([[0.0], c1[:-1]])   # sum_{j<n} k_{n-j-1} v_j
        out[:, col] = h / 6.0 * (2 * a_ + b_ + c_ + 2 * d_)
    return out.reshape(v.shape)


def conv_halfline(kernel, v: SampledPath, targets=None):
    """``(k * v)`` at the grid nodes (or at ``targets``).

    ``kernel`` is a :class:`GKernel`, a positive float (read as ``g_beta``),
    or a :class:`SampledPath` of kernel values on the same uniform grid.
    Sampled kernels only support node targets.
    """
    if isinstance(kernel, SampledPath):
        if targets is not None:
            raise ValueError("sampled kernels are convolved at grid nodes only")
        if kernel.grid != v.grid:
            raise ValueError("kernel and path must share a grid")
        if not v.grid.uniform:
            raise ValueError("sampled-kernel convolution needs a uniform grid")
        return SampledPath(v.grid, _sampled_conv(kernel.values, v.values, v.grid.T / v.grid.N))
    beta = kernel.beta if isinstance(kernel, GKernel) else float(kernel)
    W = gkernel_weights(beta, v.grid.nodes, targets)
    out = np.tensordot(W, v.values, axes=(1, 0))
    return SampledPath(v.grid, out) if targets is None else out


# ---------------------------------------------------------------------------
# Caputo L1 scheme
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelWeights:
    """L1 coefficients for ``(g_{1-alpha} * d/dt v)(t_n)``.

    ``incr[n, j]`` (``1 <= j <= n``) multiplies the increment ``v_j - v_{j-1}``;
    working with increments makes constants vanish exactly.  ``w`` gives the
    equivalent node weights ``sum_j w[n, j] v_j``.
    """

    alpha: float
    grid: TimeGrid
    incr: np.ndarray

    @property
    def w(self) -> np.ndarray:
        a = self.incr
        w = np.zeros_like(a)
        w[:, 1:] += a[:, 1:]
        w[:, :-1] -= a[:, 1:]
        return w

    @property
    def leading(self) -> np.ndarray:
        """Diagonal coefficients ``incr[n, n]`` multiplying the new value."""
        return np.diag(self.incr).copy()


def caputo_weights(alpha: float, grid: TimeGrid) -> KernelWeights:
    """L1 weights: ``g_{1-alpha}`` integrated exactly against the slope of the
    piecewise-linear interpolant on each interval."""
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    t = grid.nodes
    h = np.diff(t)
    N = grid.N
    incr = np.zeros((N + 1, N + 1))
    if alpha == 1.0:
        incr[np.arange(1, N + 1), np.arange(1, N + 1)] = 1.0 / h
        return KernelWeights(alpha, grid, incr)
    beta = 2.0 - alpha
    for n in range(1, N + 1):
        j = np.arange(1, n + 1)
        near = t[n] - t[j]
        farl = t[n] - t[j - 1]
        incr[n, 1:n + 1] = _gdiff(beta, near, farl) / h[j - 1]
    return KernelWeights(alpha, grid, incr)


def caputo_apply(weights: KernelWeights, u: SampledPath, u0) -> SampledPath:
    """Discrete ``d_t^alpha (u - u0)`` at ``t_1..t_N`` (entry 0 is left at 0).

    A mismatch ``u[0] != u0`` is treated as a jump at ``t = 0``; it adds
    ``g_{1-alpha}(t_n) (u[0] - u0)``.
    """
    if u.grid != weights.grid:
        raise ValueError("path and weights must share a grid")
    vals = u.values
    d = np.diff(vals, axis=0)
    out = np.zeros_like(vals)
    out[1:] = np.tensordot(weights.incr[1:, 1:], d, axes=(1, 0))
    jump = vals[0] - np.asarray(u0, dtype=float)
    if np.any(jump != 0):
        if weights.alpha == 1.0:
            raise ValueError("alpha = 1 has no jump term; require u[0] == u0")
        tn = weights.grid.nodes[1:]
        g = _g(1.0 - weights.alpha, tn).reshape((-1,) + (1,) * (vals.ndim - 1))
        out[1:] = out[1:] + g * jump
    return SampledPath(u.grid, out)


# ---------------------------------------------------------------------------
# discrete fundamental identity and its consequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentityRecord:
    """Per-node sides of an identity or inequality, ``gap = lhs - rhs``."""

    nodes: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def gap(self) -> np.ndarray:
        return self.lhs - self.rhs


def _check_kernel_pair(k: SampledPath, kdot: SampledPath, u: SampledPath):
    if not (k.grid == kdot.grid == u.grid):
        raise ValueError("k, kdot and u must share a grid")
    if not u.grid.uniform:
        raise ValueError("identity checks need a uniform grid")
    return u.grid.T / u.grid.N


def _lag_matrix(vals):
    """Row n holds ``vals[n - j]`` for ``j <= n`` (zero elsewhere)."""
    n = vals.shape[0]
    idx = np.arange(n)[:, None] - np.arange(n)[None, :]
    return np.where(idx >= 0, vals[np.clip(idx, 0, None)], 0.0)


def _lag_integral(B, q, h):
    """Row-wise ``int_0^{t_n}`` of the product of linear interpolants of
    ``B[n, :n+1]`` and ``q[:n+1]`` (both indexed by lag)."""
    n = B.shape[0]
    qa, qb = q[:-1], q[1:]
    Ba, Bb = B[:, :-1], B[:, 1:]
    cell = h / 6.0 * (2 * Ba * qa + Ba * qb + Bb * qa + 2 * Bb * qb)
    mask = np.arange(n - 1)[None, :] < np.arange(n)[:, None]
    return np.sum(np.where(mask, cell, 0.0), axis=1)


def _rate(k, kdot, w, h):
    """``d/dt (k * w)`` at the nodes as ``k(0) w + (kdot * w)``."""
    return k[0] * w + _sampled_conv(kdot, w, h)


def fundamental_identity_residual(H: Callable, dH: Callable, k: SampledPath,
                                  kdot: SampledPath, u: SampledPath) -> IdentityRecord:
    """Both sides of the chain-rule identity for ``d/dt (k * .)``.

    lhs = H'(u) d/dt(k * u)
    rhs = d/dt(k * H(u)) + (u H'(u) - H(u)) k
          + int_0^t [H(u(t-s)) - H(u(t)) - H'(u(t))(u(t-s) - u(t))] (-kdot(s)) ds

    Nodes ``t_0, t_1`` are excluded (first-step quadrature is lowest order).
    """
    h = _check_kernel_pair(k, kdot, u)
    uu, kk, kd = u.values, k.values, kdot.values
    Hu, dHu = H(uu), dH(uu)
    lhs = dHu * _rate(kk, kd, uu, h)
    lag = _lag_matrix(uu)
    B = H(lag) - Hu[:, None] - dHu[:, None] * (lag - uu[:, None])
    rhs = _rate(kk, kd, Hu, h) + (uu * dHu - Hu) * kk + _lag_integral(B, -kd, h)
    sl = slice(2, None)
    return IdentityRecord(np.arange(u.grid.N + 1)[sl], lhs[sl], rhs[sl])


def ident1_residual(k: SampledPath, kdot: SampledPath, v: SampledPath) -> IdentityRecord:
    """Energy identity evaluated directly:

    (d/dt(k * v), v) = 1/2 d/dt(k * |v|^2) + 1/2 k |v|^2 + 1/2 int (-kdot(s)) |v(t) - v(t-s)|^2 ds
    """
    h = _check_kernel_pair(k, kdot, v)
    vv, kk, kd = v.values, k.values, kdot.values
    lhs = _rate(kk, kd, vv, h) * vv
    diff2 = (_lag_matrix(vv) - vv[:, None]) ** 2
    rhs = 0.5 * _rate(kk, kd, vv**2, h) + 0.5 * kk * vv**2 + 0.5 * _lag_integral(diff2, -kd, h)
    sl = slice(2, None)
    return IdentityRecord(np.arange(v.grid.N + 1)[sl], lhs[sl], rhs[sl])


def convexity_gap(H: Callable, dH: Callable, k: SampledPath, kdot: SampledPath,
                  u: SampledPath, u0: float) -> IdentityRecord:
    """``H'(u) d/dt(k * [u - u0])`` against ``d/dt(k * [H(u) - H(u0)])``.

    For convex ``H`` and nonnegative nonincreasing ``k`` the gap is
    nonnegative; in this discretization it equals
    ``c (k(0) + int kdot) + int B (-kdot)`` with ``c, B >= 0``.
    """
    h = _check_kernel_pair(k, kdot, u)
    uu, kk, kd = u.values, k.values, kdot.values
    lhs = dH(uu) * _rate(kk, kd, uu - u0, h)
    rhs = _rate(kk, kd, H(uu) - H(u0), h)
    sl = slice(2, None)
    return IdentityRecord(np.arange(u.grid.N + 1)[sl], lhs[sl], rhs[sl])


def l2norm_gap(v: SampledPath, v0, k: SampledPath, kdot: SampledPath,
               dx: float = 1.0) -> IdentityRecord:
    """The L2-norm inequality for a field ``v[n, i]`` on cells of width ``dx``:

    int v d/dt(k * [v - v0]) dx  >=  |v(t)|_2 d/dt(k * [|v|_2 - |v0|_2])
    """
    h = _check_kernel_pair(k, kdot, v)
    vv = v.values
    if vv.ndim != 2:
        raise ValueError("v must be a (time, space) field")
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != vv.shape[1:]:
        raise ValueError("v0 must match the spatial shape of v")
    kk, kd = k.values, kdot.values
    lhs = dx * np.sum(vv * _rate(kk, kd, vv - v0[None, :], h), axis=1)
    norms = np.sqrt(dx * np.sum(vv**2, axis=1))
    n0 = math.sqrt(dx * float(np.sum(v0**2)))
    rhs = norms * _rate(kk, kd, norms - n0, h)
    sl = slice(2, None)
    return IdentityRecord(np.arange(v.grid.N + 1)[sl], lhs[sl], rhs[sl])
