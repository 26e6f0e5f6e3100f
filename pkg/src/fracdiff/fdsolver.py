"""Implicit finite-difference solvers for

    d_t^alpha (u - u0) - div(A(t, x) grad u) + c u = f   on (0, T) x (0, L),

with constant Dirichlet data, plus checkers for the weak formulation, the
maximum and comparison principles, boundedness and the rough-coefficient
decay estimate.

Space is discretised in flux form with ``A`` sampled at cell midpoints and
at the new time level.  Two time discretisations are provided:

* ``solve_l1``: the L1 Caputo scheme from :mod:`fracdiff.fracops`;
* ``solve_volterra``: product integration of the convolved form
  ``u - g_alpha * (div(A grad u) - c u) = u0 + g_alpha * f``.

Both are implicit in the current step and lead to one tridiagonal solve
per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg

from .fracops import TimeGrid, caputo_weights, gkernel_weights
from .mlf import relaxation_values
from .spectral import IntervalDomain

__all__ = [
    "SpecViolation",
    "ConstantField",
    "CheckerboardField",
    "ProblemSpec",
    "Trajectory",
    "EllipticOperator",
    "TestFunction",
    "DecayRecord",
    "BoundednessRecord",
    "assemble_elliptic",
    "solve_l1",
    "solve_volterra",
    "weak_residual",
    "default_test_family",
    "max_principle_check",
    "comparison_check",
    "decay_check",
    "strict_interior_check",
    "boundedness_probe",
]


class SpecViolation(ValueError):
    """Input data outside the admissible class (ellipticity, ordering, ...)."""


# ---------------------------------------------------------------------------
# coefficient fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantField:
    value: float

    def __call__(self, t, x):
        return np.full(np.broadcast(np.asarray(t), np.asarray(x)).shape, float(self.value))

    @property
    def bounds(self):
        return float(self.value), float(self.value)


@dataclass(frozen=True)
class CheckerboardField:
    """Piecewise-constant field with values in ``{nu, Lam}`` on a seeded
    ``blocks_t x blocks_x`` partition of ``[0, T] x [0, L]``.

    Blocks are fixed in physical coordinates, so the field is the same
    function on every grid.
    """

    nu: float
    Lam: float
    seed: int
    T: float
    L: float
    blocks_t: int = 8
    blocks_x: int = 8

    @property
    def pattern(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        return rng.integers(0, 2, size=(self.blocks_t, self.blocks_x))

    def __call__(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
        it = np.clip((t / self.T * self.blocks_t).astype(int), 0, self.blocks_t - 1)
        ix = np.clip((x / self.L * self.blocks_x).astype(int), 0, self.blocks_x - 1)
        return np.where(self.pattern[it, ix] == 1, self.Lam, self.nu)

    @property
    def bounds(self):
        return float(self.nu), float(self.Lam)


def _as_field(v) -> Callable:
    if callable(v):
        return v
    return ConstantField(float(v))


# ---------------------------------------------------------------------------
# problem and trajectory
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """One initial-boundary value problem.

    ``A``, ``c`` and ``f`` are numbers or vectorised callables ``(t, x)``.
    ``u0`` holds ``M + 1`` nodal samples (or a callable of ``x``); its end
    values are replaced by the Dirichlet data ``g = (g_left, g_right)``.
    Ellipticity ``nu <= A <= Lam`` with ``nu > 0`` is checked at every
    sample the solver will use; undeclared bounds are taken from the field
    (``.bounds``) or from the samples.
    """

    alpha: float
    domain: IntervalDomain
    M: int
    grid: TimeGrid
    A: object = 1.0
    u0: object = 0.0
    c: object = 0.0
    f: object = 0.0
    g: tuple = (0.0, 0.0)
    nu: float | None = None
    Lam: float | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise SpecViolation(f"alpha must lie in (0, 1], got {self.alpha}")
        if int(self.M) != self.M or self.M < 2:
            raise SpecViolation("M must be an integer >= 2")
        A = _as_field(self.A)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "c", _as_field(self.c))
        object.__setattr__(self, "f", _as_field(self.f))
        x = self.x
        u0 = np.asarray(self.u0(x) if callable(self.u0) else self.u0, dtype=float)
        if u0.ndim == 0:
            u0 = np.full(x.shape, float(u0))
        u0 = np.array(u0, dtype=float)
        if u0.shape != x.shape:
            raise SpecViolation(f"u0 needs {self.M + 1} samples, got {u0.shape}")
        u0[0], u0[-1] = self.g
        object.__setattr__(self, "u0", u0)
        a = self.A_half
        lo, hi = getattr(A, "bounds", (float(a.min()), float(a.max())))
        nu = lo if self.nu is None else float(self.nu)
        Lam = hi if self.Lam is None else float(self.Lam)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "Lam", Lam)
        if not nu > 0:
            raise SpecViolation("ellipticity constant nu must be positive")
        if a.min() < nu or a.max() > Lam:
            raise SpecViolation(
                f"A ranges over [{a.min():g}, {a.max():g}], outside [{nu:g}, {Lam:g}]")
        if not np.all(np.isfinite(self.c_nodes)) or not np.all(np.isfinite(self.f_nodes)):
            raise SpecViolation("c and f must be bounded")

    @property
    def h(self) -> float:
        return self.domain.L / self.M

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.domain.L, self.M + 1)

    @property
    def x_half(self) -> np.ndarray:
        return (np.arange(self.M) + 0.5) * self.h

    def _sampled(self, name, fld, xs):
        if name not in self._cache:
            t = self.grid.nodes[:, None]
            self._cache[name] = np.asarray(fld(t, xs[None, :]), dtype=float) * np.ones((t.size, xs.size))
        return self._cache[name]

    @property
    def A_half(self) -> np.ndarray:
        """``A(t_n, x_{i+1/2})``, shape ``(N + 1, M)``."""
        return self._sampled("A", self.A, self.x_half)

    @property
    def c_nodes(self) -> np.ndarray:
        return self._sampled("c", self.c, self.x)

    @property
    def f_nodes(self) -> np.ndarray:
        return self._sampled("f", self.f, self.x)

    def l2(self, u) -> np.ndarray:
        """Discrete (trapezoid) ``L_2(0, L)`` norm along the last axis."""
        u = np.asarray(u, dtype=float)
        s = np.sum(u[..., 1:-1] ** 2, axis=-1) + 0.5 * (u[..., 0] ** 2 + u[..., -1] ** 2)
        return np.sqrt(self.h * s)

    def replace(self, **changes) -> "ProblemSpec":
        kw = dict(alpha=self.alpha, domain=self.domain, M=self.M, grid=self.grid, A=self.A,
                  u0=self.u0, c=self.c, f=self.f, g=self.g, nu=self.nu, Lam=self.Lam)
        kw.update(changes)
        return ProblemSpec(**kw)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Nodal values ``u[n, i] = u(t_n, x_i)`` with per-step L2 norms."""

    spec: ProblemSpec
    u: np.ndarray
    scheme: str

    @property
    def t(self) -> np.ndarray:
        return self.spec.grid.nodes

    @property
    def x(self) -> np.ndarray:
        return self.spec.x

    @property
    def l2norms(self) -> np.ndarray:
        return self.spec.l2(self.u)


# ---------------------------------------------------------------------------
# elliptic part
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipticOperator:
    """Flux-form ``div(A grad .)`` on the interior nodes.

    ``(K u)_i = (a_i (u_{i+1} - u_i) - a_{i-1} (u_i - u_{i-1})) / h^2`` with
    ``a_i = A(x_{i+1/2})``.  ``K`` itself is negative definite; the matrix
    that is an M-matrix is ``s I - K + diag(c)`` for ``s, c >= 0``.
    """

    a: np.ndarray
    h: float

    @property
    def diag(self) -> np.ndarray:
        return -(self.a[:-1] + self.a[1:]) / self.h**2

    @property
    def off(self) -> np.ndarray:
        """Sub- and super-diagonal (symmetric), length ``M - 2``."""
        return self.a[1:-1] / self.h**2

    def apply(self, u) -> np.ndarray:
        """``K u`` at the interior nodes from full nodal values ``u``."""
        u = np.asarray(u, dtype=float)
        flux = self.a * np.diff(u, axis=-1) / self.h
        return np.diff(flux, axis=-1) / self.h

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def banded(self, shift, c=0.0) -> np.ndarray:
        """``shift I - K + diag(c)`` in ``solve_banded`` layout."""
        m = self.a.size - 1
        ab = np.zeros((3, m))
        ab[0, 1:] = -self.off
        ab[1] = shift - self.diag + np.broadcast_to(c, (m,))
        ab[2, :-1] = -self.off
        return ab

    def boundary_coupling(self, g) -> np.ndarray:
        """Contribution of the Dirichlet values to ``K u`` on the interior."""
        out = np.zeros(self.a.size - 1)
        out[0] += self.a[0] * g[0] / self.h**2
        out[-1] += self.a[-1] * g[1] / self.h**2
        return out


def assemble_elliptic(A_half, h: float, nu: float | None = None) -> EllipticOperator:
    """Operator for ``div(A grad .)`` from midpoint samples ``A_half``."""
    a = np.asarray(A_half, dtype=float)
    lower = 0.0 if nu is None else nu
    if a.ndim != 1 or a.size < 2:
        raise SpecViolation("need at least two midpoint samples")
    if np.any(a < lower) or np.any(a <= 0):
        raise SpecViolation(f"coefficient below ellipticity bound {lower:g}")
    return EllipticOperator(a, float(h))


def _solve(ab, rhs):
    return linalg.solve_banded((1, 1), ab, rhs, check_finite=False)


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def solve_l1(spec: ProblemSpec) -> Trajectory:
    """L1 scheme: ``(w_nn I - K_n + c_n) u_n = w_nn u_{n-1} - history + f_n``.

    The history weights of the L1 scheme are positive and increasing towards
    the current step on every grid, so the update is a convex combination
    of past values followed by an M-matrix solve.
    """
    N, M, h = spec.grid.N, spec.M, spec.h
    W = caputo_weights(spec.alpha, spec.grid).incr
    u = np.empty((N + 1, M + 1))
    u[:, 0], u[:, -1] = spec.g
    u[0] = spec.u0
    d = np.zeros((N + 1, M - 1))     # d[j] = u_j - u_{j-1}, interior
    A, c, f = spec.A_half, spec.c_nodes, spec.f_nodes
    for n in range(1, N + 1):
        K = assemble_elliptic(A[n], h)
        wnn = W[n, n]
        hist = W[n, 1:n] @ d[1:n] if n > 1 else 0.0
        rhs = wnn * u[n - 1, 1:-1] - hist + f[n, 1:-1] + K.boundary_coupling(spec.g)
        u[n, 1:-1] = _solve(K.banded(wnn, c[n, 1:-1]), rhs)
        d[n] = u[n, 1:-1] - u[n - 1, 1:-1]
    return Trajectory(spec, u, "l1")


def solve_volterra(spec: ProblemSpec) -> Trajectory:
    """Product integration of ``u - g_alpha * (K u - c u + f) = u0``.

    With ``W`` the piecewise-linear weights for ``g_alpha *``, step ``n``
    solves ``(I + W_nn (-K_n + c_n)) u_n = u0 + W_nn f_n + sum_{j<n} W_nj v_j``,
    ``v_j = K_j u_j - c_j u_j + f_j``.
    """
    N, M, h = spec.grid.N, spec.M, spec.h
    W = gkernel_weights(spec.alpha, spec.grid.nodes)
    u = np.empty((N + 1, M + 1))
    u[:, 0], u[:, -1] = spec.g
    u[0] = spec.u0
    v = np.zeros((N + 1, M - 1))
    A, c, f = spec.A_half, spec.c_nodes, spec.f_nodes
    K0 = assemble_elliptic(A[0], h)
    v[0] = K0.apply(u[0]) - c[0, 1:-1] * u[0, 1:-1] + f[0, 1:-1]
    base = u[0, 1:-1]
    for n in range(1, N + 1):
        K = assemble_elliptic(A[n], h)
        wnn = W[n, n]
        rhs = base + W[n, :n] @ v[:n] + wnn * (f[n, 1:-1] + K.boundary_coupling(spec.g))
        ab = K.banded(0.0, c[n, 1:-1]) * wnn
        ab[1] += 1.0
        u[n, 1:-1] = _solve(ab, rhs)
        v[n] = K.apply(u[n]) - c[n, 1:-1] * u[n, 1:-1] + f[n, 1:-1]
    return Trajectory(spec, u, "volterra")


# ---------------------------------------------------------------------------
# weak formulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """``eta(t, x) = (1 - t/T)^power (t/T)^tpow b((x - center)/width)`` with the
    smooth bump ``b(z) = exp(1 - 1/(1 - z^2))`` on ``|z| < 1``."""

    __test__ = False  # not a pytest class

    center: float
    width: float
    power: int = 2
    tpow: int = 0

    def check(self, T: float, L: float):
        if self.power < 1:
            raise SpecViolation("test function must vanish at t = T")
        if self.width <= 0 or self.center - self.width < 0 or self.center + self.width > L:
            raise SpecViolation("test function support must lie inside the domain")
        if self.tpow < 0:
            raise SpecViolation("tpow must be nonnegative")

    def time(self, t, T):
        s = np.asarray(t) / T
        p = (1 - s) ** self.power * s**self.tpow
        dp = -self.power * (1 - s) ** (self.power - 1) * s**self.tpow
        if self.tpow > 0:
            dp = dp + self.tpow * (1 - s) ** self.power * s ** (self.tpow - 1)
        return p, dp / T

    def space(self, x):
        z = (np.asarray(x) - self.center) / self.width
        inside = np.abs(z) < 1
        zz = np.where(inside, z, 0.0)
        b = np.where(inside, np.exp(1 - 1 / (1 - zz**2)), 0.0)
        db = np.where(inside, b * (-2 * zz / (1 - zz**2) ** 2) / self.width, 0.0)
        return b, db


def default_test_family(L: float) -> list[TestFunction]:
    out = []
    for center in (0.3 * L, 0.5 * L, 0.7 * L):
        for tpow in (0, 1):
            out.append(TestFunction(center, 0.25 * L, 2, tpow))
    return out


_GL4_X, _GL4_W = np.polynomial.legendre.leggauss(4)


def weak_residual(traj: Trajectory, spec: ProblemSpec | None = None,
                  eta_family: Sequence[TestFunction] | None = None) -> float:
    """Max over the family of

        | int_0^T int_Omega -eta_t (g_{1-alpha} * [u - u0]) + A u_x eta_x + c u eta - f eta |.

    ``u`` is read as the space-time interpolant that is linear in ``t``
    between steps and linear in ``x`` between nodes; the fractional integral
    of that interpolant is computed exactly by product integration.  Both
    integrals use 4-point Gauss per cell.
    """
    spec = traj.spec if spec is None else spec
    T, L = spec.grid.T, spec.domain.L
    fam = default_test_family(L) if eta_family is None else list(eta_family)
    for eta in fam:
        eta.check(T, L)
    if not fam:
        return 0.0
    t = spec.grid.nodes
    x = spec.x
    ht = np.diff(t)
    hx = spec.h
    tq = (0.5 * (t[:-1] + t[1:])[:, None] + 0.5 * ht[:, None] * _GL4_X).ravel()
    wt = (0.5 * ht[:, None] * _GL4_W).ravel()
    xq = (0.5 * (x[:-1] + x[1:])[:, None] + 0.5 * hx * _GL4_X).ravel()
    wx = np.tile(0.5 * hx * _GL4_W, spec.M)
    cell = np.repeat(np.arange(spec.M), 4)

    u = traj.u
    diff = u - spec.u0[None, :]
    G = gkernel_weights(1.0 - spec.alpha, t, tq) @ diff if spec.alpha < 1 else None
    # u and u_x at the time quadrature points
    k = np.repeat(np.arange(spec.grid.N), 4)
    lam = (tq - t[k]) / ht[k]
    Uq = (1 - lam)[:, None] * u[k] + lam[:, None] * u[k + 1]
    Ux = np.diff(Uq, axis=1)[:, cell] / hx

    def at_x(V):
        # linear interpolation in x, row-wise
        j = np.minimum((xq / hx).astype(int), spec.M - 1)
        mu = xq / hx - j
        return (1 - mu) * V[:, j] + mu * V[:, j + 1]

    Uxq = at_x(Uq)
    Aq = np.asarray(spec.A(tq[:, None], xq[None, :]), dtype=float) * np.ones((tq.size, xq.size))
    cq = np.asarray(spec.c(tq[:, None], xq[None, :]), dtype=float) * np.ones((tq.size, xq.size))
    fq = np.asarray(spec.f(tq[:, None], xq[None, :]), dtype=float) * np.ones((tq.size, xq.size))
    Gq = at_x(G) if G is not None else None
    worst = 0.0
    for eta in fam:
        p, dp = eta.time(tq, T)
        b, db = eta.space(xq)
        if Gq is not None:
            mem = -(dp * wt) @ Gq @ (b * wx)
        else:
            # alpha = 1: g_0 * v = v, so the memory term is -int eta_t (u - u0)
            mem = -(dp * wt) @ at_x(Uq - spec.u0[None, :]) @ (b * wx)
        flux = (p * wt) @ (Aq * Ux) @ (db * wx)
        react = (p * wt) @ (cq * Uxq - fq) @ (b * wx)
        worst = max(worst, abs(mem + flux + react))
    return float(worst)


# ---------------------------------------------------------------------------
# principle checks
# ---------------------------------------------------------------------------

def _require_homogeneous(spec: ProblemSpec, what: str, need_c_zero=False):
    if np.any(spec.f_nodes != 0):
        raise SpecViolation(f"{what} needs f = 0")
    if np.any(spec.c_nodes < 0):
        raise SpecViolation(f"{what} needs c >= 0")
    if need_c_zero and np.any(spec.c_nodes != 0):
        raise SpecViolation(f"{what} needs c = 0")
    if tuple(spec.g) != (0.0, 0.0):
        raise SpecViolation(f"{what} needs homogeneous Dirichlet data")


def max_principle_check(traj: Trajectory, u0=None) -> float:
    """``max_{n,i} u - max(0, max u0)``; nonpositive for ``f = 0``, ``c >= 0``."""
    _require_homogeneous(traj.spec, "maximum principle")
    u0 = traj.spec.u0 if u0 is None else np.asarray(u0, dtype=float)
    return float(np.max(traj.u) - max(0.0, float(np.max(u0))))


def comparison_check(traj_sub: Trajectory, traj_super: Trajectory) -> float:
    """``min (v - u)`` over all nodes for a sub/super pair with ordered data."""
    su, sv = traj_sub.spec, traj_super.spec
    if su.grid != sv.grid or su.M != sv.M or su.domain != sv.domain or su.alpha != sv.alpha:
        raise SpecViolation("pair must share alpha, domain and grids")
    if not (np.array_equal(su.A_half, sv.A_half) and np.array_equal(su.c_nodes, sv.c_nodes)):
        raise SpecViolation("pair must share the operator (A and c)")
    if np.any(su.u0 > sv.u0) or np.any(su.f_nodes > sv.f_nodes) or \
            su.g[0] > sv.g[0] or su.g[1] > sv.g[1]:
        raise SpecViolation("data are not ordered")
    return float(np.min(traj_super.u - traj_sub.u))


def strict_interior_check(traj: Trajectory, u0=None) -> float:
    """``min`` over interior nodes at ``t > 0`` of ``max(0, max u0) - u``."""
    _require_homogeneous(traj.spec, "strict interior check")
    u0 = traj.spec.u0 if u0 is None else np.asarray(u0, dtype=float)
    if np.ptp(u0) == 0:
        raise SpecViolation("constant initial datum is degenerate for this check")
    top = max(0.0, float(np.max(u0)))
    return float(np.min(top - traj.u[1:, 1:-1]))


@dataclass(frozen=True)
class DecayRecord:
    t: np.ndarray
    l2norm: np.ndarray
    envelope: np.ndarray
    tol: float

    @property
    def margin(self) -> np.ndarray:
        return self.l2norm - self.envelope

    @property
    def ok(self) -> bool:
        return bool(np.all(self.margin <= self.tol * self.l2norm[0]))


def decay_check(traj: Trajectory, spec: ProblemSpec | None = None, tol: float = 2e-2) -> DecayRecord:
    """Norms against ``s_{nu lambda_1}(t_n) |u0|_2`` with ``lambda_1 = (pi/L)^2``."""
    spec = traj.spec if spec is None else spec
    _require_homogeneous(spec, "decay check", need_c_zero=True)
    lam1 = (math.pi / spec.domain.L) ** 2
    norms = traj.l2norms
    env = relaxation_values(spec.alpha, spec.nu * lam1, traj.t) * norms[0]
    return DecayRecord(traj.t, norms, env, tol)


@dataclass(frozen=True)
class BoundednessRecord:
    K: float
    umax: float

    @property
    def C(self) -> float:
        return self.umax / (1.0 + self.K)


def boundedness_probe(traj: Trajectory) -> BoundednessRecord:
    """``max |u| / (1 + K)`` with ``K`` bounding ``|u0|`` and ``|g|``."""
    spec = traj.spec
    K = max(float(np.max(np.abs(spec.u0))), abs(spec.g[0]), abs(spec.g[1]))
    return BoundednessRecord(K, float(np.max(np.abs(traj.u))))
