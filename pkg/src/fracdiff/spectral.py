"""Eigenfunction-expansion solver on an interval with Dirichlet conditions.

For ``A = I``, ``c = f = 0`` the solution on ``(0, L)`` is

    u(t, x) = sum_n s_{lambda_n}(t) (u0 | phi_n) phi_n(x),
    lambda_n = (n pi / L)^2,  phi_n = sqrt(2/L) sin(n pi x / L),

so every coefficient relaxes independently.  This module is the exact-in-
space reference for :mod:`fracdiff.fdsolver` and the source of the sharp
``s_{lambda_1}(t) |u0|_2`` envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy import fft

from .mlf import relaxation_values

__all__ = [
    "IntervalDomain",
    "EigenSystem",
    "SpectralState",
    "EnvelopeRecord",
    "project",
    "evolve",
    "evaluate",
    "decay_envelope_check",
    "initial_datum",
    "DEFAULT_MODES",
]

DEFAULT_MODES = 64


@dataclass(frozen=True)
class IntervalDomain:
    L: float

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("interval length must be positive")


@dataclass(frozen=True)
class EigenSystem:
    """First ``modes`` Dirichlet eigenpairs of ``-d^2/dx^2`` on ``(0, L)``."""

    domain: IntervalDomain
    modes: int = DEFAULT_MODES

    def __post_init__(self):
        if int(self.modes) != self.modes or self.modes < 1:
            raise ValueError("modes must be a positive integer")

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, self.modes + 1)

    @property
    def lambdas(self) -> np.ndarray:
        return (self.n * math.pi / self.domain.L) ** 2

    def phi(self, x) -> np.ndarray:
        """Eigenfunctions at ``x``, shape ``(modes,) + x.shape``."""
        x = np.asarray(x, dtype=float)
        L = self.domain.L
        return math.sqrt(2.0 / L) * np.sin(np.multiply.outer(self.n * math.pi / L, x))


@dataclass(frozen=True)
class SpectralState:
    """Coefficients ``c_n(t)`` of one trajectory.

    ``norm0`` is the coefficient norm at ``t = 0`` and ``defect`` the Parseval
    defect ``|u0|_2^2 - sum c_n(0)^2`` of the projection (truncation plus
    quadrature); both travel with every evolved state.
    """

    eigs: EigenSystem
    coeffs: np.ndarray
    t: float = 0.0
    norm0: float = float("nan")
    defect: float = 0.0

    @property
    def l2norm(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs**2)))


def _gauss_nodes(L, n_panels, order=16):
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, L, n_panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    x = (0.5 * (a + b) + 0.5 * (b - a) * xg).ravel()
    w = (0.5 * (b - a) * wg).ravel()
    return x, w


def project(u0, eigs: EigenSystem) -> SpectralState:
    """Coefficients ``(u0 | phi_n)``.

    ``u0`` is either a callable, integrated by composite 16-point
    Gauss-Legendre with enough panels to resolve the highest mode, or the
    values at the uniform nodes ``x_i = i L / M``, ``i = 0..M``, for which the
    trapezoid rule (a DST-I) is exact for trigonometric polynomials of degree
    below ``M``; requesting ``modes > M - 1`` from ``M + 1`` samples is refused.
    """
    L = eigs.domain.L
    if callable(u0):
        n_panels = max(8, eigs.modes)
        x, w = _gauss_nodes(L, n_panels)
        vals = np.asarray(u0(x), dtype=float)
        coeffs = eigs.phi(x) @ (w * vals)
        norm2 = float(np.sum(w * vals**2))
    else:
        vals = np.asarray(u0, dtype=float)
        if vals.ndim != 1 or vals.size < 3:
            raise ValueError("samples must be a 1-D array including both endpoints")
        M = vals.size - 1
        if eigs.modes > M - 1:
            raise ValueError(
                f"{M + 1} samples resolve at most {M - 1} modes, {eigs.modes} requested")
        h = L / M
        # dst type 1: y_k = 2 sum_i u_i sin(pi (i+1)(k+1) / M) over interior nodes
        d = fft.dst(vals[1:-1], type=1)
        coeffs = 0.5 * h * math.sqrt(2.0 / L) * d[: eigs.modes]
        norm2 = float(h * (np.sum(vals[1:-1] ** 2) + 0.5 * (vals[0] ** 2 + vals[-1] ** 2)))
    defect = norm2 - float(np.sum(coeffs**2))
    return SpectralState(eigs, coeffs, 0.0, float(np.sqrt(np.sum(coeffs**2))), defect)


def evolve(state: SpectralState, alpha: float, t: float) -> SpectralState:
    """Advance from ``t = 0``: ``c_n(t) = s_{lambda_n}(t) c_n(0)``.

    ``state`` must be the projected initial state (``state.t == 0``).
    """
    if not t >= 0:
        raise ValueError("t must be nonnegative")
    if state.t != 0.0:
        raise ValueError("evolve starts from the initial state (t = 0)")
    s = relaxation_values(alpha, state.eigs.lambdas, t)
    return replace(state, coeffs=state.coeffs * s, t=float(t))


def evaluate(state: SpectralState, x) -> np.ndarray:
    """``u(t, x) = sum_n c_n(t) phi_n(x)``."""
    return np.tensordot(state.coeffs, state.eigs.phi(x), axes=(0, 0))


@dataclass(frozen=True)
class EnvelopeRecord:
    t: np.ndarray
    l2norm: np.ndarray
    envelope: np.ndarray
    defect: float

    @property
    def margin(self) -> np.ndarray:
        return self.l2norm - self.envelope


def decay_envelope_check(states: Sequence[SpectralState], alpha: float) -> EnvelopeRecord:
    """Margins ``|u(t)|_2 - s_{lambda_1}(t) |u0|_2`` for states of one datum.

    Norms are coefficient norms, so the inequality is exact in the truncated
    space; the projection's Parseval defect is carried for reporting.
    """
    if not states:
        raise ValueError("no states given")
    norm0 = states[0].norm0
    if any(s.norm0 != norm0 for s in states):
        raise ValueError("states must come from a single initial datum")
    t = np.array([s.t for s in states])
    lam1 = states[0].eigs.lambdas[0]
    env = relaxation_values(alpha, lam1, t) * norm0
    norms = np.array([s.l2norm for s in states])
    return EnvelopeRecord(t, norms, env, states[0].defect)


def initial_datum(kind: str, L: float) -> Callable:
    """Named initial data used by the command line tool."""
    if kind == "phi1":
        return lambda x: math.sqrt(2.0 / L) * np.sin(math.pi * x / L)
    if kind == "poly":
        return lambda x: x * (L - x)
    if kind == "bump":
        return lambda x: np.exp(-40.0 * (x / L - 0.5) ** 2) * np.sin(math.pi * x / L)
    raise ValueError(f"unknown initial datum {kind!r}")
