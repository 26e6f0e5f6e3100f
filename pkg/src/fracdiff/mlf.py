"""Gamma, standard kernels and the Mittag-Leffler function on the negative axis.

The relaxation function ``s_mu(t) = E_alpha(-mu t^alpha)`` is the scalar
building block for every solver in the package.  ``E_alpha(-x)`` is
evaluated by one of three routes, chosen per argument from the effective
scale ``t = x**(1/alpha)``:

* the power series with compensated (Kahan) summation for small ``t``;
* the alternating asymptotic expansion, used only where its own optimal
  truncation estimate certifies full double precision;
* otherwise the real integral

  .. math::

      E_\\alpha(-x) = \\frac{\\sin\\alpha\\pi}{2\\pi}\\int_{-\\infty}^{\\infty}
          \\frac{\\exp(-e^{y})}{\\cosh(\\alpha y - \\ln x) + \\cos\\alpha\\pi}\\,dy,

  which follows from the spectral (complete monotonicity) representation of
  ``E_alpha(-t^alpha)`` after the substitution ``r t = e^y``.  The part of
  the kernel over ``y < 0`` integrates in closed form, which leaves smooth,
  rapidly decaying integrands for composite Gauss-Legendre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "MLEvalPolicy",
    "RelaxationQuery",
    "gamma_fn",
    "g_kernel",
    "mittag_leffler",
    "relaxation",
    "relaxation_values",
    "relaxation_bounds",
    "yosida_kernel",
]


@dataclass(frozen=True)
class MLEvalPolicy:
    """Switching rules for :func:`mittag_leffler`.

    ``series_cutoff`` bounds the effective argument ``x**(1/alpha)`` below
    which the power series is summed; the cancellation in the alternating
    series grows like ``exp(x**(1/alpha))``, so a cutoff on ``x`` itself is
    not meaningful uniformly in ``alpha``.
    """

    series_cutoff: float = 1.0
    series_tol: float = 1e-17
    asymptotic_terms: int = 400

    def __post_init__(self):
        if not self.series_cutoff > 0:
            raise ValueError("series_cutoff must be positive")
        if not 0 < self.series_tol <= 1e-6:
            raise ValueError("series_tol must lie in (0, 1e-6]")
        if int(self.asymptotic_terms) < 1:
            raise ValueError("asymptotic_terms must be >= 1")


DEFAULT_POLICY = MLEvalPolicy()


@dataclass(frozen=True)
class RelaxationQuery:
    alpha: float
    mu: float
    t: float

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.mu >= 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if not self.t >= 0:
            raise ValueError(f"t must be >= 0, got {self.t}")


def _check_alpha(alpha):
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")


def _as_output(values, scalar):
    return float(values[()]) if scalar else values


def gamma_fn(x):
    """Euler's Gamma function for positive arguments."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("gamma_fn is defined here for x > 0 only")
    return _as_output(special.gamma(arr), arr.ndim == 0)


def g_kernel(beta, t):
    """Standard kernel ``g_beta(t) = t**(beta-1) / Gamma(beta)``.

    At ``t = 0`` the kernel is singular for ``beta < 1``; callers must
    integrate it analytically there (see :mod:`fracdiff.fracops`).
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("g_kernel is defined for t >= 0")
    if beta < 1 and np.any(arr == 0):
        raise ValueError(f"g_{beta} is singular at t = 0")
    with np.errstate(divide="ignore"):
        out = np.power(arr, beta - 1.0) * special.rgamma(beta)
    if beta == 1:
        out = np.ones_like(arr)
    return _as_output(out, arr.ndim == 0)


# ---------------------------------------------------------------------------
# E_alpha(-x) and E_{alpha,alpha}(-x)
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)

_LOWER_BREAKS = np.linspace(-36.0, 0.0, 19)
_UPPER_BREAKS = np.concatenate([[0.5, 1.0, 1.5], np.arange(1.75, 4.51, 0.25)])


def _peak_offsets(width):
    # geometric in the distance from the peak, out to O(1) so that each
    # panel sees a bounded ratio of the Lorentzian-like kernel
    kmax = max(10, int(math.ceil(math.log2(4.0 / width))))
    g = 2.0 ** np.arange(-2, kmax + 1)
    return width * np.concatenate([-g[::-1], [0.0], g])


def _series(alpha, x, tol, which):
    """sum_j (-x)^j / Gamma(alpha j + b) with Kahan summation, b = 1 or alpha."""
    b = 1.0 if which == "E" else alpha
    total = np.full_like(x, special.rgamma(b))
    comp = np.zeros_like(x)
    power = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    for j in range(1, 20000):
        power = power * (-x)
        term = power * special.rgamma(alpha * j + b)
        y = term - comp
        s = total + y
        comp = np.where(active, (s - total) - y, comp)
        total = np.where(active, s, total)
        done = np.abs(term) <= tol * np.abs(total)
        # the terms first grow before they decay; only stop on the decaying side
        done &= alpha * j + b > np.abs(x) ** (1.0 / alpha) + 1.0
        active &= ~done
        if not active.any():
            break
    return total


def _asymptotic(alpha, x, nterms, tol, which):
    """Optimally truncated asymptotic expansion and an accept mask.

    Terms: E:   (-1)^{k+1} x^{-k} / Gamma(1 - alpha k)
           Eaa: alpha (-1)^{k+1} k x^{-k-1} / Gamma(1 - alpha k)
    1/Gamma(1 - z) = Gamma(z) sin(pi z) / pi keeps the terms finite for
    large k.
    """
    k = np.arange(1, nterms + 1, dtype=float)
    z = alpha * k
    # (-1)^{k+1} sin(pi alpha k) = (-1)^r sin(pi (m - r)) with m = k (1 - alpha),
    # r = round(m); this keeps full accuracy when alpha k is near an integer
    m = k * (1.0 - alpha)
    rm = np.round(m)
    sign = np.where(rm % 2 == 0, 1.0, -1.0) * np.sin(np.pi * (m - rm)) / np.pi
    lx = np.log(x)[:, None]
    # envelope Gamma(alpha k) x^{-k} / pi bounds |term| (|sin| <= 1); truncating
    # on the envelope is immune to terms that are small only because
    # 1/Gamma(1 - alpha k) happens to be near one of its zeros
    logenv = special.gammaln(z)[None, :] - k[None, :] * lx - math.log(math.pi)
    if which == "Eaa":
        logenv = logenv + np.log(alpha * k)[None, :] - lx
    env = np.exp(np.minimum(logenv, 700.0))
    terms = math.pi * sign[None, :] * env
    kmin = np.argmin(logenv, axis=1)
    keep = np.arange(nterms)[None, :] < kmin[:, None]
    value = np.sum(np.where(keep, terms, 0.0), axis=1)
    remainder = env[np.arange(len(x)), kmin]
    t = x ** (1.0 / alpha)
    if alpha > 2.0 / 3.0:
        # exponentially small saddle contributions beyond the Stokes line
        expo = (2.0 / alpha) * (1.0 + t) * np.exp(t * math.cos(math.pi / alpha))
    else:
        expo = np.zeros_like(x)
    ok = (remainder + expo) <= tol * np.abs(value)
    ok &= kmin > 0
    return value, ok


def _integral(alpha, x, which):
    # trig factors through 1 - alpha, which is exact; near alpha = 1 they are
    # O(1 - alpha) and would otherwise inherit the rounding of alpha * pi
    eps = 1.0 - alpha
    s = math.sin(eps * math.pi)
    cos_half2 = math.sin(eps * math.pi / 2) ** 2
    lx = np.log(x)
    n = len(x)
    # nodes are placed by their offset d from the kernel peak y* = ln(x)/alpha,
    # so that the kernel argument alpha y - ln x = alpha d carries no cancellation
    ystar = lx[:, None] / alpha
    breaks = [_LOWER_BREAKS[None, :] - ystar, _UPPER_BREAKS[None, :] - ystar]
    width = 2.0 * math.sqrt(cos_half2) / alpha
    if width < 4.0:
        off = np.broadcast_to(_peak_offsets(width)[None, :], (n, _peak_offsets(width).size))
        breaks.append(np.clip(off, breaks[0][:, :1], breaks[1][:, -1:]))
    bk = np.sort(np.concatenate(breaks, axis=1), axis=1)
    a = bk[:, :-1, None]
    b = bk[:, 1:, None]
    d = (0.5 * (a + b) + 0.5 * (b - a) * _GL_X).reshape(n, -1)
    w = (0.5 * (b - a) * _GL_W).reshape(n, -1)
    y = ystar + d
    zz = alpha * d
    denom = 2.0 * np.sinh(0.5 * zz) ** 2 + 2.0 * cos_half2
    # below y = 0 integrate (exp(-e^y) - 1) K; the bare K part is closed form
    h = np.where(y < 0, np.expm1(-np.exp(np.minimum(y, 0.0))), np.exp(-np.exp(y)))
    # int_{y<0} K dy = (2/(alpha s)) [atan(tan(alpha pi/2) th) + alpha pi/2], th = tanh(-ln(x)/2),
    # rewritten with q = tan((1-alpha) pi/2) so that no O(1-alpha) difference is formed
    q = math.tan(eps * math.pi / 2)
    th = np.tanh(-0.5 * lx)
    one_m_abs = 2.0 / (np.exp(np.abs(lx)) + 1.0)          # 1 - |th|
    with np.errstate(divide="ignore", invalid="ignore"):
        bracket = np.where(
            th < 0,
            np.arctan(q * one_m_abs / (np.abs(th) + q * q)),
            np.arctan2(q, -th) - eps * math.pi / 2,
        )
    if which == "E":
        kern = 1.0 / denom
        closed = (2.0 / (alpha * s)) * bracket
        return s / (2 * math.pi) * (closed + np.sum(h * kern * w, axis=1))
    # E_{a,a}(-x) = -alpha d/dx E_a(-x)
    dkern = np.sinh(zz) / (x[:, None] * denom**2)
    dclosed = (2.0 / (alpha * s)) * (0.5 * q * (1 - th**2) / (q * q + th**2)) * (-1.0 / x)
    deriv = s / (2 * math.pi) * (dclosed + np.sum(h * dkern * w, axis=1))
    return -alpha * deriv


def _ml_negative(alpha, x, policy, which):
    _check_alpha(alpha)
    policy = policy or DEFAULT_POLICY
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr >= 0)):
        raise ValueError("argument must satisfy x >= 0 (E_alpha is evaluated at -x)")
    scalar = arr.ndim == 0
    flat = arr.reshape(-1)
    out = np.empty_like(flat)
    if alpha == 1.0:
        out[:] = np.exp(-flat)
        return _as_output(out.reshape(arr.shape), scalar)
    zero = flat == 0
    out[zero] = 1.0 if which == "E" else special.rgamma(alpha)
    inf = np.isinf(flat)
    out[inf] = 0.0
    rest = ~(zero | inf)
    t = np.where(rest, flat, 1.0) ** (1.0 / alpha)
    small = rest & (t <= policy.series_cutoff)
    if small.any():
        out[small] = _series(alpha, flat[small], policy.series_tol, which)
    big = rest & ~small
    if big.any():
        xb = flat[big]
        val, ok = _asymptotic(alpha, xb, int(policy.asymptotic_terms), 1e-15, which)
        if not ok.all():
            val[~ok] = _integral(alpha, xb[~ok], which)
        out[big] = val
    return _as_output(out.reshape(arr.shape), scalar)


def mittag_leffler(alpha, x, policy: MLEvalPolicy | None = None):
    """``E_alpha(-x)`` for ``alpha`` in (0, 1] and ``x >= 0`` (vectorised)."""
    return _ml_negative(alpha, x, policy, "E")


def mittag_leffler_aa(alpha, x, policy: MLEvalPolicy | None = None):
    """``E_{alpha,alpha}(-x) = -alpha d/dx E_alpha(-x)`` for ``x >= 0``.

    Only needed for the space-time fundamental solution in
    :mod:`fracdiff.probe`; not part of the public relaxation API.
    """
    return _ml_negative(alpha, x, policy, "Eaa")


def relaxation_values(alpha, mu, t, policy: MLEvalPolicy | None = None):
    """Broadcasting ``s_mu(t) = E_alpha(-mu t^alpha)``."""
    _check_alpha(alpha)
    mu = np.asarray(mu, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(mu < 0) or np.any(t < 0):
        raise ValueError("relaxation needs mu >= 0 and t >= 0")
    return mittag_leffler(alpha, mu * t**alpha, policy)


def relaxation(q: RelaxationQuery, policy: MLEvalPolicy | None = None) -> float:
    return float(relaxation_values(q.alpha, q.mu, q.t, policy))


def relaxation_bounds(q: RelaxationQuery) -> tuple[float, float]:
    """Two-sided algebraic bounds for ``s_mu(t)`` when ``alpha < 1``.

    ``1/(1 + mu Gamma(1-alpha) t^alpha) <= s_mu(t) <= 1/(1 + mu t^alpha / Gamma(1+alpha))``
    """
    if q.alpha >= 1:
        raise ValueError("relaxation bounds are specific to alpha < 1")
    if not q.t > 0:
        raise ValueError("relaxation bounds need t > 0")
    ta = q.t**q.alpha
    lower = 1.0 / (1.0 + q.mu * special.gamma(1.0 - q.alpha) * ta)
    upper = 1.0 / (1.0 + q.mu * ta / special.gamma(1.0 + q.alpha))
    return lower, upper


def yosida_kernel(alpha, n, t, policy: MLEvalPolicy | None = None):
    """Regularised kernel ``n s_n(t)``, a bounded approximation of ``g_{1-alpha}``."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    return n * relaxation_values(alpha, float(n), t, policy)
