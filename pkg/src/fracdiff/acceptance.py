"""The acceptance suite: sixteen numbered criteria with fixed tolerances.

Each criterion is a function returning a :class:`CriterionResult`; the
deterministic text in ``detail`` is what ``fracdiff verify`` prints, so two
runs with the same inputs produce byte-identical reports.  Criterion 16
(determinism of the report itself) needs two complete runs and is checked
by :func:`determinism_check`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fdsolver import (
    CheckerboardField,
    ProblemSpec,
    comparison_check,
    decay_check,
    max_principle_check,
    solve_l1,
    solve_volterra,
)
from .fracops import (
    SampledPath,
    TimeGrid,
    conv_halfline,
    convexity_gap,
    default_grading,
    fundamental_identity_residual,
    ident1_residual,
    l2norm_gap,
)
from .fullspace import (
    decay_slope_scan,
    heat_kernel,
    invert_Z,
    profile_convergence,
    self_similarity_check,
)
from .mlf import RelaxationQuery, mittag_leffler, relaxation_bounds, relaxation_values
from .probe import SourceFamily, critical_exponent, harnack_scan, holder_seminorm
from .reference import load_ml_reference
from .spectral import IntervalDomain

__all__ = [
    "CriterionResult",
    "CRITERIA",
    "QUICK",
    "run_criterion",
    "run_suite",
    "format_report",
    "determinism_check",
]

UNIT = IntervalDomain(1.0)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.detail}"


def _g(x) -> str:
    return f"{x:.3g}"


# --- special functions and identities ---------------------------------------

def c01_mittag_leffler():
    worst_lo = worst_hi = 0.0
    for alpha, (x, e) in load_ml_reference().items():
        rel = np.abs(mittag_leffler(alpha, x) / e - 1)
        worst_lo = max(worst_lo, rel[x <= 5].max())
        worst_hi = max(worst_hi, rel[x >= 5].max())
    x = np.linspace(0, 50, 501)
    e1 = float(np.max(np.abs(mittag_leffler(1.0, x) / np.exp(-x) - 1)))
    ok = worst_lo <= 1e-10 and worst_hi <= 1e-8 and e1 <= 1e-12
    return ok, f"rel err x<=5 {_g(worst_lo)}, x>=5 {_g(worst_hi)}, alpha=1 {_g(e1)}"


def c02_sandwich():
    alphas = np.linspace(0.1, 0.9, 9)
    mus = np.geomspace(1e-2, 1e3, 20)
    ts = np.geomspace(1e-3, 1e3, 40)
    bad = 0
    for a in alphas:
        s = relaxation_values(a, mus[:, None], ts[None, :])
        for i, mu in enumerate(mus):
            for j, t in enumerate(ts):
                lo, up = relaxation_bounds(RelaxationQuery(float(a), float(mu), float(t)))
                bad += not (lo <= s[i, j] <= up)
    return bad == 0, f"{bad} violations on {alphas.size * mus.size * ts.size} points"


def c03_volterra_residual():
    worst = 0.0
    for alpha in (0.3, 0.5, 0.7):
        grid = TimeGrid(1.0, 2048, 2.0 / alpha)
        mu = np.array([1.0, 10.0])
        s = relaxation_values(alpha, mu[None, :], grid.nodes[:, None])
        conv = conv_halfline(alpha, SampledPath(grid, s)).values
        worst = max(worst, float(np.max(np.abs(s + mu * conv - 1))))
    return worst <= 1e-6, f"max residual {_g(worst)}"


def _smooth_bench(N):
    g = TimeGrid(1.0, N)
    t = g.nodes
    return g, SampledPath(g, np.exp(-t)), SampledPath(g, -np.exp(-t)), SampledPath(g, np.sin(t))


def c04_fundamental_identity():
    res = []
    for N in (512, 1024):
        _, k, kd, u = _smooth_bench(N)
        res.append(np.max(np.abs(fundamental_identity_residual(np.exp, np.exp, k, kd, u).gap)))
    factor = res[0] / res[1]
    _, k, kd, u = _smooth_bench(512)
    a = fundamental_identity_residual(lambda y: 0.5 * y * y, lambda y: y, k, kd, u)
    b = ident1_residual(k, kd, u)
    agree = float(max(np.max(np.abs(a.lhs - b.lhs)), np.max(np.abs(a.rhs - b.rhs))))
    ok = factor >= 1.8 and agree <= 1e-12
    return ok, f"residual {_g(res[0])} -> {_g(res[1])} (factor {factor:.3f}), paths agree to {_g(agree)}"


def _random_path(rng, t):
    c = rng.normal(size=4)
    ph = rng.uniform(0, 6, size=4)
    fr = rng.uniform(0.5, 8, size=4)
    smooth = np.sum(c[:, None] * np.sin(fr[:, None] * t + ph[:, None]), axis=0)
    return smooth + rng.normal() * np.abs(t - rng.uniform(t[0], t[-1]))


def c05_convexity_l2():
    rng = np.random.default_rng(42)
    g, k, kd, _ = _smooth_bench(256)
    conv = np.inf
    for _ in range(100):
        u = SampledPath(g, _random_path(rng, g.nodes))
        r = convexity_gap(lambda y: y**4, lambda y: 4 * y**3, k, kd, u, rng.normal())
        conv = min(conv, r.gap.min())
    g, k, kd, _ = _smooth_bench(128)
    l2 = np.inf
    for trial in range(100):
        v = np.cumsum(rng.normal(size=(g.N + 1, 32)), axis=0) * 0.1
        v0 = np.zeros(32) if trial % 5 == 0 else rng.normal(size=32)
        l2 = min(l2, l2norm_gap(SampledPath(g, v), v0, k, kd, dx=1 / 32).gap.min())
    ok = conv >= -1e-10 and l2 >= -1e-10
    return ok, f"min gap convexity {_g(conv)}, l2 norm {_g(l2)}"


# --- bounded domain -----------------------------------------------------------

def _rough_spec(seed, M=40, N=80, alpha=0.5):
    rng = np.random.default_rng(seed)
    A = CheckerboardField(0.2, 5.0, seed, 1.0, 1.0)
    return ProblemSpec(alpha, UNIT, M, TimeGrid(1.0, N, default_grading(alpha)), A=A,
                       u0=rng.uniform(-1, 1, M + 1))


def c06_solver_cross_validation():
    alpha = 0.5
    errs, vol = [], []
    for M, N in ((200, 1000), (400, 2000)):
        sp = ProblemSpec(alpha, IntervalDomain(math.pi), M, TimeGrid(1.0, N, default_grading(alpha)),
                         u0=np.sin)
        ex = relaxation_values(alpha, 1.0, 1.0) * np.sin(sp.x)
        tr = solve_l1(sp)
        errs.append(sp.l2(tr.u[-1] - ex) / sp.l2(ex))
        vol.append(sp.l2(solve_volterra(sp).u[-1] - tr.u[-1]) / sp.l2(ex))
    ok = errs[0] <= 0.02 and errs[1] < errs[0] and all(v <= 2 * e for v, e in zip(vol, errs))
    return ok, (f"L1 error {_g(errs[0])} -> {_g(errs[1])}, "
                f"Volterra difference {_g(vol[0])} -> {_g(vol[1])}")


def c07_max_principle():
    worst = later = -np.inf
    for seed in range(50):
        tr = solve_l1(_rough_spec(seed))
        worst = max(worst, max_principle_check(tr))
        later = max(later, float(np.max(tr.u[1:]) - max(0.0, np.max(tr.spec.u0))))
    return worst <= 1e-12, f"max margin {_g(worst)} over 50 runs ({_g(later)} for t > 0)"


def c08_comparison():
    worst = np.inf
    for seed in range(50):
        sp = _rough_spec(seed)
        rng = np.random.default_rng(1000 + seed)
        hi = sp.replace(u0=sp.u0 + rng.uniform(0, 1, sp.M + 1))
        worst = min(worst, comparison_check(solve_l1(sp), solve_l1(hi)))
    return worst >= -1e-12, f"min(v - u) {_g(worst)} over 50 pairs"


def c09_decay_envelope():
    worst = 0.0
    for seed in range(20):
        rec = decay_check(solve_l1(_rough_spec(seed)))
        worst = max(worst, float(np.max(rec.l2norm / rec.envelope)))
    phi = lambda x: math.sqrt(2) * np.sin(math.pi * x)  # noqa: E731
    eq = 0.0
    for alpha in (0.3, 0.5, 0.9):
        sp = ProblemSpec(alpha, UNIT, 100, TimeGrid(1.0, 400, default_grading(alpha)), A=0.2, u0=phi)
        rec = decay_check(solve_l1(sp))
        eq = max(eq, float(np.max(np.abs(rec.l2norm / rec.envelope - 1))))
    ok = worst <= 1.02 and eq <= 0.01
    return ok, f"max norm/envelope {worst:.4f} over 20 runs, equality case deviation {_g(eq)}"


# --- full space ---------------------------------------------------------------

def c10_decay_slopes():
    parts, ok = [], True
    for d in (1, 2, 3, 6, 8):
        scan = decay_slope_scan(0.5, d)
        ok &= scan.conclusive and abs(scan.deviation) <= 0.05
        parts.append(f"d={d} {scan.slope:.4f}")
    heat = decay_slope_scan(1.0, 2)
    ok &= abs(heat.slope + 0.5) <= 0.05
    return bool(ok), ", ".join(parts) + f", heat d=2 {heat.slope:.4f}"


def _gauss_panels(a, b, panels, order=20):
    xg, wg = np.polynomial.legendre.leggauss(order)
    e = np.linspace(a, b, panels + 1)
    x = (0.5 * (e[:-1, None] + e[1:, None]) + 0.5 * np.diff(e)[:, None] * xg).ravel()
    w = (0.5 * np.diff(e)[:, None] * wg).ravel()
    return x, w


def c11_fundamental_solution():
    x, w = _gauss_panels(0.0, 20.0, 6)
    z = invert_Z(0.5, 1, 1.0, x).Z
    mass = abs(2 * float(np.sum(w * z)) - 1)
    zmin = float(z.min())
    ss = self_similarity_check(0.5, 1, [0.5, 2.0, 10.0], np.linspace(0, 5, 21))
    r = np.array([0.05, 0.3, 1.0, 2.5, 6.0])
    heat = float(np.max(np.abs(invert_Z(1.0, 1, 0.8, r).Z - heat_kernel(1, 0.8, r))))
    ok = mass <= 1e-6 and zmin >= -1e-10 and ss.ok and heat <= 1e-8
    return ok, (f"mass error {_g(mass)}, min Z {_g(zmin)}, "
                f"self-similarity defect {_g(float(np.max(ss.defect)))}, heat {_g(heat)}")


def c12_singularity():
    r = 2.0 ** -np.arange(1, 9)
    z = invert_Z(0.5, 3, 1.0, r).Z
    growth = float(z[-1] / z[0])
    ok = bool(np.all(np.diff(z) > 0)) and growth >= 100
    return ok, f"increasing {bool(np.all(np.diff(z) > 0))}, growth {growth:.4g}"


def c13_profile():
    parts, ok = [], True
    for alpha in (0.4, 0.7):
        scan = profile_convergence(alpha)
        ok &= scan.conclusive and scan.slope <= -alpha / 2 + 0.05
        parts.append(f"alpha={alpha} slope {scan.slope:.4f}")
    return bool(ok), ", ".join(parts)


# --- probes -------------------------------------------------------------------

def _critical_scan(alpha, n_r):
    fam = SourceFamily(alpha)
    pc = critical_exponent(alpha, 1)
    r = 2.0 ** -np.arange(1, n_r + 1)[::-1]
    scan = harnack_scan(fam, [0.9 * pc, 1.5 * pc], fam.boxes(r, 1e-3 * r.min() ** (2 / alpha)))
    above = scan.ratios(1.5 * pc)
    grows = bool(np.all(np.diff(above) > 0)) and above[-1] / above[0] > 10
    return scan.spread(0.9 * pc), float(above[-1] / above[0]), grows


def c14_critical_exponent():
    s_frac, g_frac, ok_frac = _critical_scan(0.5, 8)
    s_heat, g_heat, ok_heat = _critical_scan(1.0, 16)
    ok = s_frac <= 10 and ok_frac and s_heat <= 10 and ok_heat
    return ok, (f"alpha=0.5 spread {s_frac:.4g} below, growth {g_frac:.4g} above; "
                f"alpha=1 spread {s_heat:.4g}, growth {g_heat:.4g}")


def c15_holder():
    alpha, e = 0.5, 0.1
    vals = []
    for M, N in ((32, 64), (64, 128)):
        A = CheckerboardField(0.2, 5.0, 1, 1.0, 1.0)
        sp = ProblemSpec(alpha, UNIT, M, TimeGrid(1.0, N, default_grading(alpha)), A=A,
                         u0=lambda x: np.exp(-40 * (x - 0.5) ** 2) * np.sin(np.pi * x))
        vals.append(holder_seminorm(solve_l1(sp), None, None, (0.25, 0.75, 0.25, 0.75),
                                    alpha * e / 2, e))
    change = abs(vals[1] / vals[0] - 1)
    return change <= 0.1, f"seminorm {vals[0]:.6g} -> {vals[1]:.6g}, change {_g(change)}"


CRITERIA: dict[int, tuple[str, Callable]] = {
    1: ("Mittag-Leffler accuracy", c01_mittag_leffler),
    2: ("relaxation sandwich", c02_sandwich),
    3: ("relaxation Volterra residual", c03_volterra_residual),
    4: ("fundamental identity", c04_fundamental_identity),
    5: ("convexity and L2 inequalities", c05_convexity_l2),
    6: ("solver cross-validation", c06_solver_cross_validation),
    7: ("maximum principle", c07_max_principle),
    8: ("comparison principle", c08_comparison),
    9: ("decay envelope", c09_decay_envelope),
    10: ("full-space decay slopes", c10_decay_slopes),
    11: ("fundamental solution d=1", c11_fundamental_solution),
    12: ("singularity d=3", c12_singularity),
    13: ("profile convergence", c13_profile),
    14: ("critical exponent scan", c14_critical_exponent),
    15: ("Hoelder seminorm stability", c15_holder),
}
QUICK = (1, 2, 3, 4, 5, 11, 12)
DETERMINISM = (16, "determinism")


def run_criterion(number: int) -> CriterionResult:
    name, fn = CRITERIA[number]
    ok, detail = fn()
    return CriterionResult(number, name, bool(ok), detail)


def _threads(threads):
    if threads is None:
        threads = int(os.environ.get("FRACDIFF_THREADS", "1"))
    return max(1, int(threads))


def run_suite(suite: str = "full", threads: int | None = None) -> list[CriterionResult]:
    """Run criteria 1-15 (``full``) or the :data:`QUICK` subset, ordered by number.

    Items may run concurrently (``threads`` or ``FRACDIFF_THREADS``); the
    results are assembled in criterion order either way.
    """
    if suite not in ("quick", "full"):
        raise ValueError(f"unknown suite {suite!r}")
    numbers = QUICK if suite == "quick" else tuple(CRITERIA)
    n = _threads(threads)
    if n == 1:
        return [run_criterion(k) for k in numbers]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(run_criterion, numbers))


def format_report(results: list[CriterionResult]) -> str:
    return "".join(r.line() + "\n" for r in results)


def determinism_check(first: str, second: str) -> CriterionResult:
    same = first == second
    detail = f"{len(first)} bytes, identical" if same else "reports differ"
    return CriterionResult(DETERMINISM[0], DETERMINISM[1], same, detail)
