import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracdiff.fdsolver import (
    CheckerboardField,
    ProblemSpec,
    SpecViolation,
    TestFunction,
    Trajectory,
    assemble_elliptic,
    boundedness_probe,
    comparison_check,
    decay_check,
    max_principle_check,
    solve_l1,
    solve_volterra,
    strict_interior_check,
    weak_residual,
)
from fracdiff.fracops import TimeGrid, default_grading
from fracdiff.mlf import relaxation_values
from fracdiff.spectral import EigenSystem, IntervalDomain, evaluate, evolve, project

PI_DOM = IntervalDomain(math.pi)
UNIT = IntervalDomain(1.0)


def rough_spec(seed, M=40, N=80, alpha=0.5, **kw):
    rng = np.random.default_rng(seed)
    A = kw.pop("A", CheckerboardField(0.2, 5.0, seed, 1.0, 1.0))
    u0 = kw.pop("u0", rng.uniform(-1, 1, M + 1))
    return ProblemSpec(alpha, UNIT, M, TimeGrid(1.0, N, default_grading(alpha)), A=A, u0=u0, **kw)


def exact_phi1(alpha, spec):
    return relaxation_values(alpha, (math.pi / spec.domain.L) ** 2, spec.grid.nodes)


# --- elliptic operator -------------------------------------------------------

def test_elliptic_annihilates_affine():
    M = 16
    K = assemble_elliptic(np.ones(M), 1.0 / M)
    x = np.linspace(0, 1, M + 1)
    assert np.max(np.abs(K.apply(3 * x - 1))) <= 1e-11


def test_elliptic_eigenfunction_second_order():
    errs = []
    for M in (32, 64, 128):
        L = 2.0
        x = np.linspace(0, L, M + 1)
        u = np.sin(math.pi * x / L)
        K = assemble_elliptic(np.ones(M), L / M)
        errs.append(np.max(np.abs(K.apply(u) + (math.pi / L) ** 2 * u[1:-1])))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.05)


def test_elliptic_apply_matches_dense():
    rng = np.random.default_rng(1)
    M = 12
    a = rng.uniform(0.2, 5, M)
    K = assemble_elliptic(a, 0.1)
    u = rng.normal(size=M + 1)
    u[0] = u[-1] = 0
    assert np.allclose(K.apply(u), K.dense() @ u[1:-1], rtol=0, atol=1e-10)


def test_checkerboard_m_matrix_pattern():
    A = CheckerboardField(0.2, 5.0, 3, 1.0, 1.0)
    xh = (np.arange(50) + 0.5) / 50
    a = A(0.4, xh)
    assert set(np.unique(a)) <= {0.2, 5.0}
    S = -assemble_elliptic(a, 1 / 50).dense()
    off = S - np.diag(np.diag(S))
    assert np.all(off <= 0)
    assert np.all(np.diag(S) >= np.sum(np.abs(off), axis=1))
    assert np.all(np.linalg.inv(S) >= -1e-12)


def test_elliptic_rejects_below_nu():
    with pytest.raises(SpecViolation):
        assemble_elliptic(np.array([1.0, 0.1, 1.0]), 0.1, nu=0.2)
    with pytest.raises(SpecViolation):
        assemble_elliptic(np.array([1.0, 0.0]), 0.1)


def test_checkerboard_grid_independent():
    A = CheckerboardField(0.2, 5.0, 7, 2.0, 3.0)
    assert A(0.3, 1.1) == A(np.array([0.3]), np.array([1.1]))[0]
    assert A.pattern.shape == (8, 8)
    assert np.array_equal(A.pattern, CheckerboardField(0.2, 5.0, 7, 2.0, 3.0).pattern)


# --- problem validation ------------------------------------------------------

def test_spec_rejects_bad_coefficients():
    g = TimeGrid(1.0, 4)
    with pytest.raises(SpecViolation):
        ProblemSpec(0.5, UNIT, 8, g, A=lambda t, x: 0.5 + 0 * x, nu=1.0)
    with pytest.raises(SpecViolation):
        ProblemSpec(0.5, UNIT, 8, g, A=lambda t, x: x - 0.5)
    with pytest.raises(SpecViolation):
        ProblemSpec(1.5, UNIT, 8, g)
    with pytest.raises(SpecViolation):
        ProblemSpec(0.5, UNIT, 8, g, u0=np.zeros(5))


def test_boundary_equals_dirichlet_data():
    sp = ProblemSpec(0.5, UNIT, 10, TimeGrid(1.0, 10), u0=1.0, g=(0.25, -0.5))
    tr = solve_l1(sp)
    assert np.all(tr.u[:, 0] == 0.25) and np.all(tr.u[:, -1] == -0.5)


# --- solvers -----------------------------------------------------------------

def test_l1_against_spectral_and_refinement():
    alpha = 0.5
    errs, vol = [], []
    for M, N in ((200, 1000), (400, 2000)):
        sp = ProblemSpec(alpha, PI_DOM, M, TimeGrid(1.0, N, default_grading(alpha)), u0=np.sin)
        ex = relaxation_values(alpha, 1.0, 1.0) * np.sin(sp.x)
        tr = solve_l1(sp)
        errs.append(sp.l2(tr.u[-1] - ex) / sp.l2(ex))
        vol.append(sp.l2(solve_volterra(sp).u[-1] - tr.u[-1]) / sp.l2(ex))
    assert errs[0] <= 0.02
    assert errs[1] < errs[0]
    assert vol[0] <= 2 * errs[0] and vol[1] <= 2 * errs[1]


def test_l1_multimode_against_spectral():
    alpha, L = 0.6, 1.0
    f0 = lambda x: x * (1 - x) * (1 + np.sin(3 * x))  # noqa: E731
    sp = ProblemSpec(alpha, UNIT, 100, TimeGrid(0.5, 400, default_grading(alpha)), u0=f0)
    st0 = project(f0, EigenSystem(IntervalDomain(L), 60))
    ex = evaluate(evolve(st0, alpha, 0.5), sp.x)
    tr = solve_l1(sp)
    assert sp.l2(tr.u[-1] - ex) / sp.l2(ex) <= 2e-3


def test_alpha_one_is_implicit_euler():
    M, N, T = 30, 25, 0.3
    rng = np.random.default_rng(4)
    A = CheckerboardField(0.2, 5.0, 4, T, 1.0)
    sp = ProblemSpec(1.0, UNIT, M, TimeGrid(T, N, 2.0), A=A, u0=rng.uniform(0, 1, M + 1),
                     c=0.3, f=lambda t, x: np.cos(t + x))
    tr = solve_l1(sp)
    t = sp.grid.nodes
    h = 1.0 / M
    u = sp.u0[1:-1].copy()
    for n in range(1, N + 1):
        a = A(t[n], sp.x_half)
        K = (np.diag(-(a[:-1] + a[1:])) + np.diag(a[1:-1], 1) + np.diag(a[1:-1], -1)) / h**2
        dt = t[n] - t[n - 1]
        S = np.eye(M - 1) / dt - K + 0.3 * np.eye(M - 1)
        u = np.linalg.solve(S, u / dt + np.cos(t[n] + sp.x[1:-1]))
    assert np.max(np.abs(tr.u[-1, 1:-1] - u)) <= 1e-12


def test_linearity():
    sp = rough_spec(2, f=lambda t, x: np.sin(5 * x) * t)
    two = sp.replace(u0=2 * sp.u0, f=lambda t, x: 2 * np.sin(5 * x) * t)
    for solve in (solve_l1, solve_volterra):
        a, b = solve(sp).u, solve(two).u
        assert np.max(np.abs(b - 2 * a)) <= 1e-12
    # additivity
    p = sp.replace(f=0.0)
    q = sp.replace(u0=0.0)
    assert np.max(np.abs(solve_l1(p).u + solve_l1(q).u - solve_l1(sp).u)) <= 1e-12


def test_volterra_zero_data():
    sp = rough_spec(0, u0=0.0)
    assert np.all(solve_volterra(sp).u == 0)


def test_volterra_near_heat():
    sp = ProblemSpec(0.999, PI_DOM, 100, TimeGrid(1.0, 400), u0=np.sin)
    heat = math.exp(-1.0) * np.sin(sp.x)
    err = sp.l2(solve_volterra(sp).u[-1] - heat) / sp.l2(heat)
    assert err <= 2e-3


# --- weak formulation --------------------------------------------------------

def _benchmark(M, N):
    return ProblemSpec(0.5, PI_DOM, M, TimeGrid(1.0, N, 3.0), u0=np.sin)


def test_weak_residual_exact_solution_small():
    sp = _benchmark(160, 320)
    ex = exact_phi1(0.5, sp)[:, None] * np.sin(sp.x)[None, :]
    assert weak_residual(Trajectory(sp, ex, "exact")) <= 1e-5


def test_weak_residual_refinement():
    r = [weak_residual(solve_l1(_benchmark(M, N))) for M, N in ((20, 40), (40, 80), (80, 160))]
    assert r[0] / r[1] >= 1.5 and r[1] / r[2] >= 1.5


def test_weak_residual_empty_family_and_validation():
    tr = solve_l1(_benchmark(10, 10))
    assert weak_residual(tr, eta_family=[]) == 0.0
    with pytest.raises(SpecViolation):
        weak_residual(tr, eta_family=[TestFunction(0.1, 0.5)])
    with pytest.raises(SpecViolation):
        weak_residual(tr, eta_family=[TestFunction(1.5, 0.5, power=0)])


def test_test_function_derivatives():
    eta = TestFunction(0.5, 0.3, 3, 1)
    t = np.linspace(0.05, 0.95, 7)
    p, dp = eta.time(t, 1.0)
    e = 1e-6
    fd = (eta.time(t + e, 1.0)[0] - eta.time(t - e, 1.0)[0]) / (2 * e)
    assert np.allclose(dp, fd, atol=1e-8)
    x = np.linspace(0.25, 0.75, 9)
    b, db = eta.space(x)
    fd = (eta.space(x + e)[0] - eta.space(x - e)[0]) / (2 * e)
    assert np.allclose(db, fd, atol=1e-7)


# --- principles ---------------------------------------------------------------

@pytest.mark.parametrize("seed", range(10))
def test_max_principle_rough(seed):
    assert max_principle_check(solve_l1(rough_spec(seed))) <= 1e-12


def test_min_principle_nonpositive_data():
    sp = rough_spec(11)
    neg = sp.replace(u0=-np.abs(sp.u0))
    assert np.max(solve_l1(neg).u) <= 1e-12


def test_constant_datum_pulled_down():
    sp = rough_spec(5, u0=2.0)
    tr = solve_l1(sp)
    assert max_principle_check(tr) <= 1e-12
    assert np.all(tr.u[1:, 1:-1] < 2.0)


def test_max_principle_refuses_forcing():
    with pytest.raises(SpecViolation):
        max_principle_check(solve_l1(rough_spec(0, f=1.0)))


@pytest.mark.parametrize("seed", range(10))
def test_comparison_rough(seed):
    sp = rough_spec(seed)
    rng = np.random.default_rng(100 + seed)
    hi = sp.replace(u0=sp.u0 + rng.uniform(0, 1, sp.M + 1))
    assert comparison_check(solve_l1(sp), solve_l1(hi)) >= -1e-12


def test_comparison_identical_and_forced():
    sp = rough_spec(3)
    a = solve_l1(sp)
    assert comparison_check(a, solve_l1(sp)) == 0.0
    b = solve_l1(sp.replace(f=1.0))
    assert np.min(b.u[1:, 1:-1] - a.u[1:, 1:-1]) > 0


def test_comparison_refuses_unordered():
    sp = rough_spec(3)
    with pytest.raises(SpecViolation):
        comparison_check(solve_l1(sp.replace(u0=sp.u0 + 1)), solve_l1(sp))
    with pytest.raises(SpecViolation):
        comparison_check(solve_l1(sp), solve_l1(rough_spec(4, u0=sp.u0 + 1)))


def test_strict_interior():
    bump = lambda x: np.where(np.abs(x - 0.5) < 0.1, 1.0, 0.0)  # noqa: E731
    for alpha in (0.5, 1.0):
        sp = rough_spec(0, alpha=alpha, u0=bump, A=1.0)
        assert strict_interior_check(solve_l1(sp)) > 0
    phi = lambda x: math.sqrt(2) * np.sin(math.pi * x)  # noqa: E731
    sp = rough_spec(0, u0=phi, A=1.0)
    m = strict_interior_check(solve_l1(sp))
    assert m > 0
    with pytest.raises(SpecViolation):
        strict_interior_check(solve_l1(rough_spec(0, u0=0.0)))


# --- decay ---------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_decay_rough(seed):
    rec = decay_check(solve_l1(rough_spec(seed)))
    assert rec.ok
    assert np.all(rec.l2norm <= 1.02 * rec.envelope)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9])
def test_decay_equality_case(alpha):
    phi = lambda x: math.sqrt(2) * np.sin(math.pi * x)  # noqa: E731
    sp = ProblemSpec(alpha, UNIT, 100, TimeGrid(1.0, 400, default_grading(alpha)), A=0.2, u0=phi)
    rec = decay_check(solve_l1(sp))
    assert np.max(np.abs(rec.l2norm / rec.envelope - 1)) <= 0.01


def test_decay_nu_scaling_tightens():
    base = rough_spec(6, u0=lambda x: x * (1 - x))
    A2 = CheckerboardField(0.4, 10.0, 6, 1.0, 1.0)
    dbl = base.replace(A=A2, nu=None, Lam=None)
    r1, r2 = decay_check(solve_l1(base)), decay_check(solve_l1(dbl))
    assert np.all(r2.envelope[1:] < r1.envelope[1:])
    assert r1.ok and r2.ok


def test_decay_refuses_reaction():
    with pytest.raises(SpecViolation):
        decay_check(solve_l1(rough_spec(0, c=1.0)))


# --- boundedness ---------------------------------------------------------------

def test_boundedness_stable_under_refinement():
    Cs = []
    for M, N in ((40, 80), (80, 160), (160, 320)):
        sp = rough_spec(8, M=M, N=N, u0=lambda x: np.cos(7 * x), f=lambda t, x: np.sign(np.sin(9 * x)))
        Cs.append(boundedness_probe(solve_l1(sp)).C)
    assert max(Cs) / min(Cs) <= 1.2


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 1.0))
def test_property_max_and_comparison(seed, alpha):
    sp = rough_spec(seed, M=16, N=20, alpha=alpha)
    a = solve_l1(sp)
    assert max_principle_check(a) <= 1e-12
    b = solve_l1(sp.replace(u0=np.maximum(sp.u0, 0.0) + 0.1))
    assert comparison_check(a, b) >= -1e-12
