import numpy as np
import pytest

from evolsolve.canon import CANON1_EXACT, canon1, canon_na
from evolsolve.continuation import direct_monolithic_solve, plan_windows, solve_cauchy, solve_ibvp
from evolsolve.contraction import SolverSettings
from evolsolve.domain import CoefficientField, ProblemSpec, validate_problem
from evolsolve.errors import IncompatibleData, IncompatibleInitialDatum, WindowUnderflow
from evolsolve.frozen import lift_boundary, semigroup_trajectory, solve_forced
from evolsolve.manufacture import solution_error
from evolsolve.operators import apply_boundary, freeze


def _problem(a="1", n_cells=16, n_steps=100, **kw):
    return validate_problem(ProblemSpec(CoefficientField(a=a), n_cells=n_cells, n_steps=n_steps, **kw))


def test_autonomous_plan_is_one_window():
    plan = plan_windows(_problem("1 + x"))
    assert len(plan.windows) == 1
    assert plan.planned_ratio == (0.0,)


def test_sine_coefficient_splits_in_two():
    plan = plan_windows(_problem("2 + sin(t)", n_steps=1000), SolverSettings(target=0.5), calibration=1.0)
    assert len(plan.windows) == 2
    assert plan.windows[0].b == pytest.approx(np.pi / 6, abs=2e-3)
    assert all(r < 0.5 for r in plan.planned_ratio)


def test_plan_tiles_interval():
    p = validate_problem(canon_na(n_cells=16, n_steps=200))
    plan = plan_windows(p, SolverSettings(target=0.2), calibration=3.0)
    assert plan.windows[0].k_a == 0 and plan.windows[-1].k_b == 200
    assert all(l.k_b == r.k_a for l, r in zip(plan.windows[:-1], plan.windows[1:]))
    assert all(r < 0.2 for r in plan.planned_ratio)
    fixed = plan_windows(p, SolverSettings(windows=3))
    assert [w.n_steps for w in fixed.windows] == [67, 66, 67]


def test_resolved_jump_and_underflow():
    # a jumps at t = 0.505, between grid times 0.50 and 0.51
    small = _problem("2 + 0.2*(t - 0.505)/abs(t - 0.505)")
    plan = plan_windows(small, SolverSettings(target=0.5), calibration=1.0)
    assert all(r < 0.5 for r in plan.planned_ratio)
    big = _problem("2 + (t - 0.505)/abs(t - 0.505)")
    with pytest.raises(WindowUnderflow):
        plan_windows(big, SolverSettings(target=0.5), calibration=1.0)


def test_zero_data_zero_solution():
    p = validate_problem(canon_na(n_cells=16, n_steps=100)).with_data(
        f=np.zeros((101, 17)), g=np.zeros((101, 2)), u0=np.zeros(17)
    )
    u, report = solve_ibvp(p, settings=SolverSettings(windows=3))
    assert not np.any(u.frames)
    assert all(s.iterations == 1 and s.converged for s in report.stats)


def test_canon1_accuracy(canon1_problem):
    u, report = solve_ibvp(canon1_problem)
    assert solution_error(u, CANON1_EXACT, canon1_problem) <= 5e-3
    assert len(report.windows) == 1


def test_canon_na_matches_direct_and_residuals():
    p = validate_problem(canon_na(n_cells=32, n_steps=200))
    tol = 1e-10
    u, report = solve_ibvp(p, settings=SolverSettings(tol=tol, windows=4))
    direct = direct_monolithic_solve(p)
    assert np.max(np.abs(u.frames - direct.frames)) <= 20 * tol
    for s, r in zip(report.stats, report.residuals):
        assert r <= 10 * tol * (1 + s.data_norm)
    # boundary rows reproduce g up to the iteration tolerance
    closure = apply_boundary(p.alpha[1:], p.beta[1:], u.frames[1:], p.h) - p.g[1:]
    assert np.max(np.abs(closure)) <= 20 * tol * (1 + np.max(np.abs(p.g)))
    assert report.factorizations == 4


def test_window_solutions_vanish_before_window_start():
    p = validate_problem(canon_na(n_cells=16, n_steps=100))
    from evolsolve.contraction import iterate_window

    w = p.time_grid.window(40, 70)
    f = np.zeros((101, 17))
    f[41:71, 1:-1] = 1.0
    _, omega, _ = iterate_window(freeze(p, 40), w, f, np.zeros((101, 2)))
    assert not np.any(omega.frames[:41]) and not np.any(omega.frames[71:])


def test_midpoint_freeze_matches_direct():
    p = validate_problem(canon_na(n_cells=16, n_steps=100))
    tol = 1e-10
    u, report = solve_ibvp(p, settings=SolverSettings(tol=tol, windows=2, freeze="midpoint"))
    assert [s.freeze_time for s in report.stats] == pytest.approx([0.25, 0.75])
    assert np.max(np.abs(u.frames - direct_monolithic_solve(p).frames)) <= 20 * tol


def test_halving_recovers_from_no_contraction():
    p = validate_problem(
        ProblemSpec(CoefficientField(a="1 + 5*t"), f="1", u0="sin(pi*x)", n_cells=16, n_steps=100)
    )
    tol = 1e-10
    u, report = solve_ibvp(p, settings=SolverSettings(tol=tol, windows=1))
    assert report.halvings >= 1
    assert len(report.windows) == report.halvings + 1
    assert np.max(np.abs(u.frames - direct_monolithic_solve(p).frames)) <= 20 * tol * np.max(np.abs(u.frames))


def test_stability_constant_under_step_halving():
    values = []
    for n_steps in (250, 500, 1000):
        p = validate_problem(canon_na(n_cells=32, n_steps=n_steps))
        values.append(solve_ibvp(p)[1].c_est)
    assert max(values) / min(values) < 2.0
    assert all(np.isfinite(values))


def test_incompatible_data_rejected():
    p = validate_problem(ProblemSpec(u0="1 - x", n_cells=16, n_steps=50))
    with pytest.raises(IncompatibleData) as info:
        solve_ibvp(p)
    assert not info.value.report.passed


def test_cauchy_rejects_boundary_violation():
    p = validate_problem(ProblemSpec(u0="1 - x", n_cells=16, n_steps=50))
    with pytest.raises(IncompatibleInitialDatum):
        solve_cauchy(p)


def test_cauchy_eigenmode_decay():
    p = validate_problem(ProblemSpec(u0="sin(pi*x)", n_cells=4, n_steps=100, T=0.1))
    u, _ = solve_cauchy(p)
    factor = 1.0 / (1.0 + p.dt * 16 * (2 - np.sqrt(2.0)))
    expected = factor ** np.arange(101)[:, None] * p.u0[None, :]
    np.testing.assert_allclose(u.frames, expected, atol=1e-12)
    l2 = np.linalg.norm(u.frames, axis=1)
    assert np.all(np.diff(l2) < 0)


def test_cauchy_homogeneous_rows(canon1_problem):
    u, _ = solve_cauchy(canon1_problem)
    closure = apply_boundary(canon1_problem.alpha, canon1_problem.beta, u.frames, canon1_problem.h)
    assert np.max(np.abs(closure)) <= 1e-9


def test_direct_autonomous_superposition(rng):
    p = validate_problem(ProblemSpec(CoefficientField(a="1 + x", c="-1"), n_cells=16, n_steps=50))
    f = rng.standard_normal((51, 17))
    f[0] = 0.0
    g = rng.standard_normal((51, 2))
    g[0] = 0.0
    frozen = freeze(p, 0)
    w = p.time_grid.full
    ref = solve_forced(frozen, f, w).u.frames + lift_boundary(frozen, g, w).u.frames
    direct = direct_monolithic_solve(p, f, g, np.zeros(17)).frames
    # interior forcing only enters interior rows in both paths
    f_int = f.copy()
    f_int[:, [0, -1]] = 0.0
    ref = solve_forced(frozen, f_int, w).u.frames + lift_boundary(frozen, g, w).u.frames
    np.testing.assert_allclose(direct, ref, atol=1e-10)
    assert not np.any(direct_monolithic_solve(p, 0 * f, 0 * g, np.zeros(17)).frames)


def test_direct_counts_one_factorization_per_step():
    p = _problem(n_steps=37)
    _, info = direct_monolithic_solve(p, return_info=True)
    assert info.factorizations == 37


def test_lifting_is_frozen_semigroup():
    p = validate_problem(canon1(n_cells=16, n_steps=50))
    v = semigroup_trajectory(freeze(p, 0), p.u0, 50)
    u, _ = solve_ibvp(p.with_data(f=np.zeros((51, 17))))
    np.testing.assert_allclose(u.frames, v, atol=1e-12)
