import numpy as np
import pytest
from scipy.special import erfc

from evolsolve.canon import canon_na
from evolsolve.domain import BoundarySpec, EndpointSpec, ProblemSpec, SpaceTimeFunction, validate_problem
from evolsolve.errors import IncompatibleBoundaryData, WindowMismatch
from evolsolve.frozen import (
    lift_boundary,
    semigroup_apply,
    semigroup_trajectory,
    solve_forced,
    solve_forced_shifted,
    step_residual,
)
from evolsolve.operators import freeze


def _heat(n_cells=16, n_steps=50, T=1.0):
    return validate_problem(ProblemSpec(n_cells=n_cells, n_steps=n_steps, T=T))


def _forcing(p, expr):
    t = p.time_grid.times[:, None]
    x = p.grid.nodes[None, :]
    frames = np.broadcast_to(expr(t, x), (t.size, x.size)).astype(float)
    frames = frames.copy()
    frames[0] = 0.0
    return frames


def test_zero_forcing_gives_zero():
    p = _heat()
    res = solve_forced(freeze(p, 0), np.zeros((51, 17)), p.time_grid.full)
    assert not np.any(res.u.frames)
    assert res.steps == 50 and res.constant is None


def test_scalar_surrogate_one_step(scalar_surrogate):
    p = scalar_surrogate(n_steps=10)
    f = np.ones((11, p.grid.size))
    res = solve_forced(freeze(p, 0), f, p.time_grid.full)
    np.testing.assert_allclose(res.u.frames[1], 0.1 / 1.1, rtol=1e-13)
    np.testing.assert_allclose(res.u.frames[1], 0.090909, atol=1e-6)


def test_shift_reaches_steady_value(scalar_surrogate):
    p = scalar_surrogate(n_steps=200, T=5.0)
    f = np.ones((201, p.grid.size))
    res = solve_forced_shifted(freeze(p, 0), 10.0, f, p.time_grid.full)
    np.testing.assert_allclose(res.u.frames[-1], 1.0 / 11.0, rtol=1e-10)
    assert 10.0 * res.u.max_abs() <= 10.0 / 11.0 + 1e-12


def test_zero_shift_is_bit_identical():
    p = _heat()
    f = np.random.default_rng(0).standard_normal((51, 17))
    frozen = freeze(p, 0)
    a = solve_forced(frozen, f, p.time_grid.full).u.frames
    b = solve_forced_shifted(frozen, 0.0, f, p.time_grid.full).u.frames
    np.testing.assert_array_equal(a, b)
    for gamma in (0.0, 1.0, 100.0):
        assert not np.any(solve_forced_shifted(frozen, gamma, np.zeros_like(f), p.time_grid.full).u.frames)
    with pytest.raises(ValueError):
        solve_forced_shifted(frozen, -1.0, f, p.time_grid.full)


def test_forced_manufactured_convergence():
    # w = t exp(-t) sin(pi x) has zero initial value and zero Dirichlet data
    def error(n_cells, n_steps):
        p = _heat(n_cells, n_steps)
        src = lambda t, x: (1 - t + np.pi**2 * t) * np.exp(-t) * np.sin(np.pi * x)
        f = _forcing(p, src)
        u = solve_forced(freeze(p, 0), f, p.time_grid.full).u.frames
        t = p.time_grid.times[:, None]
        exact = t * np.exp(-t) * np.sin(np.pi * p.grid.nodes[None, :])
        return np.max(np.abs(u - exact))

    e1, e2, e3 = error(16, 100), error(32, 400), error(64, 1600)
    assert e1 > e2 > e3
    assert e1 / e2 > 3.0 and e2 / e3 > 3.0
    assert e3 < 1e-3


def test_support_checked():
    p = _heat()
    f = np.ones((51, 17))
    with pytest.raises(WindowMismatch):
        solve_forced(freeze(p, 0), f, p.time_grid.window(10, 20))


def test_window_output_supported():
    p = _heat()
    w = p.time_grid.window(10, 30)
    f = np.zeros((51, 17))
    f[11:31] = 1.0
    res = solve_forced(freeze(p, 10), f, w)
    assert not np.any(res.u.frames[:11]) and not np.any(res.u.frames[31:])
    assert res.u.support == w
    assert res.residual_norm <= 1e-9


def test_lift_zero_and_exact_rows():
    p = _heat(8, 20)
    frozen = freeze(p, 0)
    w = p.time_grid.full
    assert not np.any(lift_boundary(frozen, np.zeros((21, 2)), w).u.frames)
    g = np.zeros((21, 2))
    g[:, 0] = p.time_grid.times
    u = lift_boundary(frozen, g, w).u.frames
    np.testing.assert_array_equal(u[:, 0], p.time_grid.times)
    np.testing.assert_array_equal(u[:, -1], 0.0)


def test_lift_incompatible():
    p = _heat(8, 20)
    g = np.ones((21, 2))
    with pytest.raises(IncompatibleBoundaryData):
        lift_boundary(freeze(p, 0), g, p.time_grid.full)


def _integrated_erfc(t, x):
    # 4 t i^2erfc(x / 2 sqrt(t)): solves the heat equation, u(t, 0) = t, u(0, x) = 0
    t = np.maximum(t, 1e-300)
    z = x / (2 * np.sqrt(t))
    return t * ((1 + 2 * z**2) * erfc(z) - 2 * z * np.exp(-z**2) / np.sqrt(np.pi))


def test_lift_manufactured_convergence():
    def error(n_cells, n_steps):
        p = _heat(n_cells, n_steps, T=0.5)
        t = p.time_grid.times
        g = np.zeros((t.size, 2))
        g[:, 0] = t
        g[1:, 1] = _integrated_erfc(t[1:], 1.0)
        u = lift_boundary(freeze(p, 0), g, p.time_grid.full).u.frames
        exact = np.zeros_like(u)
        exact[1:] = _integrated_erfc(t[1:, None], p.grid.nodes[None, :])
        return np.max(np.abs(u - exact))

    e1, e2 = error(16, 100), error(32, 400)
    assert e2 < e1 / 3.0
    assert e2 < 2e-3


def test_semigroup():
    p = _heat(4, 1000)
    frozen = freeze(p, 0)
    x = np.random.default_rng(0).standard_normal(5)
    x[[0, -1]] = 0.0
    np.testing.assert_array_equal(semigroup_apply(frozen, 0.0, x).values, x)
    assert not np.any(semigroup_apply(frozen, 0.1, np.zeros(5)).values)
    v = np.array([0.0, 1.0, np.sqrt(2.0), 1.0, 0.0])
    mu = -16 * (2 - np.sqrt(2.0))
    ds = 1e-3
    out = semigroup_apply(frozen, 0.05, v).values
    np.testing.assert_allclose(out, v / (1 - ds * mu) ** 50, rtol=1e-12)
    fine = semigroup_apply(frozen, 0.05, v, substep=1e-5).values
    np.testing.assert_allclose(fine, np.exp(mu * 0.05) * v, rtol=1e-4)
    with pytest.raises(ValueError):
        semigroup_apply(frozen, 0.0015, v)


def test_linearity(rng):
    p = validate_problem(canon_na(n_cells=16, n_steps=40))
    frozen = freeze(p, 5)
    w = p.time_grid.window(5, 25)
    f1, f2 = np.zeros((2, 41, 17))
    f1[6:26] = rng.standard_normal((20, 17))
    f2[6:26] = rng.standard_normal((20, 17))
    u1 = solve_forced(frozen, f1, w).u.frames
    u2 = solve_forced(frozen, f2, w).u.frames
    u12 = solve_forced(frozen, 2.5 * f1 - f2, w).u.frames
    np.testing.assert_allclose(u12, 2.5 * u1 - u2, atol=1e-12 * np.max(np.abs(u12)))
    g1, g2 = np.zeros((2, 41, 2))
    g1[6:26] = rng.standard_normal((20, 2))
    g2[6:26] = rng.standard_normal((20, 2))
    v1 = lift_boundary(frozen, g1, w).u.frames
    v2 = lift_boundary(frozen, g2, w).u.frames
    v12 = lift_boundary(frozen, g1 + 3 * g2, w).u.frames
    np.testing.assert_allclose(v12, v1 + 3 * v2, atol=1e-12 * np.max(np.abs(v12)))


def test_splitting_solves_full_system(rng):
    p = validate_problem(canon_na(n_cells=16, n_steps=40))
    frozen = freeze(p, 0)
    w = p.time_grid.full
    f = rng.standard_normal((41, 17))
    f[0] = 0.0
    g = rng.standard_normal((41, 2))
    g[0] = 0.0
    u = solve_forced(frozen, f, w).u.frames + lift_boundary(frozen, g, w).u.frames
    assert step_residual(frozen, u, f, g) <= 1e-10 * max(1.0, np.max(np.abs(u)))
    zero = solve_forced(frozen, 0 * f, w).u.frames + lift_boundary(frozen, 0 * g, w).u.frames
    assert not np.any(zero)


def test_euler_steps_do_not_increase_norm(rng):
    p = validate_problem(ProblemSpec(n_cells=32, n_steps=200))
    x = rng.standard_normal(33)
    x[[0, -1]] = 0.0
    traj = semigroup_trajectory(freeze(p, 0), x, 200)
    norms = np.linalg.norm(traj, axis=1)
    assert np.all(np.diff(norms) <= 1e-14)


def _ratio(p, frozen, gamma, f):
    res = solve_forced_shifted(frozen, gamma, f, p.time_grid.full)
    return res.constant


def test_gamma_uniformity(canon1_problem, rng):
    p = canon1_problem
    frozen = freeze(p, 0)
    f = _forcing(p, lambda t, x: np.sin(np.pi * x) * np.cos(3 * t))
    ratios = [_ratio(p, frozen, g, f) for g in (0.0, 1.0, 10.0, 100.0, 1000.0)]
    assert max(ratios) / min(ratios) < 3.0


def test_uniform_boundedness_in_tau(rng):
    p = validate_problem(canon_na(n_cells=32, n_steps=200))
    forcings = [rng.standard_normal((201, 33)) for _ in range(3)]
    forcings.append(_forcing(p, lambda t, x: np.cos(np.pi * x) + 0 * t))
    for f in forcings:
        f[0] = 0.0
    full = p.time_grid.full
    gains = []
    for k in np.linspace(0, 200, 10).round().astype(int):
        frozen = freeze(p, k)
        best = 0.0
        for f in forcings:
            # gain of f -> (u_t, A_tau u), the norm in which the frozen solution map is bounded
            best = max(best, solve_forced(frozen, f, full).constant)
        gains.append(best)
    assert max(gains) / min(gains) < 2.0
