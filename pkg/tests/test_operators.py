import numpy as np
import pytest

from evolsolve.domain import BoundarySpec, CoefficientField, EndpointSpec, GridFunction, ProblemSpec, validate_problem
from evolsolve.operators import (
    apply_A,
    apply_B,
    assemble_boundary,
    assemble_interior,
    freeze,
    lopatinskii_check,
)


def _problem(n_cells=4, n_steps=4, T=1.0, left=None, right=None, **coeffs):
    boundary = BoundarySpec(left or EndpointSpec(), right or EndpointSpec())
    return validate_problem(ProblemSpec(CoefficientField(**coeffs), boundary, T=T, n_cells=n_cells, n_steps=n_steps))


def test_heat_interior_rows():
    s = assemble_interior(_problem(), 0)
    np.testing.assert_array_equal(s.lower[1:-1], 16.0)
    np.testing.assert_array_equal(s.diag[1:-1], -32.0)
    np.testing.assert_array_equal(s.upper[1:-1], 16.0)
    assert s.lower[0] == s.diag[0] == s.upper[-1] == 0.0


def test_reaction_shifts_diagonal():
    s = assemble_interior(_problem(c="-1"), 0)
    np.testing.assert_array_equal(s.diag[1:-1], -33.0)


def test_time_dependent_scaling():
    p = _problem(a="2 + sin(t)", T=np.pi, n_steps=2)
    s = assemble_interior(p, 1)
    np.testing.assert_allclose(s.lower[1:-1], 48.0)
    np.testing.assert_allclose(s.diag[1:-1], -96.0)


def test_boundary_rows():
    dirichlet = assemble_boundary(_problem(), 0)
    np.testing.assert_array_equal(dirichlet.left, [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(dirichlet.right, [0.0, 0.0, 1.0])
    neumann = assemble_boundary(_problem(left=EndpointSpec("robin", "0", "1")), 0)
    np.testing.assert_array_equal(neumann.left, [-6.0, 8.0, -2.0])
    robin = assemble_boundary(_problem(left=EndpointSpec("robin", "1", "1")), 0)
    np.testing.assert_array_equal(robin.left, [-5.0, 8.0, -2.0])


def test_frozen_heat_eigenvalues():
    frozen = freeze(_problem(), 0)
    eig = np.sort(np.linalg.eigvals(frozen.kernel_operator()).real)
    expected = np.sort(16 * (-2 + 2 * np.cos(np.arange(1, 4) * np.pi / 4)))
    np.testing.assert_allclose(eig, expected, rtol=1e-12)
    np.testing.assert_allclose(expected, [-54.627417, -32.0, -9.372583], rtol=1e-7)
    assert frozen.n_factorizations == 0


def test_freeze_is_deterministic_and_autonomous():
    p = _problem(n_cells=16, n_steps=10, a="1 + x", c="-x")
    np.testing.assert_array_equal(freeze(p, 3).matrix(), freeze(p, 3).matrix())
    np.testing.assert_array_equal(freeze(p, 0).matrix(), freeze(p, 10).matrix())


def test_apply_A_sine():
    p = _problem(n_cells=64)
    x = p.grid.nodes
    out = apply_A(p, 0, GridFunction(np.sin(np.pi * x), p.grid)).values
    err = np.max(np.abs(out[1:-1] + np.pi**2 * np.sin(np.pi * x[1:-1])))
    assert err <= 0.01 * np.pi**2


def test_apply_A_zero_and_affine():
    p = _problem(n_cells=8)
    x = p.grid.nodes
    assert not np.any(apply_A(p, 0, np.zeros(9)).values)
    np.testing.assert_allclose(apply_A(p, 0, 2 * x + 1).values[1:-1], 0.0, atol=1e-12)


def test_apply_A_boundary_entries_are_closure_forms():
    p = _problem(n_cells=8, right=EndpointSpec("robin", "1", "1"))
    x = p.grid.nodes
    out = apply_A(p, 0, x**2).values
    assert out[0] == 0.0
    assert out[-1] == pytest.approx(1.0 + 2.0)


def test_apply_B():
    x = np.linspace(0, 1, 9)
    assert not np.any(apply_B(_problem(n_cells=8), 0, x).values)
    out = apply_B(_problem(n_cells=8, e="1"), 0, x).values
    np.testing.assert_array_equal(out[1:-1], x[1:-1])
    assert out[0] == out[-1] == 0.0
    out = apply_B(_problem(n_cells=8, d="1"), 0, x**2).values
    np.testing.assert_allclose(out[1:-1], 2 * x[1:-1], rtol=1e-12)


def test_lopatinskii():
    rep = lopatinskii_check(_problem())
    assert rep.passed and rep.margins == (1.0, 1.0)
    rep = lopatinskii_check(_problem(left=EndpointSpec("robin", "0", "1 + t")))
    assert rep.passed and rep.margins[0] == 1.0
    spec = ProblemSpec(boundary=BoundarySpec(EndpointSpec("robin", "0", "t"), EndpointSpec()), n_cells=4, n_steps=4)
    rep = lopatinskii_check(spec)
    assert not rep.passed
    assert rep.failures == (("left", 0.0),)


def test_symmetry_and_gershgorin():
    p = _problem(n_cells=32, a="1 + 0.5*t^2", c="-x")
    m = freeze(p, 0).kernel_operator()
    np.testing.assert_array_equal(m, m.T)
    radius = np.sum(np.abs(m), axis=1) - np.abs(np.diag(m))
    assert np.all(np.diag(m) + radius <= 0.0)


def test_consistency_order():
    errors = []
    hs = []
    for n in (16, 32, 64, 128):
        p = _problem(n_cells=n, a="1 + 0.5*x")
        x = p.grid.nodes
        out = apply_A(p, 0, np.sin(np.pi * x)).values[1:-1]
        xi = x[1:-1]
        exact = -(1 + 0.5 * xi) * np.pi**2 * np.sin(np.pi * xi)
        errors.append(np.max(np.abs(out - exact)))
        hs.append(1.0 / n)
    orders = np.diff(np.log(errors)) / np.diff(np.log(hs))
    assert np.all(orders >= 1.9)


def test_continuity_in_time():
    p = _problem(n_cells=16, n_steps=100, a="2 + sin(t)")
    s0 = assemble_interior(p, 0)
    scale = 4.0 / p.h**2
    for k in (1, 5, 20):
        s = assemble_interior(p, k)
        diff = np.max(np.abs(s.lower - s0.lower) + np.abs(s.diag - s0.diag) + np.abs(s.upper - s0.upper))
        assert diff <= scale * p.time_grid.time(k) + 1e-9


def test_factor_cache_is_shared():
    frozen = freeze(_problem(n_cells=8), 0)
    a = frozen.factor(0.1)
    assert frozen.factor(0.1) is a
    frozen.factor(0.1, gamma=1.0)
    assert frozen.n_factorizations == 2
