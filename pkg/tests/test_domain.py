import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evolsolve.domain import (
    BoundarySpec,
    CoefficientField,
    EndpointSpec,
    ProblemSpec,
    SpaceTimeFunction,
    SpatialGrid,
    TimeGrid,
    reflect_extend,
    restrict,
    validate_problem,
)
from evolsolve.errors import DegenerateBoundary, EllipticityViolation, ExpressionError, ValidationError, WindowMismatch


def _windowed(tg, grid, window, rng):
    frames = np.zeros((tg.n_steps + 1, grid.size))
    frames[window.k_a : window.k_b + 1] = rng.standard_normal((window.n_steps + 1, grid.size))
    return SpaceTimeFunction(frames, tg, grid, window)


def test_heat_problem_is_valid():
    p = validate_problem(ProblemSpec(u0="sin(pi*x)", n_cells=16, n_steps=10))
    assert p.a0 == 1.0
    np.testing.assert_allclose(p.u0, np.sin(np.pi * p.grid.nodes))


def test_ellipticity_margin_is_grid_minimum():
    p = validate_problem(ProblemSpec(CoefficientField(a="2 + sin(t)*cos(pi*x)"), n_cells=16, n_steps=20))
    t = p.time_grid.times[:, None]
    x = p.grid.nodes[None, :]
    assert p.a0 == pytest.approx(np.min(2 + np.sin(t) * np.cos(np.pi * x)))
    assert p.a0 >= 1.0


def test_ellipticity_violation():
    with pytest.raises(EllipticityViolation):
        validate_problem(ProblemSpec(CoefficientField(a="sin(t)"), T=np.pi, n_cells=8, n_steps=10))


def test_degenerate_boundary():
    robin = EndpointSpec("robin", "1", "t")
    with pytest.raises(DegenerateBoundary):
        validate_problem(ProblemSpec(boundary=BoundarySpec(robin, EndpointSpec()), n_cells=8, n_steps=10))


def test_expression_errors_surface():
    with pytest.raises(ExpressionError):
        validate_problem(ProblemSpec(f="sqrt(x - 2)", n_cells=8, n_steps=4))
    with pytest.raises(ValidationError):
        ProblemSpec(q=1.0)
    with pytest.raises(ValidationError):
        EndpointSpec("neumann")


def test_perturbation_split_moves_coefficients():
    spec = ProblemSpec(CoefficientField(b="1", c="-2", e="0.5"), n_cells=8, n_steps=4, perturbation={"b", "c"})
    p = validate_problem(spec)
    assert np.all(p.b == 0) and np.all(p.c == 0)
    assert np.all(p.d == 1) and np.all(p.e == -1.5)


def test_grid_index_and_windows():
    tg = TimeGrid(1.0, 8)
    assert tg.index(0.25) == 2
    with pytest.raises(ValueError):
        tg.index(0.3)
    w = tg.window_between(0.25, 0.75)
    assert (w.k_a, w.k_b, w.n_steps) == (2, 6, 4)
    with pytest.raises(ValueError):
        tg.window(3, 3)


def test_reflection_of_linear_ramp():
    tg, grid = TimeGrid(1.0, 10), SpatialGrid(4)
    phi = np.sin(np.pi * grid.nodes)
    t = tg.times
    frames = np.where(t[:, None] <= 0.5 + 1e-12, t[:, None] * phi, 0.0)
    u = SpaceTimeFunction(frames, tg, grid, tg.window(0, 5))
    ext = reflect_extend(u, tg.window(0, 5))
    np.testing.assert_allclose(ext.frames[5:], (1 - t[5:, None]) * phi, atol=1e-15)
    np.testing.assert_array_equal(ext.frames[:6], frames[:6])


def test_reflection_truncated_at_T():
    rng = np.random.default_rng(0)
    tg, grid = TimeGrid(1.0, 8), SpatialGrid(4)
    w = tg.window_between(0.25, 0.75)
    u = _windowed(tg, grid, w, rng)
    ext = reflect_extend(u, w)
    assert ext.support.k_a == 2 and ext.support.k_b == 8
    assert not np.any(ext.frames[:2])
    np.testing.assert_array_equal(ext.frames[7], u.frames[5])
    np.testing.assert_array_equal(ext.frames[8], u.frames[4])


def test_reflection_zero_tail():
    rng = np.random.default_rng(1)
    tg, grid = TimeGrid(1.0, 20), SpatialGrid(4)
    w = tg.window(4, 8)
    ext = reflect_extend(_windowed(tg, grid, w, rng), w)
    assert ext.support.k_b == 12
    assert not np.any(ext.frames[13:])


def test_reflection_zero_and_mismatch():
    tg, grid = TimeGrid(1.0, 8), SpatialGrid(4)
    zero = SpaceTimeFunction.zeros(tg, grid)
    assert not np.any(reflect_extend(zero, tg.window(0, 4)).frames)
    u = _windowed(tg, grid, tg.window(0, 6), np.random.default_rng(2))
    with pytest.raises(WindowMismatch):
        reflect_extend(u, tg.window(0, 4))


def test_restrict():
    rng = np.random.default_rng(3)
    tg, grid = TimeGrid(1.0, 8), SpatialGrid(4)
    u = _windowed(tg, grid, tg.window(0, 4), rng)
    r = restrict(u, tg.window(2, 4))
    assert not np.any(r.frames[:2])
    np.testing.assert_array_equal(r.frames[2:5], u.frames[2:5])
    assert not np.any(restrict(SpaceTimeFunction.zeros(tg, grid), tg.window(1, 3)).frames)


@given(st.integers(0, 10), st.integers(1, 10), st.floats(-3, 3), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_reflection_linear_and_left_inverse(k_a, length, alpha, seed):
    tg, grid = TimeGrid(1.0, 20), SpatialGrid(4)
    w = tg.window(k_a, min(k_a + length, 20))
    rng = np.random.default_rng(seed)
    u, v = _windowed(tg, grid, w, rng), _windowed(tg, grid, w, rng)
    lhs = reflect_extend(alpha * u + v, w).frames
    rhs = alpha * reflect_extend(u, w).frames + reflect_extend(v, w).frames
    np.testing.assert_array_equal(lhs, rhs)
    np.testing.assert_array_equal(restrict(reflect_extend(u, w), w).frames, u.frames)


def test_frames_are_read_only():
    tg, grid = TimeGrid(1.0, 4), SpatialGrid(4)
    u = SpaceTimeFunction.zeros(tg, grid)
    with pytest.raises(ValueError):
        u.frames[0, 0] = 1.0
