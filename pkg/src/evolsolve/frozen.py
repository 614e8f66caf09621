"""Solution maps of the frozen problem ``u_t = A_tau u + f`` on a window.

``solve_forced`` realizes the forced evolution with zero initial value and
homogeneous closure, ``lift_boundary`` the homogeneous evolution with
prescribed closure data, and ``semigroup_apply`` the free evolution. All three
share one implicit Euler march and one cached factorization per step size.
"""

from dataclasses import dataclass

import numpy as np

from . import norms
from .domain import GridFunction, SpaceTimeFunction
from .errors import IncompatibleBoundaryData, WindowMismatch


@dataclass(frozen=True)
class FrozenSolveResult:
    """Output of a frozen solve.

    ``residual_norm`` is the max-abs defect of the stepped equations
    (interior rows divided by ``dt``, closure rows as is). ``constant`` is
    the measured ratio ``(||u_t|| + ||A_tau u|| + gamma ||u||) / ||f||`` for
    forced solves with nonzero ``f``; ``None`` otherwise.
    """

    u: SpaceTimeFunction
    residual_norm: float
    steps: int
    constant: float = None


def _frames(f):
    return f.frames if isinstance(f, SpaceTimeFunction) else np.asarray(f, dtype=float)


def _check_support(arr, window, what):
    if np.any(arr[: window.k_a]) or np.any(arr[window.k_b + 1 :]):
        raise WindowMismatch(f"{what} is not supported in the window [{window.a}, {window.b}]")


def march_window(frozen, f_local, g_local, gamma=0.0, theta=1.0, start=None):
    """Step ``len(f_local) - 1`` times; ``f_local``/``g_local`` are window-local frames.

    Frame 0 of the result is ``start`` (zero by default). Closure rows are set
    to ``g_local[k + 1]`` at each new level.
    """
    dt = frozen.problem.dt
    fac = frozen.factor(dt, gamma, theta)
    f_local = np.asarray(f_local, dtype=float)
    if theta == 1.0:
        forcing = dt * f_local
    else:
        forcing = np.zeros_like(f_local)
        forcing[1:] = dt * (theta * f_local[1:] + (1.0 - theta) * f_local[:-1])
    start = np.zeros(f_local.shape[1]) if start is None else np.asarray(start, dtype=float)
    return fac.march(forcing, np.asarray(g_local, dtype=float), start)


def step_residual(frozen, u_local, f_local, g_local, gamma=0.0, theta=1.0):
    """Max-abs defect of the stepped frozen system on window-local frames."""
    dt = frozen.problem.dt
    au = frozen.apply(u_local) - gamma * np.asarray(u_local)
    du = (u_local[1:] - u_local[:-1]) / dt
    rhs = theta * (au[1:] + f_local[1:]) + (1.0 - theta) * (au[:-1] + f_local[:-1])
    interior = (du - rhs)[:, 1:-1]
    closure = frozen.closure_values(u_local[1:]) - g_local[1:]
    worst = max(np.max(np.abs(interior), initial=0.0), np.max(np.abs(closure), initial=0.0))
    return float(max(worst, np.max(np.abs(u_local[0]))))


def regularity_constant(frozen, u_local, f_local, gamma, q):
    """``(||u_t|| + ||A_tau u|| + gamma ||u||) / ||f||`` in ``L_q`` over the window."""
    p = frozen.problem
    h, dt = p.h, p.dt
    fn = norms.time_lq(norms.x_norm(f_local[1:], h, q), dt, q)
    if fn == 0.0:
        return None
    ut = norms.time_lq(norms.x_norm((u_local[1:] - u_local[:-1]) / dt, h, q), dt, q)
    au = norms.time_lq(norms.x_norm(frozen.apply(u_local[1:]), h, q), dt, q)
    un = norms.time_lq(norms.x_norm(u_local[1:], h, q), dt, q)
    return (ut + au + gamma * un) / fn


def _result(frozen, window, u_local, f_local, g_local, gamma, theta, with_constant):
    p = frozen.problem
    frames = np.zeros((p.time_grid.n_steps + 1, p.grid.size))
    frames[window.k_a : window.k_b + 1] = u_local
    res = step_residual(frozen, u_local, f_local, g_local, gamma, theta)
    const = regularity_constant(frozen, u_local, f_local, gamma, p.q) if with_constant else None
    u = SpaceTimeFunction(frames, p.time_grid, p.grid, window, check=False)
    return FrozenSolveResult(u=u, residual_norm=res, steps=window.n_steps, constant=const)


def solve_forced_shifted(frozen, gamma, f, window, theta=1.0):
    """Solve ``u_t - (A_tau - gamma) u = f`` on ``window``, ``u(a) = 0``, ``Q(tau) u = 0``.

    Parameters
    ----------
    frozen : FrozenOperator
    gamma : float
        Nonnegative shift.
    f : SpaceTimeFunction or array
        Forcing frames on the full time grid, zero outside ``window``.
    window : TimeWindow
    theta : float
        1 is implicit Euler; 0.5 is Crank-Nicolson.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    frames = _frames(f)
    _check_support(frames, window, "f")
    f_local = frames[window.k_a : window.k_b + 1]
    g_local = np.zeros((f_local.shape[0], 2))
    u_local = march_window(frozen, f_local, g_local, gamma, theta)
    return _result(frozen, window, u_local, f_local, g_local, gamma, theta, True)


def solve_forced(frozen, f, window, theta=1.0):
    """Forced frozen evolution with zero initial value and homogeneous closure."""
    return solve_forced_shifted(frozen, 0.0, f, window, theta)


def lift_boundary(frozen, g, window, theta=1.0):
    """Homogeneous frozen evolution with closure data ``g`` (shape ``(n_steps + 1, 2)``).

    Raises :class:`IncompatibleBoundaryData` if ``g(a)`` does not vanish.
    """
    g = np.asarray(g, dtype=float)
    _check_support(g, window, "g")
    g_local = g[window.k_a : window.k_b + 1]
    scale = float(np.max(np.abs(g_local))) if g_local.size else 0.0
    if np.max(np.abs(g_local[0])) > 1e-9 * (1.0 + scale):
        raise IncompatibleBoundaryData(
            f"boundary data does not vanish at the window start: g(a) = {g_local[0].tolist()}"
        )
    f_local = np.zeros((g_local.shape[0], frozen.size))
    u_local = march_window(frozen, f_local, g_local, 0.0, theta)
    return _result(frozen, window, u_local, f_local, g_local, 0.0, theta, False)


def semigroup_trajectory(frozen, x, n_steps, substep=None):
    """Frames ``S(j ds) x`` for ``j = 0 .. n_steps`` (homogeneous closure)."""
    p = frozen.problem
    ds = p.dt if substep is None else float(substep)
    x = x.values if isinstance(x, GridFunction) else np.asarray(x, dtype=float)
    fac = frozen.factor(ds)
    forcing = np.zeros((n_steps + 1, x.size))
    return fac.march(forcing, np.zeros((n_steps + 1, 2)), x)


def semigroup_apply(frozen, s, x, substep=None):
    """``S(s) x`` by ``s / substep`` implicit Euler steps; ``substep`` defaults to ``dt``."""
    ds = frozen.problem.dt if substep is None else float(substep)
    if s < 0:
        raise ValueError("s must be nonnegative")
    n = int(round(s / ds))
    if abs(n * ds - s) > 1e-9 * max(ds, s):
        raise ValueError(f"s = {s!r} is not a multiple of the sub-step {ds!r}")
    grid = frozen.problem.grid
    if n == 0:
        return x if isinstance(x, GridFunction) else GridFunction(x, grid)
    return GridFunction(semigroup_trajectory(frozen, x, n, ds)[-1], grid)
