"""Picard iteration for the non-autonomous problem on one window.

With ``w = L_tau^{-1} f~ + Q_tau^{-1} g~`` the maps are

    S(f~, g~)  = (A(t) - A(tau)) w + B(t) w      (interior rows)
    S0(f~, g~) = -(Q(t) - Q(tau)) w              (closure rows)

and the iteration is ``(f~, g~) <- (S + f_rhs, S0 + g_rhs)``. Because every
operator lives on the same grid, a fixed point makes ``w`` solve the
non-autonomous implicit Euler system exactly.
"""

from dataclasses import dataclass, field

import numpy as np

from . import norms
from .domain import SpaceTimeFunction
from .errors import IncompatibleBoundaryData, NoContraction
from .frozen import march_window
from .operators import apply_boundary, apply_stencil


@dataclass(frozen=True)
class SolverSettings:
    """Knobs of the window iteration and the continuation loop.

    ``windows`` is ``None`` for automatic planning or a fixed number of
    equal windows. ``freeze`` is ``"left"`` or ``"midpoint"``.
    """

    tol: float = 1e-8
    max_iters: int = 200
    ratio_max: float = 0.9
    target: float = 0.5
    freeze: str = "left"
    theta: float = 1.0
    windows: int = None
    calibration: float = None
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.ratio_max < 1:
            raise ValueError("ratio_max must lie in (0, 1)")
        if not 0 < self.target < 1:
            raise ValueError("target must lie in (0, 1)")
        if self.freeze not in ("left", "midpoint"):
            raise ValueError("freeze must be 'left' or 'midpoint'")
        if not 0 < self.theta <= 1:
            raise ValueError("theta must lie in (0, 1]")
        if self.windows is not None and self.windows < 1:
            raise ValueError("windows must be positive")


@dataclass(frozen=True)
class IterationPair:
    """Unknowns ``(f~, g~)`` on ``window``; ``g_tilde`` has shape ``(n_steps + 1, 2)``."""

    f_tilde: SpaceTimeFunction
    g_tilde: np.ndarray
    window: object

    @classmethod
    def from_local(cls, problem, window, f_local, g_local):
        n = problem.time_grid.n_steps + 1
        f = np.zeros((n, problem.grid.size))
        g = np.zeros((n, 2))
        f[window.k_a : window.k_b + 1] = f_local
        g[window.k_a : window.k_b + 1] = g_local
        g.setflags(write=False)
        return cls(SpaceTimeFunction(f, problem.time_grid, problem.grid, window, check=False), g, window)

    def local(self):
        w = self.window
        return self.f_tilde.frames[w.k_a : w.k_b + 1], self.g_tilde[w.k_a : w.k_b + 1]


@dataclass(frozen=True)
class ContractionStats:
    """Per-window iteration record.

    ``update_norms[i]`` is the combined update norm of iteration ``i + 1``;
    ``observed_ratio`` is the geometric mean of successive ratios of the
    sequence (initial iterate norm, update norms). ``z_main``/``z_shift``
    are the two terms of the Z norm of the final ``g~``.
    """

    iterations: int
    update_norms: tuple
    observed_ratio: float
    converged: bool
    freeze_time: float = 0.0
    data_norm: float = 0.0
    z_main: float = 0.0
    z_shift: float = 0.0
    residual: float = field(default=float("nan"))


def _frames(f):
    return f.frames if isinstance(f, SpaceTimeFunction) else np.asarray(f, dtype=float)


def _local(arr, window):
    return np.asarray(arr, dtype=float)[window.k_a : window.k_b + 1]


def s_maps(frozen, w_local, window):
    """``(S, S0)`` from ``w`` given on window-local frames."""
    p = frozen.problem
    sl = slice(window.k_a, window.k_b + 1)
    k = frozen.k
    s = apply_stencil(p.a[sl] - p.a[k], p.b[sl] - p.b[k], p.c[sl] - p.c[k], w_local, p.h)
    s += apply_stencil(0.0, p.d[sl], p.e[sl], w_local, p.h)
    s0 = -apply_boundary(p.alpha[sl] - p.alpha[k], p.beta[sl] - p.beta[k], w_local, p.h)
    s[0] = 0.0
    s0[0] = 0.0
    return s, s0


def _solve(frozen, f_local, g_local, theta):
    return march_window(frozen, f_local, g_local, 0.0, theta)


def apply_S(frozen, pair, theta=1.0):
    """Interior map ``S`` of the pair, as a space-time function supported in the pair's window."""
    f_local, g_local = pair.local()
    w = _solve(frozen, f_local, g_local, theta)
    s, _ = s_maps(frozen, w, pair.window)
    p = frozen.problem
    out = np.zeros((p.time_grid.n_steps + 1, p.grid.size))
    out[pair.window.k_a : pair.window.k_b + 1] = s
    return SpaceTimeFunction(out, p.time_grid, p.grid, pair.window, check=False)


def apply_S0(frozen, pair, theta=1.0):
    """Closure map ``S0`` of the pair, shape ``(n_steps + 1, 2)``."""
    f_local, g_local = pair.local()
    w = _solve(frozen, f_local, g_local, theta)
    _, s0 = s_maps(frozen, w, pair.window)
    out = np.zeros((frozen.problem.time_grid.n_steps + 1, 2))
    out[pair.window.k_a : pair.window.k_b + 1] = s0
    return out


def pair_norm(problem, window, f_local, g_local):
    """``||f~||_{L_q(X)} + ||g~||_Z`` on window-local frames."""
    q, h, dt = problem.q, problem.h, problem.dt
    fn = norms.time_lq(norms.x_norm(f_local[1:], h, q), dt, q)
    z = norms.z_norm(g_local, q, dt)
    shift = z.shift if window.k_a == 0 else 0.0
    return fn + z.main + shift


def _observed_ratio(seq):
    if len(seq) < 2 or seq[0] == 0.0:
        return 0.0
    ratios = []
    for prev, cur in zip(seq[:-1], seq[1:]):
        if prev == 0.0:
            break
        ratios.append(cur / prev)
    if not ratios:
        return 0.0
    if min(ratios) == 0.0:
        return 0.0
    return float(np.exp(np.mean(np.log(ratios))))


def iterate_window(frozen, window, f_rhs, g_rhs, settings=None, initial=None):
    """Run the Picard iteration on ``window`` with the freeze point of ``frozen``.

    Parameters
    ----------
    frozen : FrozenOperator
    window : TimeWindow
    f_rhs, g_rhs : array
        Affine terms on the full time grid, shapes ``(n_steps + 1, N)`` and
        ``(n_steps + 1, 2)``.
    settings : SolverSettings, optional
    initial : (array, array), optional
        Initial iterate; defaults to ``(f_rhs, g_rhs)``.

    Returns
    -------
    pair : IterationPair
    omega : SpaceTimeFunction
        ``L_tau^{-1} f~ + Q_tau^{-1} g~`` from the last iterate.
    stats : ContractionStats
    """
    settings = settings or SolverSettings()
    p = frozen.problem
    fr = _local(f_rhs, window).copy()
    gr = _local(g_rhs, window).copy()
    fr[:, [0, -1]] = 0.0
    gscale = float(np.max(np.abs(gr))) if gr.size else 0.0
    if np.max(np.abs(gr[0])) > 1e-9 * (1.0 + gscale):
        raise IncompatibleBoundaryData("g_rhs does not vanish at the window start")
    gr[0] = 0.0
    fr[0] = 0.0

    if initial is None:
        ft, gt = fr.copy(), gr.copy()
    else:
        ft = _local(_frames(initial[0]), window).copy()
        gt = _local(initial[1], window).copy()
        ft[:, [0, -1]] = 0.0
        ft[0] = 0.0
        gt[0] = 0.0

    data_norm = pair_norm(p, window, fr, gr)
    threshold = settings.tol * (1.0 + data_norm)
    seq = [pair_norm(p, window, ft, gt)]
    updates = []
    converged = False
    w = _solve(frozen, ft, gt, settings.theta)
    ratio = 0.0
    for it in range(1, settings.max_iters + 1):
        s, s0 = s_maps(frozen, w, window)
        fn, gn = s + fr, s0 + gr
        upd = pair_norm(p, window, fn - ft, gn - gt)
        updates.append(upd)
        seq.append(upd)
        ft, gt = fn, gn
        ratio = _observed_ratio(seq)
        if upd <= threshold:
            converged = True
            if upd > 0.0:
                w = _solve(frozen, ft, gt, settings.theta)
            break
        # give up only while the latest update is still not contracting
        if it >= 3 and ratio >= settings.ratio_max and upd >= settings.ratio_max * updates[-2]:
            break
        w = _solve(frozen, ft, gt, settings.theta)

    z = norms.z_norm(gt, p.q, p.dt)
    stats = ContractionStats(
        iterations=len(updates),
        update_norms=tuple(updates),
        observed_ratio=ratio,
        converged=converged,
        freeze_time=frozen.tau,
        data_norm=data_norm,
        z_main=z.main,
        z_shift=z.shift if window.k_a == 0 else 0.0,
    )
    if not converged:
        raise NoContraction(
            f"no contraction on [{window.a:.6g}, {window.b:.6g}]: observed ratio {ratio:.4g} "
            f"after {len(updates)} iterations",
            stats,
        )
    pair = IterationPair.from_local(p, window, ft, gt)
    omega = np.zeros((p.time_grid.n_steps + 1, p.grid.size))
    omega[window.k_a : window.k_b + 1] = w
    omega = SpaceTimeFunction(omega, p.time_grid, p.grid, window, check=False)
    return pair, omega, stats


def monolithic_defect(problem, omega, window, f_rhs, g_rhs):
    """Interior and closure defects of the non-autonomous implicit Euler system, per frame.

    Returns ``(interior, closure, start)`` on frames ``(k_a, k_b]``.
    """
    p = problem
    w = _local(_frames(omega), window)
    sl = slice(window.k_a + 1, window.k_b + 1)
    new = w[1:]
    lw = apply_stencil(p.a[sl], p.b[sl] + p.d[sl], p.c[sl] + p.e[sl], new, p.h)
    interior = (new - w[:-1]) / p.dt - lw - _local(f_rhs, window)[1:]
    interior[:, [0, -1]] = 0.0
    closure = apply_boundary(p.alpha[sl], p.beta[sl], new, p.h) - _local(g_rhs, window)[1:]
    return interior, closure, w[0]


def monolithic_residual(problem, omega, window, f_rhs, g_rhs):
    """``L_q(X)`` norm of the interior defect + ``L_q`` norm of the closure defect + ``||omega(a)||_X``."""
    q, h, dt = problem.q, problem.h, problem.dt
    interior, closure, start = monolithic_defect(problem, omega, window, f_rhs, g_rhs)
    r = norms.time_lq(norms.x_norm(interior, h, q), dt, q)
    r += norms.time_lq(np.sum(np.abs(closure) ** q, axis=-1) ** (1.0 / q), dt, q)
    return r + float(norms.x_norm(start, h, q))
