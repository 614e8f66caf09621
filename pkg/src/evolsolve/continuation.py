"""Window planning, continuation by reflection, and the monolithic reference solver.

``solve_ibvp`` follows the constructive existence argument:

1. lift ``u0`` by the frozen semigroup at ``tau = 0``: ``v``;
2. shift the data: ``f0 = f - L v``, ``g0 = g - Q v``;
3. on each window ``[a, b]`` reflect the partial solution about ``a``
   (``omega0``), shift again (``f1 = f0 - L omega0``, ``g1 = g0 - Q omega0``),
   iterate to the window solution ``omega1`` and keep ``omega0 + omega1`` on
   ``[0, b]``;
4. return ``u = v + omega``.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import diagnostics, norms
from .contraction import SolverSettings, iterate_window, monolithic_residual, pair_norm, s_maps
from .domain import SpaceTimeFunction, reflect_extend
from .errors import (
    IncompatibleData,
    IncompatibleInitialDatum,
    NoContraction,
    SingularStep,
    WindowUnderflow,
)
from .frozen import march_window, semigroup_trajectory
from .operators import FrozenOperator, apply_boundary, apply_stencil, boundary_rows, stencil_coefficients


@dataclass(frozen=True)
class WindowPlan:
    windows: tuple
    planned_ratio: tuple
    calibration: float = 1.0

    def __post_init__(self):
        ws = self.windows
        for left, right in zip(ws[:-1], ws[1:]):
            if left.k_b != right.k_a:
                raise ValueError("planned windows do not tile the interval")


@dataclass
class SolveReport:
    """Quantitative record of one solve."""

    windows: list = field(default_factory=list)
    stats: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    planned_ratio: list = field(default_factory=list)
    calibration: float = 1.0
    halvings: int = 0
    norms: object = None
    data_norms: dict = field(default_factory=dict)
    c_est: float = float("nan")
    factorizations: int = 0
    wall_time: float = 0.0
    compat: object = None

    @property
    def total_iterations(self):
        return sum(s.iterations for s in self.stats)


class _FrozenCache:
    """One frozen operator per freeze index, shared across windows of a solve."""

    def __init__(self, problem):
        self.problem = problem
        self.ops = {}

    def __call__(self, k):
        op = self.ops.get(k)
        if op is None:
            op = FrozenOperator(self.problem, k)
            self.ops[k] = op
        return op

    @property
    def factorizations(self):
        return sum(op.n_factorizations for op in self.ops.values())


def _freeze_index(window, policy):
    return window.k_a if policy == "left" else (window.k_a + window.k_b) // 2


def _planned_sum(problem, k_a, stop, calibration):
    """Planned ratio of windows ``[k_a, k]`` for ``k = k_a + 1 .. stop``."""
    dev_a = np.maximum.accumulate(diagnostics.deviation_A(problem, k_a)[k_a + 1 : stop + 1])
    dev_q = np.maximum.accumulate(diagnostics.deviation_Q(problem, k_a)[k_a + 1 : stop + 1])
    e_max, d_max = diagnostics.perturbation_size(problem)
    e_run = np.maximum.accumulate(e_max[k_a : stop + 1])[1:]
    d_run = np.maximum.accumulate(d_max[k_a : stop + 1])[1:]
    lengths = np.arange(1, stop - k_a + 1) * problem.dt
    return calibration * (dev_a + dev_q + diagnostics.beta_B(e_run, d_run, lengths))


def plan_windows(problem, settings=None, calibration=1.0):
    """Greedy grid-aligned window plan.

    Each window ``[a, b]`` is the longest one for which the calibrated sum of
    the deviations of A and Q from their values at ``a`` plus the B length
    factor stays below ``settings.target``. Autonomous problems without a
    perturbation get one window. With ``settings.windows = m`` the interval
    is split into ``m`` nearly equal windows instead.
    """
    settings = settings or SolverSettings()
    tg = problem.time_grid
    n = tg.n_steps
    if settings.windows is not None:
        m = min(int(settings.windows), n)
        edges = np.linspace(0, n, m + 1).round().astype(int)
        windows = tuple(tg.window(a, b) for a, b in zip(edges[:-1], edges[1:]))
        ratios = tuple(float(_planned_sum(problem, w.k_a, w.k_b, calibration)[-1]) for w in windows)
        return WindowPlan(windows, ratios, calibration)
    windows, ratios = [], []
    k_a = 0
    while k_a < n:
        sums = _planned_sum(problem, k_a, n, calibration)
        ok = np.flatnonzero(sums < settings.target)
        # sums is nondecreasing, so admissible lengths form a prefix
        if ok.size == 0 or ok[0] != 0:
            raise WindowUnderflow(
                f"a one-step window at t = {tg.time(k_a):.6g} has planned ratio {sums[0]:.4g} "
                f">= target {settings.target}"
            )
        length = int(ok[-1]) + 1
        windows.append(tg.window(k_a, k_a + length))
        ratios.append(float(sums[length - 1]))
        k_a += length
    return WindowPlan(tuple(windows), tuple(ratios), calibration)


def calibrate(problem, window, frozen, settings, n_probes=4):
    """Ratio of the probed iteration gain on ``window`` to its planned (uncalibrated) sum.

    Probes apply ``(S, S0)`` to random unit forcings with ``g~ = 0``: the
    discrete Z norm is only an L_q norm in time, so rough boundary probes
    would measure grid effects rather than the contraction. Returns 1 when
    the window's planned sum vanishes.
    """
    planned = float(_planned_sum(problem, window.k_a, window.k_b, 1.0)[-1])
    if planned == 0.0:
        return 1.0
    rng = np.random.default_rng(settings.seed)
    m = window.n_steps + 1
    gain = 0.0
    for _ in range(n_probes):
        f = rng.standard_normal((m, problem.grid.size))
        f[:, [0, -1]] = 0.0
        f[0] = 0.0
        g = np.zeros((m, 2))
        scale = pair_norm(problem, window, f, g)
        w = march_window(frozen, f / scale, g / scale, 0.0, settings.theta)
        s, s0 = s_maps(frozen, w, window)
        gain = max(gain, pair_norm(problem, window, s, s0))
    return gain / planned


def L_apply(problem, w, k_start=0):
    """Interior ``(w_k - w_{k-1}) / dt - (A + B)(t_k) w_k`` for frames ``k > k_start`` (earlier frames zero)."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    sl = slice(k_start + 1, None)
    new = w[sl]
    lw = apply_stencil(problem.a[sl], problem.b[sl] + problem.d[sl], problem.c[sl] + problem.e[sl], new, problem.h)
    out[sl] = (new - w[k_start:-1]) / problem.dt - lw
    out[:, [0, -1]] = 0.0
    return out


def Q_apply(problem, w):
    return apply_boundary(problem.alpha, problem.beta, w, problem.h)


def _data_arrays(problem, f, g, u0):
    f = problem.f if f is None else _frames(f)
    g = problem.g if g is None else np.asarray(g, dtype=float)
    u0 = problem.u0 if u0 is None else _values(u0)
    n1, N = problem.time_grid.n_steps + 1, problem.grid.size
    if f.shape != (n1, N) or g.shape != (n1, 2) or u0.shape != (N,):
        raise ValueError("data arrays do not match the problem grids")
    return f, g, u0


def _frames(f):
    return f.frames if isinstance(f, SpaceTimeFunction) else np.asarray(f, dtype=float)


def _values(u):
    return u.values if hasattr(u, "values") else np.asarray(u, dtype=float)


def _array_compat(problem, g, u0, tol=1e-8):
    """Grid-level pointwise check for data given as arrays."""
    q = problem.q
    defect = np.abs(apply_boundary(problem.alpha[0], problem.beta[0], u0, problem.h) - g[0])
    scale = max(float(np.max(np.abs(u0))), float(np.max(np.abs(g))))
    entries = []
    for j, kind in enumerate(problem.kinds):
        order = problem.orders[j]
        regime = norms.compat_regime(order, q)
        passed = regime != norms.POINTWISE or defect[j] <= tol * (1.0 + scale)
        entries.append(
            norms.CompatEntry(
                side=("left", "right")[j],
                kind=kind,
                order=order,
                k=norms.trace_index(order, q),
                regime=regime,
                pointwise_defect=float(defect[j]),
                integral_value=0.0,
                growth=1.0,
                passed=bool(passed),
            )
        )
    return norms.CompatReport(q=float(q), entries=tuple(entries), tolerance=tol * (1.0 + scale))


def solve_ibvp(problem, f=None, g=None, u0=None, settings=None, check=True):
    """Solve ``u_t = (A + B)(t) u + f``, ``Q(t) u = g``, ``u(0) = u0`` by windowed contraction.

    Data default to the problem's sampled arrays. Returns ``(u, report)``.

    Raises
    ------
    IncompatibleData
        The compatibility check failed.
    NoContraction
        A one-step window still failed to contract.
    WindowUnderflow
        The planner cannot meet the target even with one-step windows.
    """
    start_time = time.perf_counter()
    settings = settings or SolverSettings()
    overridden = problem.data_replaced or not (f is None and g is None and u0 is None)
    f, g, u0 = _data_arrays(problem, f, g, u0)
    report = SolveReport()
    if check:
        compat = _array_compat(problem, g, u0) if overridden else norms.check_compatibility(problem)
        report.compat = compat
        if not compat.passed:
            bad = ", ".join(f"{e.side} ({e.regime}, defect {e.pointwise_defect:.3g})" for e in compat.failures())
            raise IncompatibleData(f"initial and boundary data are incompatible at t = 0: {bad}", compat)

    frozen = _FrozenCache(problem)
    tg = problem.time_grid
    n = tg.n_steps
    v = semigroup_trajectory(frozen(0), u0, n)
    f0 = f - L_apply(problem, v)
    f0[0] = 0.0
    g0 = g - Q_apply(problem, v)
    g0[0] = 0.0

    calibration = settings.calibration if settings.calibration is not None else 1.0
    plan = plan_windows(problem, settings, calibration)
    if settings.calibration is None and settings.windows is None and len(plan.windows) > 0:
        first = plan.windows[0]
        calibration = calibrate(problem, first, frozen(_freeze_index(first, settings.freeze)), settings)
        plan = plan_windows(problem, settings, calibration)
    report.calibration = calibration

    omega = np.zeros((n + 1, problem.grid.size))
    queue = list(zip(plan.windows, plan.planned_ratio))
    while queue:
        window, planned = queue.pop(0)
        k_a, k_b = window.k_a, window.k_b
        partial = SpaceTimeFunction(omega, tg, problem.grid, tg.window(0, max(k_a, 1)), check=False)
        if k_a > 0:
            omega0 = reflect_extend(partial, tg.window(0, k_a)).frames
        else:
            omega0 = np.zeros_like(omega)
        f1 = f0 - L_apply(problem, omega0, k_a)
        g1 = g0 - Q_apply(problem, omega0)
        g1[: k_a + 1] = 0.0
        f1[: k_a + 1] = 0.0
        op = frozen(_freeze_index(window, settings.freeze))
        try:
            _, omega1, stats = iterate_window(op, window, f1, g1, settings)
        except NoContraction:
            if window.n_steps == 1:
                raise
            mid = k_a + window.n_steps // 2
            queue[:0] = [(tg.window(k_a, mid), planned / 2), (tg.window(mid, k_b), planned / 2)]
            report.halvings += 1
            continue
        residual = monolithic_residual(problem, omega1, window, f1, g1)
        stats = _with_residual(stats, residual)
        omega[k_a + 1 : k_b + 1] = omega0[k_a + 1 : k_b + 1] + omega1.frames[k_a + 1 : k_b + 1]
        report.windows.append(window)
        report.stats.append(stats)
        report.residuals.append(residual)
        report.planned_ratio.append(planned)

    u = SpaceTimeFunction(v + omega, tg, problem.grid)
    report.factorizations = frozen.factorizations
    _fill_norms(report, problem, u, f, g, u0, frozen(0))
    report.wall_time = time.perf_counter() - start_time
    return u, report


def _with_residual(stats, residual):
    return replace(stats, residual=float(residual))


def _fill_norms(report, problem, u, f, g, u0, frozen0):
    q, h, dt = problem.q, problem.h, problem.dt
    report.norms = norms.norm_report(u, q, None, u0, frozen0, g)
    fn = norms.time_lq(norms.x_norm(f[1:], h, q), dt, q)
    gz = norms.z_norm(g, q, dt)
    tn = norms.trace_norm(u0, frozen0, q)
    report.data_norms = {"f": fn, "g_main": gz.main, "g_shift": gz.shift, "u0": tn}
    denom = fn + gz.total + tn
    report.c_est = report.norms.h11 / denom if denom > 0 else 0.0


def solve_cauchy(problem, f=None, u0=None, settings=None, tol=1e-9):
    """Homogeneous-boundary problem ``Q(t) u = 0``; ``u0`` must satisfy ``Q(0) u0 = 0``.

    Raises :class:`IncompatibleInitialDatum` when ``|Q(0) u0|`` exceeds
    ``tol (1 + max|u0|)``.
    """
    f, _, u0 = _data_arrays(problem, f, None, u0)
    defect = float(np.max(np.abs(apply_boundary(problem.alpha[0], problem.beta[0], u0, problem.h))))
    if defect > tol * (1.0 + float(np.max(np.abs(u0)))):
        raise IncompatibleInitialDatum(f"u0 violates the boundary conditions at t = 0 (defect {defect:.3g})")
    g = np.zeros((problem.time_grid.n_steps + 1, 2))
    return solve_ibvp(problem, f, g, u0, settings)


@dataclass(frozen=True)
class DirectInfo:
    factorizations: int
    wall_time: float


def direct_monolithic_solve(problem, f=None, g=None, u0=None, return_info=False):
    """Non-autonomous implicit Euler with fresh operators each step (banded LU per step).

    Interior rows ``(I - dt (A + B)(t_{k+1})) u_{k+1} = u_k + dt f_{k+1}``;
    closure rows ``Q(t_{k+1}) u_{k+1} = g_{k+1}``.
    """
    start = time.perf_counter()
    f, g, u0 = _data_arrays(problem, f, g, u0)
    tg = problem.time_grid
    n, N = tg.n_steps, problem.grid.size
    dt, h = problem.dt, problem.h
    out = np.zeros((n + 1, N))
    out[0] = u0
    lo, di, up = stencil_coefficients(problem.a, problem.b + problem.d, problem.c + problem.e, h)
    ab = np.zeros((5, N))
    for k in range(n):
        j = k + 1
        ab[:] = 0.0
        # banded storage: ab[2 + r - c, c] = M[r, c]
        ab[2, 1:-1] = 1.0 - dt * di[j, 1:-1]
        ab[3, :-2] = -dt * lo[j, 1:-1]
        ab[1, 2:] = -dt * up[j, 1:-1]
        left, right = boundary_rows(problem.alpha[j], problem.beta[j], h)
        ab[2, 0], ab[1, 1], ab[0, 2] = left
        ab[4, N - 3], ab[3, N - 2], ab[2, N - 1] = right
        rhs = out[k] + dt * f[j]
        rhs[0], rhs[-1] = g[j]
        try:
            out[j] = scipy.linalg.solve_banded((2, 2), ab, rhs, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SingularStep(f"step {j}: {exc}") from exc
    u = SpaceTimeFunction(out, tg, problem.grid)
    if return_info:
        return u, DirectInfo(factorizations=n, wall_time=time.perf_counter() - start)
    return u
