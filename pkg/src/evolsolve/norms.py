"""Discrete norms of X, D, L_q(X), H_q^{1,1}, the trace space and Z, plus compatibility checks.

Spatial norms use the left rectangle rule over nodes ``0 .. N-2`` with
weight ``h``; time sums use the right-endpoint rule over frames
``(k_a, k_b]`` with weight ``dt``. With these choices a constant function
of value 1 on ``[0, 1] x (0, 1)`` has every X-type norm exactly 1.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import fd
from .domain import GridFunction, SpaceTimeFunction
from .errors import ExpressionError
from .operators import apply_boundary

POINTWISE = "pointwise"
INTEGRAL = "integral"
NONE = "none"


def _values(u):
    if isinstance(u, (GridFunction, SpaceTimeFunction)):
        return u.values if isinstance(u, GridFunction) else u.frames
    return np.asarray(u, dtype=float)


def x_norm(values, h, q):
    """Spatial L_q norm; framewise over leading axes."""
    v = np.abs(np.asarray(values, dtype=float)[..., :-1])
    if q == 2:
        return np.sqrt(h * np.sum(v * v, axis=-1))
    return (h * np.sum(v**q, axis=-1)) ** (1.0 / q)


def second_difference(values, h):
    values = np.asarray(values, dtype=float)
    out = np.zeros_like(values)
    out[..., 1:-1] = (values[..., :-2] - 2.0 * values[..., 1:-1] + values[..., 2:]) / (h * h)
    return out


def d_norm(values, h, q):
    """``||u||_X + ||D+D- u||_X`` (discrete W_q^2 norm)."""
    return x_norm(values, h, q) + x_norm(second_difference(values, h), h, q)


def time_lq(per_frame, dt, q):
    """``(sum_k dt |a_k|^q)^(1/q)`` over the given per-frame values."""
    a = np.abs(np.asarray(per_frame, dtype=float))
    return float((dt * np.sum(a**q)) ** (1.0 / q))


def _window_of(u, window):
    return u.support if window is None else window


def bochner_norm(u, q, window=None, space="X"):
    """Discrete ``L_q(a, b; X)`` or ``L_q(a, b; D)`` norm of ``u``.

    >>> import numpy as np
    >>> from evolsolve.domain import SpatialGrid, TimeGrid, SpaceTimeFunction
    >>> tg, g = TimeGrid(1.0, 10), SpatialGrid(8)
    >>> bochner_norm(SpaceTimeFunction(np.ones((11, 9)), tg, g), 2)
    1.0
    """
    window = _window_of(u, window)
    frames = u.frames[window.k_a + 1 : window.k_b + 1]
    h = u.grid.h
    per = x_norm(frames, h, q) if space == "X" else d_norm(frames, h, q)
    return time_lq(per, u.time_grid.dt, q)


def time_derivative(u, window=None):
    """Backward differences ``(u_k - u_{k-1}) / dt`` for ``k`` in ``(k_a, k_b]``."""
    window = _window_of(u, window)
    f = u.frames
    return (f[window.k_a + 1 : window.k_b + 1] - f[window.k_a : window.k_b]) / u.time_grid.dt


def h11_norm(u, q, window=None):
    """``(sum_k dt (||u_t||_X^q + ||u||_D^q))^(1/q)`` with backward differences in time."""
    window = _window_of(u, window)
    h = u.grid.h
    ut = x_norm(time_derivative(u, window), h, q)
    ud = d_norm(u.frames[window.k_a + 1 : window.k_b + 1], h, q)
    return float((u.time_grid.dt * np.sum(ut**q + ud**q)) ** (1.0 / q))


def trace_points(dt, s_max, ratio=2.0 ** 0.125):
    """Geometric sample times ``dt * ratio^j <= s_max`` rounded to multiples of ``dt``.

    The sequence does not depend on ``s_max`` except through its length, so a
    larger ``s_max`` only appends points.
    """
    n = int(np.floor(np.log(s_max / dt) / np.log(ratio) + 1e-9)) + 1 if s_max >= dt else 0
    steps = np.unique(np.rint(ratio ** np.arange(max(n, 0))).astype(np.int64))
    return steps[steps * dt <= s_max * (1 + 1e-12)]


def trace_norm(u0, frozen, q, s_max=None, ratio=2.0 ** 0.125):
    """Trace-method surrogate for the norm of ``(D, X)_{1/q, q}``.

    ``||u0||_X + (int_0^{s_max} ||A_tau S(s) u0||_X^q ds)^(1/q)`` where
    ``S`` is the implicit Euler semigroup of step ``dt``; the integral uses
    the trapezoidal rule on ``{0} + trace_points(dt, s_max)``. This is an
    equivalent-norm surrogate, not the interpolation norm itself.
    """
    from .frozen import semigroup_trajectory

    problem = frozen.problem
    dt = problem.dt
    s_max = problem.time_grid.T if s_max is None else float(s_max)
    x = _values(u0)
    h = problem.h
    base = float(x_norm(x, h, q))
    steps = trace_points(dt, s_max, ratio)
    if steps.size == 0:
        return base
    traj = semigroup_trajectory(frozen, x, int(steps[-1]), dt)
    idx = np.concatenate(([0], steps))
    vals = x_norm(frozen.apply(traj[idx]), h, q) ** q
    s = idx * dt
    integral = float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(s)))
    return base + integral ** (1.0 / q)


@dataclass(frozen=True)
class ZNorm:
    """Discrete Z_q norm: main term and the one-step shifted term (windows at 0 only)."""

    main: float
    shift: float

    @property
    def total(self):
        return self.main + self.shift


def z_norm(g, q, dt, window=None):
    """Z_q norm of boundary data ``g`` of shape ``(n_steps + 1, 2)``.

    The shifted term ``||g(. - dt)||`` is included only when the window
    starts at time 0 and is otherwise reported as 0.
    """
    g = np.asarray(g, dtype=float)
    k_a, k_b = (0, g.shape[0] - 1) if window is None else (window.k_a, window.k_b)
    pointwise = np.sum(np.abs(g) ** q, axis=-1) ** (1.0 / q)
    main = time_lq(pointwise[k_a + 1 : k_b + 1], dt, q)
    shift = time_lq(pointwise[k_a:k_b], dt, q) if k_a == 0 else 0.0
    return ZNorm(main, shift)


@dataclass(frozen=True)
class NormReport:
    lq_X: float
    lq_D: float
    h11: float
    trace: float
    z_norm: float


def norm_report(u, q, window=None, u0=None, frozen=None, g=None):
    """All norms of ``u`` on ``window``; trace and Z entries are 0 when their inputs are absent."""
    trace = trace_norm(u0, frozen, q) if u0 is not None and frozen is not None else 0.0
    z = z_norm(g, q, u.time_grid.dt, window).total if g is not None else 0.0
    return NormReport(
        lq_X=bochner_norm(u, q, window, "X"),
        lq_D=bochner_norm(u, q, window, "D"),
        h11=h11_norm(u, q, window),
        trace=trace,
        z_norm=z,
    )


# --- compatibility -------------------------------------------------------


def trace_index(order, q):
    """``k_j = 1 - m_j / 2 - 1 / (2 q)`` for a boundary operator of order ``m_j``."""
    return 1.0 - order / 2.0 - 1.0 / (2.0 * q)


def compat_regime(order, q):
    """Regime from the exact sign of ``k_j - 1/q``, i.e. of ``q (2 - m_j) - 3``."""
    s = Fraction(q) * (2 - order) - 3
    if s > 0:
        return POINTWISE
    if s == 0:
        return INTEGRAL
    return NONE


@dataclass(frozen=True)
class CompatEntry:
    side: str
    kind: str
    order: int
    k: float
    regime: str
    pointwise_defect: float
    integral_value: float
    growth: float
    passed: bool


@dataclass(frozen=True)
class CompatReport:
    q: float
    entries: tuple
    tolerance: float

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    def failures(self):
        return [e for e in self.entries if not e.passed]


def initial_boundary_values(problem):
    """``B_j(0) u0`` at both ends; u0 derivatives from the source when it is smooth enough."""
    spec = problem.spec
    h = problem.h
    out = np.empty(2)
    for j, xb in enumerate((0.0, 1.0)):
        alpha, beta = problem.alpha[0, j], problem.beta[0, j]
        value = float(spec.u0.evaluate(0.0, xb))
        flux = 0.0
        if beta != 0.0:
            try:
                flux = float(fd.d_dx(spec.u0, 0.0, xb, fd.fine_step(h)))
            except ExpressionError:
                flux = None
        if flux is None:
            out[j] = apply_boundary(problem.alpha[0], problem.beta[0], problem.u0, h)[j]
        else:
            out[j] = alpha * value + beta * flux
    return out


def _log_integral(source, xb, target, q, lo, hi, per_decade=64):
    """``int_lo^hi |g(t) - target|^q dt / t`` by the trapezoidal rule in ``log t``."""
    n = max(int(np.ceil(np.log10(hi / lo) * per_decade)), 2) + 1
    y = np.linspace(np.log(lo), np.log(hi), n)
    vals = np.abs(source.evaluate(np.exp(y), xb) - target) ** q
    return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(y)))


def check_compatibility(problem, q=None, tol=1e-8, refine=1024.0, growth_max=2.0 ** 0.5):
    """Compatibility of ``u0`` with the boundary data at t = 0, per endpoint.

    Pointwise regime: ``|B_j(0) u0 - g_j(0)| <= tol (1 + scale)``. Integral
    regime: ``int_eps^{delta0} |g_j(t) - B_j(0) u0|^q dt / t`` with
    ``delta0 = min(T, 1/4)`` at the cutoffs ``eps = dt`` and ``dt / refine``;
    growth beyond ``growth_max`` flags divergence. The lifting is the
    stationary extension ``v(t) = u0``.
    """
    q = problem.q if q is None else q
    spec = problem.spec
    scale = max(float(np.max(np.abs(problem.u0))), float(np.max(np.abs(problem.g))))
    threshold = tol * (1.0 + scale)
    b0u0 = initial_boundary_values(problem)
    dt = problem.dt
    delta0 = min(problem.time_grid.T, 0.25)
    entries = []
    for j, (end, xb) in enumerate(zip(spec.boundary.endpoints, (0.0, 1.0))):
        order = end.order
        regime = compat_regime(order, q)
        defect = abs(b0u0[j] - problem.g[0, j])
        integral, growth, passed = 0.0, 1.0, True
        if regime == POINTWISE:
            passed = defect <= threshold
        elif regime == INTEGRAL:
            coarse = _log_integral(end.g, xb, b0u0[j], q, dt, delta0)
            fine = _log_integral(end.g, xb, b0u0[j], q, dt / refine, delta0)
            integral = coarse
            if coarse > 0:
                growth = fine / coarse
            elif fine > 0:
                growth = np.inf
            passed = growth <= growth_max
        entries.append(
            CompatEntry(
                side=("left", "right")[j],
                kind=end.kind,
                order=order,
                k=trace_index(order, q),
                regime=regime,
                pointwise_defect=float(defect),
                integral_value=integral,
                growth=float(growth),
                passed=bool(passed),
            )
        )
    return CompatReport(q=float(q), entries=tuple(entries), tolerance=threshold)


def frozen_initial_defect(problem, u0=None):
    """``max_j |Q(0) u0|_j`` on the grid (closure rows at t = 0)."""
    u0 = problem.u0 if u0 is None else _values(u0)
    return float(np.max(np.abs(apply_boundary(problem.alpha[0], problem.beta[0], u0, problem.h))))


__all__ = [
    "x_norm",
    "d_norm",
    "time_lq",
    "bochner_norm",
    "h11_norm",
    "trace_norm",
    "trace_points",
    "z_norm",
    "ZNorm",
    "NormReport",
    "norm_report",
    "trace_index",
    "compat_regime",
    "CompatEntry",
    "CompatReport",
    "check_compatibility",
]
