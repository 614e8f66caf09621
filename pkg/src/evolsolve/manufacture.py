"""Manufactured data from an exact solution, and convergence studies.

Derivatives come from eighth-order central differences of the exact
expression on an auxiliary step four times finer than the grid (capped),
so no symbolic engine is needed.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import fd
from .domain import BoundarySpec, EndpointSpec, ProblemSpec, as_source, validate_problem


class _Source:
    """Base for derived sources; evaluates like an expression."""

    def __call__(self, t, x):
        return self.evaluate(t, x)


class ForcingSource(_Source):
    """``u_t - (a u_xx + b u_x + c u) - (d u_x + e u)`` for the exact ``u``."""

    def __init__(self, exact, coefficients, dx, dt):
        self.exact = exact
        self.coefficients = coefficients
        self.dx = dx
        self.dt = dt

    def evaluate(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        c = self.coefficients
        u = self.exact.evaluate(t, x)
        ux = fd.d_dx(self.exact, t, x, self.dx, 1)
        uxx = fd.d_dx(self.exact, t, x, self.dx, 2)
        ut = fd.d_dt(self.exact, t, x, self.dt)
        a, b, cc, d, e = (getattr(c, k).evaluate(t, x) for k in "abcde")
        return ut - (a * uxx + b * ux + cc * u) - (d * ux + e * u)

    def __str__(self):
        return f"<forcing of {self.exact}>"


class TraceSource(_Source):
    """``alpha(t) u + beta(t) u_x`` at an endpoint (x is ignored beyond the endpoint)."""

    def __init__(self, exact, endpoint, dx):
        self.exact = exact
        self.endpoint = endpoint
        self.dx = dx

    def evaluate(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        e = self.endpoint
        out = e.alpha.evaluate(t, x) * self.exact.evaluate(t, x)
        beta = e.beta.evaluate(t, x)
        if np.any(beta != 0):
            out = out + beta * fd.d_dx(self.exact, t, x, self.dx, 1)
        return out

    def __str__(self):
        return f"<trace of {self.exact}>"


class InitialSource(_Source):
    def __init__(self, exact):
        self.exact = exact

    def evaluate(self, t, x):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        return self.exact.evaluate(np.zeros_like(t), x)

    def __str__(self):
        return f"<initial value of {self.exact}>"


def manufacture(exact, skeleton):
    """Return ``(f, g, u0)`` sources making ``exact`` solve the problem of ``skeleton``.

    ``g`` is a pair of trace sources ``(left, right)``.

    >>> from evolsolve.domain import ProblemSpec
    >>> f, g, u0 = manufacture("exp(-t)*sin(pi*x)", ProblemSpec())
    >>> round(float(f.evaluate(0.0, 0.5)), 8) == round(math.pi**2 - 1, 8)
    True
    """
    exact = as_source(exact)
    dx = fd.fine_step(1.0 / skeleton.n_cells)
    dt = fd.fine_step(skeleton.T / skeleton.n_steps)
    f = ForcingSource(exact, skeleton.coefficients, dx, dt)
    g = tuple(TraceSource(exact, end, dx) for end in skeleton.boundary.endpoints)
    return f, g, InitialSource(exact)


def manufactured_spec(exact, skeleton):
    """Copy of ``skeleton`` with data replaced by the manufactured sources."""
    f, (gl, gr), u0 = manufacture(exact, skeleton)
    left, right = skeleton.boundary.endpoints
    boundary = BoundarySpec(
        EndpointSpec(left.kind, left.alpha, left.beta, gl),
        EndpointSpec(right.kind, right.alpha, right.beta, gr),
    )
    return replace(skeleton, boundary=boundary, f=f, u0=u0)


def exact_frames(exact, problem):
    exact = as_source(exact)
    return exact.evaluate(problem.time_grid.times[:, None], problem.grid.nodes[None, :])


def solution_error(u, exact, problem):
    """``max_k ||u(t_k) - exact(t_k)||_{L_2}`` (rectangle rule in space)."""
    from .norms import x_norm

    diff = u.frames - exact_frames(exact, problem)
    return float(np.max(x_norm(diff, problem.h, 2.0)))


# --- convergence studies -------------------------------------------------


@dataclass(frozen=True)
class StudyRow:
    level: int
    n_cells: int
    n_steps: int
    h: float
    dt: float
    error: float
    windows: int
    iterations: int


@dataclass(frozen=True)
class StudyResult:
    kind: str  # "time" or "space"
    rows: tuple
    order: object  # float, "exact" or "insufficient data"


def fit_order(steps, errors, floor=1e-12):
    """Least-squares slope of ``log(error)`` on ``log(step)``.

    Returns ``"exact"`` when every error is below ``floor`` and
    ``"insufficient data"`` with fewer than two levels.
    """
    errors = np.asarray(errors, dtype=float)
    if errors.size and np.all(errors <= floor):
        return "exact"
    if errors.size < 2:
        return "insufficient data"
    if np.any(errors <= 0):
        return "exact"
    slope = np.polyfit(np.log(np.asarray(steps, dtype=float)), np.log(errors), 1)[0]
    return float(slope)


def _threads():
    value = os.environ.get("EVOLSOLVE_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


def _run_level(args):
    from .continuation import solve_ibvp

    level, spec, exact, settings = args
    problem = validate_problem(spec)
    u, report = solve_ibvp(problem, settings=settings)
    return StudyRow(
        level=level,
        n_cells=spec.n_cells,
        n_steps=spec.n_steps,
        h=problem.h,
        dt=problem.dt,
        error=solution_error(u, exact, problem),
        windows=len(report.windows),
        iterations=report.total_iterations,
    )


def study_levels(skeleton, refinements, kind):
    """Grid sequences: ``time`` halves dt at fixed h; ``space`` refines h by sqrt(2) with dt ~ h^2."""
    specs = []
    for i in range(refinements):
        if kind == "time":
            specs.append(replace(skeleton, n_steps=skeleton.n_steps * 2**i))
        else:
            n_cells = int(round(skeleton.n_cells * 2 ** (i / 2)))
            ratio = skeleton.n_steps / skeleton.n_cells**2
            specs.append(replace(skeleton, n_cells=n_cells, n_steps=max(1, int(math.ceil(ratio * n_cells**2)))))
    return specs


def convergence_study(exact, skeleton, refinements, kind="time", settings=None, threads=None):
    """Manufactured-solution refinement study; levels run concurrently on a thread pool."""
    exact = as_source(exact)
    specs = [manufactured_spec(exact, s) for s in study_levels(skeleton, refinements, kind)]
    jobs = [(i, s, exact, settings) for i, s in enumerate(specs)]
    threads = threads or _threads()
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_run_level, jobs))
    else:
        rows = [_run_level(j) for j in jobs]
    steps = [r.dt if kind == "time" else r.h for r in rows]
    return StudyResult(kind=kind, rows=tuple(rows), order=fit_order(steps, [r.error for r in rows]))
