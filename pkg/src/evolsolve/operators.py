"""Finite-difference realizations of A(t), B(t), Q(t) and the frozen operator A_tau.

Interior rows use centred second-order differences; boundary rows are
replaced by the closure ``alpha u + beta u_x`` with a one-sided second-order
flux. Node ``i`` of a grid with spacing ``h`` is ``x_i = i h``.
"""

import threading
from dataclasses import dataclass

import numpy as np

from . import kernels
from .domain import DIRICHLET, GridFunction, ProblemSpec, boundary_margins, sample_boundary
from .errors import DegenerateBoundary, SingularStep

# one-sided derivative weights at x = 0 (columns 0, 1, 2); mirrored at x = 1
_FLUX_LEFT = np.array([-3.0, 4.0, -1.0]) / 2.0
_FLUX_RIGHT = np.array([1.0, -4.0, 3.0]) / 2.0


def stencil_coefficients(a, b, c, h):
    """Row entries ``(lower, diag, upper)`` of ``a D+D- + b D0 + c``; broadcasts over arrays."""
    a, b, c = np.asarray(a), np.asarray(b), np.asarray(c)
    inv_h2 = 1.0 / (h * h)
    half_inv_h = 0.5 / h
    return a * inv_h2 - b * half_inv_h, -2.0 * a * inv_h2 + c, a * inv_h2 + b * half_inv_h


def apply_stencil(a, b, c, u, h):
    """Apply the interior stencil framewise; ``u`` has nodes on its last axis.

    Coefficient arrays broadcast against ``u``. Boundary columns of the result are zero.
    """
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    um, uc, up = u[..., :-2], u[..., 1:-1], u[..., 2:]
    a_i = np.asarray(a)[..., 1:-1] if np.ndim(a) else a
    b_i = np.asarray(b)[..., 1:-1] if np.ndim(b) else b
    c_i = np.asarray(c)[..., 1:-1] if np.ndim(c) else c
    out[..., 1:-1] = a_i * (um - 2.0 * uc + up) / (h * h) + b_i * (up - um) / (2.0 * h) + c_i * uc
    return out


def boundary_rows(alpha, beta, h):
    """Closure rows at both ends: ``left`` acts on nodes (0, 1, 2), ``right`` on (N-3, N-2, N-1)."""
    left = beta[0] * _FLUX_LEFT / h
    left[0] += alpha[0]
    right = beta[1] * _FLUX_RIGHT / h
    right[2] += alpha[1]
    return left, right


def apply_boundary(alpha, beta, u, h):
    """Evaluate ``alpha u + beta u_x`` at both ends; ``alpha``/``beta`` shaped ``(..., 2)``."""
    u = np.asarray(u, dtype=float)
    alpha = np.asarray(alpha)
    beta = np.asarray(beta)
    flux_l = (-3.0 * u[..., 0] + 4.0 * u[..., 1] - u[..., 2]) / (2.0 * h)
    flux_r = (u[..., -3] - 4.0 * u[..., -2] + 3.0 * u[..., -1]) / (2.0 * h)
    out = np.empty(u.shape[:-1] + (2,))
    out[..., 0] = alpha[..., 0] * u[..., 0] + beta[..., 0] * flux_l
    out[..., 1] = alpha[..., 1] * u[..., -1] + beta[..., 1] * flux_r
    return out


@dataclass(frozen=True)
class InteriorStencil:
    """Tridiagonal rows of A(t); rows 0 and N-1 are zero placeholders."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def matrix(self):
        n = self.diag.size
        m = np.diag(self.diag)
        m[np.arange(1, n), np.arange(n - 1)] = self.lower[1:]
        m[np.arange(n - 1), np.arange(1, n)] = self.upper[:-1]
        return m


@dataclass(frozen=True)
class BoundaryClosure:
    left: np.ndarray
    right: np.ndarray

    def rows(self, n):
        out = np.zeros((2, n))
        out[0, :3] = self.left
        out[1, -3:] = self.right
        return out


def _placeholder(arr):
    arr = np.array(arr, dtype=float)
    arr[0] = arr[-1] = 0.0
    return arr


def assemble_interior(problem, k):
    lo, di, up = stencil_coefficients(problem.a[k], problem.b[k], problem.c[k], problem.h)
    return InteriorStencil(_placeholder(lo), _placeholder(di), _placeholder(up))


def assemble_boundary(problem, k):
    for j, kind in enumerate(problem.kinds):
        if kind != DIRICHLET and problem.beta[k, j] == 0.0:
            raise DegenerateBoundary(f"Robin beta vanishes at t = {problem.time_grid.time(k)}")
    left, right = boundary_rows(problem.alpha[k], problem.beta[k], problem.h)
    return BoundaryClosure(left, right)


def apply_A(problem, k, u):
    """Interior stencil of A(t_k) at interior nodes, Q(t_k) forms in the boundary entries."""
    values = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    out = apply_stencil(problem.a[k], problem.b[k], problem.c[k], values, problem.h)
    out[[0, -1]] = apply_boundary(problem.alpha[k], problem.beta[k], values, problem.h)
    return GridFunction(out, problem.grid)


def apply_B(problem, k, u):
    values = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
    out = apply_stencil(0.0, problem.d[k], problem.e[k], values, problem.h)
    return GridFunction(out, problem.grid)


@dataclass(frozen=True)
class StepFactor:
    """Factored step matrix ``I - theta dt (A_tau - gamma)`` with closure rows."""

    dt: float
    gamma: float
    theta: float
    mult: np.ndarray
    inv: np.ndarray
    upper: np.ndarray
    rl: float
    rr: float
    expl_lower: np.ndarray
    expl_diag: np.ndarray
    expl_upper: np.ndarray

    @property
    def explicit(self):
        return self.theta != 1.0

    def march(self, forcing, bnd, start):
        """Run ``len(forcing) - 1`` steps from ``start``; ``forcing`` is pre-scaled by dt."""
        out = np.zeros_like(forcing)
        out[0] = start
        kernels.march(
            self.mult, self.inv, self.upper, self.rl, self.rr,
            self.expl_lower, self.expl_diag, self.expl_upper, self.explicit,
            np.ascontiguousarray(forcing), np.ascontiguousarray(bnd), out,
        )
        return out


class FrozenOperator:
    """A(tau) restricted to ker Q(tau), with a per-step-size factorization cache.

    ``factor`` is get-or-create under a lock, so concurrent solves may share
    one instance.
    """

    def __init__(self, problem, k):
        self.problem = problem
        self.k = int(k)
        self.tau = problem.time_grid.time(k)
        self.stencil = assemble_interior(problem, k)
        self.closure = assemble_boundary(problem, k)
        self._cache = {}
        self._lock = threading.Lock()

    @property
    def size(self):
        return self.stencil.diag.size

    @property
    def n_factorizations(self):
        return len(self._cache)

    def matrix(self):
        """Closed matrix: interior stencil rows, homogeneous closure rows."""
        m = self.stencil.matrix()
        m[[0, -1]] = self.closure.rows(self.size)
        return m

    def kernel_operator(self):
        """Dense matrix of A_tau on interior values, boundary nodes eliminated via the closure."""
        n = self.size
        s = self.stencil
        m = s.matrix()[1:-1, 1:-1].copy()
        left, right = self.closure.left, self.closure.right
        # u_0 = -(left[1] u_1 + left[2] u_2) / left[0]
        m[0, 0] -= s.lower[1] * left[1] / left[0]
        m[0, 1] -= s.lower[1] * left[2] / left[0]
        # u_{N-1} = -(right[0] u_{N-3} + right[1] u_{N-2}) / right[2]
        m[n - 3, n - 4] -= s.upper[n - 2] * right[0] / right[2]
        m[n - 3, n - 3] -= s.upper[n - 2] * right[1] / right[2]
        return m

    def apply(self, values):
        """``A_tau`` stencil at interior nodes (boundary entries zero), framewise."""
        s = self.stencil
        values = np.asarray(values, dtype=float)
        out = np.zeros_like(values)
        out[..., 1:-1] = (
            s.lower[1:-1] * values[..., :-2] + s.diag[1:-1] * values[..., 1:-1] + s.upper[1:-1] * values[..., 2:]
        )
        return out

    def closure_values(self, values):
        """Closure forms ``Q(tau) u`` at both ends, shape ``(..., 2)``."""
        values = np.asarray(values, dtype=float)
        left, right = self.closure.left, self.closure.right
        out = np.empty(values.shape[:-1] + (2,))
        out[..., 0] = values[..., :3] @ left
        out[..., 1] = values[..., -3:] @ right
        return out

    def extend(self, interior, boundary=(0.0, 0.0)):
        """Grid values from interior values, boundary nodes solved from the closure rows."""
        interior = np.asarray(interior)
        out = np.zeros(interior.shape[:-1] + (self.size,), dtype=interior.dtype)
        out[..., 1:-1] = interior
        left, right = self.closure.left, self.closure.right
        out[..., 0] = (boundary[0] - left[1] * out[..., 1] - left[2] * out[..., 2]) / left[0]
        out[..., -1] = (boundary[1] - right[0] * out[..., -3] - right[1] * out[..., -2]) / right[2]
        return out

    def factor(self, dt, gamma=0.0, theta=1.0):
        key = (float(dt), float(gamma), float(theta))
        with self._lock:
            fac = self._cache.get(key)
            if fac is None:
                fac = self._build(*key)
                self._cache[key] = fac
        return fac

    def _build(self, dt, gamma, theta):
        s = self.stencil
        n = self.size
        lo = -theta * dt * s.lower
        di = 1.0 - theta * dt * (s.diag - gamma)
        up = -theta * dt * s.upper
        left, right = self.closure.left, self.closure.right
        rl = rr = 0.0
        if left[2] != 0.0:
            if up[1] == 0.0:
                raise SingularStep("cannot fold the left closure row: vanishing upper entry")
            rl = left[2] / up[1]
        if right[0] != 0.0:
            if lo[n - 2] == 0.0:
                raise SingularStep("cannot fold the right closure row: vanishing lower entry")
            rr = right[0] / lo[n - 2]
        di[0] = left[0] - rl * lo[1]
        up[0] = left[1] - rl * di[1]
        lo[n - 1] = right[1] - rr * di[n - 2]
        di[n - 1] = right[2] - rr * up[n - 2]
        try:
            mult, inv = kernels.factor_tridiagonal(
                np.ascontiguousarray(lo), np.ascontiguousarray(di), np.ascontiguousarray(up)
            )
        except ZeroDivisionError as exc:
            raise SingularStep(str(exc)) from exc
        if not np.all(np.isfinite(inv)):
            raise SingularStep("non-finite pivot in step factorization")
        c = (1.0 - theta) * dt
        zeros = np.zeros(n)
        return StepFactor(
            dt=dt,
            gamma=gamma,
            theta=theta,
            mult=np.asarray(mult),
            inv=np.asarray(inv),
            upper=np.ascontiguousarray(up),
            rl=float(rl),
            rr=float(rr),
            expl_lower=c * s.lower if c else zeros,
            expl_diag=c * (s.diag - gamma) if c else zeros,
            expl_upper=c * s.upper if c else zeros,
        )


def freeze(problem, k):
    """Frozen operator at grid time ``t_k`` with an empty factorization cache."""
    return FrozenOperator(problem, k)


@dataclass(frozen=True)
class LopatinskiiReport:
    passed: bool
    kinds: tuple
    margins: tuple
    failures: tuple  # (side, first failing time)


def lopatinskii_check(problem):
    """Reduced 1D boundary solvability: Dirichlet needs alpha != 0, Robin needs beta != 0.

    Accepts a validated problem or a raw :class:`ProblemSpec` (sampled here
    without raising).
    """
    if isinstance(problem, ProblemSpec):
        time_grid = problem.time_grid
        alpha, beta, _ = sample_boundary(problem.boundary, time_grid)
        kinds = tuple(e.kind for e in problem.boundary.endpoints)
    else:
        time_grid = problem.time_grid
        alpha, beta, kinds = problem.alpha, problem.beta, problem.kinds
    margins = boundary_margins(kinds, alpha, beta)
    failures = []
    for j, kind in enumerate(kinds):
        coeff = alpha[:, j] if kind == DIRICHLET else beta[:, j]
        bad = np.flatnonzero(coeff == 0.0)
        if bad.size:
            failures.append((("left", "right")[j], float(time_grid.times[bad[0]])))
    return LopatinskiiReport(not failures, kinds, tuple(margins), tuple(failures))
