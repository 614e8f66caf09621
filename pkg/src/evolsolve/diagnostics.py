"""Numerical probes of the structural hypotheses.

* ``sector_bound``: sampled sup of ``||lambda (lambda - A_tau)^{-1}||`` over a sector.
* ``modulus_of_continuity``: time moduli of the operators A, B and Q.
* ``maxreg_ratio``: measured maximal-regularity ratios of the shifted frozen solve.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import norms
from .domain import SpaceTimeFunction
from .errors import ResolventSolveFailure
from .frozen import solve_forced_shifted
from .operators import FrozenOperator, stencil_coefficients

UNIFORM_LABEL = "uniform bound (q = 2, equivalent to R-boundedness)"
NECESSARY_LABEL = "necessary-condition check only"


# --- sectorial bound -----------------------------------------------------


@dataclass(frozen=True)
class SectorReport:
    theta0: float
    rays: tuple
    radii: tuple
    taus: tuple
    per_tau: tuple
    bound: float
    worst: tuple  # (tau, lambda) attaining the bound
    q: float
    label: str


def _dual(y, p):
    """Unit vector in the dual norm that attains ``<y, .> = ||y||_p``."""
    a = np.abs(y)
    norm = np.linalg.norm(a, p)
    if norm == 0.0:
        return np.zeros_like(y)
    phase = np.where(a > 0, y / np.where(a > 0, a, 1.0), 0.0)
    return phase * (a / norm) ** (p - 1)


def operator_norm_estimate(apply, apply_adjoint, n, q=2.0, iterations=50, rng=None):
    """Power-iteration lower bound on the ``q``-operator norm of a linear map.

    For ``q = 2`` this iterates ``R^H R``; otherwise it runs the p-norm power
    method with dual vectors.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    best = 0.0
    if q == 2:
        x /= np.linalg.norm(x)
        for _ in range(iterations):
            y = apply(x)
            best = max(best, float(np.linalg.norm(y)))
            z = apply_adjoint(y)
            nz = np.linalg.norm(z)
            if nz == 0.0:
                break
            x = z / nz
        return best
    qd = q / (q - 1.0)
    x /= np.linalg.norm(x, q)
    for _ in range(iterations):
        y = apply(x)
        best = max(best, float(np.linalg.norm(y, q)))
        z = apply_adjoint(_dual(y, q))
        if np.linalg.norm(z, qd) <= np.real(np.vdot(z, x)) * (1 + 1e-14):
            break
        x = _dual(z, qd)
        nx = np.linalg.norm(x, q)
        if nx == 0.0:
            break
        x /= nx
    return best


def sector_rays(theta0):
    rays = {0.0, np.pi / 2, -np.pi / 2, float(theta0), -float(theta0)}
    return tuple(sorted(rays))


def sector_bound(problem, theta0, taus=None, radii=None, q=None, iterations=50, seed=0):
    """Sample ``||lambda (lambda I - A_tau)^{-1}||`` on rays ``{0, +-pi/2, +-theta0}``.

    Parameters
    ----------
    problem : DiscreteProblem
    theta0 : float
        Sector half-angle in ``[pi/2, pi)``.
    taus : sequence of int, optional
        Freeze indices; default 10 evenly spaced grid times.
    radii : sequence of float, optional
        Default: 16 radii log-spaced in ``[1, 1e6]``.
    """
    if not np.pi / 2 <= theta0 < np.pi:
        raise ValueError("theta0 must lie in [pi/2, pi)")
    q = problem.q if q is None else q
    n = problem.time_grid.n_steps
    if taus is None:
        taus = np.unique(np.linspace(0, n, 10).round().astype(int))
    radii = np.logspace(0, 6, 16) if radii is None else np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    rays = sector_rays(theta0)
    rng = np.random.default_rng(seed)
    per_tau = []
    best, worst = 0.0, None
    for k in taus:
        frozen = FrozenOperator(problem, int(k))
        m = frozen.kernel_operator().astype(complex)
        eye = np.eye(m.shape[0])
        sup = 0.0
        for phi in rays:
            for r in radii:
                lam = r * np.exp(1j * phi)
                mat = lam * eye - m
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                        lu = scipy.linalg.lu_factor(mat, check_finite=True)
                except (ValueError, np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
                    raise ResolventSolveFailure(frozen.tau, lam) from exc
                if np.min(np.abs(np.diag(lu[0]))) <= 1e-14 * np.max(np.abs(lu[0])):
                    raise ResolventSolveFailure(frozen.tau, lam)

                def apply(x, lu=lu, lam=lam):
                    return lam * scipy.linalg.lu_solve(lu, x)

                def adjoint(y, lu=lu, lam=lam):
                    return np.conj(lam) * scipy.linalg.lu_solve(lu, y, trans=2)

                est = operator_norm_estimate(apply, adjoint, m.shape[0], q, iterations, rng)
                if est > sup:
                    sup = est
                if est > best:
                    best, worst = est, (frozen.tau, complex(lam))
        per_tau.append((frozen.tau, sup))
    return SectorReport(
        theta0=float(theta0),
        rays=rays,
        radii=tuple(float(r) for r in radii),
        taus=tuple(t for t, _ in per_tau),
        per_tau=tuple(per_tau),
        bound=best,
        worst=worst,
        q=float(q),
        label=UNIFORM_LABEL if q == 2 else NECESSARY_LABEL,
    )


# --- moduli of continuity ------------------------------------------------


def stencil_scale(h):
    """Max row sum of the unit-diffusion second-difference stencil, ``4 / h^2``."""
    return 4.0 / (h * h)


def _stencil_rows(problem):
    return stencil_coefficients(problem.a, problem.b, problem.c, problem.h)


def _closure_scale(problem):
    return float(np.min(np.abs(problem.alpha) + np.abs(problem.beta)))


def deviation_A(problem, k):
    """``||A(t_j) - A(t_k)||_inf / (4 / h^2)`` for every frame ``j`` (interior rows)."""
    lo, di, up = _stencil_rows(problem)
    dev = np.abs(lo - lo[k]) + np.abs(di - di[k]) + np.abs(up - up[k])
    return np.max(dev[:, 1:-1], axis=1) / stencil_scale(problem.h)


def deviation_Q(problem, k):
    """``max_j (|d alpha_j| + |d beta_j|) / min (|alpha| + |beta|)`` against frame ``k``."""
    dev = np.abs(problem.alpha - problem.alpha[k]) + np.abs(problem.beta - problem.beta[k])
    return np.max(dev, axis=1) / _closure_scale(problem)


def perturbation_size(problem):
    """Per-frame ``(max |e|, max |d|)`` of the perturbation B."""
    return np.max(np.abs(problem.e), axis=1), np.max(np.abs(problem.d), axis=1)


def beta_B(e_max, d_max, length):
    """Window-length factor for B: ``max|e| L + max|d| sqrt(L)``."""
    return e_max * length + d_max * np.sqrt(length)


@dataclass(frozen=True)
class ModulusTable:
    """``values[i]`` is the raw modulus at ``deltas[i]``; ``scaled = values / scale``."""

    component: str
    deltas: tuple
    values: tuple
    scale: float

    @property
    def scaled(self):
        return tuple(v / self.scale for v in self.values)


def _lag_maxima(table_fn, max_lag):
    """``m[L] = table_fn(L)`` for ``L = 1 .. max_lag`` with ``m[0] = 0``, then cumulative max."""
    out = np.zeros(max_lag + 1)
    for lag in range(1, max_lag + 1):
        out[lag] = table_fn(lag)
    return np.maximum.accumulate(out)


def modulus_of_continuity(problem, component, deltas):
    """Modulus table of ``A``, ``B`` or ``Q`` over the lags ``deltas``.

    ``A``: ``max_{|t-s| <= delta} ||A(t) - A(s)||_inf`` with scale ``4 / h^2``.
    ``Q``: same for the closure coefficients, scale ``min(|alpha| + |beta|)``.
    ``B``: ``max|e| delta + max|d| sqrt(delta)`` over all times, scale 1.
    """
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas < 0):
        raise ValueError("deltas must be nonnegative")
    dt = problem.dt
    n = problem.time_grid.n_steps
    lags = np.minimum(np.floor(deltas / dt + 1e-9).astype(int), n)
    max_lag = int(lags.max()) if lags.size else 0
    component = component.upper()
    if component == "A":
        lo, di, up = _stencil_rows(problem)
        lo, di, up = lo[:, 1:-1], di[:, 1:-1], up[:, 1:-1]

        def lag_max(L):
            dev = np.abs(lo[L:] - lo[:-L]) + np.abs(di[L:] - di[:-L]) + np.abs(up[L:] - up[:-L])
            return float(dev.max())

        scale = stencil_scale(problem.h)
        table = _lag_maxima(lag_max, max_lag)
        values = table[lags]
    elif component == "Q":
        al, be = problem.alpha, problem.beta

        def lag_max(L):
            return float((np.abs(al[L:] - al[:-L]) + np.abs(be[L:] - be[:-L])).max())

        scale = _closure_scale(problem)
        table = _lag_maxima(lag_max, max_lag)
        values = table[lags]
    elif component == "B":
        e_max, d_max = (float(np.max(v)) for v in perturbation_size(problem))
        scale = 1.0
        values = beta_B(e_max, d_max, deltas)
    else:
        raise ValueError(f"unknown component {component!r}")
    return ModulusTable(component, tuple(float(d) for d in deltas), tuple(float(v) for v in values), scale)


# --- maximal-regularity ratios -------------------------------------------


@dataclass(frozen=True)
class MaxRegTable:
    gammas: tuple
    labels: tuple
    ratios: np.ndarray  # (len(gammas), len(labels))

    def spread(self):
        """Per-forcing ratio ``max / min`` over gamma."""
        r = np.asarray(self.ratios)
        return r.max(axis=0) / r.min(axis=0)


def default_forcings(problem, n_random=5, seed=0):
    """``n_random`` smooth random forcings plus one oscillatory forcing, all zero on the boundary."""
    rng = np.random.default_rng(seed)
    t = problem.time_grid.times[:, None]
    x = problem.grid.nodes[None, :]
    T = problem.time_grid.T
    out = []
    labels = []
    for i in range(n_random):
        f = np.zeros((t.shape[0], x.shape[1]))
        for j in range(1, 5):
            amp, freq, phase = rng.standard_normal(), rng.uniform(0, 3), rng.uniform(0, 2 * np.pi)
            f += amp * np.cos(2 * np.pi * freq * t / T + phase) * np.sin(j * np.pi * x) / j
        out.append(f)
        labels.append(f"smooth-{i}")
    mx = max(problem.grid.n_cells // 2, 1)
    kt = max(problem.time_grid.n_steps // 8, 1)
    out.append(np.sin(mx * np.pi * x) * np.sign(np.sin(2 * np.pi * kt * t / T + 0.5)))
    labels.append("oscillatory")
    for f in out:
        f[:, [0, -1]] = 0.0
    return out, labels


def maxreg_ratio(problem, gammas, forcings=None, labels=None, tau_index=0, window=None, seed=0):
    """Table of ``(||u_t|| + ||A_tau u|| + gamma ||u||) / ||f||`` from the shifted frozen solve."""
    if forcings is None:
        forcings, labels = default_forcings(problem, seed=seed)
    labels = labels or [f"f{i}" for i in range(len(forcings))]
    window = problem.time_grid.full if window is None else window
    frozen = FrozenOperator(problem, tau_index)
    q, h, dt = problem.q, problem.h, problem.dt
    ratios = np.zeros((len(gammas), len(forcings)))
    for j, f in enumerate(forcings):
        frames = f.frames if isinstance(f, SpaceTimeFunction) else np.asarray(f, dtype=float)
        local = frames[window.k_a + 1 : window.k_b + 1]
        if norms.time_lq(norms.x_norm(local, h, q), dt, q) == 0.0:
            raise ValueError(f"forcing {labels[j]!r} vanishes; the ratio is undefined")
        for i, gamma in enumerate(gammas):
            ratios[i, j] = solve_forced_shifted(frozen, float(gamma), frames, window).constant
    return MaxRegTable(tuple(float(g) for g in gammas), tuple(labels), ratios)
