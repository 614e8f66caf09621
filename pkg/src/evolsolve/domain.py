"""Grids, windows, grid/space-time functions and problem specification.

The spatial domain is fixed to G = (0, 1); both grids are uniform so that the
reflection ``t -> 2b - t`` maps grid times to grid times.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DegenerateBoundary,
    EllipticityViolation,
    ExpressionError,
    ValidationError,
    WindowMismatch,
)
from .expressions import parse_expression

DIRICHLET = "dirichlet"
ROBIN = "robin"
# order m_j of each boundary operator
BOUNDARY_ORDER = {DIRICHLET: 0, ROBIN: 1}


def _readonly(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SpatialGrid:
    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 3:
            raise ValueError("n_cells must be an integer >= 3")

    @property
    def h(self):
        return 1.0 / self.n_cells

    @property
    def size(self):
        return self.n_cells + 1

    @property
    def nodes(self):
        return np.arange(self.n_cells + 1) * self.h


@dataclass(frozen=True)
class TimeWindow:
    """Closed window ``[a, b]`` with grid indices ``[k_a, k_b]``."""

    a: float
    b: float
    k_a: int
    k_b: int

    @property
    def n_steps(self):
        return self.k_b - self.k_a

    def contains(self, other):
        return self.k_a <= other.k_a and other.k_b <= self.k_b


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n_steps: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")

    @property
    def dt(self):
        return self.T / self.n_steps

    @property
    def times(self):
        return np.arange(self.n_steps + 1) * self.dt

    def time(self, k):
        return k * self.dt

    def index(self, t):
        """Grid index of time ``t``; raises if ``t`` is not a grid time."""
        k = int(round(t / self.dt))
        if not 0 <= k <= self.n_steps or abs(k * self.dt - t) > 1e-9 * max(1.0, self.T):
            raise ValueError(f"{t!r} is not a grid time")
        return k

    def window(self, k_a, k_b):
        if not 0 <= k_a < k_b <= self.n_steps:
            raise ValueError(f"invalid window indices [{k_a}, {k_b}]")
        return TimeWindow(self.time(k_a), self.time(k_b), int(k_a), int(k_b))

    def window_between(self, a, b):
        return self.window(self.index(a), self.index(b))

    @property
    def full(self):
        return self.window(0, self.n_steps)


class GridFunction:
    """Real values at the nodes of a :class:`SpatialGrid`."""

    def __init__(self, values, grid):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.size,):
            raise ValueError(f"expected {grid.size} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        self.values = _readonly(values)
        self.grid = grid

    def __repr__(self):
        return f"GridFunction(n_cells={self.grid.n_cells})"


class SpaceTimeFunction:
    """Frames ``u(t_k, x_i)`` on TimeGrid x SpatialGrid, zero outside ``support``.

    ``frames`` has shape ``(n_steps + 1, n_cells + 1)`` and is read-only.
    """

    def __init__(self, frames, time_grid, grid, support=None, check=True):
        frames = np.asarray(frames, dtype=float)
        shape = (time_grid.n_steps + 1, grid.size)
        if frames.shape != shape:
            raise ValueError(f"expected frames of shape {shape}, got {frames.shape}")
        support = time_grid.full if support is None else support
        if check:
            if not np.all(np.isfinite(frames)):
                raise ValueError("frames must be finite")
            if np.any(frames[: support.k_a]) or np.any(frames[support.k_b + 1 :]):
                raise WindowMismatch("frames outside the support window must vanish")
        self.frames = _readonly(frames)
        self.time_grid = time_grid
        self.grid = grid
        self.support = support

    @classmethod
    def zeros(cls, time_grid, grid, support=None):
        return cls(np.zeros((time_grid.n_steps + 1, grid.size)), time_grid, grid, support, check=False)

    def frame(self, k):
        return GridFunction(self.frames[k], self.grid)

    def _combine(self, other, values):
        lo = min(self.support.k_a, other.support.k_a)
        hi = max(self.support.k_b, other.support.k_b)
        return SpaceTimeFunction(values, self.time_grid, self.grid, self.time_grid.window(lo, hi), check=False)

    def __add__(self, other):
        return self._combine(other, self.frames + other.frames)

    def __sub__(self, other):
        return self._combine(other, self.frames - other.frames)

    def __mul__(self, scalar):
        return SpaceTimeFunction(scalar * self.frames, self.time_grid, self.grid, self.support, check=False)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def max_abs(self):
        return float(np.max(np.abs(self.frames)))

    def __repr__(self):
        s = self.support
        return f"SpaceTimeFunction(n_steps={self.time_grid.n_steps}, n_cells={self.grid.n_cells}, support=[{s.a}, {s.b}])"


def reflect_extend(u, window):
    """Extend ``u`` (supported in ``window = [a, b]``) to ``[0, T]`` by reflection.

    Equal to ``u`` on ``[0, b]``, to ``u(2b - t)`` on ``[b, min(2b - a, T)]``
    and zero afterwards.
    """
    frames = u.frames
    if np.any(frames[: window.k_a]) or np.any(frames[window.k_b + 1 :]):
        raise WindowMismatch("u is not supported in the reflection window")
    n = u.time_grid.n_steps
    k_a, k_b = window.k_a, window.k_b
    stop = min(2 * k_b - k_a, n)
    out = np.zeros_like(frames)
    out[: k_b + 1] = frames[: k_b + 1]
    if stop > k_b:
        j = np.arange(k_b + 1, stop + 1)
        out[k_b + 1 : stop + 1] = frames[2 * k_b - j]
    support = u.time_grid.window(k_a, stop) if stop > k_a else window
    return SpaceTimeFunction(out, u.time_grid, u.grid, support, check=False)


def restrict(u, window):
    """Zero every frame outside ``window``."""
    out = np.zeros_like(u.frames)
    out[window.k_a : window.k_b + 1] = u.frames[window.k_a : window.k_b + 1]
    return SpaceTimeFunction(out, u.time_grid, u.grid, window, check=False)


def as_source(value):
    """Coerce a string/number to an expression; pass through anything with ``evaluate``."""
    if hasattr(value, "evaluate"):
        return value
    return parse_expression(value)


@dataclass(frozen=True)
class CoefficientField:
    """Coefficients of ``A = a D^2 + b D + c`` and ``B = d D + e``."""

    a: object = "1"
    b: object = "0"
    c: object = "0"
    d: object = "0"
    e: object = "0"

    def __post_init__(self):
        for name in "abcde":
            object.__setattr__(self, name, as_source(getattr(self, name)))


@dataclass(frozen=True)
class EndpointSpec:
    """``alpha(t) u + beta(t) u_x = g(t)`` at one endpoint; Dirichlet forces alpha=1, beta=0."""

    kind: str = DIRICHLET
    alpha: object = "1"
    beta: object = "0"
    g: object = "0"

    def __post_init__(self):
        kind = str(self.kind).lower()
        if kind not in BOUNDARY_ORDER:
            raise ValidationError(f"unknown boundary kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == DIRICHLET:
            object.__setattr__(self, "alpha", "1")
            object.__setattr__(self, "beta", "0")
        for name in ("alpha", "beta", "g"):
            object.__setattr__(self, name, as_source(getattr(self, name)))

    @property
    def order(self):
        return BOUNDARY_ORDER[self.kind]


@dataclass(frozen=True)
class BoundarySpec:
    left: EndpointSpec = field(default_factory=EndpointSpec)
    right: EndpointSpec = field(default_factory=EndpointSpec)

    @property
    def endpoints(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class ProblemSpec:
    """Continuous problem ``u_t = A(t)u + B(t)u + f``, ``Q(t)u = g``, ``u(0) = u0``.

    ``perturbation`` names coefficients among ``{"b", "c"}`` that are moved
    from ``A`` into the perturbation ``B``.
    """

    coefficients: CoefficientField = field(default_factory=CoefficientField)
    boundary: BoundarySpec = field(default_factory=BoundarySpec)
    f: object = "0"
    u0: object = "0"
    q: float = 2.0
    T: float = 1.0
    n_cells: int = 64
    n_steps: int = 1000
    perturbation: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "f", as_source(self.f))
        object.__setattr__(self, "u0", as_source(self.u0))
        object.__setattr__(self, "perturbation", frozenset(self.perturbation))
        if not self.q > 1:
            raise ValidationError("q must exceed 1")
        if not self.perturbation <= {"b", "c"}:
            raise ValidationError("only b and c can be moved into the perturbation")

    @property
    def grid(self):
        return SpatialGrid(self.n_cells)

    @property
    def time_grid(self):
        return TimeGrid(float(self.T), self.n_steps)


def sample_boundary(boundary, time_grid):
    """Return ``(alpha, beta, g)`` tables of shape ``(n_steps + 1, 2)``."""
    t = time_grid.times
    alpha = np.empty((t.size, 2))
    beta = np.empty((t.size, 2))
    g = np.empty((t.size, 2))
    for j, (end, xb) in enumerate(zip(boundary.endpoints, (0.0, 1.0))):
        alpha[:, j] = end.alpha.evaluate(t, xb)
        beta[:, j] = end.beta.evaluate(t, xb)
        g[:, j] = end.g.evaluate(t, xb)
    return alpha, beta, g


def boundary_margins(kinds, alpha, beta):
    """Per-endpoint min over t of the coefficient that makes the closure solvable."""
    margins = []
    for j, kind in enumerate(kinds):
        coeff = alpha[:, j] if kind == DIRICHLET else beta[:, j]
        margins.append(float(np.min(np.abs(coeff))))
    return margins


@dataclass(frozen=True, eq=False)
class DiscreteProblem:
    """Sampled coefficient tables and data arrays of a validated problem.

    Tables indexed ``[k, i]`` (time step, node); boundary tables ``[k, j]``
    with ``j = 0`` for x = 0 and ``j = 1`` for x = 1.
    """

    spec: ProblemSpec
    grid: SpatialGrid
    time_grid: TimeGrid
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    e: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    g: np.ndarray
    f: np.ndarray
    u0: np.ndarray
    kinds: tuple
    a0: float
    data_replaced: bool = False

    @property
    def q(self):
        return self.spec.q

    @property
    def h(self):
        return self.grid.h

    @property
    def dt(self):
        return self.time_grid.dt

    @property
    def orders(self):
        return tuple(BOUNDARY_ORDER[k] for k in self.kinds)

    def is_autonomous(self):
        tables = (self.a, self.b, self.c, self.d, self.e)
        return all(np.all(tab == tab[0]) for tab in tables) and self.boundary_is_constant()

    def boundary_is_constant(self):
        return bool(np.all(self.alpha == self.alpha[0]) and np.all(self.beta == self.beta[0]))

    def with_data(self, f=None, g=None, u0=None):
        """Copy with replaced data arrays (coefficients untouched).

        The copy's data no longer follow the ProblemSpec expressions, so checks that
        need them fall back to the arrays.
        """
        kw = {"data_replaced": True}
        if f is not None:
            kw["f"] = _readonly(f)
        if g is not None:
            kw["g"] = _readonly(g)
        if u0 is not None:
            kw["u0"] = _readonly(u0)
        return replace(self, **kw)


def validate_problem(spec):
    """Sample ``spec`` on its grids and check ellipticity and boundary solvability."""
    grid = spec.grid
    time_grid = spec.time_grid
    t = time_grid.times[:, None]
    x = grid.nodes[None, :]
    coeffs = spec.coefficients
    tables = {}
    for name in "abcde":
        try:
            tables[name] = getattr(coeffs, name).evaluate(t, x)
        except ExpressionError as exc:
            raise ExpressionError(f"coefficient {name}: {exc}") from exc
    a0 = float(np.min(tables["a"]))
    if a0 <= 0:
        k, i = np.unravel_index(np.argmin(tables["a"]), tables["a"].shape)
        raise EllipticityViolation(
            f"a(t, x) = {a0:.6g} <= 0 at t = {time_grid.time(k):.6g}, x = {grid.nodes[i]:.6g}"
        )
    if "b" in spec.perturbation:
        tables["d"] = tables["d"] + tables["b"]
        tables["b"] = np.zeros_like(tables["b"])
    if "c" in spec.perturbation:
        tables["e"] = tables["e"] + tables["c"]
        tables["c"] = np.zeros_like(tables["c"])

    alpha, beta, g = sample_boundary(spec.boundary, time_grid)
    kinds = tuple(end.kind for end in spec.boundary.endpoints)
    for j, (kind, margin) in enumerate(zip(kinds, boundary_margins(kinds, alpha, beta))):
        side = ("left", "right")[j]
        if kind == ROBIN and margin <= 0:
            raise DegenerateBoundary(f"Robin beta vanishes on the {side} boundary")
        if np.any((alpha[:, j] == 0) & (beta[:, j] == 0)):
            raise DegenerateBoundary(f"(alpha, beta) = (0, 0) on the {side} boundary")

    try:
        f = spec.f.evaluate(t, x)
        u0 = spec.u0.evaluate(0.0, grid.nodes)
    except ExpressionError as exc:
        raise ExpressionError(f"data: {exc}") from exc
    return DiscreteProblem(
        spec=spec,
        grid=grid,
        time_grid=time_grid,
        a=_readonly(tables["a"]),
        b=_readonly(tables["b"]),
        c=_readonly(tables["c"]),
        d=_readonly(tables["d"]),
        e=_readonly(tables["e"]),
        alpha=_readonly(alpha),
        beta=_readonly(beta),
        g=_readonly(g),
        f=_readonly(f),
        u0=_readonly(u0),
        kinds=kinds,
        a0=a0,
    )
