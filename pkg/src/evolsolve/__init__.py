"""Frozen-coefficient fixed-point solver for non-autonomous 1D parabolic problems."""

from .contraction import (
    ContractionStats,
    IterationPair,
    SolverSettings,
    apply_S,
    apply_S0,
    iterate_window,
    monolithic_residual,
)
from .continuation import (
    SolveReport,
    WindowPlan,
    direct_monolithic_solve,
    plan_windows,
    solve_cauchy,
    solve_ibvp,
)
from .diagnostics import MaxRegTable, ModulusTable, SectorReport, maxreg_ratio, modulus_of_continuity, sector_bound
from .domain import (
    BoundarySpec,
    CoefficientField,
    DiscreteProblem,
    EndpointSpec,
    GridFunction,
    ProblemSpec,
    SpaceTimeFunction,
    SpatialGrid,
    TimeGrid,
    TimeWindow,
    reflect_extend,
    restrict,
    validate_problem,
)
from .errors import *  # noqa: F401,F403
from .expressions import parse_expression
from .frozen import FrozenSolveResult, lift_boundary, semigroup_apply, solve_forced, solve_forced_shifted
from .kernels import BACKEND
from .norms import (
    CompatReport,
    NormReport,
    bochner_norm,
    check_compatibility,
    h11_norm,
    trace_norm,
    z_norm,
)
from .operators import FrozenOperator, freeze, lopatinskii_check

__version__ = "0.1.0"
