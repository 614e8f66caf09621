"""The two reference problems used throughout the tests and examples.

``CANON-1``: heat equation, ``a = 1``, homogeneous Dirichlet data,
exact solution ``exp(-t) sin(pi x)``.

``CANON-NA``: ``a = 1 + 0.5 sin(2 pi t) cos(pi x)``, Dirichlet at x = 0 and
Robin ``u + u_x`` at x = 1, exact solution ``exp(-t) (1 + cos(pi x))``;
data are manufactured from the exact solution.
"""

from .domain import BoundarySpec, CoefficientField, EndpointSpec, ProblemSpec
from .manufacture import manufactured_spec

CANON1_EXACT = "exp(-t)*sin(pi*x)"
CANON_NA_EXACT = "exp(-t)*(1 + cos(pi*x))"
CANON_NA_A = "1 + 0.5*sin(2*pi*t)*cos(pi*x)"


def canon1(n_cells=64, n_steps=1000, T=1.0, q=2.0):
    return ProblemSpec(
        f="(pi^2 - 1)*exp(-t)*sin(pi*x)",
        u0="sin(pi*x)",
        q=q,
        T=T,
        n_cells=n_cells,
        n_steps=n_steps,
    )


def canon_na_skeleton(n_cells=64, n_steps=1000, T=1.0, q=2.0):
    return ProblemSpec(
        coefficients=CoefficientField(a=CANON_NA_A),
        boundary=BoundarySpec(EndpointSpec("dirichlet"), EndpointSpec("robin", "1", "1")),
        q=q,
        T=T,
        n_cells=n_cells,
        n_steps=n_steps,
    )


def canon_na(n_cells=64, n_steps=1000, T=1.0, q=2.0):
    return manufactured_spec(CANON_NA_EXACT, canon_na_skeleton(n_cells, n_steps, T, q))


CANON1_CONFIG = """\
# heat equation with a manufactured solution exp(-t) sin(pi x)
problem.a = 1
problem.f = (pi^2 - 1)*exp(-t)*sin(pi*x)
problem.u0 = sin(pi*x)
left.kind = dirichlet
right.kind = dirichlet
grid.n_cells = 64
grid.n_steps = 1000
"""

CANON_NA_CONFIG = """\
# time-dependent diffusion, Dirichlet / Robin mix
problem.a = 1 + 0.5*sin(2*pi*t)*cos(pi*x)
problem.exact = exp(-t)*(1 + cos(pi*x))
left.kind = dirichlet
right.kind = robin
right.alpha = 1
right.beta = 1
grid.n_cells = 64
grid.n_steps = 1000
solver.tol = 1e-10
"""
