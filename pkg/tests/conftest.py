import numpy as np
import pytest

from evolsolve.canon import canon1, canon_na
from evolsolve.domain import BoundarySpec, CoefficientField, EndpointSpec, ProblemSpec, validate_problem

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def canon1_problem():
    return validate_problem(canon1())


@pytest.fixture(scope="session")
def canon_na_problem():
    return validate_problem(canon_na())


@pytest.fixture(scope="session")
def heat4():
    """Heat operator with Dirichlet ends on 4 cells (eigenvalues -9.3726, -32, -54.627)."""
    return validate_problem(ProblemSpec(n_cells=4, n_steps=1000))


@pytest.fixture
def scalar_surrogate():
    """``A = -1`` on constants: Neumann at both ends and ``c = -1``."""

    def build(f="1", n_steps=10, T=1.0):
        neumann = EndpointSpec("robin", "0", "1")
        spec = ProblemSpec(
            coefficients=CoefficientField(a="1", c="-1"),
            boundary=BoundarySpec(neumann, neumann),
            f=f,
            T=T,
            n_cells=8,
            n_steps=n_steps,
        )
        return validate_problem(spec)

    return build


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
