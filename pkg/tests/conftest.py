import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from lagtaylor.domain import DomainSpec
from lagtaylor.tolerances import DEFAULTS

settings.register_profile(
    "lagtaylor",
    deadline=None,
    derandomize=True,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("lagtaylor")

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def tol():
    return dict(DEFAULTS)


@pytest.fixture(scope="session")
def disk():
    return DomainSpec.disk(1.0, 32, 24)


@pytest.fixture(scope="session")
def annulus():
    return DomainSpec.annulus(1.0, 2.0, 32, 24)


def poly_field(domain, coeffs):
    """Evaluate ``sum c[i, j] x^i y^j`` on the grid."""
    g = domain.grid
    return np.polynomial.polynomial.polyval2d(g.x, g.y, coeffs)
