import numpy as np
import pytest

from solicit.poisson_engine import TruncationPolicy
from solicit.response_law import Geometric, Mixture, Table

# Independent high-precision values for Geometric(0.5) responses and a
# Poisson(1) pool: the product-form series evaluated with mpmath at 40 digits.
GEO_HALF_V1 = {
    "P_T": (0.6065306597126334, 0.30643423033039013, 0.07680821495314137),
    "E_T": 1.4913703229436532,
    "E_Y": 0.6099055679484384,
    "E_M": 1.2198111358968768,
    "G_half": 0.3900944320515615,
}

# The constants above are untruncated; compare against them with a policy
# whose residual sits far below double precision.
TIGHT = TruncationPolicy(alpha=1e-30)


@pytest.fixture
def geo_half():
    return Geometric(0.5)


@pytest.fixture
def three_point():
    return Table((0.3, 0.2, 0.1))


LAWS = [
    Geometric(0.5),
    Geometric(1 / 512),
    Geometric(1.0),
    Table((0.3, 0.2, 0.1)),
    Table((1.0,)),
    Table((0.2, 0.3), 0.5),
    Mixture(0.2, 0.3, 0.5, 0.4),
]


def as_vector(fn):
    """Wrap an array-valued law accessor (F or H) as a function of T."""

    def f(k):
        k = np.asarray(k)
        return fn(int(k.max()))[k - 1]

    return f


# -- acceptance report ---------------------------------------------------------
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
