import pytest
from mpmath import mp

from orbergman import geometry as G


@pytest.fixture(scope="session", autouse=True)
def high_ambient_precision():
    """Comparisons against analytic constants need more than double precision."""
    old = mp.prec
    mp.prec = 160
    yield
    mp.prec = old


@pytest.fixture(scope="session")
def pline():
    return G.make_projective_line(1.0)


@pytest.fixture(scope="session")
def teardrop2():
    return G.make_teardrop(2)


@pytest.fixture(scope="session")
def football32():
    return G.make_football(3, 2)
