import math

import pytest

from acsphere import geometry as Gm
from acsphere import grid as G
from acsphere import stationary as St

EPS = 0.05
NODES = 2000


def _solve(g, eps=EPS, nodes=NODES):
    grid = G.build_grid(g, nodes)
    res = St.solve_layers(grid, eps, [(g.minimal_radius, 1)])
    assert res.converged, res.message
    return res


@pytest.fixture(scope="session")
def clifford_solution():
    return _solve(Gm.clifford_geometry(1, 1))


@pytest.fixture(scope="session")
def equatorial_solution():
    return _solve(Gm.equatorial_geometry(2))


@pytest.fixture(scope="session")
def t12_solution():
    return _solve(Gm.clifford_geometry(1, 2))


@pytest.fixture(scope="session")
def three_layer():
    grid = G.build_grid(Gm.equatorial_geometry(2), NODES)
    return St.three_layer_solve(grid, 0.02)


@pytest.fixture
def half_pi():
    return math.pi / 2
