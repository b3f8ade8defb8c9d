import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acsphere import geometry as Gm
from acsphere import grid as G
from acsphere.errors import PreconditionError

GEOMS = [Gm.equatorial_geometry(2), Gm.clifford_geometry(1, 1), Gm.clifford_geometry(1, 2), Gm.equatorial_geometry(3)]


def test_spacing_and_midpoint():
    assert G.build_grid(Gm.clifford_geometry(1, 1), 9).h == pytest.approx((math.pi / 2) / 8)
    assert G.build_grid(Gm.equatorial_geometry(2), 17).nodes[8] == pytest.approx(math.pi / 2)


def test_too_few_nodes():
    with pytest.raises(PreconditionError):
        G.build_grid(Gm.clifford_geometry(1, 1), 8)


@pytest.mark.parametrize("g", GEOMS, ids=lambda g: g.label)
def test_masses_integrate_weight(g):
    grid = G.build_grid(g, 257)
    assert grid.geometry.transverse_volume * grid.mass.sum() == pytest.approx(Gm.total_volume_check(g), rel=1e-12)
    assert np.all(grid.mass > 0)


@pytest.mark.parametrize("g", GEOMS, ids=lambda g: g.label)
@pytest.mark.parametrize("c", [1.0, -1.0, 0.0])
def test_constant_equilibria(g, c):
    grid = G.build_grid(g, 200)
    assert np.max(np.abs(G.residual(grid, np.full(grid.size, c), 0.1))) == 0.0


def test_energy_constants():
    g = Gm.clifford_geometry(1, 1)
    grid = G.build_grid(g, 400)
    assert G.energy(grid, np.ones(grid.size), 0.1) == 0.0
    assert G.energy(grid, -np.ones(grid.size), 0.1) == 0.0
    assert G.energy(grid, np.zeros(grid.size), 1.0) == pytest.approx(math.pi**2 / 2, rel=1e-12)


def test_heteroclinic_on_flat_grid():
    # boundary (Neumann) mismatch shrinks like exp(-L/(sqrt2 eps)); interior error is O(h^2)
    grid = G.build_grid(Gm.flat_geometry(1.0), 4001)
    sup = []
    for eps in (0.1, 0.05):
        u = np.tanh((grid.nodes - 0.5) / (math.sqrt(2) * eps))
        sup.append(np.max(np.abs(G.residual(grid, u, eps))))
    assert sup[1] < 1e-3 * sup[0]
    eps = 0.05
    interior = []
    for n in (1001, 2001, 4001):
        gr = G.build_grid(Gm.flat_geometry(1.0), n)
        u = np.tanh((gr.nodes - 0.5) / (math.sqrt(2) * eps))
        mask = np.abs(gr.nodes - 0.5) < 0.25
        interior.append(np.max(np.abs(G.residual(gr, u, eps)[mask])))
    assert interior[0] / interior[1] == pytest.approx(4.0, rel=0.05)
    assert interior[1] / interior[2] == pytest.approx(4.0, rel=0.05)


@pytest.mark.parametrize(
    "g,f,lap",
    [
        (Gm.equatorial_geometry(2), np.cos, lambda r: -3 * np.cos(r)),
        (Gm.clifford_geometry(1, 1), lambda r: np.cos(2 * r), lambda r: -8 * np.cos(2 * r)),
    ],
    ids=["equatorial", "clifford"],
)
def test_laplacian_second_order_including_endpoints(g, f, lap):
    errs = []
    for n in (201, 401, 801):
        grid = G.build_grid(g, n)
        errs.append(np.max(np.abs(G.laplacian(grid, f(grid.nodes)) - lap(grid.nodes))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


@settings(max_examples=30, deadline=None)
@given(idx=st.integers(0, len(GEOMS) - 1), n=st.integers(16, 300), seed=st.integers(0, 2**32 - 1))
def test_laplacian_self_adjoint(idx, n, seed):
    grid = G.build_grid(GEOMS[idx], n)
    rng = np.random.default_rng(seed)
    f, g = rng.standard_normal((2, n))
    lhs = grid.inner(G.laplacian(grid, f), g)
    rhs = grid.inner(f, G.laplacian(grid, g))
    scale = np.sqrt(abs(grid.inner(G.laplacian(grid, f), f)) * abs(grid.inner(G.laplacian(grid, g), g))) + 1e-300
    assert abs(lhs - rhs) <= 1e-12 * scale


@settings(max_examples=20, deadline=None)
@given(idx=st.integers(0, len(GEOMS) - 1), n=st.integers(16, 200))
def test_mode_matrix_is_similarity_of_laplacian(idx, n):
    g = GEOMS[idx]
    grid = G.build_grid(g, n)
    A, act = G.mode_matrix(grid, g.base_mode)
    assert act.size == n
    f = np.sin(np.arange(n) + 0.3)
    s = np.sqrt(grid.mass)
    # A = M^{-1/2} K M^{-1/2} so A (M^{1/2} f) = -M^{1/2} Delta_h f
    assert np.allclose(A.matvec(s * f), -s * G.laplacian(grid, f), rtol=1e-10, atol=1e-10 * np.max(np.abs(A.diag)))


def test_dirichlet_mode_drops_endpoints():
    g = Gm.equatorial_geometry(2)
    grid = G.build_grid(g, 50)
    _, act = G.mode_matrix(grid, g.mode((1,)))
    assert act[0] == 1 and act[-1] == 48
    g = Gm.clifford_geometry(1, 1)
    grid = G.build_grid(g, 50)
    _, act = G.mode_matrix(grid, g.mode((1, 0)))
    assert act[0] == 0 and act[-1] == 48


@pytest.mark.parametrize("n", [40, 41])
def test_odd_extension(n):
    grid = G.build_grid(Gm.clifford_geometry(1, 1), n)
    half = np.arange(1.0, G.odd_half_indices(grid).size + 1)
    u = G.odd_extend(grid, half)
    assert np.allclose(u, -u[::-1])
    assert np.all(u[: half.size] < 0)


def test_gradient_consistency():
    g = Gm.clifford_geometry(1, 1)
    grid = G.build_grid(g, 800)
    rng = np.random.default_rng(3)
    s = grid.nodes / g.r_max
    u = np.tanh(np.cos(np.pi * np.outer(s, np.arange(5))) @ rng.standard_normal(5))
    assert G.gradient_consistency_check(grid, u, 0.05, count=10) <= 1e-6
    assert G.gradient_consistency_check(grid, u, 0.05, directions=np.zeros(grid.size)) == 0.0
    bump = np.exp(-(((grid.nodes - g.r_mid) / 0.1) ** 2))
    assert G.gradient_consistency_check(grid, np.zeros(grid.size), 0.05, directions=bump) <= 1e-6


def test_profile_csv_roundtrip(tmp_path):
    grid = G.build_grid(Gm.equatorial_geometry(2), 64)
    prof = G.Profile(grid, np.cos(grid.nodes))
    prof.to_csv(tmp_path / "p.csv")
    back = G.Profile.read_csv(tmp_path / "p.csv", geometry=grid.geometry)
    assert np.array_equal(back.values, prof.values)
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "r,u"
    with pytest.raises(ValueError):
        G.Profile.read_csv(tmp_path / "p.csv", grid=G.build_grid(grid.geometry, 65))
