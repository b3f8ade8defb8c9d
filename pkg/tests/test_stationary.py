import math

import numpy as np
import pytest

from acsphere import geometry as Gm
from acsphere import grid as G
from acsphere import measures as M
from acsphere import spectrum as S
from acsphere import stationary as St
from acsphere.errors import PreconditionError
from acsphere.potential import QUARTIC, sigma


def test_ansatz_single_layer_vanishes_at_radius():
    g = Gm.clifford_geometry(1, 1)
    grid = G.build_grid(g, 401)
    u = St.ansatz_profile(grid, 0.05, [(math.pi / 4, 1)])
    assert u[200] == pytest.approx(0.0, abs=1e-14)  # node 200 is pi/4 up to rounding
    assert np.allclose(u, -u[::-1], atol=1e-13)


def test_ansatz_two_layers_and_empty():
    grid = G.build_grid(Gm.equatorial_geometry(2), 801)
    u = St.ansatz_profile(grid, 0.05, [(math.pi / 2 - 0.3, 1), (math.pi / 2 + 0.3, 1)])
    assert np.count_nonzero(np.diff(np.sign(u))) == 2
    assert np.array_equal(St.ansatz_profile(grid, 0.05, []), np.ones(grid.size))


def test_ansatz_rejects_bad_layers():
    grid = G.build_grid(Gm.equatorial_geometry(2), 100)
    with pytest.raises(PreconditionError):
        St.ansatz_profile(grid, 0.1, [(4.0, 1)])
    with pytest.raises(PreconditionError):
        St.ansatz_profile(grid, 0.1, [(2.0, 1), (1.0, 1)])


def test_parse_layers():
    assert St.parse_layers("0.7:+, 1.2:-") == [(0.7, 1), (1.2, -1)]


@pytest.mark.parametrize("g", [Gm.equatorial_geometry(2), Gm.clifford_geometry(1, 2)], ids=lambda g: g.label)
def test_newton_from_near_well_goes_to_constant(g):
    grid = G.build_grid(g, 400)
    res = St.newton_solve(grid, 0.1, np.full(grid.size, 0.9))
    assert res.converged
    assert np.max(np.abs(res.values - 1.0)) <= 1e-12


def test_clifford_solution(clifford_solution):
    res = clifford_solution
    u = res.values
    assert res.converged and res.residual_norm <= res.tol
    assert np.max(np.abs(u + u[::-1])) <= 1e-12
    radii = M.nodal_data(res.grid, u).radii
    assert radii.size == 1 and radii[0] == pytest.approx(math.pi / 4, abs=1e-12)


def test_equatorial_nodal_radius(equatorial_solution):
    radii = M.nodal_data(equatorial_solution.grid, equatorial_solution.values).radii
    assert radii.size == 1 and abs(radii[0] - math.pi / 2) <= 1e-6


@pytest.mark.parametrize("name", ["clifford_solution", "equatorial_solution", "t12_solution"])
def test_maximum_principle_and_sign_flip(name, request):
    res = request.getfixturevalue(name)
    u = res.values
    assert np.max(np.abs(u)) <= 1.0
    # strict wherever 1 - |u| is representable (far tails round to exactly 1)
    tail = np.abs(St.ansatz_profile(res.grid, res.eps, res.ansatz_descriptor)) > 1.0 - 1e-12
    assert np.all(np.abs(u[~tail]) < 1.0)
    flipped = G.residual(res.grid, -u, res.eps)
    assert np.max(np.abs(flipped)) == pytest.approx(res.residual_norm, rel=1e-12)


@pytest.mark.parametrize("name", ["clifford_solution", "equatorial_solution", "t12_solution"])
def test_newton_quadratic_tail(name, request):
    res = request.getfixturevalue(name)
    h = res.history[-3:]
    # a step that lands below tol is limited by round-off, not by the Newton rate
    ratios = [h[k + 1] / h[k] ** 2 for k in range(len(h) - 1) if h[k + 1] > res.tol]
    assert ratios and max(ratios) <= 10.0


def test_newton_preserves_oddness():
    g = Gm.clifford_geometry(1, 1)
    grid = G.build_grid(g, 1000)
    init = St.ansatz_profile(grid, 0.05, [(g.minimal_radius, 1)])
    res = St.newton_solve(grid, 0.05, init, St.NewtonOptions(record_iterates=True))
    assert len(res.iterates) == res.iterations + 1
    for u in res.iterates:
        assert np.max(np.abs(u + u[::-1])) <= 1e-13


def test_solution_unique_up_to_sign(clifford_solution):
    # a second solve from a distorted seed with the same nodal radius
    grid = clifford_solution.grid
    init = np.tanh((grid.nodes - math.pi / 4) / (math.sqrt(2) * 0.08))
    other = St.newton_solve(grid, 0.05, init)
    assert other.converged
    assert np.max(np.abs(other.values - clifford_solution.values)) <= 1e-8
    flipped = St.newton_solve(grid, 0.05, -init)
    assert np.max(np.abs(flipped.values + clifford_solution.values)) <= 1e-8


def test_continuation_sweep():
    g = Gm.clifford_geometry(1, 1)
    grid = G.build_grid(g, 2000)
    results = St.continuation(lambda e: grid, [0.2, 0.1, 0.05], [(g.minimal_radius, 1)])
    assert len(results) == 3 and all(r.converged for r in results)
    energies = [G.energy(grid, r.values, r.eps) for r in results]
    assert energies[0] < energies[1] < energies[2] < 2 * sigma(QUARTIC) * 2 * math.pi**2


def test_continuation_edge_cases():
    g = Gm.clifford_geometry(1, 1)
    assert St.continuation(lambda e: G.build_grid(g, 100), [], [(g.minimal_radius, 1)]) == []
    with pytest.raises(PreconditionError):
        St.continuation(lambda e: G.build_grid(g, 100), [0.2, 0.01], [(g.minimal_radius, 1)])
    with pytest.raises(PreconditionError):
        St.continuation(lambda e: G.build_grid(g, 2000), [0.05, 0.1], [(g.minimal_radius, 1)])


def test_newton_rejects_coarse_grid():
    grid = G.build_grid(Gm.clifford_geometry(1, 1), 50)
    with pytest.raises(PreconditionError):
        St.newton_solve(grid, 0.01, np.zeros(grid.size))


def test_brezis_oswald_matches_newton(clifford_solution):
    bo = St.brezis_oswald_solve(clifford_solution.grid, 0.05)
    assert bo.converged
    assert np.max(np.abs(bo.values - clifford_solution.values)) <= 1e-8


def test_brezis_oswald_equatorial(equatorial_solution):
    bo = St.brezis_oswald_solve(equatorial_solution.grid, 0.05)
    u, r = bo.values, bo.grid.nodes
    assert np.max(np.abs(u + u[::-1])) <= 1e-12
    assert np.all(u[r > math.pi / 2 + 1e-9] > 0)
    assert np.max(np.abs(u - equatorial_solution.values)) <= 1e-8


def test_brezis_oswald_needs_symmetry():
    grid = G.build_grid(Gm.clifford_geometry(1, 2), 2000)
    with pytest.raises(PreconditionError):
        St.brezis_oswald_solve(grid, 0.05)


def test_brezis_oswald_above_threshold():
    grid = G.build_grid(Gm.clifford_geometry(1, 1), 200)
    with pytest.raises(PreconditionError):
        St.brezis_oswald_solve(grid, 0.4)


def test_bo_threshold_hemisphere():
    assert St.bo_threshold(Gm.equatorial_geometry(2)) == pytest.approx(1 / math.sqrt(3), rel=1e-5)


def test_bo_threshold_clifford_two_resolutions():
    g = Gm.clifford_geometry(1, 1)
    a = St.bo_threshold(g, node_count=1001)
    b = St.bo_threshold(g, node_count=2001)
    assert a == pytest.approx(b, rel=1e-5)
    # independent oracle: first Dirichlet eigenvalue of the full-domain mode-0
    # problem restricted to odd functions is the second Neumann eigenvalue, 8
    grid = G.build_grid(g, 2001)
    lam = S.mode_eigenvalues(grid, np.ones(grid.size), 1.0, g.base_mode, count_below=20.0).eigenvalues
    assert b == pytest.approx(1 / math.sqrt(lam[1] - 2.0), rel=1e-5)


def test_three_layer(three_layer):
    res = three_layer
    radii = np.array(res.notes["nodal_radii"])
    d = res.notes["d"]
    assert res.converged and res.notes["demo_ok"]
    assert radii.size == 2 and d > 0
    assert radii == pytest.approx([math.pi / 2 - d, math.pi / 2 + d], abs=1e-10)
    disjoint, margin = M.radius_sets_disjoint(radii, [math.pi / 2])
    assert disjoint and margin == pytest.approx(d, abs=1e-12)


def test_three_layer_large_eps_is_recorded_not_raised():
    grid = G.build_grid(Gm.equatorial_geometry(2), 400)
    res = St.three_layer_solve(grid, 0.5)
    assert isinstance(res.notes["demo_ok"], bool)
    if not res.notes["demo_ok"]:
        assert "demo failure" in res.message


def test_three_layer_needs_equatorial():
    with pytest.raises(PreconditionError):
        St.three_layer_solve(G.build_grid(Gm.clifford_geometry(1, 1), 400), 0.05)


def test_refine_doubles(clifford_solution):
    fine = St.refine(clifford_solution)
    assert fine.converged and fine.grid.size == 4000
    assert np.max(np.abs(St.interpolate(fine, clifford_solution.grid) - clifford_solution.values)) < 1e-5


def test_three_layer_index_is_reported(three_layer):
    from acsphere.acceptance import spectral_summary

    summary = spectral_summary(three_layer.grid, three_layer.values, 0.02)
    assert summary["index"] is not None and summary["index"] > 1
    assert summary["nullity"] == 3
