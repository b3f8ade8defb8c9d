"""Acceptance suite: ten checks of the reduced Allen-Cahn laboratory.

Each ``criterion_k`` returns a :class:`CriterionResult` holding the measured
quantities and a pass flag.  A :class:`Context` caches solves that several
criteria share (the Clifford solution feeds criteria 2, 6 and 7).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import flow as F
from . import geometry as Gm
from . import grid as G
from . import measures as M
from . import spectrum as S
from . import stationary as St
from .errors import AcsphereError
from .geometry import ReducedGeometry
from .potential import QUARTIC, PotentialSpec, sigma

NODES = 2000
EPS = 0.05
SWEEP_EPS = (0.2, 0.1, 0.05)

# index of the limit hypersurface where it is known
KNOWN_INDEX = {"equatorial": 1, "clifford(1,1)": 5}


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] criterion {self.number:2d}: {self.title} ({self.detail}; {self.seconds:.2f}s)"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "measured": self.measured, "detail": self.detail}


def expected_index(g: ReducedGeometry) -> int | None:
    if g.kind == "equatorial":
        return KNOWN_INDEX["equatorial"]
    return KNOWN_INDEX.get(g.label)


class Context:
    """Memoised single-layer solves and spectra keyed by geometry, eps, nodes."""

    def __init__(self, potential: PotentialSpec = QUARTIC, nodes: int = NODES):
        self.potential = potential
        self.nodes = nodes
        self._solves: dict = {}
        self._spectra: dict = {}

    def solve(self, g: ReducedGeometry, eps: float, nodes: int | None = None) -> St.SolveResult:
        key = (g.label, float(eps), nodes or self.nodes)
        if key not in self._solves:
            grid = G.build_grid(g, key[2])
            St.check_resolution(grid, eps, "acceptance.solve")
            res = St.solve_layers(grid, eps, [(g.minimal_radius, 1)], potential=self.potential)
            if not res.converged:
                raise AcsphereError(f"Newton failed for {g.label} at eps={eps}: {res.message}",
                                    where="stationary.newton_solve")
            self._solves[key] = res
        return self._solves[key]

    def spectrum(self, g: ReducedGeometry, eps: float, refine: bool = True) -> S.SpectrumReport:
        key = (g.label, float(eps), self.nodes, refine)
        if key not in self._spectra:
            res = self.solve(g, eps)
            fine = None
            if refine:
                f = self.solve(g, eps, 2 * self.nodes)
                fine = (f.grid, f.values)
            self._spectra[key] = S.assemble(res.grid, res.values, eps, self.potential, fine=fine)
        return self._spectra[key]


def _timed(number: int, title: str, fn, ctx: Context) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        out = fn(ctx)
    except AcsphereError as exc:
        out = CriterionResult(number, title, False, {}, f"error in {exc.where or '?'}: {exc}")
    out.number, out.title = number, title
    out.seconds = time.perf_counter() - t0
    return out


def _solution_check(ctx: Context, g: ReducedGeometry, index: int | None, nullity: int,
                    mass_tol: float, target: float) -> tuple[bool, dict]:
    res = ctx.solve(g, EPS)
    rep = ctx.spectrum(g, EPS)
    mass = M.mass_report(res.grid, res.values, EPS, ctx.potential)
    gap = abs(mass.energy_mass - target) / target
    ok = rep.nullity == nullity and gap <= mass_tol
    if index is not None:
        ok = ok and rep.index == index
    return ok, {
        "index": rep.index,
        "nullity": rep.nullity,
        "killing_nullity_found": rep.killing_nullity_found,
        "index_by_nodes": {str(k): v for k, v in sorted(rep.index_by_nodes.items())},
        "energy_mass": mass.energy_mass,
        "target_area": target,
        "relative_gap": gap,
        "zero_tol": rep.zero_tol,
        "residual_norm": res.residual_norm,
    }


def criterion_1(ctx: Context) -> CriterionResult:
    t0 = time.perf_counter()
    ok, m = _solution_check(ctx, Gm.equatorial_geometry(2), 1, 3, 0.02, 4 * math.pi)
    # wall time gates the pass flag but stays out of the (deterministic) record
    ok = ok and time.perf_counter() - t0 <= 60.0
    return CriterionResult(1, "", ok, m, f"index {m['index']}, nullity {m['nullity']}, "
                                          f"mass gap {m['relative_gap']:.2%}")


def criterion_2(ctx: Context) -> CriterionResult:
    ok, m = _solution_check(ctx, Gm.clifford_geometry(1, 1), 5, 4, 0.02, 2 * math.pi**2)
    same = len(set(m["index_by_nodes"].values())) == 1 and len(m["index_by_nodes"]) == 2
    return CriterionResult(2, "", ok and same, m,
                           f"index {m['index']} (by nodes {m['index_by_nodes']}), nullity {m['nullity']}, "
                           f"mass gap {m['relative_gap']:.2%}")


def criterion_3(ctx: Context) -> CriterionResult:
    target = Gm.sphere_area(1) * math.sqrt(1 / 3) * Gm.sphere_area(2) * (2 / 3)
    ok, m = _solution_check(ctx, Gm.clifford_geometry(1, 2), None, 6, 0.03, target)
    return CriterionResult(3, "", ok, m, f"nullity {m['nullity']}, index {m['index']} (reported), "
                                         f"mass gap {m['relative_gap']:.2%}")


def criterion_4(ctx: Context) -> CriterionResult:
    measured, ok = {}, True
    for g in (Gm.equatorial_geometry(2), Gm.clifford_geometry(1, 1)):
        try:
            levels = S.constant_spectrum_oracle(g, levels=4, node_count=NODES, rtol=1e-3)
        except AcsphereError as exc:
            measured[g.label] = str(exc)
            ok = False
            continue
        measured[g.label] = [{"value": lv.expected_value, "multiplicity": lv.multiplicity,
                              "max_rel_error": lv.max_rel_error} for lv in levels]
    worst = max((lv["max_rel_error"] for v in measured.values() if isinstance(v, list) for lv in v), default=math.nan)
    return CriterionResult(4, "", ok, measured, f"worst relative error {worst:.2e}")


def criterion_5(ctx: Context) -> CriterionResult:
    s = sigma(QUARTIC)
    err = abs(s - math.sqrt(2) / 3)
    return CriterionResult(5, "", err <= 1e-10, {"sigma": s, "abs_error": err}, f"|sigma - sqrt2/3| = {err:.1e}")


def criterion_6(ctx: Context) -> CriterionResult:
    res = ctx.solve(Gm.clifford_geometry(1, 1), EPS)
    grid, u = res.grid, res.values
    measured, ok = {}, True
    for theta, target in ((0.01, 1.0), (-0.01, -1.0)):
        u0, lam1, _ = F.perturb_along_ground_state(grid, EPS, u, theta, ctx.potential)
        sub = F.is_subsolution(grid, EPS, u0 if theta > 0 else -u0, ctx.potential)
        tr = F.flow_to_equilibrium(grid, EPS, u0, potential=ctx.potential)
        mono = tr.monotone_up if theta > 0 else tr.monotone_down
        dist = float(np.max(np.abs(tr.snapshots[-1] - target)))
        passed = mono and tr.settled and dist <= 1e-6
        ok = ok and passed
        measured["up" if theta > 0 else "down"] = {
            "theta": theta, "lambda_1": lam1, "barrier_holds": sub, "monotone": mono,
            "energy_nonincreasing": tr.energy_nonincreasing, "settled": tr.settled,
            "settle_time": tr.times[-1], "distance_to_well": dist,
        }
    up, dn = measured["up"], measured["down"]
    return CriterionResult(6, "", ok, measured,
                           f"to +1: dist {up['distance_to_well']:.1e}, to -1: dist {dn['distance_to_well']:.1e}")


def criterion_7(ctx: Context) -> CriterionResult:
    cl = ctx.solve(Gm.clifford_geometry(1, 1), EPS)
    bo = St.brezis_oswald_solve(cl.grid, EPS, ctx.potential)
    agree = float(np.max(np.abs(bo.values - cl.values)))
    eq = ctx.solve(Gm.equatorial_geometry(2), EPS)
    odd = float(np.max(np.abs(eq.values + eq.values[::-1])))
    ok = bo.converged and agree <= 1e-8 and odd <= 1e-10
    return CriterionResult(7, "", ok, {"bo_newton_sup": agree, "equatorial_oddness": odd,
                                       "bo_iterations": bo.iterations},
                           f"BO vs Newton {agree:.1e}, oddness {odd:.1e}")


def criterion_8(ctx: Context, seed: int = 0, triples: int = 100) -> CriterionResult:
    eps = 0.02
    g = Gm.equatorial_geometry(2)
    grid = G.build_grid(g, NODES)
    res = St.three_layer_solve(grid, eps, potential=ctx.potential)
    radii = np.array(res.notes["nodal_radii"])
    d = res.notes["d"]
    disjoint, margin = M.radius_sets_disjoint(radii, [g.r_mid], tol=grid.h)
    layers_ok = bool(res.notes["demo_ok"]) and radii.size == 2 and d > 0 and disjoint

    rng = np.random.default_rng(seed)
    mismatches, closest = [], math.inf
    for _ in range(triples):
        theta0 = float(rng.uniform(0.05, math.pi - 0.05))
        phi = float(rng.uniform(0.0, math.pi / 2))
        r0 = float(rng.uniform(0.05, math.pi / 2 - 0.05))
        axis = (math.cos(phi), math.sin(phi))
        exact = M.nodal_intersection(theta0, axis, r0)
        mc = M.nodal_intersection_monte_carlo(theta0, axis, r0, rng=rng)
        closest = min(closest, abs(exact.margin))
        if exact.intersects != mc:
            mismatches.append([theta0, phi, r0, exact.margin])
    ok = layers_ok and not mismatches
    # index of the three-layer solution is reported, never asserted
    index = spectral_summary(grid, res.values, eps, ctx.potential)
    return CriterionResult(8, "", ok, {
        "nodal_radii": radii.tolist(), "d": d, "converged": res.converged, "disjoint_margin": margin,
        "monte_carlo_triples": triples, "monte_carlo_mismatches": mismatches,
        "closest_margin": closest, "index": index["index"], "nullity": index["nullity"],
    }, f"radii pi/2 -+ {d:.5f}, {triples - len(mismatches)}/{triples} intersection triples agree")


def spectral_summary(grid: G.Grid, u, eps: float, potential: PotentialSpec = QUARTIC) -> dict:
    """Index and nullity, or ``None`` entries when the zero policy cannot
    separate the rotational kernel from the rest of the spectrum."""
    try:
        rep = S.assemble(grid, u, eps, potential)
    except AcsphereError as exc:
        return {"index": None, "nullity": None, "note": str(exc)}
    return {"index": rep.index, "nullity": rep.nullity, "note": ""}


def zero_state_index(g: ReducedGeometry, eps: float, nodes: int = NODES,
                     potential: PotentialSpec = QUARTIC) -> dict:
    """Index of the unstable constant u = 0 next to the count of ambient
    harmonics below -W''(0)/eps^2, which it should equal."""
    grid = G.build_grid(g, nodes)
    rep = S.assemble(grid, np.zeros(grid.size), eps, potential)
    level = -float(potential.w2(np.array(0.0))) / eps**2
    count, k = 0, 0
    while True:
        value, mult = S.ambient_level(g, k)
        if value >= level:
            break
        count += mult
        k += 1
    return {"geometry": g.label, "eps": eps, "index": rep.index, "harmonics_below": count}


def sweep_rows(g: ReducedGeometry, eps_list, nodes: int = NODES, potential: PotentialSpec = QUARTIC,
               ctx: Context | None = None) -> list[dict]:
    """Continuation in eps with spectrum and mass per step.

    A row passes when nullity <= nu and, once the index has reached the
    known index I of the limit surface, index + nullity <= I + nu.
    """
    eps_list = [float(e) for e in eps_list]
    grid = G.build_grid(g, nodes)
    results = St.continuation(lambda e: grid, eps_list, [(g.minimal_radius, 1)], potential=potential)
    ind_exp = expected_index(g)
    rows = []
    for res in results:
        row = {"geometry": g.label, "eps": res.eps, "converged": res.converged}
        if res.converged:
            rep = S.assemble(res.grid, res.values, res.eps, potential)
            mass = M.mass_report(res.grid, res.values, res.eps, potential)
            ok = rep.nullity <= g.killing_nullity
            if ind_exp is not None and rep.index >= ind_exp:
                ok = ok and rep.index + rep.nullity <= ind_exp + g.killing_nullity
            row.update(index=rep.index, nullity=rep.nullity, nu_expected=g.killing_nullity,
                       energy_mass=mass.energy_mass, target_area=g.limit_area,
                       relative_gap=mass.relative_gap, passed=ok)
            if ctx is not None:
                ctx._solves.setdefault((g.label, res.eps, nodes), res)
        else:
            row.update(index=None, nullity=None, nu_expected=g.killing_nullity, energy_mass=None,
                       target_area=g.limit_area, relative_gap=None, passed=False)
        rows.append(row)
    for e in eps_list[len(results):]:
        rows.append({"geometry": g.label, "eps": e, "converged": False, "index": None, "nullity": None,
                     "nu_expected": g.killing_nullity, "energy_mass": None, "target_area": g.limit_area,
                     "relative_gap": None, "passed": False})
    return rows


def criterion_9(ctx: Context) -> CriterionResult:
    rows = sweep_rows(Gm.clifford_geometry(1, 1), SWEEP_EPS, ctx.nodes, ctx.potential)
    ok = all(r["passed"] for r in rows)
    summary = ", ".join(f"eps {r['eps']}: {r['index']}+{r['nullity']}" for r in rows)
    return CriterionResult(9, "", ok, {"rows": rows}, summary)


def random_smooth_profile(grid: G.Grid, rng, terms: int = 6) -> np.ndarray:
    """tanh of a random cosine series: smooth, bounded by 1, not critical."""
    s = (grid.nodes - grid.geometry.r_min) / (grid.geometry.r_max - grid.geometry.r_min)
    k = np.arange(terms)
    coef = rng.standard_normal(terms) / (1.0 + k)
    return np.tanh(np.cos(np.pi * np.outer(s, k)) @ coef)


def criterion_10(ctx: Context, seed: int = 0) -> CriterionResult:
    rng = np.random.default_rng(seed)
    measured = {}
    for g in (Gm.clifford_geometry(1, 1), Gm.equatorial_geometry(2)):
        grid = G.build_grid(g, ctx.nodes)
        measured[f"{g.label}/random"] = G.gradient_consistency_check(
            grid, random_smooth_profile(grid, rng), EPS, count=10, seed=int(rng.integers(2**31)),
            potential=ctx.potential)
        bump = np.exp(-(((grid.nodes - g.r_mid) / (4 * EPS)) ** 2))
        measured[f"{g.label}/zero+bump"] = G.gradient_consistency_check(
            grid, np.zeros(grid.size), EPS, directions=bump, potential=ctx.potential)
    worst = max(measured.values())
    return CriterionResult(10, "", worst <= 1e-6, measured, f"worst relative error {worst:.1e}")


CRITERIA = {
    1: ("equatorial S^3: index 1, nullity 3, mass ~ 4pi", criterion_1),
    2: ("Clifford(1,1): index 5, nullity 4, mass ~ 2pi^2", criterion_2),
    3: ("T_{1,2} in S^4: nullity 6, mass ~ area", criterion_3),
    4: ("constant-potential spectrum oracle", criterion_4),
    5: ("sigma(quartic) = sqrt(2)/3", criterion_5),
    6: ("flow barriers from the Clifford solution", criterion_6),
    7: ("uniqueness and reflection symmetry", criterion_7),
    8: ("three-layer equatorial solution and intersection test", criterion_8),
    9: ("Clifford index + nullity bound over eps sweep", criterion_9),
    10: ("energy gradient consistency", criterion_10),
}


def run_criterion(number: int, ctx: Context | None = None) -> CriterionResult:
    title, fn = CRITERIA[number]
    return _timed(number, title, fn, ctx or Context())


def run_all(ctx: Context | None = None, numbers=None) -> list[CriterionResult]:
    ctx = ctx or Context()
    return [run_criterion(k, ctx) for k in (numbers or sorted(CRITERIA))]
