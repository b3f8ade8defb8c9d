"""Critical points of the reduced Allen-Cahn energy.

Damped Newton with a tridiagonal Jacobian, eps-continuation, tanh-layer
initial guesses, the half-domain positive Dirichlet solution extended by
odd reflection, and the two-layer solution near an equator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from . import grid as G
from .errors import BrezisOswaldError, PreconditionError
from .geometry import ReducedGeometry
from .grid import Grid, Profile
from .potential import QUARTIC, PotentialSpec

Layers = Sequence[tuple[float, int]]

@dataclass
class NewtonOptions:
    tol: float = 1e-10
    max_iter: int = 60
    armijo: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 2.0**-20
    record_iterates: bool = False


@dataclass
class SolveResult:
    profile: Profile
    eps: float
    residual_norm: float
    iterations: int
    converged: bool
    ansatz_descriptor: list[tuple[float, int]]
    tol: float = 1e-10
    history: list[float] = field(default_factory=list)
    message: str = ""
    condition: float | None = None
    iterates: list[np.ndarray] = field(default_factory=list, repr=False)
    notes: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.profile.grid

    @property
    def values(self) -> np.ndarray:
        return self.profile.values

    def metadata(self) -> dict:
        return {
            "geometry": self.grid.geometry.label,
            "nodes": self.grid.size,
            "eps": self.eps,
            "residual_norm": self.residual_norm,
            "tol": self.tol,
            "iterations": self.iterations,
            "converged": self.converged,
            "ansatz_descriptor": [[float(r), int(s)] for r, s in self.ansatz_descriptor],
            "history": list(self.history),
            "message": self.message,
            "condition": self.condition,
            "notes": self.notes,
        }


def check_resolution(grid: Grid, eps: float, where: str) -> None:
    if eps <= 0:
        raise PreconditionError("eps must be positive", where=where)
    if grid.h > eps / 4 * (1 + 1e-12):
        raise PreconditionError(f"grid too coarse: h = {grid.h:.3g} > eps/4 = {eps / 4:.3g}", where=where)


def ansatz_profile(grid: Grid, eps: float, layers: Layers) -> np.ndarray:
    """Product of oriented tanh layers; +1 for an empty layer list."""
    g = grid.geometry
    radii = [float(r) for r, _ in layers]
    if any(not (g.r_min < r < g.r_max) for r in radii):
        raise PreconditionError("layer radii must lie inside the open interval", where="stationary.ansatz_profile")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise PreconditionError("layer radii must be strictly increasing", where="stationary.ansatz_profile")
    u = np.ones(grid.size)
    for r, sign in layers:
        u *= (1 if sign >= 0 else -1) * np.tanh((grid.nodes - r) / (math.sqrt(2.0) * eps))
    return u


def parse_layers(text: str) -> list[tuple[float, int]]:
    """``"0.7:+,1.2:-"`` -> [(0.7, 1), (1.2, -1)]."""
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        r, _, s = item.partition(":")
        out.append((float(r), -1 if s.strip() == "-" else 1))
    return out


def _jacobian_bands(grid: Grid, u, eps: float, potential: PotentialSpec) -> np.ndarray:
    K = G.stiffness(grid)
    m = grid.mass
    ab = np.zeros((3, grid.size))
    ab[0, 1:] = -eps * K.off / m[:-1]
    ab[1] = -eps * K.diag / m - potential.w2(u) / eps
    ab[2, :-1] = -eps * K.off / m[1:]
    return ab


def _condition_estimate(ab: np.ndarray) -> float:
    n = ab.shape[1]
    A = np.diag(ab[1]) + np.diag(ab[0, 1:], 1) + np.diag(ab[2, :-1], -1)
    with np.errstate(all="ignore"):
        return float(np.linalg.cond(A)) if n <= 8000 else float("inf")


def newton_solve(
    grid: Grid,
    eps: float,
    initial,
    opts: NewtonOptions | None = None,
    potential: PotentialSpec = QUARTIC,
    descriptor: Layers = (),
) -> SolveResult:
    """Damped Newton on the discrete residual with Armijo backtracking."""
    opts = opts or NewtonOptions()
    check_resolution(grid, eps, "stationary.newton_solve")
    u = np.array(initial, dtype=float)
    if not np.all(np.isfinite(u)):
        raise PreconditionError("initial guess must be finite", where="stationary.newton_solve")
    tol = max(opts.tol, G.roundoff_floor(grid, eps))
    m = grid.mass

    def merit(F):
        return math.sqrt(float(np.sum(m * F * F)))

    F = G.residual(grid, u, eps, potential)
    history = [float(np.max(np.abs(F)))]
    iterates = [u.copy()] if opts.record_iterates else []
    message, condition = "", None
    converged = history[-1] <= tol
    it = 0
    while not converged and it < opts.max_iter:
        ab = _jacobian_bands(grid, u, eps, potential)
        try:
            with np.errstate(all="raise"):
                delta = solve_banded((1, 1), ab, -F)
        except (np.linalg.LinAlgError, FloatingPointError):
            condition = _condition_estimate(ab)
            message = f"singular Jacobian (condition estimate {condition:.3g})"
            break
        phi0 = merit(F)
        alpha = 1.0
        while True:
            trial = u + alpha * delta
            Ft = G.residual(grid, trial, eps, potential)
            if merit(Ft) <= (1.0 - opts.armijo * alpha) * phi0 or alpha <= opts.min_step:
                break
            alpha *= opts.backtrack
        it += 1
        u, F = trial, Ft
        history.append(float(np.max(np.abs(F))))
        if opts.record_iterates:
            iterates.append(u.copy())
        converged = history[-1] <= tol
        if not converged and alpha <= opts.min_step:
            message = "line search stalled at minimum step"
            break
    if not converged and not message:
        message = f"no convergence after {it} iterations"
    return SolveResult(
        profile=Profile(grid, u),
        eps=eps,
        residual_norm=history[-1],
        iterations=it,
        converged=converged,
        ansatz_descriptor=list(descriptor),
        tol=tol,
        history=history,
        message=message,
        condition=condition,
        iterates=iterates,
    )


def solve_layers(
    grid: Grid, eps: float, layers: Layers, opts: NewtonOptions | None = None, potential: PotentialSpec = QUARTIC
) -> SolveResult:
    """Newton from the tanh ansatz with the given layers."""
    init = ansatz_profile(grid, eps, layers)
    return newton_solve(grid, eps, init, opts, potential, descriptor=layers)


def interpolate(profile: Profile | SolveResult, grid: Grid) -> np.ndarray:
    src = profile.profile if isinstance(profile, SolveResult) else profile
    return np.interp(grid.nodes, src.grid.nodes, src.values)


def refine(result: SolveResult, node_count: int | None = None, opts: NewtonOptions | None = None,
           potential: PotentialSpec = QUARTIC) -> SolveResult:
    """Re-solve on a grid with ``node_count`` (default 2N) nodes."""
    g = result.grid.geometry
    fine = G.build_grid(g, node_count or 2 * result.grid.size)
    out = newton_solve(fine, result.eps, interpolate(result, fine), opts, potential, result.ansatz_descriptor)
    out.notes.update(result.notes)
    return out


def continuation(
    grid_builder: Callable[[float], Grid],
    eps_list: Sequence[float],
    layers: Layers,
    opts: NewtonOptions | None = None,
    potential: PotentialSpec = QUARTIC,
) -> list[SolveResult]:
    """Solve along a decreasing eps sweep, seeding each solve with the last.

    The sweep stops at the first Newton failure; the failed result is kept
    as the last entry.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise PreconditionError("eps_list must be strictly decreasing", where="stationary.continuation")
    grids = [grid_builder(e) for e in eps_list]
    for gr, e in zip(grids, eps_list):
        check_resolution(gr, e, "stationary.continuation")
    results: list[SolveResult] = []
    for gr, e in zip(grids, eps_list):
        init = ansatz_profile(gr, e, layers) if not results else interpolate(results[-1], gr)
        res = newton_solve(gr, e, init, opts, potential, descriptor=layers)
        results.append(res)
        if not res.converged:
            break
    return results


def bo_threshold(g: ReducedGeometry | Grid, potential: PotentialSpec = QUARTIC, node_count: int = 2001) -> float:
    """sqrt(|W''(0)| / lambda_1) with lambda_1 the first Dirichlet eigenvalue
    of the reduced Laplacian on the half-domain below the midpoint."""
    from .spectrum import lowest_eigenpair

    grid = g if isinstance(g, Grid) else G.build_grid(g, node_count)
    if not grid.geometry.symmetric:
        raise PreconditionError("half-domain threshold needs a reflection-symmetric geometry",
                                where="stationary.bo_threshold")
    lam1, _ = lowest_eigenpair(grid, grid.geometry.base_mode, odd=True)
    return math.sqrt(abs(float(potential.w2(np.array(0.0)))) / lam1)


def brezis_oswald_solve(
    grid: Grid,
    eps: float,
    potential: PotentialSpec = QUARTIC,
    tol: float = 1e-13,
    max_iter: int = 20000,
) -> SolveResult:
    """Positive Dirichlet solution on the lower half-domain by monotone
    iteration, extended to the whole interval by odd reflection."""
    where = "stationary.brezis_oswald_solve"
    g = grid.geometry
    if not g.symmetric or g.kind == "flat":
        raise PreconditionError(f"{g.label} has no reflection symmetry about its midpoint", where=where)
    check_resolution(grid, eps, where)
    threshold = bo_threshold(grid, potential)
    if eps >= threshold:
        raise PreconditionError(f"eps = {eps} is not below the threshold {threshold:.6g}", where=where)

    A, idx = G.mode_matrix(grid, odd=True)
    s = np.sqrt(grid.mass[idx])
    # (M - eps*Delta) in the symmetric scaling: shift*I + eps*A
    shift = potential.sup_abs_w2() / eps
    ab = np.zeros((3, idx.size))
    ab[0, 1:] = eps * A.off
    ab[1] = shift + eps * A.diag
    ab[2, :-1] = eps * A.off
    half = -ansatz_profile(grid, eps, [(g.r_mid, 1)])[idx]
    v = np.clip(half, 0.0, 1.0)
    it, delta = 0, np.inf
    while it < max_iter and delta > tol:
        rhs = shift * v - potential.w1(v) / eps
        v_new = solve_banded((1, 1), ab, rhs * s) / s
        it += 1
        if np.any(v_new <= 0.0):
            raise BrezisOswaldError(f"positivity lost at iteration {it}")
        delta = float(np.max(np.abs(v_new - v)))
        v = v_new
    u = G.odd_extend(grid, v)
    F = G.residual(grid, u, eps, potential)
    res_norm = float(np.max(np.abs(F)))
    rtol = max(NewtonOptions().tol, G.roundoff_floor(grid, eps))
    return SolveResult(
        profile=Profile(grid, u),
        eps=eps,
        residual_norm=res_norm,
        iterations=it,
        converged=delta <= tol and res_norm <= rtol,
        ansatz_descriptor=[(g.r_mid, 1)],
        tol=rtol,
        message="" if delta <= tol else f"monotone iteration stopped at increment {delta:.3g}",
        notes={"threshold": threshold, "monotone_shift": shift},
    )


def pinned_two_layer_solve(
    grid: Grid,
    eps: float,
    d: float,
    potential: PotentialSpec = QUARTIC,
    tol: float = 1e-10,
    max_iter: int = 40,
) -> tuple[np.ndarray, float, bool]:
    """Two layers held at mid +- d by a localized force lam * g.

    Bordered Newton on ``F(u) = lam * g``, ``u(mid + d) = 0`` (linear
    interpolation).  The multiplier ``lam`` is the force needed to hold the
    layers; it vanishes exactly at a true critical point.
    """
    mid = grid.geometry.r_mid
    rc = mid + d
    j = min(int((rc - grid.nodes[0]) // grid.h), grid.size - 2)
    t = (rc - grid.nodes[j]) / grid.h
    ell = np.zeros(grid.size)
    ell[j], ell[j + 1] = 1.0 - t, t
    s = math.sqrt(2.0) * eps
    g = np.cosh((grid.nodes - (mid - d)) / s) ** -2 + np.cosh((grid.nodes - (mid + d)) / s) ** -2
    u = ansatz_profile(grid, eps, [(mid - d, 1), (mid + d, 1)])
    lam = 0.0
    floor = max(tol, G.roundoff_floor(grid, eps))
    for _ in range(max_iter):
        R = G.residual(grid, u, eps, potential) - lam * g
        c = float(ell @ u)
        if np.max(np.abs(R)) <= floor and abs(c) <= 1e-13:
            return u, lam, True
        ab = _jacobian_bands(grid, u, eps, potential)
        try:
            a = solve_banded((1, 1), ab, -R)
            b = solve_banded((1, 1), ab, g)
        except np.linalg.LinAlgError:
            break
        dl = (-c - ell @ a) / (ell @ b)
        u = u + a + dl * b
        lam += dl
    return u, lam, False


def three_layer_solve(
    grid: Grid,
    eps: float,
    d0: float | None = None,
    opts: NewtonOptions | None = None,
    potential: PotentialSpec = QUARTIC,
    scan_points: int = 16,
) -> SolveResult:
    """Solution vanishing on two parallel spheres either side of the equator.

    The two-layer critical point is a saddle whose layer separation is an
    unstable balance between curvature (pushing the layers apart) and the
    tail interaction (pulling them together), so Newton from the ansatz at
    d0 alone drifts away.  Instead the layers are pinned at mid +- d, the
    holding force is scanned from d0 inward, bracketed at its sign change,
    and located with Brent's method; Newton then polishes the pinned
    profile without constraint.

    The outcome is recorded in ``notes``: ``nodal_radii``, ``d``, ``scan``
    and ``demo_ok`` (two radii placed symmetrically about the equator).
    """
    from .measures import nodal_data

    g = grid.geometry
    if g.kind != "equatorial":
        raise PreconditionError("three_layer_solve needs an equatorial geometry", where="stationary.three_layer_solve")
    check_resolution(grid, eps, "stationary.three_layer_solve")
    mid = g.r_mid
    d0 = 5.0 * eps if d0 is None else float(d0)
    d_hi = min(d0, mid - g.r_min - 4 * grid.h)
    d_lo = max(0.5 * eps, 4 * grid.h)
    scan = []
    bracket = None
    for d in np.linspace(d_hi, d_lo, scan_points):
        u, lam, ok = pinned_two_layer_solve(grid, eps, float(d), potential)
        trivial = float(np.max(np.abs(u))) < 0.5
        scan.append([float(d), float(lam), bool(ok and not trivial)])
        if not ok or trivial:
            break
        if len(scan) > 1 and scan[-2][2] and scan[-2][1] < 0.0 <= lam:
            bracket = (float(d), scan[-2][0])
            break

    notes: dict = {"d0": d0, "scan": scan}
    if bracket is None:
        init = ansatz_profile(grid, eps, [(mid - d_hi, 1), (mid + d_hi, 1)])
        res = newton_solve(grid, eps, init, opts, potential, descriptor=[(mid - d_hi, 1), (mid + d_hi, 1)])
        notes["bracket"] = None
    else:
        d_star = brentq(lambda d: pinned_two_layer_solve(grid, eps, d, potential)[1], *bracket, xtol=1e-13)
        u, lam, _ = pinned_two_layer_solve(grid, eps, d_star, potential)
        notes.update({"bracket": list(bracket), "pinned_d": float(d_star), "pinned_force": float(lam)})
        res = newton_solve(grid, eps, u, opts, potential, descriptor=[(mid - d_star, 1), (mid + d_star, 1)])

    radii = nodal_data(grid, res.values).radii
    d = float(0.5 * (radii[1] - radii[0])) if len(radii) == 2 else 0.0
    ok = (
        res.converged
        and len(radii) == 2
        and abs((radii[0] + radii[1]) - 2 * mid) < 1e-8
        and d > grid.h
    )
    notes.update({"nodal_radii": [float(r) for r in radii], "d": d, "demo_ok": bool(ok)})
    res.notes.update(notes)
    if not ok:
        kind = "constant" if len(radii) == 0 else ("one-layer" if len(radii) == 1 else f"{len(radii)}-crossing")
        if bracket is None:
            kind += " (no force sign change while pinning)"
        res.message = (res.message + "; " if res.message else "") + f"demo failure: collapsed to {kind} solution"
    return res
