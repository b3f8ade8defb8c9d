"""Morse index, nullity and Killing nullity of reduced Allen-Cahn solutions.

The second variation at u is the Schroedinger-type operator
``-Delta + eps**-2 W''(u)``.  After separation of variables each transverse
mode gives a 1-D Sturm-Liouville problem

    -(1/w)(w f')' + q_mode(r) f + eps**-2 W''(u(r)) f = lam f,

whose discretisation is symmetric tridiagonal after scaling by sqrt(mass).
Only eigenvalues below a cutoff are computed (bisection via LAPACK stebz).
Index and nullity sum these over modes with multiplicity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import grid as G
from .errors import EigenSolverError, IndeterminateNullityError, OracleMismatchError
from .geometry import ModeId, ReducedGeometry, TransverseMode, harmonic_dimension
from .grid import Grid, Tridiag
from .potential import QUARTIC, PotentialSpec

DEFAULT_CUTOFF = 10.0
SEPARATION = 10.0


@dataclass
class ModeEigenvalues:
    mode_id: ModeId
    multiplicity: int
    eigenvalues: np.ndarray
    boundary: tuple[str, str]
    vectors: np.ndarray | None = field(default=None, repr=False)
    raw: np.ndarray | None = field(default=None, repr=False)
    fine: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = {
            "mode": list(self.mode_id),
            "multiplicity": self.multiplicity,
            "boundary": list(self.boundary),
            "eigenvalues": [float(x) for x in self.eigenvalues],
        }
        if self.raw is not None:
            d["eigenvalues_coarse"] = [float(x) for x in self.raw]
        if self.fine is not None:
            d["eigenvalues_fine"] = [float(x) for x in self.fine]
        return d


@dataclass
class KillingCandidate:
    mode_id: ModeId
    multiplicity: int
    values: np.ndarray = field(repr=False)
    rayleigh: float


@dataclass
class SpectrumReport:
    eps: float
    geometry: str
    nodes: int
    modes: list[ModeEigenvalues] = field(repr=False)
    index: int
    nullity: int
    killing_nullity_expected: int
    zero_tol: float
    killing_rayleigh: list[float]
    truncation_bound: float
    kappa: float
    mu: float
    killing_aligned: list[tuple[ModeId, float]]
    fine_nodes: int | None = None
    index_by_nodes: dict[int, int] = field(default_factory=dict)

    @property
    def killing_nullity_found(self) -> int:
        found = 0
        for mid, lam in self.killing_aligned:
            if abs(lam) <= self.zero_tol:
                found += next(m.multiplicity for m in self.modes if m.mode_id == mid)
        return found

    def negative(self) -> list[tuple[ModeId, int, float]]:
        return [(m.mode_id, m.multiplicity, float(x)) for m in self.modes for x in m.eigenvalues if x < -self.zero_tol]

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "geometry": self.geometry,
            "nodes": self.nodes,
            "fine_nodes": self.fine_nodes,
            "index": self.index,
            "nullity": self.nullity,
            "killing_nullity_expected": self.killing_nullity_expected,
            "killing_nullity_found": self.killing_nullity_found,
            "zero_tol": self.zero_tol,
            "kappa": self.kappa,
            "mu": self.mu,
            "killing_rayleigh": list(self.killing_rayleigh),
            "killing_aligned": [[list(mid), lam] for mid, lam in self.killing_aligned],
            "truncation_bound": self.truncation_bound,
            "index_by_nodes": {str(k): v for k, v in sorted(self.index_by_nodes.items())},
            "retained_modes": len(self.modes),
        }


def _boundary(mode: TransverseMode | None, grid: Grid) -> tuple[str, str]:
    out = []
    for side in (0, 1):
        if mode is not None and mode.dirichlet[side]:
            out.append("dirichlet")
        else:
            out.append("regular" if grid.singular[side] else "neumann")
    return tuple(out)


def _eig_below(A: Tridiag, cutoff: float, vectors: bool, label) -> tuple[np.ndarray, np.ndarray | None]:
    if A.diag.size == 0:
        return np.empty(0), None
    rad = np.zeros_like(A.diag)
    rad[:-1] += np.abs(A.off)
    rad[1:] += np.abs(A.off)
    lo = float(np.min(A.diag - rad)) - 1.0
    if lo >= cutoff:
        return np.empty(0), (np.empty((A.diag.size, 0)) if vectors else None)
    try:
        if vectors:
            lam, vec = eigh_tridiagonal(A.diag, A.off, select="v", select_range=(lo, cutoff))
            return lam, vec
        lam = eigh_tridiagonal(A.diag, A.off, eigvals_only=True, select="v", select_range=(lo, cutoff))
        return lam, None
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenSolverError(f"eigensolver failed for mode {label}: {exc}") from exc


def _to_full(grid: Grid, idx: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Back-transform scaled eigenvectors to nodal values (zero off idx)."""
    out = np.zeros((grid.size,) + y.shape[1:])
    out[idx] = y / np.sqrt(grid.mass[idx]).reshape((-1,) + (1,) * (y.ndim - 1))
    return out


def linearized_potential(u, eps: float, potential: PotentialSpec = QUARTIC) -> np.ndarray:
    return potential.w2(np.asarray(u, dtype=float)) / eps**2


def lowest_eigenpair(grid: Grid, mode: TransverseMode | None = None, extra=None, odd: bool = False,
                     transverse_volume: float | None = None):
    """Lowest eigenvalue and its eigenfunction, normalised to unit L^2 norm
    on the sphere (``tv * sum(m * phi**2) = 1``) and positive at its maximum."""
    A, idx = G.mode_matrix(grid, mode, extra, odd)
    lam, vec = eigh_tridiagonal(A.diag, A.off, select="i", select_range=(0, 0))
    phi = _to_full(grid, idx, vec[:, 0])
    tv = grid.geometry.transverse_volume if transverse_volume is None else transverse_volume
    phi /= math.sqrt(tv * grid.inner(phi, phi))
    if phi[np.argmax(np.abs(phi))] < 0:
        phi = -phi
    return float(lam[0]), phi


def mode_eigenvalues(
    grid: Grid,
    u,
    eps: float,
    mode: TransverseMode,
    count_below: float = DEFAULT_CUTOFF,
    potential: PotentialSpec = QUARTIC,
    vectors: bool = False,
) -> ModeEigenvalues:
    """All eigenvalues <= count_below of -Delta_red + q_mode + W''(u)/eps^2.

    With ``vectors=True`` the eigenfunctions are returned as nodal values,
    orthonormal in the mass inner product.
    """
    A, idx = G.mode_matrix(grid, mode, linearized_potential(u, eps, potential))
    lam, vec = _eig_below(A, count_below, vectors, mode.id)
    return ModeEigenvalues(
        mode_id=mode.id,
        multiplicity=mode.multiplicity,
        eigenvalues=lam,
        boundary=_boundary(mode, grid),
        vectors=_to_full(grid, idx, vec) if vectors and vec is not None else None,
    )


def radial_derivative(grid: Grid, u) -> np.ndarray:
    """Central-difference u' with u' = 0 at the endpoints (regularity)."""
    u = np.asarray(u, dtype=float)
    du = np.zeros_like(u)
    du[1:-1] = (u[2:] - u[:-2]) / (2 * grid.h)
    return du


def rayleigh_quotient(grid: Grid, mode: TransverseMode, extra, psi) -> float:
    A, idx = G.mode_matrix(grid, mode, extra)
    y = np.sqrt(grid.mass[idx]) * np.asarray(psi)[idx]
    yy = float(y @ y)
    if yy == 0.0:
        return float("nan")
    return float(y @ A.matvec(y)) / yy


def killing_modes(grid: Grid, u, eps: float, potential: PotentialSpec = QUARTIC) -> list[KillingCandidate]:
    """Rotational kernel candidates <grad u, xi>.

    For both reductions a rotation mixing the axis (or the two factor
    planes) with an orbit direction gives <grad u, xi> = u'(r) * Y with Y a
    first harmonic on each collapsing factor, so the radial part is u'(r)
    and the transverse mode is the one listed in ``killing_mode_ids``.
    """
    g = grid.geometry
    psi = radial_derivative(grid, u)
    if not np.any(psi):
        return []
    extra = linearized_potential(u, eps, potential)
    out = []
    for mid in g.killing_mode_ids:
        mode = g.mode(mid)
        out.append(KillingCandidate(mid, mode.multiplicity, psi, rayleigh_quotient(grid, mode, extra, psi)))
    return out


def _richardson(coarse: np.ndarray, fine: np.ndarray, h_c: float, h_f: float) -> np.ndarray:
    k = min(coarse.size, fine.size)
    out = fine.copy()
    a, b = h_c**2, h_f**2
    out[:k] = (a * fine[:k] - b * coarse[:k]) / (a - b)
    return out


def truncation_bound(eps: float, cutoff: float, potential: PotentialSpec = QUARTIC) -> float:
    """Modes with q_min above this have every eigenvalue above ``cutoff``:
    the form is at least q_min + inf W''/eps^2 >= q_min - sup(-W'')_+/eps^2."""
    return potential.sup_neg_w2() / eps**2 + cutoff


def assemble(
    grid: Grid,
    u,
    eps: float,
    potential: PotentialSpec = QUARTIC,
    cutoff: float = DEFAULT_CUTOFF,
    fine: tuple[Grid, np.ndarray] | None = None,
    separation: float = SEPARATION,
) -> SpectrumReport:
    """Index and nullity with multiplicities.

    With ``fine = (grid2, u2)`` (the same solution on a refined grid) the
    eigenvalues are Richardson-extrapolated in h^2 before classification.

    Zero classification: kappa is the largest |Rayleigh quotient| of the
    Killing candidates (on the finest grid), mu the smallest |eigenvalue| not
    aligned with a Killing candidate; zero_tol = sqrt(kappa * mu) provided
    mu / kappa >= separation, otherwise the nullity is indeterminate.
    """
    g = grid.geometry
    u = np.asarray(u, dtype=float)
    bound = truncation_bound(eps, cutoff, potential)
    modes = g.modes(bound)
    grids = [(grid, u)] + ([(fine[0], np.asarray(fine[1], dtype=float))] if fine is not None else [])
    kill_ids = set(g.killing_mode_ids)

    per_grid = []
    for gr, uu in grids:
        res = {m.id: mode_eigenvalues(gr, uu, eps, m, cutoff, potential, vectors=m.id in kill_ids) for m in modes}
        per_grid.append(res)
    top_grid, top_u = grids[-1]
    candidates = killing_modes(top_grid, top_u, eps, potential)

    results: list[ModeEigenvalues] = []
    for m in modes:
        coarse = per_grid[0][m.id]
        if fine is not None:
            f = per_grid[1][m.id]
            vals = _richardson(coarse.eigenvalues, f.eigenvalues, grid.h, fine[0].h)
            results.append(ModeEigenvalues(m.id, m.multiplicity, vals, coarse.boundary, f.vectors,
                                           raw=coarse.eigenvalues, fine=f.eigenvalues))
        else:
            results.append(coarse)
    by_id = {r.mode_id: r for r in results}

    aligned: list[tuple[ModeId, float]] = []
    aligned_pos: dict[ModeId, int] = {}
    for c in candidates:
        r = by_id.get(c.mode_id)
        if r is None or r.vectors is None or r.eigenvalues.size == 0:
            continue
        y = np.sqrt(top_grid.mass)[:, None] * r.vectors
        w = np.sqrt(top_grid.mass) * c.values
        overlap = np.abs(w @ y) / (np.linalg.norm(w) + 1e-300)
        k = int(np.argmax(overlap))
        aligned_pos[c.mode_id] = k
        aligned.append((c.mode_id, float(r.eigenvalues[k])))

    others = [abs(float(x)) for r in results for i, x in enumerate(r.eigenvalues) if aligned_pos.get(r.mode_id) != i]
    mu = min(others + [cutoff])
    if candidates:
        kappa = max(abs(c.rayleigh) for c in candidates)
        if not kappa * separation <= mu:
            raise IndeterminateNullityError(
                f"Killing scale kappa = {kappa:.3g} not separated from smallest other |eigenvalue| mu = {mu:.3g}"
            )
        zero_tol = math.sqrt(kappa * mu)
    else:
        # constant profiles carry no rotational kernel; fall back to a tiny absolute scale
        kappa = 0.0
        zero_tol = 1e-8 / eps**2

    def counts(key):
        index = nullity = 0
        for r in results:
            vals = key(r)
            index += r.multiplicity * int(np.sum(vals < -zero_tol))
            nullity += r.multiplicity * int(np.sum(np.abs(vals) <= zero_tol))
        return index, nullity

    index, nullity = counts(lambda r: r.eigenvalues)
    index_by_nodes = {grid.size: counts(lambda r: r.raw if r.raw is not None else r.eigenvalues)[0]}
    if fine is not None:
        index_by_nodes[fine[0].size] = counts(lambda r: r.fine)[0]

    return SpectrumReport(
        eps=eps,
        geometry=g.label,
        nodes=grid.size,
        modes=results,
        index=index,
        nullity=nullity,
        killing_nullity_expected=g.killing_nullity,
        zero_tol=zero_tol,
        killing_rayleigh=[c.rayleigh for c in candidates],
        truncation_bound=bound,
        kappa=kappa,
        mu=mu,
        killing_aligned=aligned,
        fine_nodes=fine[0].size if fine is not None else None,
        index_by_nodes=index_by_nodes,
    )


@dataclass
class OracleLevel:
    degree: int
    expected_value: float
    expected_multiplicity: int
    values: list[float]
    multiplicity: int
    max_rel_error: float


def ambient_level(g: ReducedGeometry, k: int) -> tuple[float, int]:
    """k-th eigenvalue k(k+n) of -Delta on S^{n+1} and its multiplicity."""
    n = g.ambient_dim - 1
    return float(k * (k + n)), harmonic_dimension(n + 1, k)


def constant_spectrum_oracle(g: ReducedGeometry, levels: int = 4, node_count: int = 2000,
                             rtol: float = 1e-3) -> list[OracleLevel]:
    """Reduced -Delta spectrum assembled over modes versus the harmonic
    spectrum of the ambient sphere; raises on any mismatch."""
    if not 1 <= levels <= 6:
        raise ValueError("levels must be between 1 and 6")
    grid = G.build_grid(g, node_count)
    targets = [ambient_level(g, k) for k in range(levels)]
    top = targets[-1][0]
    nxt = ambient_level(g, levels)[0]
    cutoff = 0.5 * (top + nxt)
    found: list[tuple[float, int]] = []
    for mode in g.modes(cutoff):
        lam, _ = _eig_below(G.mode_matrix(grid, mode)[0], cutoff, False, mode.id)
        found.extend((float(x), mode.multiplicity) for x in lam)
    out = []
    used = [False] * len(found)
    for k, (value, mult) in enumerate(targets):
        vals, total, err = [], 0, 0.0
        for i, (x, m) in enumerate(found):
            e = abs(x - value) / max(value, 1.0)
            if e <= rtol:
                vals.append(x)
                total += m
                used[i] = True
                err = max(err, e)
        out.append(OracleLevel(k, value, mult, sorted(vals), total, err))
        if total != mult:
            raise OracleMismatchError(f"level {k}: value {value} multiplicity {total}, expected {mult}")
    stray = [x for (x, _), u in zip(found, used) if not u]
    if stray:
        raise OracleMismatchError(f"unmatched reduced eigenvalues {stray[:5]}")
    return out
