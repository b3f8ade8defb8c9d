"""Energy and varifold-mass diagnostics, nodal sets, and the closed-form
test of whether a geodesic sphere meets a Clifford torus."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .grid import Grid
from .potential import QUARTIC, PotentialSpec, sigma

SNAP = 1e-13


@dataclass
class MassReport:
    energy: float
    varifold_mass: float
    energy_mass: float
    discrepancy: float
    limit_area: float
    relative_gap: float

    def to_dict(self) -> dict:
        return asdict(self)


def mass_report(grid: Grid, u, eps: float, potential: PotentialSpec = QUARTIC) -> MassReport:
    """Energy, (1/2sigma)*eps*|grad u|^2 mass and the equipartition defect.

    The discrepancy W(u)/eps - eps|u'|^2/2 is accumulated separately from
    the gradient mass so that their sum checks the energy independently.
    """
    u = np.asarray(u, dtype=float)
    tv = grid.geometry.transverse_volume
    s2 = 2.0 * sigma(potential)
    du = np.diff(u) / grid.h
    grad_density = grid.flux * du * du * grid.h
    pot = grid.mass * potential.w(u) / eps
    varifold = tv * eps * float(np.sum(grad_density)) / s2
    discrepancy = tv * (float(np.sum(pot)) - 0.5 * eps * float(np.sum(grad_density))) / s2
    energy = tv * (0.5 * eps * float(np.sum(grad_density)) + float(np.sum(pot)))
    energy_mass = energy / s2
    area = grid.geometry.limit_area
    return MassReport(
        energy=energy,
        varifold_mass=varifold,
        energy_mass=energy_mass,
        discrepancy=discrepancy,
        limit_area=area,
        relative_gap=abs(energy_mass - area) / area,
    )


@dataclass
class NodalData:
    radii: np.ndarray
    separating: bool
    connected: bool


def nodal_data(grid: Grid, u) -> NodalData:
    """Zero crossings by sign change, located by linear interpolation."""
    u = np.asarray(u, dtype=float)
    r = grid.nodes
    s = np.sign(np.where(np.abs(u) <= SNAP, 0.0, u))
    radii = []
    nz = np.flatnonzero(s)
    for a, b in zip(nz[:-1], nz[1:]):
        if s[a] == s[b]:
            continue
        if b == a + 1:
            radii.append(r[a] - u[a] * (r[b] - r[a]) / (u[b] - u[a]))
        else:
            # run of snapped zeros between opposite signs: take its centre
            radii.append(0.5 * (r[a + 1] + r[b - 1]))
    radii = np.array(radii)
    return NodalData(radii=radii, separating=radii.size >= 1, connected=radii.size == 1)


@dataclass
class IntersectionResult:
    intersects: bool
    margin: float


def nodal_intersection(theta0: float, axis: tuple[float, float], r0: float) -> IntersectionResult:
    """Does the geodesic sphere at distance theta0 from the unit axis
    ``a = (a1 e, a2 f)`` (e, f unit vectors in the two coordinate planes of
    R^2 x R^2) meet the torus ``{(cos r0 x, sin r0 y)}``?

    On the torus <P, a> = a1 cos r0 <x, e> + a2 sin r0 <y, f> fills the
    interval [-R, R] with R = a1 cos r0 + a2 sin r0, and the sphere is
    {<P, a> = cos theta0}.
    """
    a1, a2 = axis
    if a1 < 0 or a2 < 0 or abs(a1 * a1 + a2 * a2 - 1.0) > 1e-9:
        raise ValueError("axis norms must be nonnegative with a1^2 + a2^2 = 1")
    if not (0 < theta0 < math.pi and 0 < r0 < math.pi / 2):
        raise ValueError("need theta0 in (0, pi) and r0 in (0, pi/2)")
    margin = a1 * math.cos(r0) + a2 * math.sin(r0) - abs(math.cos(theta0))
    return IntersectionResult(intersects=margin >= 0, margin=margin)


def nodal_intersection_monte_carlo(theta0: float, axis: tuple[float, float], r0: float,
                                   samples: int = 100_000, rng=None) -> bool:
    """Sample the torus in R^4 and look for points on both sides of the sphere."""
    rng = np.random.default_rng(0) if rng is None else rng
    a1, a2 = axis
    ax = np.array([a1, 0.0, a2, 0.0])
    t1 = rng.uniform(0, 2 * math.pi, samples)
    t2 = rng.uniform(0, 2 * math.pi, samples)
    pts = np.stack([math.cos(r0) * np.cos(t1), math.cos(r0) * np.sin(t1),
                    math.sin(r0) * np.cos(t2), math.sin(r0) * np.sin(t2)], axis=1)
    f = pts @ ax - math.cos(theta0)
    return bool(f.min() <= 0.0 <= f.max())


def radius_sets_disjoint(a, b, tol: float = 0.0) -> tuple[bool, float]:
    """Same-axis comparison of two families of parallel spheres: disjoint
    iff no radius of one lies within ``tol`` of the other; returns the
    smallest separation as the margin."""
    a, b = np.atleast_1d(a), np.atleast_1d(b)
    if a.size == 0 or b.size == 0:
        return True, math.inf
    gap = float(np.min(np.abs(a[:, None] - b[None, :])))
    return gap > tol, gap
