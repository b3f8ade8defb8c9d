"""Cohomogeneity-one reductions of the round sphere S^{n+1}.

Each reduction is a 1-D interval with a relative volume density ``w(r)``
and a family of transverse modes.  A transverse mode is a joint eigenspace
of the orbit Laplacian; separating variables turns ``-Delta + V(r)`` into
``-(1/w)(w f')' + q(r) f + V(r) f`` with multiplicity ``mode.multiplicity``.

Two reductions are supported:

* ``equatorial_geometry(n)``: polar angle ``theta`` in ``[0, pi]`` about an
  axis, orbits are round n-spheres, ``w = sin(theta)**n``.
* ``clifford_geometry(p, q)``: ``x = (cos r * a, sin r * b)`` with
  ``a in S^p``, ``b in S^q``, ``w = cos(r)**p * sin(r)**q`` on ``[0, pi/2]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import UnsupportedGeometryError

ModeId = tuple[int, ...]


def sphere_area(m: int) -> float:
    """Volume of the unit round m-sphere."""
    return 2.0 * math.pi ** ((m + 1) / 2) / math.gamma((m + 1) / 2)


def harmonic_dimension(m: int, degree: int) -> int:
    """Dimension of degree-``degree`` spherical harmonics on S^m."""
    if degree < 0:
        return 0
    lower = math.comb(degree + m - 2, m) if degree >= 2 else 0
    return math.comb(degree + m, m) - lower


@dataclass(frozen=True)
class TransverseMode:
    id: ModeId
    multiplicity: int
    potential: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    q_min: float
    # True where the mode must vanish: the orbit factor it lives on collapses there
    dirichlet: tuple[bool, bool]

    def __post_init__(self):
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be positive")


@dataclass(frozen=True)
class ReducedGeometry:
    kind: str
    r_min: float
    r_max: float
    weight: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    transverse_volume: float
    killing_nullity: int
    limit_area: float
    minimal_radius: float
    ambient_dim: int
    params: tuple[int, ...]
    mode_family: Callable[[float], list[TransverseMode]] = field(repr=False, compare=False)
    killing_mode_ids: tuple[ModeId, ...] = ()
    symmetric: bool = False
    # endpoints where w vanishes (coordinate singularities); sin(pi) != 0 in floats
    singular: tuple[bool, bool] = (True, True)

    @property
    def label(self) -> str:
        return f"{self.kind}({','.join(str(p) for p in self.params)})"

    @property
    def r_mid(self) -> float:
        return 0.5 * (self.r_min + self.r_max)


    def area_density(self, r):
        return self.transverse_volume * self.weight(np.asarray(r, dtype=float))

    def modes(self, bound: float) -> list[TransverseMode]:
        """All modes with min_r q(r) <= bound, ordered by (q_min, id)."""
        found = self.mode_family(bound)
        return sorted(found, key=lambda m: (m.q_min, m.id))

    def mode(self, mode_id: ModeId) -> TransverseMode:
        mode_id = tuple(mode_id)
        bound = 16.0
        while bound < 1e7:
            for m in self.mode_family(bound):
                if m.id == mode_id:
                    return m
            bound *= 4.0
        raise KeyError(mode_id)

    @property
    def base_mode(self) -> TransverseMode:
        return self.modes(0.0)[0]


def equatorial_geometry(n: int) -> ReducedGeometry:
    if n < 2:
        raise UnsupportedGeometryError(f"equatorial reduction needs n >= 2, got {n}")

    def weight(r):
        return np.sin(r) ** n

    def family(bound: float) -> list[TransverseMode]:
        out = []
        ell = 0
        while ell * (ell + n - 1) <= bound:
            c = float(ell * (ell + n - 1))
            out.append(
                TransverseMode(
                    id=(ell,),
                    multiplicity=harmonic_dimension(n, ell),
                    potential=(lambda r, c=c: c / np.sin(r) ** 2) if ell else (lambda r: np.zeros_like(r)),
                    q_min=c,
                    dirichlet=(ell > 0, ell > 0),
                )
            )
            ell += 1
        return out

    return ReducedGeometry(
        kind="equatorial",
        r_min=0.0,
        r_max=math.pi,
        weight=weight,
        transverse_volume=sphere_area(n),
        killing_nullity=n + 1,
        limit_area=sphere_area(n),
        minimal_radius=math.pi / 2,
        ambient_dim=n + 1,
        params=(n,),
        mode_family=family,
        killing_mode_ids=((1,),),
        symmetric=True,
    )


def clifford_geometry(p: int, q: int) -> ReducedGeometry:
    if p < 1 or q < 1:
        raise UnsupportedGeometryError(f"clifford reduction needs p, q >= 1, got ({p}, {q})")
    n = p + q

    def weight(r):
        return np.cos(r) ** p * np.sin(r) ** q

    def family(bound: float) -> list[TransverseMode]:
        out = []
        l1 = 0
        while l1 * (l1 + p - 1) <= bound:
            a = float(l1 * (l1 + p - 1))
            l2 = 0
            while True:
                b = float(l2 * (l2 + q - 1))
                q_min = (math.sqrt(a) + math.sqrt(b)) ** 2
                if q_min > bound:
                    break
                out.append(
                    TransverseMode(
                        id=(l1, l2),
                        multiplicity=harmonic_dimension(p, l1) * harmonic_dimension(q, l2),
                        potential=lambda r, a=a, b=b: (a / np.cos(r) ** 2 if a else 0.0)
                        + (b / np.sin(r) ** 2 if b else 0.0)
                        + np.zeros_like(r),
                        q_min=q_min,
                        # S^q collapses at r = 0, S^p at r = pi/2
                        dirichlet=(l2 > 0, l1 > 0),
                    )
                )
                l2 += 1
            l1 += 1
        return out

    r_star = math.asin(math.sqrt(q / n))
    area = sphere_area(p) * (p / n) ** (p / 2) * sphere_area(q) * (q / n) ** (q / 2)
    return ReducedGeometry(
        kind="clifford",
        r_min=0.0,
        r_max=math.pi / 2,
        weight=weight,
        transverse_volume=sphere_area(p) * sphere_area(q),
        killing_nullity=(p + 1) * (q + 1),
        limit_area=area,
        minimal_radius=r_star,
        ambient_dim=n + 1,
        params=(p, q),
        mode_family=family,
        killing_mode_ids=((1, 1),),
        symmetric=(p == q),
    )


def flat_geometry(length: float = 1.0) -> ReducedGeometry:
    """Unit-weight interval with Neumann ends; a test bed, not a sphere."""

    def family(bound: float) -> list[TransverseMode]:
        return [TransverseMode((0,), 1, lambda r: np.zeros_like(r), 0.0, (False, False))]

    return ReducedGeometry(
        kind="flat",
        r_min=0.0,
        r_max=float(length),
        weight=lambda r: np.ones_like(np.asarray(r, dtype=float)),
        transverse_volume=1.0,
        killing_nullity=0,
        limit_area=1.0,
        minimal_radius=0.5 * length,
        ambient_dim=1,
        params=(),
        mode_family=family,
        symmetric=True,
        singular=(False, False),
    )


def from_name(kind: str, n: int = 2, p: int = 1, q: int = 1) -> ReducedGeometry:
    if kind == "equatorial":
        return equatorial_geometry(n)
    if kind == "clifford":
        return clifford_geometry(p, q)
    raise UnsupportedGeometryError(f"unknown geometry {kind!r}")


def total_volume_check(g: ReducedGeometry) -> float:
    """transverse_volume * integral of w; equals vol(S^{n+1}) for sphere reductions."""
    x, wq = np.polynomial.legendre.leggauss(64)
    edges = np.linspace(g.r_min, g.r_max, 33)
    a, b = edges[:-1, None], edges[1:, None]
    r = 0.5 * (b - a) * x + 0.5 * (a + b)
    return float(g.transverse_volume * np.sum(0.5 * (b - a) * wq * g.weight(r)))
