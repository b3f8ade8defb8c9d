"""Uniform finite-volume discretisation of a reduced geometry.

Nodes include both endpoints.  Node ``i`` owns the control volume
``[r_i - h/2, r_i + h/2]`` clipped to the interval; its mass is the exact
integral of ``w`` over that cell, so singular endpoints keep a positive
(if tiny) mass.  Fluxes use ``w`` at the cell faces.  The resulting

    (Delta_h f)_i = -(K f)_i / m_i,   K = stiffness, m = cell masses

is self-adjoint in the inner product ``<f, g> = sum(m * f * g)``, and the
discrete energy below is exactly the functional whose ``m``-gradient is the
residual, so energy and residual stay consistent at any resolution.
Regularity at a singular endpoint (``f' = 0``) is the natural boundary
condition of this scheme; Dirichlet modes simply drop the endpoint node.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import PreconditionError
from .geometry import ReducedGeometry, TransverseMode
from .potential import QUARTIC, PotentialSpec

MIN_NODES = 9

_GX, _GW = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True, eq=False)
class Grid:
    geometry: ReducedGeometry
    nodes: np.ndarray = field(repr=False)
    h: float
    mass: np.ndarray = field(repr=False)
    flux: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def weight_samples(self) -> np.ndarray:
        """Effective nodal weight m_i / h used by every quadrature."""
        return self.mass / self.h

    @property
    def singular(self) -> tuple[bool, bool]:
        return self.geometry.singular

    def cell_integral(self, f) -> np.ndarray:
        """Per-node integral of ``f(r) * w(r)`` over the control volumes."""
        a = np.maximum(self.nodes - 0.5 * self.h, self.geometry.r_min)
        b = np.minimum(self.nodes + 0.5 * self.h, self.geometry.r_max)
        r = 0.5 * (b - a)[:, None] * _GX + 0.5 * (a + b)[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = f(r) * self.geometry.weight(r)
        return 0.5 * (b - a) * (vals @ _GW)

    def inner(self, f, g) -> float:
        return float(np.sum(self.mass * np.asarray(f) * np.asarray(g)))

    def mirror(self, f) -> np.ndarray:
        return np.asarray(f)[::-1]


@dataclass(eq=False)
class Profile:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.nodes.shape:
            raise ValueError("profile length does not match grid")

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["r", "u"])
            for r, u in zip(self.grid.nodes, self.values):
                wr.writerow([repr(float(r)), repr(float(u))])

    @classmethod
    def read_csv(cls, path, grid: Grid | None = None, geometry: ReducedGeometry | None = None) -> "Profile":
        data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
        if grid is None:
            if geometry is None:
                raise ValueError("need a grid or a geometry to read a profile")
            grid = build_grid(geometry, data.shape[0])
        if not np.allclose(grid.nodes, data[:, 0], rtol=0, atol=1e-12):
            raise ValueError("profile nodes do not match grid")
        return cls(grid, data[:, 1])


class Tridiag(NamedTuple):
    """Symmetric tridiagonal matrix by its diagonal and off-diagonal."""

    diag: np.ndarray
    off: np.ndarray

    def matvec(self, f):
        out = self.diag * f
        out[:-1] += self.off * f[1:]
        out[1:] += self.off * f[:-1]
        return out


def build_grid(g: ReducedGeometry, node_count: int) -> Grid:
    if node_count < MIN_NODES:
        raise PreconditionError(f"need at least {MIN_NODES} nodes, got {node_count}", where="grid.build_grid")
    nodes = np.linspace(g.r_min, g.r_max, node_count)
    h = (g.r_max - g.r_min) / (node_count - 1)
    grid = Grid(g, nodes, h, np.empty(0), np.empty(0))
    mass = grid.cell_integral(lambda r: 1.0)
    flux = g.weight(0.5 * (nodes[1:] + nodes[:-1]))
    if g.symmetric:
        mass = 0.5 * (mass + mass[::-1])
        flux = 0.5 * (flux + flux[::-1])
    object.__setattr__(grid, "mass", mass)
    object.__setattr__(grid, "flux", flux)
    return grid


def stiffness(grid: Grid) -> Tridiag:
    c = grid.flux / grid.h
    diag = np.zeros(grid.size)
    diag[:-1] += c
    diag[1:] += c
    return Tridiag(diag, -c)


def laplacian(grid: Grid, f) -> np.ndarray:
    """Weighted reduced Laplacian (1/w)(w f')' with regular endpoints."""
    # flux differences rather than K @ f, so constants map to exactly zero
    flux = grid.flux / grid.h * np.diff(np.asarray(f, dtype=float))
    out = np.zeros(grid.size)
    out[:-1] += flux
    out[1:] -= flux
    return out / grid.mass


def roundoff_floor(grid: Grid, eps: float) -> float:
    """Smallest sup-norm residual resolvable near |u| = 1: one ulp of u
    times the largest diagonal entry of eps*Delta_h.  The tiny cell mass at
    a singular endpoint makes this exceed 1e-10 on fine grids."""
    K = stiffness(grid)
    return float(eps * np.max(K.diag / grid.mass) * np.finfo(float).eps)


def residual(grid: Grid, u, eps: float, potential: PotentialSpec = QUARTIC) -> np.ndarray:
    """Nodewise eps*Delta u - W'(u)/eps for transversally invariant u."""
    if eps <= 0:
        raise PreconditionError("eps must be positive", where="grid.residual")
    u = np.asarray(u, dtype=float)
    return eps * laplacian(grid, u) - potential.w1(u) / eps


def energy(grid: Grid, u, eps: float, potential: PotentialSpec = QUARTIC) -> float:
    u = np.asarray(u, dtype=float)
    du = np.diff(u) / grid.h
    grad = np.sum(grid.flux * du * du) * grid.h
    pot = np.sum(grid.mass * potential.w(u))
    return float(grid.geometry.transverse_volume * (0.5 * eps * grad + pot / eps))


def _smooth_directions(grid: Grid, count: int, rng) -> np.ndarray:
    # random sine series vanishing at both ends
    s = (grid.nodes - grid.geometry.r_min) / (grid.geometry.r_max - grid.geometry.r_min)
    k = np.arange(1, 9)
    basis = np.sin(np.pi * np.outer(s, k))
    return (basis @ (rng.standard_normal((k.size, count)) / k[:, None])).T


def gradient_consistency_check(
    grid: Grid,
    u,
    eps: float,
    directions=None,
    count: int = 10,
    step: float = 1e-5,
    seed: int = 0,
    potential: PotentialSpec = QUARTIC,
) -> float:
    """Worst relative mismatch between a central-difference dE(u)[phi] and
    -tv * <residual(u), phi>, over the given (or random smooth) directions."""
    u = np.asarray(u, dtype=float)
    if directions is None:
        directions = _smooth_directions(grid, count, np.random.default_rng(seed))
    res = residual(grid, u, eps, potential)
    tv = grid.geometry.transverse_volume
    worst = 0.0
    for phi in np.atleast_2d(directions):
        de = (energy(grid, u + step * phi, eps, potential) - energy(grid, u - step * phi, eps, potential)) / (2 * step)
        ip = -tv * grid.inner(res, phi)
        scale = max(abs(de), abs(ip))
        if scale < 1e-300:
            continue
        worst = max(worst, abs(de - ip) / scale)
    return worst


def mode_matrix(
    grid: Grid,
    mode: TransverseMode | None = None,
    extra=None,
    odd: bool = False,
) -> tuple[Tridiag, np.ndarray]:
    """Symmetric tridiagonal form of -Delta_red + q_mode + extra.

    Returns the matrix ``M^{-1/2} (K + Q + M*extra) M^{-1/2}`` on the active
    nodes, and the active node indices.  Dirichlet endpoints of the mode are
    removed.  With ``odd=True`` the problem is restricted to functions odd
    about the interval midpoint, i.e. the Dirichlet problem on the left half.
    """
    K = stiffness(grid)
    diag = K.diag.copy()
    off = K.off.copy()
    n = grid.size
    if mode is not None and mode.q_min > 0:
        diag = diag + grid.cell_integral(mode.potential)
    if extra is not None:
        diag = diag + grid.mass * np.asarray(extra, dtype=float)
    lo, hi = 0, n
    if mode is not None:
        lo = 1 if mode.dirichlet[0] else 0
        hi = n - 1 if mode.dirichlet[1] else n
    if odd:
        if n % 2 == 0:
            k = n // 2 - 1
            diag[k] -= off[k]  # mirror value is -u_k
            hi = min(hi, k + 1)
        else:
            hi = min(hi, (n - 1) // 2)  # centre node pinned to zero
    idx = np.arange(lo, hi)
    s = 1.0 / np.sqrt(grid.mass[idx])
    d = diag[idx] * s * s
    e = off[lo : hi - 1] * s[:-1] * s[1:]
    return Tridiag(d, e), idx


def odd_half_indices(grid: Grid) -> np.ndarray:
    n = grid.size
    return np.arange(n // 2 if n % 2 == 0 else (n - 1) // 2)


def odd_extend(grid: Grid, half_values) -> np.ndarray:
    """Odd reflection about the midpoint: ``-v`` on the left half, mirrored
    ``+v`` on the right half (positive above the midpoint)."""
    n = grid.size
    v = np.asarray(half_values, dtype=float)
    out = np.zeros(n)
    out[: v.size] = -v
    out[n - v.size :] = v[::-1]
    return out
