"""Parabolic Allen-Cahn flow u_t = eps*Delta u - W'(u)/eps on a reduced grid.

Time stepping is semi-implicit: diffusion implicit, reaction explicit,

    (I - dt*eps*Delta_h) u_next = u - dt*W'(u)/eps.

The implicit matrix is an M-matrix and, for dt <= eps/sup|W''|, the explicit
map is nondecreasing on [-1, 1]; together they make the discrete flow
order preserving, so a discrete subsolution flows monotonically upward.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from . import grid as G
from .errors import PreconditionError
from .grid import Grid, Profile
from .potential import QUARTIC, PotentialSpec

MONOTONE_SLACK = 1e-12


def default_dt(eps: float, potential: PotentialSpec = QUARTIC) -> float:
    return eps / (2.0 * potential.sup_abs_w2())


def _implicit_bands(grid: Grid, eps: float, dt: float) -> np.ndarray:
    K = G.stiffness(grid)
    m = grid.mass
    ab = np.zeros((3, grid.size))
    ab[0, 1:] = dt * eps * K.off / m[:-1]
    ab[1] = 1.0 + dt * eps * K.diag / m
    ab[2, :-1] = dt * eps * K.off / m[1:]
    return ab


def step(grid: Grid, eps: float, u, dt: float, potential: PotentialSpec = QUARTIC, _bands=None) -> np.ndarray:
    if dt <= 0:
        raise PreconditionError("dt must be positive", where="flow.step")
    u = np.asarray(u, dtype=float)
    ab = _implicit_bands(grid, eps, dt) if _bands is None else _bands
    # increment form: (I - dt*eps*Delta_h) du = dt * residual(u); equilibria stay bitwise fixed
    return u + solve_banded((1, 1), ab, dt * G.residual(grid, u, eps, potential))


def is_subsolution(grid: Grid, eps: float, u, potential: PotentialSpec = QUARTIC, slack: float | None = None) -> bool:
    """Residual eps*Delta u - W'(u)/eps >= -slack at every node.

    Endpoint nodes of a singular reduction are regular points of the
    sphere, so they are checked too.  The default slack is 1e-12 or the
    grid's round-off floor, whichever is larger.
    """
    if slack is None:
        slack = max(1e-12, G.roundoff_floor(grid, eps))
    return bool(np.all(G.residual(grid, u, eps, potential) >= -slack))


@dataclass
class FlowTrace:
    times: list[float]
    snapshots: list[np.ndarray] = field(repr=False)
    energies: list[float] = field(repr=False)
    energy_times: list[float] = field(repr=False)
    min_u: list[float] = field(repr=False)
    max_u: list[float] = field(repr=False)
    monotone_up: bool
    monotone_down: bool
    energy_nonincreasing: bool
    settled: bool
    limit: Profile | None
    steps: int
    dt: float

    def rows(self):
        """(time, energy, min u, max u) per recorded step."""
        return list(zip(self.energy_times, self.energies, self.min_u, self.max_u))


def flow_to_equilibrium(
    grid: Grid,
    eps: float,
    u0,
    dt: float | None = None,
    t_max: float | None = None,
    settle_tol: float = 1e-8,
    potential: PotentialSpec = QUARTIC,
    snapshot_every: int = 50,
) -> FlowTrace:
    """Integrate until ||u(t+dt) - u(t)||_inf <= settle_tol*dt or t_max.

    Monotonicity flags and energy decay are checked at every step (with
    a round-off slack of 1e-12); snapshots are stored every
    ``snapshot_every`` steps plus the first and last.
    """
    u = np.array(u0, dtype=float)
    if np.max(np.abs(u)) > 1.0 + 1e-12:
        raise PreconditionError("initial data must satisfy |u0| <= 1", where="flow.flow_to_equilibrium")
    dt = default_dt(eps, potential) if dt is None else dt
    t_max = 1e4 * eps if t_max is None else t_max
    ab = _implicit_bands(grid, eps, dt)

    t = 0.0
    e = G.energy(grid, u, eps, potential)
    times, snaps = [0.0], [u.copy()]
    energies, etimes, mins, maxs = [e], [0.0], [float(u.min())], [float(u.max())]
    up = down = e_ok = True
    settled = False
    n = 0
    while t < t_max - 1e-12:
        nxt = step(grid, eps, u, dt, potential, _bands=ab)
        n += 1
        t += dt
        diff = nxt - u
        up = up and bool(np.all(diff >= -MONOTONE_SLACK))
        down = down and bool(np.all(diff <= MONOTONE_SLACK))
        e_new = G.energy(grid, nxt, eps, potential)
        e_ok = e_ok and e_new <= e + 1e-10 * (1.0 + abs(e))
        u, e = nxt, e_new
        energies.append(e)
        etimes.append(t)
        mins.append(float(u.min()))
        maxs.append(float(u.max()))
        settled = float(np.max(np.abs(diff))) <= settle_tol * dt
        if settled or n % snapshot_every == 0:
            times.append(t)
            snaps.append(u.copy())
        if settled:
            break
    if times[-1] != t:
        times.append(t)
        snaps.append(u.copy())
    return FlowTrace(
        times=times,
        snapshots=snaps,
        energies=energies,
        energy_times=etimes,
        min_u=mins,
        max_u=maxs,
        monotone_up=up,
        monotone_down=down,
        energy_nonincreasing=e_ok,
        settled=settled,
        limit=Profile(grid, u) if settled else None,
        steps=n,
        dt=dt,
    )


def perturb_along_ground_state(grid: Grid, eps: float, u, theta: float, potential: PotentialSpec = QUARTIC):
    """u + theta*phi_1 with phi_1 > 0 the ground state of the linearisation
    in the invariant mode (unit L^2 norm on the sphere); returns
    (perturbed profile, lambda_1, phi_1)."""
    from .spectrum import linearized_potential, lowest_eigenpair

    lam1, phi = lowest_eigenpair(grid, grid.geometry.base_mode, linearized_potential(u, eps, potential))
    return np.asarray(u, dtype=float) + theta * phi, lam1, phi
