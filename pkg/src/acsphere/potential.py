"""Balanced double-well potentials W and their derived constants.

The default is the quartic ``W(t) = (1 - t**2)**2 / 4``.  Other even
polynomial wells can be built from a coefficient list (ascending powers).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate

from .errors import InvalidPotentialError

ArrayFn = Callable[[np.ndarray], np.ndarray]

_SAMPLES = np.linspace(-2.0, 2.0, 4001)
_UNIT_SAMPLES = np.linspace(-1.0, 1.0, 2001)


@dataclass(frozen=True)
class PotentialSpec:
    name: str
    w: ArrayFn
    w1: ArrayFn
    w2: ArrayFn
    w3: ArrayFn
    well_value: float = 1.0

    def sup_abs_w2(self) -> float:
        """sup of |W''| on [-1, 1] (sampled, endpoints and 0 included)."""
        return float(np.max(np.abs(self.w2(_UNIT_SAMPLES))))

    def sup_neg_w2(self) -> float:
        """sup of (-W'')_+ on [-1, 1]."""
        return float(max(0.0, np.max(-self.w2(_UNIT_SAMPLES))))

    def scaled(self, c2: float) -> "PotentialSpec":
        """The potential c2 * W."""
        if c2 <= 0:
            raise InvalidPotentialError("scale factor must be positive")
        return PotentialSpec(
            name=f"{self.name}*{c2:g}",
            w=lambda t: c2 * self.w(t),
            w1=lambda t: c2 * self.w1(t),
            w2=lambda t: c2 * self.w2(t),
            w3=lambda t: c2 * self.w3(t),
            well_value=self.well_value,
        )


def quartic() -> PotentialSpec:
    # factored forms keep W(±1) = W'(±1) = 0 exact in floating point
    return PotentialSpec(
        name="quartic",
        w=lambda t: 0.25 * (1.0 - t * t) ** 2,
        w1=lambda t: t * (t * t - 1.0),
        w2=lambda t: 3.0 * t * t - 1.0,
        w3=lambda t: 6.0 * t,
    )


QUARTIC = quartic()


def polynomial(coeffs: Sequence[float], name: str = "polynomial") -> PotentialSpec:
    """Potential from ascending polynomial coefficients, validated."""
    p = Polynomial(np.asarray(coeffs, dtype=float))
    if np.any(p.coef[1::2] != 0.0):
        raise InvalidPotentialError("potential must be even (odd coefficients nonzero)")
    d1, d2, d3 = p.deriv(1), p.deriv(2), p.deriv(3)
    spec = PotentialSpec(
        name=name,
        w=lambda t: p(np.asarray(t, dtype=float)),
        w1=lambda t: d1(np.asarray(t, dtype=float)),
        w2=lambda t: d2(np.asarray(t, dtype=float)),
        w3=lambda t: d3(np.asarray(t, dtype=float)),
    )
    validate(spec)
    return spec


def by_name(name: str, coeffs: Sequence[float] | None = None) -> PotentialSpec:
    if name == "quartic":
        return QUARTIC
    if coeffs is None:
        raise InvalidPotentialError(f"unknown potential {name!r} and no coefficients given")
    return polynomial(coeffs, name=name)


def validate(spec: PotentialSpec, fd_tol: float = 1e-6) -> None:
    """Sampled check of the double-well invariants; raises on violation."""
    t = _SAMPLES
    w = spec.w(t)
    wells = spec.w(np.array([-1.0, 1.0]))
    if np.any(np.abs(wells) > 1e-12):
        raise InvalidPotentialError(f"W(±1) must vanish, got {wells}")
    off = np.abs(np.abs(t) - 1.0) > 1e-9
    if np.any(w[off] <= 0.0):
        raise InvalidPotentialError("W must be positive away from ±1 on [-2, 2]")
    if not np.allclose(w, spec.w(-t), rtol=0.0, atol=1e-12):
        raise InvalidPotentialError("W must be even")
    if not spec.w2(np.array(0.0)) < 0.0:
        raise InvalidPotentialError("W''(0) must be negative")
    if np.any(spec.w2(np.array([-1.0, 1.0])) <= 0.0):
        raise InvalidPotentialError("W''(±1) must be positive")
    h = 1e-5
    tt = np.linspace(-1.5, 1.5, 301)
    for f, df, label in ((spec.w, spec.w1, "W'"), (spec.w1, spec.w2, "W''"), (spec.w2, spec.w3, "W'''")):
        fd = (f(tt + h) - f(tt - h)) / (2 * h)
        scale = 1.0 + np.max(np.abs(df(tt)))
        if np.max(np.abs(fd - df(tt))) > fd_tol * scale:
            raise InvalidPotentialError(f"{label} inconsistent with finite differences")


def sigma(spec: PotentialSpec = QUARTIC) -> float:
    """Normalising constant: integral of sqrt(W/2) over [-1, 1]."""
    samples = spec.w(_UNIT_SAMPLES)
    if not np.all(np.isfinite(samples)) or np.any(samples < -1e-14):
        raise InvalidPotentialError("W must be finite and nonnegative on [-1, 1]")

    def integrand(t):
        return math.sqrt(max(float(spec.w(np.array(t))), 0.0) / 2.0)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, _ = integrate.quad(integrand, -1.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)
        except integrate.IntegrationWarning as exc:
            raise InvalidPotentialError(f"sigma quadrature failed: {exc}") from exc
    if not value > 0:
        raise InvalidPotentialError("sigma must be positive")
    return value
