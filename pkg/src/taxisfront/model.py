"""Kinetics of the predator-prey system with habitat front.

Holds the model constants, the Beddington-DeAngelis reaction terms, and the
prey-taxis sensitivity with its high-density cutoff.  The concrete sensitivity
is

    chi(u) = chi0 * (1 - (u/u_m)^2)^2   for u < u_m,   0 otherwise,

which is C1 on [0, inf) with a piecewise-polynomial (hence Lipschitz)
derivative that vanishes at the cutoff.  It is not C2 at u_m; nothing in this
package relies on second derivatives of chi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ModelParams",
    "InitialData",
    "ValidationReport",
    "CosineProfile",
    "SampledProfile",
    "cosine_initial_data",
    "chi",
    "chi_prime",
    "eta",
    "eta_prime",
    "reaction_f",
    "reaction_g",
    "validate",
    "profile_sup_norms",
]

_POSITIVE_FIELDS = ("a", "b", "c", "m", "q", "r", "d", "mu", "h0", "u_m")


@dataclass(frozen=True)
class ModelParams:
    """Kinetic constants plus front response and taxis parameters.

    a: predator mortality (1/time)
    b: conversion-weighted capture rate (1/time)
    c: saturation constant (density)
    m: mutual-interference constant (1/density)
    q: prey intrinsic growth rate (1/time)
    r: predation rate (1/time)
    d: prey diffusivity (length^2/time)
    mu: front response coefficient (length^2/(time*density))
    h0: initial habitat length
    chi0: taxis amplitude chi(0); chi0 = 0 disables taxis
    u_m: taxis cutoff density
    """

    a: float
    b: float
    c: float
    m: float
    q: float
    r: float
    d: float
    mu: float
    h0: float
    chi0: float
    u_m: float

    def __post_init__(self):
        for name in _POSITIVE_FIELDS:
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"ModelParams.{name} must be finite and > 0, got {val!r}")
        if not (math.isfinite(self.chi0) and self.chi0 >= 0):
            raise ValueError(f"ModelParams.chi0 must be finite and >= 0, got {self.chi0!r}")

    @property
    def chi_prime_lipschitz(self) -> float:
        """Lipschitz constant of chi'; |chi''| peaks at the cutoff with 8*chi0/u_m^2."""
        return 8.0 * self.chi0 / self.u_m**2


def _as_float_or_array(u):
    arr = np.asarray(u, dtype=float)
    return arr, arr.ndim == 0


def chi(u, p: ModelParams):
    """Taxis sensitivity; zero for u >= u_m."""
    arr, scalar = _as_float_or_array(u)
    s2 = np.minimum(arr / p.u_m, 1.0) ** 2
    out = p.chi0 * (1.0 - s2) ** 2
    return float(out) if scalar else out


def chi_prime(u, p: ModelParams):
    """Derivative of chi; continuous and zero for u >= u_m."""
    arr, scalar = _as_float_or_array(u)
    inside = arr < p.u_m
    s2 = np.where(inside, (arr / p.u_m) ** 2, 1.0)
    out = np.where(inside, -4.0 * p.chi0 * arr / p.u_m**2 * (1.0 - s2), 0.0)
    return float(out) if scalar else out


def eta(u, p: ModelParams):
    """Taxis flux coefficient u*chi(u); vanishes for u >= u_m."""
    arr, scalar = _as_float_or_array(u)
    out = arr * chi(arr, p)
    return float(out) if scalar else out


def eta_prime(u, p: ModelParams):
    """Exact derivative of eta: chi(u) + u*chi'(u)."""
    arr, scalar = _as_float_or_array(u)
    out = chi(arr, p) + arr * chi_prime(arr, p)
    return float(out) if scalar else out


def eta_pair(u, p: ModelParams):
    """(eta, eta') in one masked pass; hot-loop variant of eta/eta_prime."""
    arr = np.asarray(u, dtype=float)
    s = np.minimum(arr / p.u_m, 1.0)
    core = 1.0 - s * s  # zero core kills both chi and chi' beyond the cutoff
    chi_val = p.chi0 * core * core
    chi_d = (-4.0 * p.chi0 / p.u_m**2) * arr * core
    return arr * chi_val, chi_val + arr * chi_d


def reaction_f(u, v, p: ModelParams):
    """Predator reaction b*u*v/(c+u+m*v) - a*u; total on the nonnegative quadrant."""
    u_arr, su = _as_float_or_array(u)
    v_arr, sv = _as_float_or_array(v)
    out = p.b * u_arr * v_arr / (p.c + u_arr + p.m * v_arr) - p.a * u_arr
    return float(out) if (su and sv) else out


def reaction_g(u, v, p: ModelParams):
    """Prey reaction v*(q-v) - r*u*v/(c+u+m*v)."""
    u_arr, su = _as_float_or_array(u)
    v_arr, sv = _as_float_or_array(v)
    out = v_arr * (p.q - v_arr) - p.r * u_arr * v_arr / (p.c + u_arr + p.m * v_arr)
    return float(out) if (su and sv) else out


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class CosineProfile:
    """amplitude * cos(pi*x/(2*h0)): zero slope at 0, zero value at h0."""

    amplitude: float
    h0: float

    def __call__(self, x):
        return self.amplitude * np.cos(0.5 * np.pi * np.asarray(x, dtype=float) / self.h0)

    def derivative(self, x):
        k = 0.5 * np.pi / self.h0
        return -self.amplitude * k * np.sin(k * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SampledProfile:
    """Piecewise-linear profile through uniform samples on [0, h0]."""

    values: tuple
    h0: float

    def __call__(self, x):
        nodes = np.linspace(0.0, self.h0, len(self.values))
        return np.interp(np.asarray(x, dtype=float), nodes, np.asarray(self.values, dtype=float))


@dataclass(frozen=True)
class InitialData:
    """Initial density profiles on [0, h0], as callables over x arrays.

    Optional analytic derivatives sharpen validation and the h* report; when
    absent, one-sided second-order finite differences with step 1e-5*h0 are
    used instead.
    """

    u0: Callable
    v0: Callable
    u0_deriv: Optional[Callable] = None
    v0_deriv: Optional[Callable] = None


def cosine_initial_data(U: float, V: float, h0: float) -> InitialData:
    """Default profile family U*cos(pi*x/(2*h0)), V*cos(pi*x/(2*h0))."""
    up = CosineProfile(U, h0)
    vp = CosineProfile(V, h0)
    return InitialData(u0=up, v0=vp, u0_deriv=up.derivative, v0_deriv=vp.derivative)


def _deriv_at(f, deriv, x0: float, h0: float, side: str) -> float:
    if deriv is not None:
        return float(deriv(x0))
    eps = 1e-5 * h0
    if side == "left":  # one-sided into x > x0
        return float((-3.0 * f(x0) + 4.0 * f(x0 + eps) - f(x0 + 2 * eps)) / (2 * eps))
    return float((3.0 * f(x0) - 4.0 * f(x0 - eps) + f(x0 - 2 * eps)) / (2 * eps))


def profile_sup_norms(data: InitialData, h0: float, n_samples: int = 4097):
    """Dense-sampled sup norms (|u0|, |v0|, |v0'|) on [0, h0]."""
    x = np.linspace(0.0, h0, n_samples)
    u = np.asarray(data.u0(x), dtype=float)
    v = np.asarray(data.v0(x), dtype=float)
    if data.v0_deriv is not None:
        vp = np.abs(np.asarray(data.v0_deriv(x), dtype=float)).max()
    else:
        vp = np.abs(np.gradient(v, x)).max()
    return float(np.abs(u).max()), float(np.abs(v).max()), float(vp)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple
    hstar: Optional[float]


def validate(
    p: ModelParams,
    data: InitialData,
    allow_zero_u0: bool = False,
    n_samples: int = 4097,
    tol_rel: float = 1e-8,
) -> ValidationReport:
    """Check the initial-data compatibility conditions.

    Returns the named violations and the initial front speed
    h* = -mu*v0'(h0) (None when v0'(h0) >= 0).  Sampled profiles cannot meet
    the endpoint/derivative conditions exactly, hence the relative tolerance.
    `allow_zero_u0` admits predator-free data for majorant/oracle runs.
    """
    h0 = p.h0
    x = np.linspace(0.0, h0, n_samples)
    u = np.asarray(data.u0(x), dtype=float)
    v = np.asarray(data.v0(x), dtype=float)
    sup_u = float(np.abs(u).max())
    sup_v = float(np.abs(v).max())

    violations = []
    tol_u = tol_rel * max(1.0, sup_u)
    tol_v = tol_rel * max(1.0, sup_v)

    if u.min() < -tol_u:
        violations.append("u0 negative")
    if v.min() < -tol_v:
        violations.append("v0 negative")
    if not allow_zero_u0 and sup_u <= 0.0:
        violations.append("u0 identically zero")
    if sup_v <= 0.0:
        violations.append("v0 identically zero")
    if abs(float(data.u0(h0))) > tol_u:
        violations.append("u0(h0) != 0")
    if abs(float(data.v0(h0))) > tol_v:
        violations.append("v0(h0) != 0")

    # slope compatibility at the fixed wall, relative to the profile scale
    du0 = _deriv_at(data.u0, data.u0_deriv, 0.0, h0, "left")
    dv0 = _deriv_at(data.v0, data.v0_deriv, 0.0, h0, "left")
    if abs(du0) > tol_rel * max(sup_u, 1e-300) / h0 and sup_u > 0:
        violations.append("u0'(0) != 0")
    if abs(dv0) > tol_rel * max(sup_v, 1e-300) / h0 and sup_v > 0:
        violations.append("v0'(0) != 0")

    dvh = _deriv_at(data.v0, data.v0_deriv, h0, h0, "right")
    hstar = None
    if dvh >= 0.0:
        violations.append("v0'(h0) >= 0")
    else:
        hstar = -p.mu * dvh

    return ValidationReport(ok=not violations, violations=tuple(violations), hstar=hstar)
