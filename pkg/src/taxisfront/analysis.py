"""Closed-form certificates and trajectory classification.

Everything here is either exact formula evaluation (a-priori bounds, the
critical habitat length, the vanishing/spreading response certificates) or a
pure function of a recorded trajectory (verdict, front speed, prey band).
The one exception is bisect_mu_star, which schedules solver runs to pin the
sharp front-response threshold inside its certificate bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.stats import linregress

from .model import InitialData, ModelParams, profile_sup_norms

__all__ = [
    "Bounds",
    "Certificates",
    "VanishingCertificate",
    "NotApplicable",
    "VerdictKind",
    "Verdict",
    "SpeedEstimate",
    "BandReport",
    "BisectResult",
    "BisectError",
    "ClassifyTolerances",
    "compute_bounds",
    "vanishing_barrier",
    "vanishing_certificate",
    "spreading_certificate",
    "certificates",
    "classify",
    "estimate_speed",
    "band_check",
    "bisect_mu_star",
]


@dataclass(frozen=True)
class Bounds:
    """A-priori sup bounds: u <= M1, v <= M2, h' <= M3; K is the barrier slope."""

    M1: float
    M2: float
    M3: float
    K: float


def compute_bounds(p: ModelParams, data: InitialData, n_samples: int = 4097) -> Bounds:
    """Evaluate the closed-form bounds from dense-sampled profile norms.

    M2 = max(q, |v0|),  K = max(1/h0, sqrt(q/2d), |v0'|/M2),  M3 = 2*mu*M2*K,
    M1 = max(u_m, |u0|, (b - a*m)*M2/a - c).
    """
    sup_u0, sup_v0, sup_dv0 = profile_sup_norms(data, p.h0, n_samples)
    M2 = max(p.q, sup_v0)
    K = max(1.0 / p.h0, math.sqrt(0.5 * p.q / p.d), sup_dv0 / M2)
    M3 = 2.0 * p.mu * M2 * K
    M1 = max(p.u_m, sup_u0, (p.b - p.a * p.m) * M2 / p.a - p.c)
    return Bounds(M1=M1, M2=M2, M3=M3, K=K)


def vanishing_barrier(p: ModelParams) -> float:
    """Critical habitat length (pi/2)*sqrt(d/q); a bounded front never exceeds it."""
    return 0.5 * math.pi * math.sqrt(p.d / p.q)


@dataclass(frozen=True)
class VanishingCertificate:
    delta: float
    alpha: float
    Mcap: float
    mu0: float


@dataclass(frozen=True)
class NotApplicable:
    reason: str


def _golden_max(fn: Callable[[float], float], lo: float, hi: float, iters: int = 60):
    """Golden-section maximization on [lo, hi]; returns (x, fn(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


def vanishing_certificate(p: ModelParams, data: InitialData,
                          n_samples: int = 10001):
    """Certificate forcing extinction for mu <= mu0 when h0 is below the barrier.

    With A = d*pi^2/(4*h0^2) the inflation delta solves
    A/(1+delta)^2 - q = (A - q)/2 in closed form, alpha = (A - q)/2 is the
    decay rate, and Mcap is the least amplitude dominating v0 under the
    stretched cosine cos(pi*x/(2*h0*(1+delta/2))); then mu0 = delta*alpha*h0^2/Mcap.
    Mcap comes from dense sampling of the pointwise ratio plus golden-section
    refinement around the sampled maximizer.
    """
    A = p.d * math.pi**2 / (4.0 * p.h0**2)
    if A <= p.q:  # h0 >= barrier
        return NotApplicable("h0 >= (pi/2)*sqrt(d/q): vanishing certificate undefined")
    delta = math.sqrt(2.0 * A / (A + p.q)) - 1.0
    alpha = 0.5 * (A - p.q)

    stretch = 0.5 * math.pi / (p.h0 * (1.0 + 0.5 * delta))

    def ratio(x):
        return np.asarray(data.v0(x), dtype=float) / np.cos(stretch * np.asarray(x, dtype=float))

    x = np.linspace(0.0, p.h0, n_samples)
    r = ratio(x)
    j = int(np.argmax(r))
    lo = x[max(j - 1, 0)]
    hi = x[min(j + 1, n_samples - 1)]
    _, refined = _golden_max(lambda s: float(ratio(s)), lo, hi)
    Mcap = max(float(r[j]), refined)

    mu0 = delta * alpha * p.h0**2 / Mcap
    return VanishingCertificate(delta=delta, alpha=alpha, Mcap=Mcap, mu0=mu0)


def band_floor(p: ModelParams, bounds: Bounds) -> float:
    """Asymptotic prey floor q - r*M1/(c + M1) on bounded sets (spreading case)."""
    return p.q - p.r * bounds.M1 / (p.c + bounds.M1)


def spreading_certificate(p: ModelParams, data: InitialData, bounds: Bounds,
                          n_panels: int = 2048):
    """Certificate forcing spreading for mu >= mu_upper; needs a positive prey floor."""
    floor = band_floor(p, bounds)
    if floor <= 0.0:
        return NotApplicable("q <= r*M1/(c+M1): spreading certificate undefined")
    barrier = vanishing_barrier(p)
    if p.h0 >= barrier:
        return NotApplicable("h0 >= (pi/2)*sqrt(d/q): spreading holds unconditionally")
    x = np.linspace(0.0, p.h0, n_panels + 1)
    integral = float(simpson(np.asarray(data.v0(x), dtype=float), x=x))
    sup_v0 = profile_sup_norms(data, p.h0)[1]
    return p.d * max(1.0, sup_v0 * floor) * (barrier - p.h0) / integral


@dataclass(frozen=True)
class Certificates:
    """Every derived constant, flattened; None where a certificate is inapplicable."""

    M1: float
    M2: float
    M3: float
    K: float
    barrier: float
    band_floor: float
    delta: Optional[float]
    alpha: Optional[float]
    Mcap: Optional[float]
    mu0: Optional[float]
    mu_upper: Optional[float]
    notes: tuple = ()


def certificates(p: ModelParams, data: InitialData) -> Certificates:
    bounds = compute_bounds(p, data)
    barrier = vanishing_barrier(p)
    floor = band_floor(p, bounds)
    notes = []
    vc = vanishing_certificate(p, data)
    if isinstance(vc, NotApplicable):
        notes.append(f"vanishing certificate: {vc.reason}")
        delta = alpha = Mcap = mu0 = None
    else:
        delta, alpha, Mcap, mu0 = vc.delta, vc.alpha, vc.Mcap, vc.mu0
    sc = spreading_certificate(p, data, bounds)
    if isinstance(sc, NotApplicable):
        notes.append(f"spreading certificate: {sc.reason}")
        mu_upper = None
    else:
        mu_upper = sc
    return Certificates(M1=bounds.M1, M2=bounds.M2, M3=bounds.M3, K=bounds.K,
                        barrier=barrier, band_floor=floor,
                        delta=delta, alpha=alpha, Mcap=Mcap, mu0=mu0,
                        mu_upper=mu_upper, notes=tuple(notes))


# ---------------------------------------------------------------------------
# trajectory classification


class VerdictKind(Enum):
    SPREADING = "Spreading"
    VANISHING = "Vanishing"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class ClassifyTolerances:
    """Thresholds for the long-time signatures; None fields scale with M2/M3."""

    eps_margin: float = 1e-6
    eps_v: Optional[float] = None   # default 1e-4 * M2
    eps_u: Optional[float] = None   # default 1e-4 * M2
    eps_h: Optional[float] = None   # default 1e-5 * M3
    window_frac: float = 0.2


@dataclass(frozen=True)
class SpeedEstimate:
    k: float
    residual: float


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    h_end: float
    crossing_time: Optional[float] = None
    trailing_max_v: Optional[float] = None
    trailing_max_u: Optional[float] = None
    trailing_max_hprime: Optional[float] = None
    h_infinity: Optional[float] = None
    speed: Optional[SpeedEstimate] = None


def classify(traj, certs: Certificates, tols: Optional[ClassifyTolerances] = None) -> Verdict:
    """Spreading iff the front crossed the barrier (rigorous: h is monotone,
    and a bounded front never exceeds it); Vanishing iff all three trailing
    signatures hold (prey, predator, and front speed small); else Undetermined.
    """
    tols = tols or ClassifyTolerances()
    eps_v = tols.eps_v if tols.eps_v is not None else 1e-4 * certs.M2
    eps_u = tols.eps_u if tols.eps_u is not None else 1e-4 * certs.M2
    eps_h = tols.eps_h if tols.eps_h is not None else 1e-5 * certs.M3

    t_end = float(traj.t[-1])
    window = tols.window_frac * t_end
    if t_end - float(traj.t[0]) < window or window <= 0.0:
        raise ValueError("trajectory too short for the trailing window")

    threshold = certs.barrier * (1.0 + tols.eps_margin)
    crossed = traj.h > threshold
    if np.any(crossed):
        i = int(np.argmax(crossed))
        speed = estimate_speed(traj)
        return Verdict(kind=VerdictKind.SPREADING, h_end=float(traj.h[-1]),
                       crossing_time=float(traj.t[i]), speed=speed)

    tail = traj.t >= t_end - window
    tv = float(traj.max_v[tail].max())
    tu = float(traj.max_u[tail].max())
    th = float(traj.hprime[tail].max())
    if tv < eps_v and tu < eps_u and th < eps_h:
        return Verdict(kind=VerdictKind.VANISHING, h_end=float(traj.h[-1]),
                       trailing_max_v=tv, trailing_max_u=tu, trailing_max_hprime=th,
                       h_infinity=float(traj.h[-1]))
    return Verdict(kind=VerdictKind.UNDETERMINED, h_end=float(traj.h[-1]),
                   trailing_max_v=tv, trailing_max_u=tu, trailing_max_hprime=th)


def estimate_speed(traj, verdict: Optional[Verdict] = None) -> SpeedEstimate:
    """Least-squares front speed over the final half of the run.

    Meaningful for spreading runs; when a verdict is supplied it is checked.
    """
    if verdict is not None and verdict.kind is not VerdictKind.SPREADING:
        raise ValueError("front speed requested for a non-spreading trajectory")
    t_end = float(traj.t[-1])
    sel = traj.t >= 0.5 * (float(traj.t[0]) + t_end)
    if int(sel.sum()) < 2:
        raise ValueError("trajectory too short for a speed fit")
    t, h = traj.t[sel], traj.h[sel]
    fit = linregress(t, h)
    resid = float(np.sqrt(np.mean((h - (fit.intercept + fit.slope * t)) ** 2)))
    return SpeedEstimate(k=float(fit.slope), residual=resid)


@dataclass(frozen=True)
class BandReport:
    passed: bool
    v_min: float
    v_max: float
    floor: float
    ceiling: float
    x_obs: float
    window: float
    n_profiles: int


def band_check(traj, p: ModelParams, certs: Certificates, x_obs: float,
               window: Optional[float] = None, tol: Optional[float] = None) -> BandReport:
    """Check the trailing prey envelope on the fixed window x in [0, x_obs].

    Uses the recorded snapshots inside the trailing time window; the observed
    min/max of v must lie in [band_floor - tol, q + tol].  Intended for runs
    already classified as Spreading, with x_obs inside the domain throughout.
    """
    t_end = float(traj.t[-1])
    window = window if window is not None else 0.2 * t_end
    tol = tol if tol is not None else 0.05 * p.q

    snaps = [s for s in traj.snapshots if s.t >= t_end - window]
    if not snaps:
        raise ValueError("no snapshots recorded inside the trailing window")
    vmin, vmax = math.inf, -math.inf
    for s in snaps:
        if x_obs >= float(s.x[-1]):
            raise ValueError(f"observation window [0, {x_obs}] exits the domain at t = {s.t}")
        mask = s.x <= x_obs
        vmin = min(vmin, float(s.v[mask].min()))
        vmax = max(vmax, float(s.v[mask].max()))
    lo = certs.band_floor - tol
    hi = p.q + tol
    return BandReport(passed=(vmin >= lo and vmax <= hi), v_min=vmin, v_max=vmax,
                      floor=lo, ceiling=hi, x_obs=x_obs, window=window,
                      n_profiles=len(snaps))


# ---------------------------------------------------------------------------
# threshold bisection


class BisectError(RuntimeError):
    """Bisection cannot proceed: bad bracket or an undecided probe."""

    def __init__(self, message: str, mu: Optional[float] = None):
        super().__init__(message)
        self.mu = mu


@dataclass(frozen=True)
class BisectResult:
    mu_lo: float
    mu_hi: float
    probes: tuple  # ((mu, VerdictKind), ...) in probe order, bracket ends first


def _bisect(is_spreading: Callable[[float], bool], lo: float, hi: float, iters: int):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if is_spreading(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


def bisect_mu_star(p: ModelParams, data: InitialData, grid, controls,
                   bracket=None, iters: int = 8,
                   tols: Optional[ClassifyTolerances] = None) -> BisectResult:
    """Bisect the front-response threshold between vanishing and spreading.

    The bracket defaults to the certificate pair [mu0, mu_upper]; both ends
    must classify definitively (Vanishing below, Spreading above), otherwise
    BisectError.  An Undetermined probe is also an error: the verdict is
    assumed monotone in mu across the probed range, and undecided runs are
    reported back (raise t_max) rather than guessed.
    """
    from . import solver

    if bracket is None:
        certs = certificates(p, data)
        if certs.mu0 is None or certs.mu_upper is None:
            raise BisectError("certificate bracket unavailable: " + "; ".join(certs.notes))
        bracket = (certs.mu0, certs.mu_upper)
    mu_lo, mu_hi = float(bracket[0]), float(bracket[1])
    if not (0.0 < mu_lo < mu_hi):
        raise BisectError(f"invalid bracket [{mu_lo}, {mu_hi}]")

    probes = []

    def verdict_at(mu: float) -> VerdictKind:
        pm = replace(p, mu=mu)
        traj = solver.run(pm, data, grid, controls)
        kind = classify(traj, certificates(pm, data), tols).kind
        probes.append((mu, kind))
        return kind

    lo_kind = verdict_at(mu_lo)
    hi_kind = verdict_at(mu_hi)
    if lo_kind is hi_kind:
        raise BisectError(f"bracket ends agree: both {lo_kind.value}", mu=mu_lo)
    if lo_kind is not VerdictKind.VANISHING or hi_kind is not VerdictKind.SPREADING:
        raise BisectError(
            f"bracket not ordered: mu_lo is {lo_kind.value}, mu_hi is {hi_kind.value}",
            mu=mu_lo if lo_kind is VerdictKind.UNDETERMINED else mu_hi)

    def is_spreading(mu: float) -> bool:
        kind = verdict_at(mu)
        if kind is VerdictKind.UNDETERMINED:
            raise BisectError(f"undecided probe at mu = {mu:.6g}; raise t_max", mu=mu)
        return kind is VerdictKind.SPREADING

    lo, hi = _bisect(is_spreading, mu_lo, mu_hi, iters)
    return BisectResult(mu_lo=lo, mu_hi=hi, probes=tuple(probes))
