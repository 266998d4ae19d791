"""Independent verification machinery.

Numerical counterparts of the ordering and envelope arguments the long-time
theory rests on: a discrete comparison harness for ordered run pairs, the
decaying-cosine supersolution envelope for certified-vanishing runs, the
post-smallness exponential decay of the predator, the frozen-front eigenmode
micro-oracle, and cross-validation of the two solvers against each other.
All checks return report objects; an ordering violation is a failed report,
not an exception.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.stats import linregress

from . import analysis, model, reference, solver
from .model import InitialData, ModelParams
from .operators import Grid

__all__ = [
    "RunSpec",
    "OrderedPair",
    "ComparisonReport",
    "SupersolutionReport",
    "DecayReport",
    "EigenmodeReport",
    "CrossSolverReport",
    "single_species_majorant",
    "comparison_test",
    "barrier_supersolution_test",
    "predator_decay_test",
    "eigenmode_decay_check",
    "cross_solver_check",
]


@dataclass(frozen=True)
class RunSpec:
    params: ModelParams
    data: InitialData
    zero_predator: bool = False  # admits u0 identically zero at validation


@dataclass(frozen=True)
class OrderedPair:
    """Two configurations satisfying the discrete ordering hypotheses.

    The lower prey profile must sit below the upper one pointwise and the
    habitats must be ordered; the upper run's prey dynamics must dominate,
    which here means either a predator-free upper run (its logistic reaction
    majorizes the full prey reaction) or identical dynamics with ordered data.
    """

    lower: RunSpec
    upper: RunSpec

    def check_hypotheses(self, n_samples: int = 2049):
        lo, up = self.lower, self.upper
        if lo.params.h0 > up.params.h0:
            raise ValueError("ordered pair needs h0_lower <= h0_upper")
        x = np.linspace(0.0, lo.params.h0, n_samples)
        v_lo = np.asarray(lo.data.v0(x), dtype=float)
        v_up = np.asarray(up.data.v0(x), dtype=float)
        tol = 1e-12 * max(1.0, float(np.abs(v_up).max()))
        if np.any(v_lo > v_up + tol):
            raise ValueError("ordered pair needs v0_lower <= v0_upper pointwise")
        if not up.zero_predator:
            # same dynamics with ordered data; a larger front response is fine
            # because the upper front law then only gains speed
            same_dynamics = (
                replace(lo.params, mu=up.params.mu) == up.params
                and up.params.mu >= lo.params.mu
                and lo.data.u0 is up.data.u0
            )
            if not same_dynamics:
                raise ValueError("upper run must be predator-free or share the dynamics")


def single_species_majorant(spec: RunSpec) -> RunSpec:
    """Predator-free logistic companion with the same prey data and habitat."""
    zero = model.SampledProfile(values=(0.0, 0.0), h0=spec.params.h0)
    data = InitialData(u0=zero, v0=spec.data.v0,
                       u0_deriv=None, v0_deriv=spec.data.v0_deriv)
    return RunSpec(params=spec.params, data=data, zero_predator=True)


@dataclass(frozen=True)
class ComparisonReport:
    passed: bool
    worst_h_margin: float   # max of h_lo/h_up - 1 over shared samples
    worst_v_margin: float   # max of (v_lo - v_up)/M2 over shared profiles
    n_samples: int
    n_profiles: int
    tol: float


def comparison_test(pair: OrderedPair, grid: Grid, controls: solver.Controls,
                    tol: float = 1e-3) -> ComparisonReport:
    """Run both configurations on a shared time grid and check the ordering.

    h_lower <= h_upper*(1+tol) at every sample; v_lower <= v_upper + tol*M2
    at every shared snapshot on the overlap x in [0, h_lower(t)], with the
    upper profile linearly interpolated onto the lower run's nodes.
    """
    pair.check_hypotheses()
    traj_lo = solver.run(pair.lower.params, pair.lower.data, grid, controls,
                         allow_zero_u0=pair.lower.zero_predator)
    traj_up = solver.run(pair.upper.params, pair.upper.data, grid, controls,
                         allow_zero_u0=pair.upper.zero_predator)
    if traj_lo.t.shape != traj_up.t.shape or np.any(traj_lo.t != traj_up.t):
        raise RuntimeError("runs did not share their sample grid")

    worst_h = float((traj_lo.h / traj_up.h - 1.0).max())

    m2 = max(analysis.compute_bounds(pair.lower.params, pair.lower.data).M2,
             analysis.compute_bounds(pair.upper.params, pair.upper.data).M2)
    worst_v = -math.inf
    n_profiles = 0
    for s_lo, s_up in zip(traj_lo.snapshots, traj_up.snapshots):
        if abs(s_lo.t - s_up.t) > 1e-9 * max(1.0, s_lo.t):
            raise RuntimeError("snapshot times differ between the paired runs")
        v_up_interp = np.interp(s_lo.x, s_up.x, s_up.v)
        worst_v = max(worst_v, float((s_lo.v - v_up_interp).max() / m2))
        n_profiles += 1
    if n_profiles == 0:
        worst_v = 0.0

    passed = worst_h <= tol and worst_v <= tol
    return ComparisonReport(passed=passed, worst_h_margin=worst_h, worst_v_margin=worst_v,
                            n_samples=int(traj_lo.t.size), n_profiles=n_profiles, tol=tol)


@dataclass(frozen=True)
class SupersolutionReport:
    passed: bool
    h_margin: float          # max h(t)/beta(t) - 1
    v_margin: float          # max pointwise (v - vbar)/Mcap over snapshots
    envelope_margin: float   # max log(max_v) - (log Mcap - alpha t)
    h_end: float
    beta_limit: float        # h0*(1+delta)
    certificate: analysis.VanishingCertificate
    tol: float


def barrier_supersolution_test(p: ModelParams, data: InitialData, grid: Grid,
                               controls: solver.Controls,
                               tol: float = 0.02) -> SupersolutionReport:
    """Check the decaying-cosine envelope on a certified-vanishing run.

    Requires mu <= mu0.  The envelope is vbar(t,x) = Mcap*exp(-alpha*t)*
    cos(pi*x/(2*beta(t))) with beta(t) = h0*(1 + delta - (delta/2)exp(-alpha*t));
    the run must stay below it pointwise (within tol) and the recorded peak
    must decay at least as fast as the envelope amplitude.
    """
    cert = analysis.vanishing_certificate(p, data)
    if isinstance(cert, analysis.NotApplicable):
        raise ValueError(cert.reason)
    if p.mu > cert.mu0:
        raise ValueError(f"supersolution envelope needs mu <= mu0 = {cert.mu0:.6g}")

    traj = solver.run(p, data, grid, controls)

    def beta(t):
        return p.h0 * (1.0 + cert.delta - 0.5 * cert.delta * np.exp(-cert.alpha * t))

    h_margin = float((traj.h / beta(traj.t) - 1.0).max())

    with np.errstate(divide="ignore"):
        env = np.log(traj.max_v) - (np.log(cert.Mcap) - cert.alpha * traj.t)
    envelope_margin = float(env[np.isfinite(env)].max())

    v_margin = -math.inf
    for s in traj.snapshots:
        vbar = cert.Mcap * math.exp(-cert.alpha * s.t) * np.cos(
            0.5 * math.pi * np.minimum(s.x / beta(s.t), 1.0))
        v_margin = max(v_margin, float(((s.v - vbar) / cert.Mcap).max()))
    if not traj.snapshots:
        v_margin = 0.0

    passed = h_margin <= tol and v_margin <= tol and envelope_margin <= tol
    return SupersolutionReport(passed=passed, h_margin=h_margin, v_margin=v_margin,
                               envelope_margin=envelope_margin, h_end=float(traj.h[-1]),
                               beta_limit=p.h0 * (1.0 + cert.delta), certificate=cert,
                               tol=tol)


@dataclass(frozen=True)
class DecayReport:
    passed: bool
    reached_smallness: bool
    t_small: Optional[float]
    fitted_rate: Optional[float]
    target_rate: float       # a/2
    envelope_margin: Optional[float]
    note: str = ""


def predator_decay_test(traj, p: ModelParams, certs: analysis.Certificates,
                        rate_tol: float = 0.2, env_tol: float = 0.05) -> DecayReport:
    """After the prey is small, the predator must decay at least like exp(-a*t/2).

    Smallness time T: the first sample where both the predation gain
    b*max_v/c and the taxis-source proxy sup|v_xx| fall below the epsilon
    with (chi0 + 1)*epsilon = a/2.  Checks the envelope
    max_u(t) <= M1*exp(-(a/2)(t-T))*(1+env_tol) and that the log-linear fit of
    max_u on [T, t_end] has slope <= -(a/2)*(1 - rate_tol).  Never reaching
    smallness is reported, not raised.
    """
    target = 0.5 * p.a
    if float(traj.max_u.max()) == 0.0:
        return DecayReport(passed=True, reached_smallness=True, t_small=float(traj.t[0]),
                           fitted_rate=None, target_rate=target, envelope_margin=0.0,
                           note="zero predator throughout")

    eps = target / (p.chi0 + 1.0)
    small = (p.b * traj.max_v / p.c <= eps) & (traj.max_vxx <= eps)
    if not np.any(small):
        return DecayReport(passed=False, reached_smallness=False, t_small=None,
                           fitted_rate=None, target_rate=target, envelope_margin=None,
                           note="trajectory never reaches the smallness regime")
    i0 = int(np.argmax(small))
    t_small = float(traj.t[i0])

    t = traj.t[i0:]
    u = traj.max_u[i0:]
    envelope = certs.M1 * np.exp(-target * (t - t_small)) * (1.0 + env_tol)
    envelope_margin = float((u / envelope).max() - 1.0)

    pos = u > 0.0
    if int(pos.sum()) < 3:
        return DecayReport(passed=True, reached_smallness=True, t_small=t_small,
                           fitted_rate=None, target_rate=target,
                           envelope_margin=envelope_margin,
                           note="predator already at the clipping floor")
    fit = linregress(t[pos], np.log(u[pos]))
    fitted = -float(fit.slope)

    passed = envelope_margin <= 0.0 and fitted >= target * (1.0 - rate_tol)
    return DecayReport(passed=passed, reached_smallness=True, t_small=t_small,
                       fitted_rate=fitted, target_rate=target,
                       envelope_margin=envelope_margin)


@dataclass(frozen=True)
class EigenmodeReport:
    passed: bool
    rate: float
    observed: float
    expected: float
    rel_err: float
    engine: str


def eigenmode_decay_check(d: float = 1.0, h0: float = 1.0, n: int = 200,
                          amplitude: float = 1.0, engine: str = "front_fixed",
                          rel_tol: float = 0.02) -> EigenmodeReport:
    """Frozen-front pure-diffusion micro-oracle.

    With the front frozen and reactions off, the prey field is the heat
    eigenmode cos(pi*y/2) on the fixed habitat and must decay at the analytic
    rate d*(pi/2)^2/h0^2; checked at the amplitude-halving time.
    """
    rate = d * (0.5 * math.pi) ** 2 / h0**2
    t_end = math.log(2.0) / rate
    p = ModelParams(a=1.0, b=1.0, c=1.0, m=1.0, q=1.0, r=1.0, d=d, mu=1.0,
                    h0=h0, chi0=0.0, u_m=1.0)
    zero = model.SampledProfile(values=(0.0, 0.0), h0=h0)
    data = InitialData(u0=zero, v0=model.CosineProfile(amplitude, h0),
                       v0_deriv=model.CosineProfile(amplitude, h0).derivative)
    if engine == "front_fixed":
        controls = solver.Controls(t_max=t_end, sample_dt=t_end, dt_max=1e-3,
                                   freeze_front=True, disable_reactions=True)
        traj = solver.run(p, data, Grid(n), controls, allow_zero_u0=True)
    elif engine == "moving_mesh":
        controls = reference.MovingMeshControls(t_max=t_end, sample_dt=t_end, dx=h0 / n,
                                                freeze_front=True, disable_reactions=True)
        traj = reference.run_moving_mesh(p, data, controls, allow_zero_u0=True)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    observed = float(traj.max_v[-1])
    expected = amplitude * math.exp(-rate * t_end)
    rel_err = abs(observed - expected) / expected
    return EigenmodeReport(passed=rel_err <= rel_tol, rate=rate, observed=observed,
                           expected=expected, rel_err=rel_err, engine=engine)


@dataclass(frozen=True)
class CrossSolverReport:
    passed: bool
    h_rel_diff: float
    maxv_rel_diff: float
    tol: float
    observed_order: Optional[float] = None


def cross_solver_check(p: ModelParams, data: InitialData, n: int, dx: float,
                       t_max: float, tol: float = 0.03,
                       allow_zero_u0: bool = False,
                       sample_dt: float = 0.5) -> CrossSolverReport:
    """Front-fixed vs. moving-mesh agreement on (h, max_v) at t_max."""
    ff = solver.run(p, data, Grid(n),
                    solver.Controls(t_max=t_max, sample_dt=sample_dt),
                    allow_zero_u0=allow_zero_u0)
    mm = reference.run_moving_mesh(
        p, data, reference.MovingMeshControls(t_max=t_max, sample_dt=sample_dt, dx=dx),
        allow_zero_u0=allow_zero_u0)
    h_diff = abs(float(ff.h[-1]) - float(mm.h[-1])) / float(ff.h[-1])
    v_diff = abs(float(ff.max_v[-1]) - float(mm.max_v[-1])) / max(float(ff.max_v[-1]), 1e-300)
    return CrossSolverReport(passed=(h_diff <= tol and v_diff <= tol),
                             h_rel_diff=h_diff, maxv_rel_diff=v_diff, tol=tol)


def cross_solver_refinement(p: ModelParams, data: InitialData, n: int, dx: float,
                            t_max: float, tol: float = 0.03, levels: int = 3,
                            allow_zero_u0: bool = False) -> CrossSolverReport:
    """Agreement under simultaneous refinement from (n, dx).

    Runs `levels` resolutions, doubling both solvers each time; the observed
    order is the least-squares slope of log2(front disagreement) vs. level.
    The reported diffs are those of the finest level.
    """
    reports = [cross_solver_check(p, data, (2 ** k) * n, dx / 2 ** k, t_max, tol,
                                  allow_zero_u0) for k in range(levels)]
    logs = [math.log2(max(r.h_rel_diff, 1e-300)) for r in reports]
    order = -float(np.polyfit(np.arange(levels, dtype=float), logs, 1)[0])
    return CrossSolverReport(passed=all(r.passed for r in reports) and order >= 1.0,
                             h_rel_diff=reports[-1].h_rel_diff,
                             maxv_rel_diff=reports[-1].maxv_rel_diff,
                             tol=tol, observed_order=order)
