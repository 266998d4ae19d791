"""Front-fixed IMEX time stepper for the coupled predator/prey/front system.

After the change of variables y = x/h(t) the fields w (predator) and z (prey)
live on the fixed unit interval with coefficients zeta = 1/h^2 and
xi = h'/h.  Each step advances, in order: the front (explicit, from the
discrete boundary gradient of z), then z (diffusion backward Euler,
advection/reaction explicit), then w (diffusion backward Euler,
advection/taxis/reaction explicit, taxis coefficients from the fresh z).
Diffusion is implicit because its stiffness scales with N^2; everything else
is mild at the resolutions used here.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from . import model
from .model import InitialData, ModelParams
from .operators import Grid, advect_upwind, boundary_gradient, gradient, laplacian

__all__ = [
    "Controls",
    "SolverState",
    "Snapshot",
    "Trajectory",
    "InstabilityDetected",
    "init_state",
    "stable_dt",
    "step",
    "run",
    "MIN_RUN_RESOLUTION",
]

MIN_RUN_RESOLUTION = 16


class InstabilityDetected(RuntimeError):
    """Scheme failure: negativity beyond tolerance, front retreat, or nonfinite values."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} (t = {t:.6g})")
        self.t = t


@dataclass(frozen=True)
class Controls:
    """Run controls; tolerances default from the a-priori bounds.

    freeze_front and disable_reactions are test switches used by the
    analytic micro-oracles (frozen-front eigenmode decay).
    """

    t_max: float = 200.0
    sample_dt: float = 0.1
    snapshot_times: tuple = ()
    cfl: float = 0.4
    dt_max: float = 1e-3
    react_cap: float = 0.2
    tol_pos: Optional[float] = None    # default 1e-12 * max(M1, M2)
    tol_front: Optional[float] = None  # default 1e-8 * M3
    freeze_front: bool = False
    disable_reactions: bool = False


@dataclass(frozen=True)
class SolverState:
    t: float
    h: float
    hprime: float
    w: np.ndarray
    z: np.ndarray
    zeta: float
    xi: float


@dataclass(frozen=True)
class Snapshot:
    t: float
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray


@dataclass
class Trajectory:
    """Sampled series plus profile snapshots.

    max_vxx is an extra diagnostic (discrete sup |v_xx| proxy) consumed by the
    predator-decay check; it is not part of the CSV interface.
    """

    t: np.ndarray
    h: np.ndarray
    hprime: np.ndarray
    max_u: np.ndarray
    max_v: np.ndarray
    mass_u: np.ndarray
    mass_v: np.ndarray
    zy1: np.ndarray
    max_vxx: np.ndarray
    snapshots: list = field(default_factory=list)

    def __post_init__(self):
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        if np.any(np.diff(self.h) < 0):
            raise ValueError("front positions must be nondecreasing")


class _TrajectoryBuilder:
    def __init__(self):
        self.rows = []
        self.snapshots = []

    def sample(self, state: SolverState, grid: Grid):
        w, z = state.w, state.z
        lap_z = laplacian(z, grid)
        self.rows.append((
            state.t,
            state.h,
            state.hprime,
            float(w.max()),
            float(z.max()),
            state.h * float(np.trapezoid(w, dx=grid.dy)),
            state.h * float(np.trapezoid(z, dx=grid.dy)),
            boundary_gradient(z, grid),
            state.zeta * float(np.abs(lap_z).max()),
        ))

    def snapshot(self, state: SolverState, grid: Grid):
        x = state.h * grid.y
        self.snapshots.append(Snapshot(t=state.t, x=x, u=state.w.copy(), v=state.z.copy()))

    def build(self) -> Trajectory:
        cols = [np.asarray(col) for col in zip(*self.rows)]
        return Trajectory(*cols, snapshots=self.snapshots)


def default_tolerances(p: ModelParams, data: InitialData):
    """(tol_pos, tol_front) floors separating roundoff from scheme failure."""
    from .analysis import compute_bounds

    bounds = compute_bounds(p, data)
    return 1e-12 * max(bounds.M1, bounds.M2), 1e-8 * bounds.M3


def init_state(p: ModelParams, data: InitialData, grid: Grid,
               allow_zero_u0: bool = False) -> SolverState:
    """Sample the initial profiles onto the transformed grid.

    The initial front speed uses the same discrete boundary gradient as the
    time stepper, so it matches the analytic h* only to O(dy^2).
    """
    report = model.validate(p, data, allow_zero_u0=allow_zero_u0)
    if not report.ok:
        raise ValueError("invalid initial data: " + "; ".join(report.violations))
    x = p.h0 * grid.y
    w = np.asarray(data.u0(x), dtype=float).copy()
    z = np.asarray(data.v0(x), dtype=float).copy()
    w[-1] = 0.0
    z[-1] = 0.0
    hprime = -p.mu * boundary_gradient(z, grid) / p.h0
    return SolverState(t=0.0, h=p.h0, hprime=hprime, w=w, z=z,
                       zeta=1.0 / p.h0**2, xi=hprime / p.h0)


def _reaction_jacobian_cap(wmax: float, zmax: float, p: ModelParams) -> float:
    # bounds |df/du| + |dg/dv| over [0, wmax] x [0, zmax]
    term_f = p.a + p.b * zmax / (p.c + p.m * zmax)
    term_g = p.q + 2.0 * zmax + p.r * wmax / (p.c + wmax)
    return term_f + term_g


def stable_dt(state: SolverState, p: ModelParams, grid: Grid, controls: Controls) -> float:
    """Explicit-part step limit: advective CFL, reaction cap, and dt_max."""
    if not (np.isfinite(state.w).all() and np.isfinite(state.z).all()):
        raise InstabilityDetected("nonfinite field values", state.t)
    speed = (state.xi * grid.y
             - state.zeta * model.eta_pair(state.w, p)[1] * gradient(state.z, grid))
    smax = float(np.abs(speed).max())
    dt = controls.dt_max
    if smax > 0.0:
        dt = min(dt, controls.cfl * grid.dy / smax)
    cap = _reaction_jacobian_cap(float(state.w.max(initial=0.0)),
                                 float(state.z.max(initial=0.0)), p)
    dt = min(dt, controls.react_cap / cap)
    return dt


def _implicit_diffusion_solve(rhs: np.ndarray, kappa: float) -> np.ndarray:
    """(I - kappa*L) f = rhs on nodes 0..N-1 with mirror at 0, zero at node N."""
    assert kappa > 0.0
    n = rhs.shape[0] - 1
    ab = np.zeros((3, n))
    ab[1, :] = 1.0 + 2.0 * kappa
    ab[0, 1:] = -kappa
    ab[0, 1] = -2.0 * kappa  # mirror ghost doubles the node-0 coupling
    ab[2, :-1] = -kappa
    out = np.empty_like(rhs)
    out[:-1] = solve_banded((1, 1), ab, rhs[:-1],
                            overwrite_ab=True, check_finite=False)
    out[-1] = 0.0
    return out


def step(state: SolverState, p: ModelParams, grid: Grid, dt: float,
         tol_pos: float, tol_front: float,
         freeze_front: bool = False, disable_reactions: bool = False) -> SolverState:
    """One IMEX step of size dt (caller guarantees dt <= stable_dt)."""
    w, z, h = state.w, state.z, state.h

    # 1-2: front update from the current prey gradient; coefficients frozen at h
    if freeze_front:
        hprime = 0.0
        h_new = h
    else:
        gb = boundary_gradient(z, grid)
        hprime = -p.mu * gb / h
        if hprime < -tol_front:
            raise InstabilityDetected(f"front retreat h' = {hprime:.3e}", state.t)
        if hprime < 0.0:
            hprime = 0.0
        h_new = h + dt * hprime
    zeta = 1.0 / h**2
    xi = hprime / h

    # 3: prey update
    rhs_z = z + dt * advect_upwind(z, xi * grid.y, grid)
    if not disable_reactions:
        rhs_z += dt * model.reaction_g(w, z, p)
    z_new = _implicit_diffusion_solve(rhs_z, dt * p.d * zeta / grid.dy**2)

    # 4-5: predator update; taxis coefficients from the fresh prey field
    zyy = laplacian(z_new, grid)
    zy = gradient(z_new, grid)
    eta_w, etap_w = model.eta_pair(w, p)
    speed = xi * grid.y - zeta * etap_w * zy
    rhs_w = w + dt * (advect_upwind(w, speed, grid) - zeta * eta_w * zyy)
    if not disable_reactions:
        rhs_w += dt * model.reaction_f(w, z, p)
    w_new = _implicit_diffusion_solve(rhs_w, dt * zeta / grid.dy**2)

    # 6-7: positivity floor and Dirichlet nodes
    for name, f in (("w", w_new), ("z", z_new)):
        if not np.isfinite(f).all():
            raise InstabilityDetected(f"nonfinite {name} values", state.t)
        fmin = float(f.min())
        if fmin < -tol_pos:
            raise InstabilityDetected(f"{name} negativity {fmin:.3e} beyond tolerance", state.t)
        np.clip(f, 0.0, None, out=f)
        f[-1] = 0.0

    return SolverState(t=state.t + dt, h=h_new, hprime=hprime, w=w_new, z=z_new,
                       zeta=1.0 / h_new**2, xi=hprime / h_new)


def run(p: ModelParams, data: InitialData, grid: Grid, controls: Controls,
        allow_zero_u0: bool = False) -> Trajectory:
    """Advance to t_max, recording samples every sample_dt and the requested snapshots.

    Steps are clamped to land exactly on sample and snapshot times so that
    independent runs share their time grid.  Deterministic: identical inputs
    give bit-identical trajectories.
    """
    if grid.n < MIN_RUN_RESOLUTION:
        raise ValueError(f"simulation grid needs n >= {MIN_RUN_RESOLUTION}, got {grid.n}")
    if controls.t_max <= 0 or controls.sample_dt <= 0:
        raise ValueError("t_max and sample_dt must be positive")

    tol_pos, tol_front = controls.tol_pos, controls.tol_front
    if tol_pos is None or tol_front is None:
        dpos, dfront = default_tolerances(p, data)
        tol_pos = dpos if tol_pos is None else tol_pos
        tol_front = dfront if tol_front is None else tol_front

    state = init_state(p, data, grid, allow_zero_u0=allow_zero_u0)
    builder = _TrajectoryBuilder()
    builder.sample(state, grid)

    snap_times = sorted(set(t for t in controls.snapshot_times if 0.0 <= t <= controls.t_max))
    snap_idx = 0
    while snap_idx < len(snap_times) and snap_times[snap_idx] <= 0.0:
        builder.snapshot(state, grid)
        snap_idx += 1

    k_sample = 1
    eps = 1e-12 * max(1.0, controls.t_max)
    while state.t < controls.t_max - eps:
        next_sample = k_sample * controls.sample_dt
        next_event = min(controls.t_max, next_sample)
        if snap_idx < len(snap_times):
            next_event = min(next_event, snap_times[snap_idx])
        if next_event - state.t > eps:
            dt = min(stable_dt(state, p, grid, controls), next_event - state.t)
            state = step(state, p, grid, dt, tol_pos, tol_front,
                         freeze_front=controls.freeze_front,
                         disable_reactions=controls.disable_reactions)
        if abs(state.t - next_event) <= eps:
            state = replace(state, t=next_event)
        while snap_idx < len(snap_times) and state.t >= snap_times[snap_idx] - eps:
            builder.snapshot(state, grid)
            snap_idx += 1
        if state.t >= next_sample - eps:
            builder.sample(state, grid)
            k_sample += 1
        elif state.t >= controls.t_max - eps:
            builder.sample(state, grid)

    return builder.build()
