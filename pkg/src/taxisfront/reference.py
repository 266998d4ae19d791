"""Physical-coordinate moving-mesh reference solver.

Deliberately a different discretization family from the front-fixed engine:
explicit time stepping in the untransformed variables on a fixed spatial step
dx, with the front tracked continuously and new zero-valued nodes appended as
it crosses node boundaries.  The predator taxis flux is discretized in
conservative form with interface upwinding.  First-order accurate overall;
its job is independence, not efficiency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import model
from .model import InitialData, ModelParams
from .solver import InstabilityDetected, Snapshot, Trajectory, _TrajectoryBuilder  # noqa: F401

__all__ = ["MovingMeshControls", "run_moving_mesh"]


@dataclass(frozen=True)
class MovingMeshControls:
    t_max: float = 10.0
    sample_dt: float = 0.1
    snapshot_times: tuple = ()
    dx: Optional[float] = None  # default h0/100
    cfl: float = 0.4
    dt_max: float = 1e-3
    react_cap: float = 0.2
    freeze_front: bool = False
    disable_reactions: bool = False


class _MovingMeshRun:
    """State and stepping for one run; nodes 0..M with the front clamp at node M."""

    def __init__(self, p: ModelParams, data: InitialData, controls: MovingMeshControls,
                 allow_zero_u0: bool):
        report = model.validate(p, data, allow_zero_u0=allow_zero_u0)
        if not report.ok:
            raise ValueError("invalid initial data: " + "; ".join(report.violations))
        self.p = p
        self.c = controls
        self.dx = controls.dx if controls.dx is not None else p.h0 / 100.0
        if self.dx <= 0 or p.h0 / self.dx < 8:
            raise ValueError("dx must resolve the initial habitat with at least 8 cells")
        self.h = p.h0
        m = int(math.floor(p.h0 / self.dx + 1e-9))
        x = self.dx * np.arange(m + 1)
        self.u = np.asarray(data.u0(x), dtype=float).copy()
        self.v = np.asarray(data.v0(x), dtype=float).copy()
        self.u[-1] = 0.0
        self.v[-1] = 0.0
        self.t = 0.0
        bounds_scale = max(1.0, float(self.u.max()), float(self.v.max()), p.q)
        self.tol_pos = 1e-12 * bounds_scale
        self.tol_front = 1e-8 * max(1.0, p.mu * bounds_scale / p.h0)
        self.hprime = 0.0 if controls.freeze_front else -p.mu * self.front_gradient()

    def front_gradient(self) -> float:
        # first-order one-sided difference against the clamped front node;
        # sign-safe across node insertions (freshly appended nodes are zero)
        v, dx = self.v, self.dx
        return float((v[-1] - v[-2]) / dx)

    def stable_dt(self) -> float:
        p, dx = self.p, self.dx
        dt = min(self.c.dt_max, self.c.cfl * dx * dx / (2.0 * max(1.0, p.d)))
        vx = np.empty_like(self.v)
        vx[1:-1] = (self.v[2:] - self.v[:-2]) * 0.5 / dx
        vx[0] = 0.0
        vx[-1] = self.front_gradient()
        vel = float(np.abs(model.chi(self.u, p) * vx).max())
        if vel > 0.0:
            dt = min(dt, self.c.cfl * dx / vel)
        cap = (p.a + p.b * float(self.v.max()) / p.c
               + p.q + 2.0 * float(self.v.max()) + p.r)
        return min(dt, self.c.react_cap / cap)

    def step(self, dt: float):
        p, dx = self.p, self.dx
        u, v = self.u, self.v
        inv2 = 1.0 / (dx * dx)

        if self.c.freeze_front:
            hp = 0.0
        else:
            hp = -p.mu * self.front_gradient()
            if hp < -self.tol_front:
                raise InstabilityDetected(f"front retreat h' = {hp:.3e}", self.t)
            hp = max(hp, 0.0)
        h_new = self.h + dt * hp

        lap_u = np.zeros_like(u)
        lap_v = np.zeros_like(v)
        lap_u[1:-1] = (u[:-2] - 2.0 * u[1:-1] + u[2:]) * inv2
        lap_v[1:-1] = (v[:-2] - 2.0 * v[1:-1] + v[2:]) * inv2
        lap_u[0] = 2.0 * (u[1] - u[0]) * inv2
        lap_v[0] = 2.0 * (v[1] - v[0]) * inv2

        # conservative taxis flux eta(u)*v_x at interfaces, u upwinded by flux sign
        g_if = (v[1:] - v[:-1]) / dx
        eta_up = np.where(g_if > 0.0, model.eta(u[:-1], p), model.eta(u[1:], p))
        flux = eta_up * g_if
        div = np.zeros_like(u)
        div[0] = flux[0] / dx           # zero flux through the wall
        div[1:-1] = (flux[1:] - flux[:-1]) / dx

        du = lap_u - div
        dv = p.d * lap_v
        if not self.c.disable_reactions:
            du = du + model.reaction_f(u, v, p)
            dv = dv + model.reaction_g(u, v, p)
        u_new = u + dt * du
        v_new = v + dt * dv
        u_new[-1] = 0.0
        v_new[-1] = 0.0

        for name, f in (("u", u_new), ("v", v_new)):
            if not np.isfinite(f).all():
                raise InstabilityDetected(f"nonfinite {name} values", self.t)
            fmin = float(f.min())
            if fmin < -self.tol_pos:
                raise InstabilityDetected(f"{name} negativity {fmin:.3e} beyond tolerance",
                                          self.t)
            np.clip(f, 0.0, None, out=f)

        m_new = int(math.floor(h_new / dx + 1e-9))
        if m_new > u_new.shape[0] - 1:
            extra = m_new - (u_new.shape[0] - 1)
            u_new = np.concatenate([u_new, np.zeros(extra)])
            v_new = np.concatenate([v_new, np.zeros(extra)])

        self.u, self.v, self.h, self.hprime = u_new, v_new, h_new, hp
        self.t += dt

    def record(self, builder: _TrajectoryBuilder):
        lap_v = np.zeros_like(self.v)
        lap_v[1:-1] = (self.v[:-2] - 2.0 * self.v[1:-1] + self.v[2:]) / self.dx**2
        lap_v[0] = 2.0 * (self.v[1] - self.v[0]) / self.dx**2
        builder.rows.append((
            self.t,
            self.h,
            self.hprime,
            float(self.u.max()),
            float(self.v.max()),
            float(np.trapezoid(self.u, dx=self.dx)),
            float(np.trapezoid(self.v, dx=self.dx)),
            self.front_gradient() * self.h,  # transformed-coordinate z_y(1)
            float(np.abs(lap_v).max()),
        ))

    def snapshot(self, builder: _TrajectoryBuilder):
        x = self.dx * np.arange(self.u.shape[0])
        builder.snapshots.append(Snapshot(t=self.t, x=x, u=self.u.copy(), v=self.v.copy()))


def run_moving_mesh(p: ModelParams, data: InitialData,
                    controls: Optional[MovingMeshControls] = None,
                    allow_zero_u0: bool = False) -> Trajectory:
    """Run the physical-coordinate oracle and record the same observables."""
    controls = controls or MovingMeshControls()
    sim = _MovingMeshRun(p, data, controls, allow_zero_u0)
    builder = _TrajectoryBuilder()
    sim.record(builder)

    snap_times = sorted(set(t for t in controls.snapshot_times if 0.0 <= t <= controls.t_max))
    snap_idx = 0
    while snap_idx < len(snap_times) and snap_times[snap_idx] <= 0.0:
        sim.snapshot(builder)
        snap_idx += 1

    k_sample = 1
    eps = 1e-12 * max(1.0, controls.t_max)
    while sim.t < controls.t_max - eps:
        next_sample = k_sample * controls.sample_dt
        next_event = min(controls.t_max, next_sample)
        if snap_idx < len(snap_times):
            next_event = min(next_event, snap_times[snap_idx])
        if next_event - sim.t > eps:
            dt = min(sim.stable_dt(), next_event - sim.t)
            sim.step(dt)
        if abs(sim.t - next_event) <= eps:
            sim.t = next_event
        while snap_idx < len(snap_times) and sim.t >= snap_times[snap_idx] - eps:
            sim.snapshot(builder)
            snap_idx += 1
        if sim.t >= next_sample - eps:
            sim.record(builder)
            k_sample += 1
        elif sim.t >= controls.t_max - eps:
            sim.record(builder)

    return builder.build()
