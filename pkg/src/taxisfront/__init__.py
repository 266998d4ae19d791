"""Free-boundary predator-prey dynamics with prey-taxis.

A one-dimensional habitat [0, h(t)] whose right edge moves with the prey
gradient (Stefan-type law h' = -mu * v_x at the front).  The package provides
a front-fixed IMEX solver, the closed-form a-priori bounds and
spreading/vanishing certificates, trajectory classification with threshold
bisection, and an independent moving-mesh oracle plus comparison harness.
"""

from .analysis import (
    Certificates,
    Verdict,
    VerdictKind,
    bisect_mu_star,
    certificates,
    classify,
    compute_bounds,
    estimate_speed,
    vanishing_barrier,
    vanishing_certificate,
    spreading_certificate,
)
from .model import InitialData, ModelParams, cosine_initial_data, validate
from .operators import Grid
from .reference import MovingMeshControls, run_moving_mesh
from .solver import Controls, InstabilityDetected, Trajectory, run

__all__ = [
    "Certificates",
    "Controls",
    "Grid",
    "InitialData",
    "InstabilityDetected",
    "ModelParams",
    "MovingMeshControls",
    "Trajectory",
    "Verdict",
    "VerdictKind",
    "bisect_mu_star",
    "certificates",
    "classify",
    "compute_bounds",
    "cosine_initial_data",
    "estimate_speed",
    "run",
    "run_moving_mesh",
    "spreading_certificate",
    "validate",
    "vanishing_barrier",
    "vanishing_certificate",
]

__version__ = "0.1.0"
