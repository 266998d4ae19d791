"""Finite-difference kernels on the unit interval after front fixing.

The moving habitat [0, h(t)] is mapped to y in [0, 1]; these operators act on
nodal fields over the static uniform grid y_j = j/N.  Boundary conventions
throughout: Neumann (mirror ghost) at y = 0, Dirichlet (pinned zero, not
evolved) at y = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "laplacian",
    "advect_upwind",
    "gradient",
    "boundary_gradient",
    "to_physical",
]


@dataclass(frozen=True)
class Grid:
    """Uniform nodes y_j = j*dy, j = 0..n, dy = 1/n.

    Kernels work for any n >= 2; simulation entry points require n >= 16.
    """

    n: int
    dy: float = field(init=False)
    y: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"Grid.n must be >= 2, got {self.n}")
        object.__setattr__(self, "dy", 1.0 / self.n)
        object.__setattr__(self, "y", np.linspace(0.0, 1.0, self.n + 1))


def _check_nodes(f: np.ndarray, grid: Grid, name: str) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.n + 1,):
        raise ValueError(f"{name} must have {grid.n + 1} nodes, got shape {f.shape}")
    return f


def laplacian(f, grid: Grid) -> np.ndarray:
    """Second differences; mirror ghost at node 0, zero at the Dirichlet node."""
    f = _check_nodes(f, grid, "field")
    inv = 1.0 / grid.dy**2
    out = np.empty_like(f)
    out[0] = 2.0 * (f[1] - f[0]) * inv
    out[1:-1] = (f[:-2] - 2.0 * f[1:-1] + f[2:]) * inv
    out[-1] = 0.0
    return out


def advect_upwind(f, speed, grid: Grid) -> np.ndarray:
    """Transport term s*f_y with the one-sided difference picked per node.

    For a term +s*f_y on the right-hand side the stable (monotone) choice is
    the forward difference where s > 0 and the backward difference where
    s < 0; boundary nodes fall back to the available stencil.
    """
    f = _check_nodes(f, grid, "field")
    s = _check_nodes(speed, grid, "speed")
    inv = 1.0 / grid.dy
    fwd = np.empty_like(f)
    bwd = np.empty_like(f)
    fwd[:-1] = (f[1:] - f[:-1]) * inv
    bwd[1:] = fwd[:-1]
    fwd[-1] = bwd[-1]
    bwd[0] = fwd[0]
    return s * np.where(s > 0.0, fwd, bwd)


def gradient(f, grid: Grid) -> np.ndarray:
    """Nodal first derivative for coefficient use.

    Central differences inside; the mirror ghost makes the node-0 value
    exactly zero (both evolved fields satisfy f_y(0) = 0); second-order
    one-sided at the Dirichlet node.
    """
    f = _check_nodes(f, grid, "field")
    inv = 0.5 / grid.dy
    out = np.empty_like(f)
    out[0] = 0.0
    out[1:-1] = (f[2:] - f[:-2]) * inv
    out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) * inv
    return out


def boundary_gradient(z, grid: Grid) -> float:
    """Second-order one-sided z_y at y = 1; feeds the front law h' = -mu*z_y(1)/h."""
    z = _check_nodes(z, grid, "field")
    return float((3.0 * z[-1] - 4.0 * z[-2] + z[-3]) * 0.5 / grid.dy)


def to_physical(w, z, h: float, grid: Grid):
    """Relabel transformed fields onto physical nodes x_j = h*y_j (no interpolation)."""
    if not h > 0:
        raise ValueError(f"front position must be positive, got {h}")
    w = _check_nodes(w, grid, "w")
    z = _check_nodes(z, grid, "z")
    return h * grid.y, w.copy(), z.copy()
