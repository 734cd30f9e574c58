"""Trajectory sampling for falsification-style checks of reported tubes.

Samples follow the exact discrete-time flow of the linear dynamics under
piecewise-constant controls drawn from the boundary of the admissible set,
so every sample is a genuinely reachable state: if one ever leaves a reported
tube (beyond tolerance), the tube is wrong.
"""

import numpy as np

from .dynamics import LTISystem, expm
from .reachability import ReachSpec


def discretize(system: LTISystem, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold discretization via the augmented-matrix exponential."""
    n, m = system.state_dim, system.input_dim
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = system.A
    aug[:n, n:] = system.B
    E = expm(aug, dt)
    return E[:n, :n], E[:n, n:]


def sample_trajectories(spec: ReachSpec, t_grid, n_samples: int, seed: int = 0) -> np.ndarray:
    """States of n_samples extremal trajectories at the (uniform) grid times.

    Initial states are drawn on the boundary of the initial set; the control
    is re-drawn on the boundary of the control set at every grid step.
    Returns an array of shape (n_samples, len(t_grid), state_dim) including
    any nominal center offset.
    """
    if spec.V is not None:
        raise ValueError("sampling is defined for the disturbance-free case")
    t_grid = np.asarray(t_grid, dtype=float)
    dts = np.diff(t_grid)
    if t_grid[0] != 0.0 or (len(dts) and np.abs(dts - dts[0]).max() > 1e-9):
        raise ValueError("need a uniform time grid starting at 0")
    rng = np.random.default_rng(seed)
    n = spec.system.state_dim
    out = np.empty((n_samples, t_grid.shape[0], n))
    X = spec.X0.boundary_points(n_samples, rng)
    out[:, 0, :] = X + spec.offset_at(t_grid[0])
    if len(dts) == 0:
        return out
    Ad, Bd = discretize(spec.system, float(dts[0]))
    for k in range(1, t_grid.shape[0]):
        U = spec.U.boundary_points(n_samples, rng)
        X = X @ Ad.T + U @ Bd.T
        out[:, k, :] = X + spec.offset_at(t_grid[k])
    return out
