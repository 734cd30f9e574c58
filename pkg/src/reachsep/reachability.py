"""Reachable sets and tubes of LTI systems with ellipsoidal input/initial sets.

The reachable set at time t is characterized exactly by its support function,

    rho(l) = <l, Phi c0> + <l, int Phi B cu ds> + <l, Phi M0 Phi' l>^(1/2)
             + <l, int Phi cv ds> + int <l, Phi B Mu B' Phi' l>^(1/2) ds
             + int <l, Phi Mv Phi' l>^(1/2) ds,

with Phi = e^(A (t - s)).  Integrals use composite Simpson quadrature on a
fixed grid; panels where a square-root integrand vanishes fall back to the
midpoint rule.  Transition matrices along the quadrature grid are formed once
per (t, step-count) pair and cached on the spec, so sweeping directions is
cheap.
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import LTISystem, NominalTrajectory, expm
from .ellipsoid import Ellipsoid, HalfspaceSet, support

VANISH_REL = 1e-13


@dataclass(frozen=True)
class ReachSpec:
    """Everything needed to evaluate one aircraft's reachable sets."""

    system: LTISystem
    X0: Ellipsoid
    U: Ellipsoid
    horizon: float
    V: Ellipsoid | None = None
    quad_steps: int = 200
    center_offset: NominalTrajectory | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        if self.quad_steps < 16:
            raise ValueError("quad_steps must be at least 16")
        if self.X0.dim != self.system.state_dim:
            raise ValueError("initial set dimension must match state dimension")
        if self.U.dim != self.system.input_dim:
            raise ValueError("control set dimension must match input dimension")
        if self.V is not None and self.V.dim != self.system.state_dim:
            raise ValueError("disturbance set dimension must match state dimension")

    def with_control(self, U: Ellipsoid) -> "ReachSpec":
        return ReachSpec(self.system, self.X0, U, self.horizon, self.V,
                         self.quad_steps, self.center_offset)

    def offset_at(self, t: float) -> np.ndarray:
        if self.center_offset is None:
            return np.zeros(self.system.state_dim)
        return self.center_offset.state_at(t)


@dataclass(frozen=True)
class ReachTube:
    """Support values (and optional touching points) on a time x direction grid."""

    times: np.ndarray  # (T,)
    directions: np.ndarray  # (D, n) unit rows
    support_values: np.ndarray  # (T, D)
    touching_points: np.ndarray | None = None  # (T, D, n)

    def __post_init__(self):
        if not np.all(np.isfinite(self.support_values)):
            raise ValueError("tube support values must be finite")


class _Grid:
    """Simpson grid for one (t, n_steps): transition matrices and weights."""

    def __init__(self, system: LTISystem, t: float, n_steps: int):
        n_steps += n_steps % 2  # Simpson needs an even subinterval count
        self.t = t
        self.h = t / n_steps
        self.s = np.linspace(0.0, t, n_steps + 1)
        E = expm(system.A, self.h)
        n = system.state_dim
        Phi = np.empty((n_steps + 1, n, n))
        Phi[n_steps] = np.eye(n)
        for i in range(n_steps - 1, -1, -1):
            Phi[i] = E @ Phi[i + 1]
        self.Phi = Phi  # Phi[i] = e^(A (t - s_i))
        self.PhiB = Phi @ system.B
        w = np.ones(n_steps + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        self.simpson_w = w * (self.h / 3.0)

    def _vanishing_panels(self, q: np.ndarray) -> np.ndarray:
        thresh = VANISH_REL * max(q.max(initial=0.0), 0.0)
        return (q[:-1:2] <= thresh) | (q[1::2] <= thresh) | (q[2::2] <= thresh)

    def integrate_sqrt(self, q: np.ndarray) -> float:
        """Integral of sqrt(q(s)); midpoint fallback on panels where q vanishes."""
        g = np.sqrt(np.clip(q, 0.0, None))
        simp = (self.h / 3.0) * (g[:-1:2] + 4.0 * g[1::2] + g[2::2])
        mid = 2.0 * self.h * g[1::2]
        return float(np.where(self._vanishing_panels(q), mid, simp).sum())

    def integrate_matched(self, q: np.ndarray, samples: np.ndarray) -> np.ndarray:
        """Integrate vector-valued samples with the same panel rule as integrate_sqrt."""
        simp = (self.h / 3.0) * (samples[:-1:2] + 4.0 * samples[1::2] + samples[2::2])
        mid = 2.0 * self.h * samples[1::2]
        mask = self._vanishing_panels(q)[:, None]
        return np.where(mask, mid, simp).sum(axis=0)


def _grid_for(spec: ReachSpec, t: float, n_steps: int | None = None) -> _Grid:
    n = spec.quad_steps if n_steps is None else n_steps
    key = (round(float(t), 12), n)
    g = spec._cache.get(key)
    if g is None:
        g = _Grid(spec.system, t, n)
        spec._cache[key] = g
    return g


def _check_time(spec: ReachSpec, t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= spec.horizon + 1e-12:
        raise ValueError(f"time {t} outside [0, {spec.horizon}]")
    return min(t, spec.horizon)


def reach_support(spec: ReachSpec, t: float, l, n_steps: int | None = None) -> float:
    """Support value of the reachable set at time t along direction l."""
    t = _check_time(spec, t)
    l = np.asarray(l, dtype=float)
    if not np.any(l):
        raise ValueError("direction must be nonzero")
    offset = float(l @ spec.offset_at(t))
    if t == 0.0:
        return support(spec.X0, l)[0] + offset
    g = _grid_for(spec, t, n_steps)
    lT = g.Phi[0].T @ l
    value = float(lT @ spec.X0.center) + np.sqrt(max(float(lT @ spec.X0.shape @ lT), 0.0))
    W = g.PhiB.transpose(0, 2, 1) @ l  # (N+1, m): B' Phi' l along the grid
    value += float(g.simpson_w @ (W @ spec.U.center))
    qU = np.einsum("ij,jk,ik->i", W, spec.U.shape, W)
    value += g.integrate_sqrt(qU)
    if spec.V is not None:
        Vw = g.Phi.transpose(0, 2, 1) @ l
        value += float(g.simpson_w @ (Vw @ spec.V.center))
        qV = np.einsum("ij,jk,ik->i", Vw, spec.V.shape, Vw)
        value += g.integrate_sqrt(qV)
    return value + offset


def disturbance_contribution(spec: ReachSpec, t: float, l) -> float:
    """The two disturbance terms of the support formula, on their own."""
    if spec.V is None:
        return 0.0
    t = _check_time(spec, t)
    l = np.asarray(l, dtype=float)
    if t == 0.0:
        return 0.0
    g = _grid_for(spec, t)
    Vw = g.Phi.transpose(0, 2, 1) @ l
    qV = np.einsum("ij,jk,ik->i", Vw, spec.V.shape, Vw)
    return float(g.simpson_w @ (Vw @ spec.V.center)) + g.integrate_sqrt(qV)


def reach_point(spec: ReachSpec, t: float, l):
    """Exactly reachable state maximizing <l, x>, with its witnesses.

    Returns (state, x0, (s_grid, u_profile)).  The initial state and control
    profile are the support-function maximizers; re-integrating them through
    the dynamics reproduces the support value up to quadrature tolerance.
    """
    if spec.V is not None:
        raise ValueError("extremal recovery is defined for the disturbance-free case")
    t = _check_time(spec, t)
    l = np.asarray(l, dtype=float)
    if not np.any(l):
        raise ValueError("direction must be nonzero")
    if t == 0.0:
        x0 = support(spec.X0, l)[1]
        state = x0 + spec.offset_at(t)
        return state, x0, (np.array([0.0]), spec.U.center[None, :].copy())
    g = _grid_for(spec, t)
    lT = g.Phi[0].T @ l
    q0 = float(lT @ spec.X0.shape @ lT)
    x0 = spec.X0.center.copy()
    if q0 > 0.0:
        x0 = x0 + spec.X0.shape @ lT / np.sqrt(q0)
    W = g.PhiB.transpose(0, 2, 1) @ l
    qU = np.einsum("ij,jk,ik->i", W, spec.U.shape, W)
    u = np.tile(spec.U.center, (W.shape[0], 1))
    alive = qU > VANISH_REL * max(qU.max(initial=0.0), 0.0)
    u[alive] += (W[alive] @ spec.U.shape) / np.sqrt(qU[alive])[:, None]
    integrand = np.einsum("inm,im->in", g.PhiB, u)
    state = g.Phi[0] @ x0 + g.integrate_matched(qU, integrand) + spec.offset_at(t)
    return state, x0, (g.s.copy(), u)


def reach_polytope_outer(spec: ReachSpec, t: float, directions) -> HalfspaceSet:
    """Outer polytope from support values along the given directions."""
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    if directions.shape[0] == 0:
        raise ValueError("need at least one direction")
    norms = np.linalg.norm(directions, axis=1)
    if norms.min() <= 0.0:
        raise ValueError("directions must be nonzero")
    unit = directions / norms[:, None]
    offsets = np.array([reach_support(spec, t, l) for l in unit])
    return HalfspaceSet(unit, offsets)


def reach_tube(spec: ReachSpec, time_grid, directions, with_points: bool = False) -> ReachTube:
    """Support values over a time grid for a family of directions."""
    times = np.atleast_1d(np.asarray(time_grid, dtype=float))
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    unit = directions / np.linalg.norm(directions, axis=1)[:, None]
    vals = np.empty((times.shape[0], unit.shape[0]))
    pts = np.empty((times.shape[0], unit.shape[0], spec.system.state_dim)) if with_points else None
    for i, t in enumerate(times):
        for j, l in enumerate(unit):
            vals[i, j] = reach_support(spec, t, l)
            if with_points:
                pts[i, j] = reach_point(spec, t, l)[0]
    return ReachTube(times, unit, vals, pts)


def support_gradient(spec: ReachSpec, t: float, l) -> tuple[float, np.ndarray]:
    """Support value and its gradient in l (the touching point's state).

    Unlike reach_point this also covers disturbance-bearing specs: the
    gradient then includes the worst-case disturbance contribution.
    """
    t = _check_time(spec, t)
    l = np.asarray(l, dtype=float)
    offset = spec.offset_at(t)
    if t == 0.0:
        val, pt = support(spec.X0, l)
        return val + float(l @ offset), pt + offset
    g = _grid_for(spec, t)
    lT = g.Phi[0].T @ l
    q0 = float(lT @ spec.X0.shape @ lT)
    x0 = spec.X0.center.copy()
    if q0 > 0.0:
        x0 = x0 + spec.X0.shape @ lT / np.sqrt(q0)
    W = g.PhiB.transpose(0, 2, 1) @ l
    qU = np.einsum("ij,jk,ik->i", W, spec.U.shape, W)
    u = np.tile(spec.U.center, (W.shape[0], 1))
    alive = qU > VANISH_REL * max(qU.max(initial=0.0), 0.0)
    u[alive] += (W[alive] @ spec.U.shape) / np.sqrt(qU[alive])[:, None]
    point = g.Phi[0] @ x0 + g.integrate_matched(qU, np.einsum("inm,im->in", g.PhiB, u))
    if spec.V is not None:
        Vw = g.Phi.transpose(0, 2, 1) @ l
        qV = np.einsum("ij,jk,ik->i", Vw, spec.V.shape, Vw)
        v = np.tile(spec.V.center, (Vw.shape[0], 1))
        aliveV = qV > VANISH_REL * max(qV.max(initial=0.0), 0.0)
        v[aliveV] += (Vw[aliveV] @ spec.V.shape) / np.sqrt(qV[aliveV])[:, None]
        point = point + g.integrate_matched(qV, np.einsum("inm,im->in", g.Phi, v))
    point = point + offset
    return float(l @ point), point


def _sphere_starts(k: int, count: int = 8) -> np.ndarray:
    """Deterministic unit starting directions: axes first, then seeded fill."""
    starts = []
    for i in range(k):
        e = np.zeros(k)
        e[i] = 1.0
        starts.append(e.copy())
        starts.append(-e)
    rng = np.random.default_rng(0)
    while len(starts) < count:
        v = rng.standard_normal(k)
        starts.append(v / np.linalg.norm(v))
    return np.array(starts[:count])


def separation(specA: ReachSpec, specB: ReachSpec, t: float, P) -> tuple[float, np.ndarray]:
    """Signed separation of the two projected reachable sets at time t.

    Maximizes g(l) = -rho_A(-P'l) - rho_B(P'l) over unit directions l in the
    projected subspace by projected supergradient ascent from deterministic
    sphere starts.  A positive value certifies the sets are at least that far
    apart; the maximizing direction is returned alongside.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    k = P.shape[0]

    def g_and_grad(l):
        vA, xA = support_gradient(specA, t, -(P.T @ l))
        vB, xB = support_gradient(specB, t, P.T @ l)
        return -vA - vB, P @ xA - P @ xB

    best_val, best_l = -np.inf, None
    for l in _sphere_starts(k):
        val, grad = g_and_grad(l)
        for _ in range(200):
            # project out the radial component and renormalize after stepping
            tangent = grad - (grad @ l) * l
            tnorm = np.linalg.norm(tangent)
            if tnorm < 1e-12:
                break
            step = 1.0
            improved = False
            while step > 1e-14:
                cand = l + step * tangent / max(tnorm, 1.0)
                cand /= np.linalg.norm(cand)
                cval, cgrad = g_and_grad(cand)
                if cval > val + 1e-14:
                    l, val, grad = cand, cval, cgrad
                    improved = True
                    break
                step *= 0.5
            if not improved:
                break
        if val > best_val:
            best_val, best_l = val, l
    return float(best_val), best_l
