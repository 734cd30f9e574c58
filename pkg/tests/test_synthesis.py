import numpy as np
import pytest

from reachsep.dynamics import LTISystem, QuadrotorParams, propagate_nominal, quadrotor_linearized
from reachsep.ellipsoid import Ellipsoid, containment_block, contains, support
from reachsep.montecarlo import sample_trajectories
from reachsep.reachability import ReachSpec, reach_support
from reachsep.synthesis import (
    DegenerateGeometryError,
    EncounterGeometry,
    JointInfeasibilityError,
    estimate_encounter,
    part1_constants,
    safe_set,
    scalarization_loop,
    solve_matrix_norm,
    solve_part2,
    solve_scaled,
)

P3 = np.eye(10)[:3]


def quad_system(J=0.005):
    return quadrotor_linearized(QuadrotorParams(m=1.0, J=np.diag([J, J, 2 * J]), g=9.81))


def quad_pair(torque_r=0.0005, horizon=4.0):
    sys = quad_system()
    def spec(pos, vel):
        c0 = np.zeros(10)
        c0[0:3] = pos
        c0[3:6] = vel
        M0 = np.diag([0.025**2] * 3 + [0.005**2] * 3 + [0.0] * 4)
        U = Ellipsoid(np.zeros(3), np.diag([0.3**2, torque_r**2, torque_r**2]))
        return ReachSpec(sys, Ellipsoid(c0, M0), U, horizon, quad_steps=200)
    specA = spec([1.6, 0.5, 0.0], [-0.2, 0.0, 0.0])
    specB = spec([0.0, 0.0, 0.0], [0.2, 0.0, 0.0])
    nomA = propagate_nominal(lambda t, x, u: sys.A @ x, specA.X0.center, [], horizon, 0.1)
    nomB = propagate_nominal(lambda t, x, u: sys.A @ x, specB.X0.center, [], horizon, 0.1)
    geom = estimate_encounter(nomA, nomB, P3, d=1.0)
    return specA, specB, geom


# ---------------------------------------------------------------- encounter


def test_encounter_quadrotor_scenario():
    _, _, geom = quad_pair()
    assert geom.tau == pytest.approx(4.0, abs=1e-12)
    assert np.allclose(geom.l_star[:3], [0.0, 1.0, 0.0], atol=1e-12)
    assert not geom.l_star[3:].any()
    # closed-form check: |(1.6 - 0.4 t, 0.5)| is minimized at t = 4 with gap 0.5
    assert np.linalg.norm(P3 @ geom.c_A_tau - [0.8, 0.0, 0.0]) == pytest.approx(0.5)


def test_encounter_degenerate_geometry():
    traj = propagate_nominal(lambda t, x, u: np.zeros_like(x), np.zeros(10), [], 2.0, 0.1)
    with pytest.raises(DegenerateGeometryError):
        estimate_encounter(traj, traj, P3, d=1.0)


# ---------------------------------------------------------------- constants


def static_geom(tau, l_pos, c_A, d=1.0):
    n = len(c_A)
    l = np.zeros(n)
    l[:len(l_pos)] = l_pos
    return EncounterGeometry(tau, l / np.linalg.norm(l), d, np.asarray(c_A, dtype=float))


def test_constants_static_system():
    # A = 0, B = I: b = tau * l and gamma_I = tau
    sys = LTISystem(np.zeros((2, 2)), np.eye(2))
    spec = ReachSpec(sys, Ellipsoid.ball([0.0, 0.0], 1.0), Ellipsoid.ball([0.0, 0.0], 1.0), 3.0)
    geom = static_geom(3.0, [1.0, 0.0], [10.0, 0.0])
    c = part1_constants(spec, geom)
    assert np.allclose(c.b, [3.0, 0.0], atol=1e-9)
    assert c.gamma_I == pytest.approx(3.0, abs=1e-9)
    assert c.gamma_U == pytest.approx(3.0, abs=1e-9)
    assert c.x0_term == pytest.approx(1.0, abs=1e-12)


def test_constants_double_integrator():
    sys = LTISystem(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]))
    spec = ReachSpec(sys, Ellipsoid.point([0.0, 0.0]), Ellipsoid.ball([0.0], 1.0), 2.0)
    geom = static_geom(2.0, [1.0, 0.0], [10.0, 0.0])
    c = part1_constants(spec, geom)
    assert c.gamma_I == pytest.approx(2.0, abs=1e-9)  # tau^2 / 2


def test_constants_reproduce_reach_support():
    _, specB, geom = quad_pair()
    c = part1_constants(specB, geom)
    assembled = c.support_scaled(specB.U.center, 1.0)
    assert assembled == pytest.approx(reach_support(specB, geom.tau, geom.l_star), abs=1e-8)


# ---------------------------------------------------------------- phase one


def test_scaled_far_away_keeps_full_authority():
    # weak coupling and a distant opponent: the log r term dominates and the
    # optimizer keeps the whole set (r -> 1 forces q -> center via the LMI)
    sys = LTISystem(np.zeros((2, 2)), np.eye(2))
    spec = ReachSpec(sys, Ellipsoid.ball([0.0, 0.0], 0.1), Ellipsoid([0.5, 0.0], np.eye(2)), 0.1)
    geom = static_geom(0.1, [1.0, 0.0], [100.0, 0.0])
    c = part1_constants(spec, geom)
    sol = solve_scaled(c, geom, spec.U, k=1.0)
    assert sol.r > 0.99
    assert np.linalg.norm(sol.q - spec.U.center) < 0.02


def test_scaled_k_zero_hits_floor():
    _, specB, geom = quad_pair()
    c = part1_constants(specB, geom)
    sol = solve_scaled(c, geom, specB.U, k=0.0, margin=0.5)
    assert sol.r < 1e-4
    assert sol.distance > 9.0  # essentially the maximal clearance


def test_scaled_double_integrator_matches_grid():
    # independent oracle: brute-force over (q, r) with interval containment
    sys = LTISystem(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]))
    spec = ReachSpec(sys, Ellipsoid.point([0.0, 0.0]), Ellipsoid.ball([0.0], 1.0), 2.0)
    geom = static_geom(2.0, [1.0, 0.0], [4.0, 0.0])
    c = part1_constants(spec, geom)
    k, margin = 0.3, 0.1
    sol = solve_scaled(c, geom, spec.U, k=k, margin=margin)
    const = float(geom.l_star @ geom.c_A_tau) - c.a0 - c.offset - c.x0_term
    qs = np.linspace(-1.0, 1.0, 2001)
    rs = np.linspace(1e-3, 1.0, 1000)
    Q, R = np.meshgrid(qs, rs, indexing="ij")
    obj = const - c.b[0] * Q - c.gamma_U * R + k * 1 * np.log(R)
    feas = (np.abs(Q) + R <= 1.0) & (const - c.b[0] * Q - c.gamma_U * R >= margin)
    best = np.where(feas, obj, -np.inf).max()
    assert abs(sol.objective - best) <= 1e-3


def test_norm_isotropic_matches_scaled():
    sys = LTISystem(np.zeros((2, 2)), np.eye(2))
    spec = ReachSpec(sys, Ellipsoid.ball([0.0, 0.0], 0.2), Ellipsoid(np.zeros(2), np.eye(2)), 1.5)
    geom = static_geom(1.5, [1.0, 0.0], [3.0, 0.0])
    c = part1_constants(spec, geom)
    scaled = solve_scaled(c, geom, spec.U, k=0.5, margin=0.1)
    norm = solve_matrix_norm(c, geom, spec.U, k=0.5, margin=0.1)
    # unit-radius control set: sigma and r parameterize the same family
    sigma = np.linalg.eigvalsh(norm.Q)
    assert sigma.max() - sigma.min() <= 1e-4  # isotropic optimum
    assert abs(sigma.mean() - scaled.r) <= 1e-3


def test_norm_uncontrollable_direction_keeps_everything():
    # the input cannot move the avoidance direction: gamma_I = 0 decouples the
    # distance constraint from Q, so Q grows to the containment optimum
    sys = LTISystem(np.zeros((2, 2)), np.array([[1.0], [0.0]]))
    spec = ReachSpec(sys, Ellipsoid.ball([0.0, 0.0], 0.1), Ellipsoid([0.2], np.array([[0.25]])), 2.0)
    geom = static_geom(2.0, [0.0, 1.0], [0.0, 5.0])
    c = part1_constants(spec, geom)
    assert c.gamma_I == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(c.b, 0.0, atol=1e-12)
    sol = solve_matrix_norm(c, geom, spec.U, k=1.0)
    assert sol.Q[0, 0] == pytest.approx(0.5, abs=1e-3)
    assert abs(sol.q[0] - 0.2) <= 1e-3


def test_phase_one_solutions_contained_with_witness():
    _, specB, geom = quad_pair()
    c = part1_constants(specB, geom)
    for sol in [solve_scaled(c, geom, specB.U, 1.0, margin=0.5),
                solve_matrix_norm(c, geom, specB.U, 1.0, margin=0.5)]:
        ok, lam = contains(specB.U, sol.control_set())
        assert ok
        block = containment_block(specB.U, sol.q, sol.Q, sol.lam)
        assert np.linalg.eigvalsh(block).min() >= -1e-8


# ---------------------------------------------------------------- safe set


def test_safe_set_point_reach_plus_ball():
    sys = LTISystem(np.zeros((2, 2)), np.zeros((2, 1)))
    spec = ReachSpec(sys, Ellipsoid.point([3.0, 4.0]), Ellipsoid.point([0.0]), 1.0)
    ball = safe_set(spec, 1.0, 0.7, np.array([0.0, 1.0]), np.eye(2))
    assert np.allclose(ball.center, [3.0, 4.0])
    assert np.allclose(ball.shape, 0.49 * np.eye(2), atol=1e-12)


def test_safe_set_support_matches_reach_support():
    _, specB, geom = quad_pair()
    c = part1_constants(specB, geom)
    sol = solve_matrix_norm(c, geom, specB.U, 1.0, margin=0.5)
    shrunk = specB.with_control(sol.control_set())
    l_pos = P3 @ geom.l_star
    for d in [0.0, 1.0]:
        s = safe_set(shrunk, geom.tau, d, geom.l_star, P3)
        rho = support(s, l_pos)[0]
        assert rho == pytest.approx(reach_support(shrunk, geom.tau, geom.l_star) + d, abs=1e-6)


def test_safe_set_contains_inflated_samples():
    _, specB, geom = quad_pair()
    c = part1_constants(specB, geom)
    sol = solve_matrix_norm(c, geom, specB.U, 1.0, margin=0.5)
    shrunk = specB.with_control(sol.control_set())
    d = 1.0
    s = safe_set(shrunk, geom.tau, d, geom.l_star, P3)
    t_grid = np.linspace(0.0, geom.tau, 41)
    pts = sample_trajectories(shrunk, t_grid, 2000, seed=3)[:, -1, :3]
    rng = np.random.default_rng(8)
    for _ in range(64):
        m = rng.standard_normal(3)
        m /= np.linalg.norm(m)
        assert (pts @ m + d).max() <= support(s, m)[0] + 1e-6


# ---------------------------------------------------------------- phase two


def test_part2_far_safe_set_keeps_full_authority():
    # "far" must beat the norm bound s_cap * gamma_I (~12.6 km here), since
    # the spectral bound charges the full torque sensitivity to every axis
    specA, specB, geom = quad_pair()
    far = Ellipsoid.ball([0.0, -20000.0, 0.0], 1.0)
    sol = solve_part2(specA, far, geom, specA.U, P3)
    W = specA.U.sqrt_shape()
    assert np.allclose(sol.Q, W, atol=1e-3 * np.abs(W).max())
    assert np.linalg.norm(sol.q - specA.U.center) <= 1e-4


def test_part2_certifies_tau_separation():
    specA, specB, geom = quad_pair()
    c = part1_constants(specB, geom)
    solB = solve_matrix_norm(c, geom, specB.U, 1.0, margin=0.5)
    shrunkB = specB.with_control(solB.control_set())
    sB = safe_set(shrunkB, geom.tau, geom.d, geom.l_star, P3)
    solA = solve_part2(specA, sB, geom, specA.U, P3)
    shrunkA = specA.with_control(solA.control_set())
    lo_A = -reach_support(shrunkA, geom.tau, -geom.l_star)
    hi_B = reach_support(shrunkB, geom.tau, geom.l_star)
    assert lo_A - hi_B >= geom.d - 1e-6


# ---------------------------------------------------------------- loop


def test_loop_single_iteration_when_feasible():
    specA, specB, geom = quad_pair()
    solB, solA, k_used, diags = scalarization_loop(specA, specB, geom, P3,
                                                   method="norm", k0=1.0, shrink=0.8)
    assert k_used == 1.0
    assert len(diags) == 1 and diags[0]["outcome"] == "feasible"


def test_loop_shrinks_k_until_feasible():
    # margin2 = 15 exceeds what A can clear while B keeps a large set, so the
    # first iterations are phase-two infeasible until k comes down
    specA, specB, geom = quad_pair()
    solB, solA, k_used, diags = scalarization_loop(
        specA, specB, geom, P3, method="norm", k0=40.0, shrink=0.25, margin2=15.0)
    assert k_used < 40.0
    assert len(diags) >= 2
    assert all(d["outcome"].startswith("phase two infeasible") for d in diags[:-1])
    assert diags[-1]["outcome"] == "feasible"


def test_loop_reports_joint_infeasibility():
    # almost no control authority and a fat initial set: phase one cannot hold
    # the nominal clearance no matter what k is
    sys = quad_system()
    def spec(pos, vel):
        c0 = np.zeros(10)
        c0[0:3] = pos
        c0[3:6] = vel
        M0 = np.diag([0.4**2] * 3 + [0.01**2] * 3 + [0.0] * 4)
        U = Ellipsoid(np.zeros(3), 1e-12 * np.eye(3))
        return ReachSpec(sys, Ellipsoid(c0, M0), U, 4.0, quad_steps=200)
    specA = spec([1.6, 0.5, 0.0], [-0.2, 0.0, 0.0])
    specB = spec([0.0, 0.0, 0.0], [0.2, 0.0, 0.0])
    nomA = propagate_nominal(lambda t, x, u: sys.A @ x, specA.X0.center, [], 4.0, 0.1)
    nomB = propagate_nominal(lambda t, x, u: sys.A @ x, specB.X0.center, [], 4.0, 0.1)
    geom = estimate_encounter(nomA, nomB, P3, d=1.0)
    with pytest.raises(JointInfeasibilityError) as exc:
        scalarization_loop(specA, specB, geom, P3, method="norm", k0=1.0, shrink=0.8)
    assert "distance" in str(exc.value)


def test_pareto_monotone_in_k():
    _, specB, geom = quad_pair()
    c = part1_constants(specB, geom)
    sols = [solve_scaled(c, geom, specB.U, k, margin=0.5) for k in [0.25, 0.5, 0.75, 1.0]]
    rs = [s.r for s in sols]
    ds = [s.distance for s in sols]
    assert all(np.diff(rs) >= -1e-6)
    assert all(np.diff(ds) <= 1e-6)
