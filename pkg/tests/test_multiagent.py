import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import central_grad
from navsim.multiagent import (
    Fleet,
    FleetAgent,
    FleetPhase,
    OutsideAgentFreeSpace,
    ProtocolViolation,
    advance_phase,
    agent_control,
    agent_distances,
    beta_min,
    check_assumptions,
    frozen_spacing_violations,
    grad_tilde_phi_i,
    phi_i,
    phi_tilde_i,
    random_fleet_layout,
    sensed_neighbors,
)
from navsim.plant import FrictionModel, PlantParams
from navsim.world import World

PLANT = PlantParams(1.0, np.zeros(2), FrictionModel("paper_sinusoidal", alpha=10.0))


def make_fleet(starts, goals, obstacles=((0.0, 0.0),), r_W=70.0, priority=None, plant=PLANT, **kw):
    world = World(r_W, np.array(obstacles, float).reshape(-1, 2), np.full(len(obstacles), 2.0))
    agents = [FleetAgent(2.0, s, g, plant) for s, g in zip(starts, goals)]
    return Fleet(world, agents, priority=priority, **kw)


@pytest.fixture
def trio():
    return make_fleet([(-40.0, 0.0), (30.0, 20.0), (30.0, -20.0)],
                      [(40.0, 0.0), (-30.0, 20.0), (-30.0, -20.0)], priority=(0, 1, 2))


def _distance(fleet, phase, i, X, kind):
    return dict(agent_distances(fleet, phase, i, X))[kind]


def test_follower_pair_symmetry(trio):
    ph = trio.initial_phase()
    rng = np.random.default_rng(0)
    for _ in range(100):
        X = rng.uniform(-50, 50, (3, 2))
        assert _distance(trio, ph, 1, X, "a2") == _distance(trio, ph, 2, X, "a1")
        assert _distance(trio, ph, 0, X, "a1") == _distance(trio, ph, 1, X, "a0")


def test_leader_contact_is_zero(trio):
    ph = trio.initial_phase()
    X = np.array([[0.0, 10.0], [4.0, 10.0], [30.0, -20.0]])  # |x0 - x1| = r0 + r1
    assert _distance(trio, ph, 0, X, "a1") == 0.0
    assert _distance(trio, ph, 1, X, "a0") == 0.0


def test_follower_obstacle_inflation_paper_numbers(trio):
    ph = trio.initial_phase()
    rng = np.random.default_rng(1)
    for _ in range(20):
        X = rng.uniform(-50, 50, (3, 2))
        x = X[1]
        assert _distance(trio, ph, 1, X, "o1") == pytest.approx(x @ x - 256.0, rel=1e-14, abs=1e-11)
        assert _distance(trio, ph, 0, X, "o1") == pytest.approx(X[0] @ X[0] - 16.0, rel=1e-14, abs=1e-11)


def test_follower_margin_exceeds_leader_margin(trio):
    ph = trio.initial_phase()
    X = np.array([[10.0, 30.0], [10.0, 30.0], [-20.0, 5.0]])
    lead = dict(agent_distances(trio, ph, 0, X))
    foll = dict(agent_distances(trio, ph, 1, X))
    extra = 2 * trio.r_M + 2 * trio.r_bar
    assert extra == 12.0
    R_L = 4.0
    assert lead["o1"] - foll["o1"] == pytest.approx((R_L + extra) ** 2 - R_L**2)
    # workspace boundary: (r_W - r)^2 versus (r_W - r - extra)^2
    assert lead["o0"] - foll["o0"] == pytest.approx(68.0**2 - 56.0**2)
    # followers keep clear of higher-priority goals; leaders see none
    assert "d0" in foll and not any(k.startswith("d") for k in lead)


def test_plateau_gradient():
    f = make_fleet([(-30.0, 10.0)], [(30.0, 10.0)])
    X = np.array([[5.0, 30.0]])
    assert np.array_equal(grad_tilde_phi_i(f, f.initial_phase(), 0, X), 2 * 0.04 * (X[0] - f.agents[0].goal))


def _near_barrier_states(fleet, rng, count):
    """Fleet states with agent 1 inside the active range of some barrier."""
    ph = fleet.initial_phase()
    tau = fleet.spec.tau
    out = []
    while len(out) < count:
        X = np.array([a.start for a in fleet.agents]) + rng.normal(scale=3.0, size=(fleet.N, 2))
        which = rng.integers(3)
        u = rng.normal(size=2)
        u /= np.linalg.norm(u)
        if which == 0:  # pair barrier against agent 0 (leader, tight)
            X[1] = X[0] + np.sqrt(16.0 + rng.uniform(0.05, 0.95) * tau) * u
        elif which == 1:  # follower obstacle barrier
            X[1] = np.sqrt(256.0 + rng.uniform(0.05, 0.95) * tau) * u
        else:  # goal exclusion of agent 0
            R = 2 + 2 + 12 + fleet.epsilon
            X[1] = fleet.agents[0].goal + np.sqrt(R * R + rng.uniform(0.05, 0.95) * tau) * u
        d = dict(agent_distances(fleet, ph, 1, X))
        if min(d.values()) > 0:
            out.append(X)
    return out


def test_gradient_matches_finite_differences(trio):
    ph = trio.initial_phase()
    rng = np.random.default_rng(2)
    active = 0
    for X in _near_barrier_states(trio, rng, 60):
        g = grad_tilde_phi_i(trio, ph, 1, X)

        def f(x, X=X):
            Y = X.copy()
            Y[1] = x
            return phi_tilde_i(trio, ph, 1, Y)

        g_fd = central_grad(f, X[1], 1e-4)
        assert np.linalg.norm(g - g_fd) <= 1e-6 * max(np.linalg.norm(g), 1e-3)
        active += np.linalg.norm(g - 2 * 0.04 * (X[1] - trio.agents[1].goal)) > 0
    assert active == 60


def test_pair_weight_doubles_pair_barriers(trio):
    ph = trio.initial_phase()
    X = np.array([[0.0, 40.0], [0.0, 40.0 + np.sqrt(16.0 + 0.5 * trio.spec.tau)], [30.0, -20.0]])
    diff = phi_tilde_i(trio, ph, 1, X) - phi_i(trio, ph, 1, X)
    # every pair term doubles; the far pair with agent 2 sits on its plateau value 1
    assert diff == pytest.approx(5.0 * (trio.spec.beta(0.5 * trio.spec.tau) + 1.0), rel=1e-12)


def test_leader_field_ignores_other_goals(trio):
    ph = trio.initial_phase()
    rng = np.random.default_rng(3)
    moved = make_fleet([a.start for a in trio.agents],
                       [trio.agents[0].goal, (-25.0, 30.0), (-35.0, -10.0)], priority=(0, 1, 2))
    for X in _near_barrier_states(trio, rng, 20):
        assert phi_i(trio, ph, 0, X) == phi_i(moved, moved.initial_phase(), 0, X)
    # a follower does feel the higher-priority goal it is next to
    shifted = make_fleet([a.start for a in trio.agents],
                         [(39.0, 0.0), trio.agents[1].goal, trio.agents[2].goal], priority=(0, 1, 2))
    X = np.array([[0.0, 0.0], [40.0, 16.2], [30.0, -20.0]])
    assert phi_i(trio, ph, 1, X) != phi_i(shifted, shifted.initial_phase(), 1, X)


def test_control_holds_at_goal():
    g = np.array([0.0, -9.81])
    plant = PlantParams(1.0, g)
    f = make_fleet([(-30.0, 10.0)], [(30.0, 10.0)], plant=plant)
    X = np.array([[30.0, 10.0]])
    u, _, _ = agent_control(f, f.initial_phase(), 0, X, np.zeros((1, 2)), 0.8, 0.2)
    assert np.array_equal(u, 0.8 * g)


def test_sensing_boundary_neighbor_is_irrelevant(trio):
    ph = trio.initial_phase()
    X = np.array([[0.0, 0.0], [0.0, 30.0], [0.0, 50.0]])  # agent 2 exactly 20 m from agent 1
    V = np.array([[0.1, 0.2], [0.3, -0.4], [-1.0, 0.5]])
    assert sensed_neighbors(trio, ph, 1, X) == [2]
    assert _distance(trio, ph, 1, X, "a2") > trio.spec.tau
    with_j = agent_control(trio, ph, 1, X, V, 1.0, 0.5, sensed=[2])
    without = agent_control(trio, ph, 1, X, V, 1.0, 0.5, sensed=[])
    assert all(np.array_equal(a, b) for a, b in zip(with_j, without))


def test_decentralized_equals_centralized_head_on():
    f = make_fleet([(-30.0, 0.5), (30.0, -0.5)], [(30.0, 0.0), (-30.0, 0.0)], obstacles=((0.0, 40.0),))
    ph = f.initial_phase()
    rng = np.random.default_rng(4)
    # gaps up to 26 keep agent 1 outside the exclusion zone of agent 0's goal
    for gap in np.linspace(4.05, 26.0, 40):
        X = np.array([[-gap / 2, 0.3], [gap / 2, -0.3]])
        V = rng.normal(size=(2, 2))
        for i in (0, 1):
            dec = agent_control(f, ph, i, X, V, 0.9, 0.3)
            cen = agent_control(f, ph, i, X, V, 0.9, 0.3, sensed=[j for j in ph.remaining if j != i])
            assert np.max(np.abs(dec[0] - cen[0])) <= 1e-12
            assert dec[1:] == pytest.approx(cen[1:], abs=1e-12)


def test_single_agent_promotion_completes():
    f = make_fleet([(-30.0, 10.0)], [(30.0, 10.0)])
    ph = f.initial_phase()
    same, promoted = advance_phase(f, ph, np.array([[29.0, 10.0]]))
    assert not promoted and same is ph
    ph, promoted = advance_phase(f, ph, np.array([[30.05, 10.0]]))
    assert promoted and ph.done and ph.leader is None
    assert len(ph.frozen) == 1


def test_promotion_freezes_within_epsilon(trio):
    ph = trio.initial_phase()
    X = np.array([[40.07, 0.02], [30.0, 20.0], [30.0, -20.0]])
    ph, promoted = advance_phase(trio, ph, X)
    assert promoted and ph.leader == 1
    agent, c = ph.frozen[0]
    assert agent == 0 and np.linalg.norm(np.array(c) - trio.agents[0].goal) <= trio.epsilon
    # the frozen agent is now an obstacle in every remaining frame
    kinds = dict(agent_distances(trio, ph, 2, X))
    assert "o2" in kinds and "a0" not in kinds
    assert frozen_spacing_violations(trio, ph) == []


def test_spacing_after_promotion_in_random_layout():
    rng = np.random.default_rng(5)
    world, starts, goals = random_fleet_layout(rng, 4, 6, 60.0)
    agents = [FleetAgent(2.0, s, g, PLANT) for s, g in zip(starts, goals)]
    f = Fleet(world, agents)
    assert check_assumptions(f)["spacing_ok"]
    ph = f.initial_phase()
    X = starts.copy()
    for k in range(f.N):
        i = ph.leader
        X[i] = goals[i] + rng.uniform(-0.05, 0.05, 2)
        ph, promoted = advance_phase(f, ph, X)
        assert promoted
        c = np.array(ph.frozen[-1][1])
        gaps = np.linalg.norm(world.centers - c, axis=1) - (world.radii + 2.0 + 2 * f.r_M + 2 * f.r_bar)
        assert np.all(gaps > 0)
    assert ph.done


def test_promotion_into_occupied_space_is_a_violation(trio):
    ph = trio.initial_phase()
    # a follower (agent 2 stays one) parked next to the leader's goal
    X = np.array([[40.0, 0.0], [30.0, 20.0], [40.0, 10.0]])
    with pytest.raises(ProtocolViolation):
        advance_phase(trio, ph, X)


def test_inactive_agent_rejected(trio):
    ph = FleetPhase(remaining=(1, 2), frozen=((0, (40.0, 0.0)),))
    with pytest.raises(ProtocolViolation):
        agent_distances(trio, ph, 0, np.zeros((3, 2)))


def test_outside_free_space_raises(trio):
    X = np.array([[0.0, 1.0], [30.0, 20.0], [30.0, -20.0]])
    with pytest.raises(OutsideAgentFreeSpace):
        grad_tilde_phi_i(trio, trio.initial_phase(), 0, X)


@settings(max_examples=40, deadline=None)
@given(st.floats(-60, 60), st.floats(-60, 60))
def test_beta_min_is_surface_gap(a, b):
    f = make_fleet([(-40.0, 0.0), (30.0, 20.0)], [(40.0, 0.0), (-30.0, 20.0)])
    X = np.array([[a, b], [30.0, 20.0]])
    expected = min(np.linalg.norm(X[0] - X[1]) - 4.0, np.linalg.norm(X[0]) - 4.0, np.linalg.norm(X[1]) - 4.0)
    assert beta_min(f, X) == pytest.approx(expected, abs=1e-12)


def test_check_assumptions_on_random_layout():
    rng = np.random.default_rng(0)
    world, starts, goals = random_fleet_layout(rng, 6, 15, 70.0)
    f = Fleet(world, [FleetAgent(2.0, s, g, PLANT) for s, g in zip(starts, goals)])
    rep = check_assumptions(f)
    assert rep["ok"] and rep["spacing_ok"] and rep["sensing_ok"]
    assert rep["tau"] < min(f.r_bar**2, f.r_bar_d)
    assert f.priority == tuple(sorted(range(6), key=lambda i: -np.linalg.norm(starts[i] - goals[i])))
