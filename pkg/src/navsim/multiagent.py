"""Prioritized leader-follower fleet navigation.

The highest-priority remaining agent is the leader and sees obstacles and
other agents with tight inflations (sum of radii). Followers inflate every
obstacle, every other follower and the workspace boundary by the extra
margin ``2 r_M + 2 rbar`` and also keep away from the goals of
higher-priority agents. When the leader gets within ``epsilon`` of its goal
it freezes there and becomes a static obstacle of radius ``r_i``; the next
agent in priority takes over.

Agent indices are 0-based. Obstacle distances reuse the sphere-world
surrogates ``|x - c|^2 - R^2``; all barriers share one influence range
``tau``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from navsim.barrier import BarrierSpec, saddle_threshold
from navsim.controller import ControllerGains, adaptive_law
from navsim.plant import PlantParams
from navsim.world import World


class ProtocolViolation(RuntimeError):
    pass


class OutsideAgentFreeSpace(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FleetAgent:
    radius: float
    start: np.ndarray
    goal: np.ndarray
    plant: PlantParams
    gains: ControllerGains = ControllerGains()
    sensing_radius: float = 20.0
    k1: float = 0.04
    k2: float = 5.0
    m_hat0: float = 0.5
    alpha_hat0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "start", np.asarray(self.start, dtype=float))
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=float))
        if self.radius <= 0 or self.sensing_radius <= 0:
            raise ValueError("agent radius and sensing radius must be positive")


@dataclass(frozen=True, eq=False)
class Fleet:
    """Static obstacles live in ``world`` (its robot radius is ignored)."""

    world: World
    agents: tuple
    epsilon: float = 0.1
    r_bar: float = 4.0
    priority: tuple | None = None
    tau: float | None = None
    spec: BarrierSpec = field(init=False)
    r_bar_d: float = field(init=False)
    d_star_star: float = field(init=False)

    def __post_init__(self):
        agents = tuple(self.agents)
        object.__setattr__(self, "agents", agents)
        if not agents:
            raise ValueError("fleet needs at least one agent")
        if self.priority is None:
            # farthest-from-goal first
            dist = [float(np.linalg.norm(a.start - a.goal)) for a in agents]
            order = tuple(sorted(range(len(agents)), key=lambda i: (-dist[i], i)))
        else:
            order = tuple(int(i) for i in self.priority)
            if sorted(order) != list(range(len(agents))):
                raise ValueError("priority must be a permutation of agent indices")
        object.__setattr__(self, "priority", order)
        rbd = fleet_goal_clearance(self)
        object.__setattr__(self, "r_bar_d", rbd)
        bound = min(self.r_bar**2, rbd)
        if not bound > 0:
            raise ValueError("fleet goals violate the clearance margins")
        if self.world.M:
            r_under = min(a.radius for a in agents) + float(self.world.radii.min())
            cand = BarrierSpec(bound)
            dss = min(saddle_threshold(a.k1, a.k2, self.world.r_W - a.radius, r_under, cand) for a in agents)
        else:
            dss = math.inf
        object.__setattr__(self, "d_star_star", dss)
        if self.tau is None:
            tau = 0.99 * min(bound, dss)
        else:
            tau = float(self.tau)
            if not 0 < tau < bound:
                warnings.warn(f"fleet tau {tau} outside (0, {bound})", RuntimeWarning)
        object.__setattr__(self, "spec", BarrierSpec(tau))

    @property
    def N(self) -> int:
        return len(self.agents)

    @property
    def n(self) -> int:
        return self.world.n

    @property
    def r_M(self) -> float:
        return max(a.radius for a in self.agents)

    @property
    def extra(self) -> float:
        """Follower inflation on top of the tight one."""
        return 2 * self.r_M + 2 * self.r_bar

    def initial_phase(self) -> "FleetPhase":
        return FleetPhase(remaining=self.priority, frozen=())


def fleet_goal_clearance(fleet: Fleet) -> float:
    """Squared-distance clearance of every goal in its owner's leader frame,
    counting other agents' goals as future frozen obstacles."""
    w, eps = fleet.world, fleet.epsilon
    extra = 2 * max(a.radius for a in fleet.agents) + 2 * fleet.r_bar
    out = math.inf
    for i, a in enumerate(fleet.agents):
        xd = a.goal
        out = min(out, (w.r_W - a.radius) ** 2 - xd @ xd)
        if w.M:
            out = min(out, float(np.min(np.sum((xd - w.centers) ** 2, axis=1) - (a.radius + w.radii) ** 2)))
        for j, b in enumerate(fleet.agents):
            if j == i:
                continue
            R = a.radius + b.radius
            gap = max(float(np.linalg.norm(xd - b.goal)) - eps, 0.0)
            out = min(out, gap * gap - R * R, (R + extra + eps) ** 2 - R * R)
    return float(out)


@dataclass(frozen=True)
class FleetPhase:
    """``remaining`` is in priority order; its head is the leader.
    ``frozen`` holds ``(agent, center)`` pairs in freezing order, centres as
    float tuples so phases stay hashable."""

    remaining: tuple
    frozen: tuple = ()

    @property
    def leader(self) -> int | None:
        return self.remaining[0] if self.remaining else None

    @property
    def done(self) -> bool:
        return not self.remaining


@dataclass(frozen=True, eq=False)
class _Frame:
    """Per-agent, per-phase geometry, precomputed for the hot path."""

    leader: bool
    RW2: float
    obs_c: np.ndarray
    obs_R2: np.ndarray
    goal_c: np.ndarray
    goal_R2: np.ndarray
    pair_R2: dict


_FRAMES: dict = {}


def _frame(fleet: Fleet, phase: FleetPhase, i: int) -> _Frame:
    key = (id(fleet), phase, i)
    fr = _FRAMES.get(key)
    if fr is not None and fr[0] is fleet:
        return fr[1]
    if i not in phase.remaining:
        raise ProtocolViolation(f"agent {i} is not active in this phase")
    w = fleet.world
    a = fleet.agents[i]
    leader = phase.leader == i
    extra = 0.0 if leader else fleet.extra
    centers = [w.centers] + [np.asarray(c)[None, :] for _, c in phase.frozen]
    radii = [w.radii] + [np.array([fleet.agents[k].radius]) for k, _ in phase.frozen]
    obs_c = np.concatenate(centers, axis=0).reshape(-1, fleet.n)
    obs_R2 = (np.concatenate(radii) + a.radius + extra) ** 2
    if leader:
        goal_c = np.zeros((0, fleet.n))
        goal_R2 = np.zeros(0)
    else:
        higher = phase.remaining[: phase.remaining.index(i)]
        goal_c = np.array([fleet.agents[j].goal for j in higher]).reshape(-1, fleet.n)
        goal_R2 = np.array([(a.radius + fleet.agents[j].radius + fleet.extra + fleet.epsilon) ** 2 for j in higher])
    pair_R2 = {}
    for j in phase.remaining:
        if j == i:
            continue
        tight = leader or j == phase.leader
        pair_R2[j] = (a.radius + fleet.agents[j].radius + (0.0 if tight else fleet.extra)) ** 2
    fr = _Frame(leader, (fleet.world.r_W - a.radius - extra) ** 2, obs_c, obs_R2, goal_c, goal_R2, pair_R2)
    if len(_FRAMES) > 4096:
        _FRAMES.clear()
    _FRAMES[key] = (fleet, fr)
    return fr


def agent_distances(fleet: Fleet, phase: FleetPhase, i: int, X) -> list:
    """``(kind, value)`` pairs: ``("o0", d)``, ``("o<k>", d)`` for static
    obstacles (1-based) and frozen agents (numbered after them),
    ``("a<j>", d)`` for other active agents and ``("d<j>", d)`` for
    goal exclusions."""
    fr = _frame(fleet, phase, i)
    X = np.asarray(X, dtype=float)
    xi = X[i]
    out = [("o0", float(fr.RW2 - xi @ xi))]
    d = np.sum((xi - fr.obs_c) ** 2, axis=1) - fr.obs_R2
    out += [(f"o{k + 1}", float(v)) for k, v in enumerate(d)]
    for j, R2 in fr.pair_R2.items():
        diff = xi - X[j]
        out.append((f"a{j}", float(diff @ diff - R2)))
    higher = phase.remaining[: phase.remaining.index(i)]
    dg = np.sum((xi - fr.goal_c) ** 2, axis=1) - fr.goal_R2
    out += [(f"d{j}", float(v)) for j, v in zip(higher, dg)]
    return out


def in_agent_free_space(fleet: Fleet, phase: FleetPhase, i: int, X) -> bool:
    return all(v > 0 for _, v in agent_distances(fleet, phase, i, X))


def sensed_neighbors(fleet: Fleet, phase: FleetPhase, i: int, X) -> list:
    """Active agents within agent ``i``'s sensing radius, by index."""
    X = np.asarray(X, dtype=float)
    rad = fleet.agents[i].sensing_radius
    return sorted(j for j in phase.remaining if j != i and np.linalg.norm(X[i] - X[j]) <= rad)


def phi_i(fleet: Fleet, phase: FleetPhase, i: int, X, pair_weight: float = 1.0) -> float:
    """``phi_i``; ``pair_weight=2`` gives the modified ``phi~_i``."""
    fr = _frame(fleet, phase, i)
    a, spec = fleet.agents[i], fleet.spec
    X = np.asarray(X, dtype=float)
    xi = X[i]
    e = xi - a.goal
    dists = [d for _, d in agent_distances(fleet, phase, i, X)]
    if min(dists) <= 0:
        raise OutsideAgentFreeSpace(f"agent {i} outside its free space")
    kinds = [k for k, _ in agent_distances(fleet, phase, i, X)]
    total = 0.0
    for kind, d in zip(kinds, dists):
        w = pair_weight if kind.startswith("a") else 1.0
        total += w * spec.beta(d)
    return float(a.k1 * (e @ e) + a.k2 * total)


def phi_tilde_i(fleet: Fleet, phase: FleetPhase, i: int, X) -> float:
    return phi_i(fleet, phase, i, X, pair_weight=2.0)


def _field_terms(fleet: Fleet, phase: FleetPhase, i: int, X, V, neighbors):
    """``(grad, grad_dot)`` of ``phi~_i`` w.r.t. ``x_i`` and its time
    derivative along the joint motion."""
    fr = _frame(fleet, phase, i)
    a, spec = fleet.agents[i], fleet.spec
    tau, k2 = spec.tau, a.k2
    xi, vi = X[i], V[i]
    grad = 2.0 * a.k1 * (xi - a.goal)
    gdot = 2.0 * a.k1 * vi
    d0 = fr.RW2 - xi @ xi
    if not d0 > 0:
        raise OutsideAgentFreeSpace(f"agent {i} outside its workspace")
    if d0 < tau:
        b1, b2 = spec.derivatives(d0)
        grad = grad - (2.0 * k2 * b1) * xi
        gdot = gdot + (4.0 * k2 * b2 * (xi @ vi)) * xi - (2.0 * k2 * b1) * vi
    for C, R2 in ((fr.obs_c, fr.obs_R2), (fr.goal_c, fr.goal_R2)):
        if not len(R2):
            continue
        diff = xi - C
        d = np.einsum("ij,ij->i", diff, diff) - R2
        if not d.min() > 0:
            raise OutsideAgentFreeSpace(f"agent {i} inside an inflated obstacle or goal zone")
        for k in np.flatnonzero(d < tau):
            b1, b2 = spec.derivatives(d[k])
            r = diff[k]
            grad = grad + (2.0 * k2 * b1) * r
            gdot = gdot + (2.0 * k2 * b1) * vi + (4.0 * k2 * b2 * (r @ vi)) * r
    for j in neighbors:
        R2 = fr.pair_R2.get(j)
        if R2 is None:
            continue
        r = xi - X[j]
        d = r @ r - R2
        if not d > 0:
            raise OutsideAgentFreeSpace(f"agents {i} and {j} overlap in agent {i}'s frame")
        if d < tau:
            b1, b2 = spec.derivatives(d)
            dv = vi - V[j]
            # the factor 2 on the pair sum is the phi~ modification
            grad = grad + (4.0 * k2 * b1) * r
            gdot = gdot + (4.0 * k2 * b1) * dv + (8.0 * k2 * b2 * (r @ dv)) * r
    return grad, gdot


def grad_tilde_phi_i(fleet: Fleet, phase: FleetPhase, i: int, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return _field_terms(fleet, phase, i, X, np.zeros_like(X), [j for j in phase.remaining if j != i])[0]


def agent_control(fleet: Fleet, phase: FleetPhase, i: int, X, V, m_hat: float, alpha_hat: float,
                  sensed=None):
    """``(u_i, m_hat_dot, alpha_hat_dot)`` for active agent ``i``.

    ``sensed`` lists the neighbours whose states are used; by default those
    within the sensing radius. Passing every remaining agent gives the
    centralized evaluation.
    """
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    if sensed is None:
        sensed = sensed_neighbors(fleet, phase, i, X)
    a = fleet.agents[i]
    grad, gdot = _field_terms(fleet, phase, i, X, V, sorted(sensed))
    return adaptive_law(a.gains, grad, -grad, -gdot, V[i], m_hat, alpha_hat, a.plant.g)


def advance_phase(fleet: Fleet, phase: FleetPhase, X, t: float = 0.0):
    """Freeze the leader if it is within ``epsilon`` of its goal.

    Returns ``(phase, promoted)``. Raises ``ProtocolViolation`` if a
    remaining agent is outside its rebuilt free space.
    """
    X = np.asarray(X, dtype=float)
    iL = phase.leader
    if iL is None or np.linalg.norm(X[iL] - fleet.agents[iL].goal) > fleet.epsilon:
        return phase, False
    new = FleetPhase(remaining=phase.remaining[1:], frozen=phase.frozen + ((iL, tuple(X[iL].tolist())),))
    for j in new.remaining:
        bad = [(k, v) for k, v in agent_distances(fleet, new, j, X) if not v > 0]
        if bad:
            raise ProtocolViolation(f"t={t}: agent {j} outside its rebuilt free space: {bad}")
    return new, True


def frozen_spacing_violations(fleet: Fleet, phase: FleetPhase) -> list:
    """Spacing of each frozen agent against static obstacles and boundary."""
    out = []
    w, extra = fleet.world, fleet.extra
    for k, c in phase.frozen:
        r = fleet.agents[k].radius
        for j in range(w.M):
            s = np.linalg.norm(w.centers[j] - np.asarray(c)) - (w.radii[j] + r + extra)
            if not s > 0:
                out.append((f"frozen {k}", f"obstacle {j + 1}", float(s)))
        s = w.r_W - np.linalg.norm(np.asarray(c)) - (r + extra)
        if not s > 0:
            out.append((f"frozen {k}", "boundary", float(s)))
    return out


def beta_min(fleet: Fleet, X) -> float:
    """Smallest surface gap over agent pairs and agent-obstacle pairs."""
    X = np.asarray(X, dtype=float)
    radii = np.array([a.radius for a in fleet.agents])
    out = math.inf
    for i in range(fleet.N):
        for j in range(i):
            out = min(out, float(np.linalg.norm(X[i] - X[j]) - radii[i] - radii[j]))
        if fleet.world.M:
            g = np.linalg.norm(X[i] - fleet.world.centers, axis=1) - fleet.world.radii - radii[i]
            out = min(out, float(g.min()))
    return out


def fleet_clearance(fleet: Fleet, X) -> float:
    """``beta_min`` also counting the workspace boundary."""
    X = np.asarray(X, dtype=float)
    b = min(fleet.world.r_W - a.radius - float(np.linalg.norm(X[i])) for i, a in enumerate(fleet.agents))
    return min(b, beta_min(fleet, X))


def check_assumptions(fleet: Fleet) -> dict:
    """Spacing of obstacles, goals and starts with margin ``rbar`` and the
    sensing-radius condition. ``sensing`` uses the operative range
    ``sqrt(tau)``; ``sensing_literal`` the stated ``sqrt(min(rbar^2, rbar_d))``
    form, which is advisory."""
    w, eps, rb = fleet.world, fleet.epsilon, fleet.r_bar
    rM = fleet.r_M
    A = fleet.agents
    v = []

    def need(name, slack):
        if not slack > 0:
            v.append((name, float(slack)))

    for j in range(w.M):
        for k in range(j):
            need(f"obstacles {k + 1},{j + 1}",
                 np.linalg.norm(w.centers[j] - w.centers[k]) - (w.radii[j] + w.radii[k] + 2 * rM + 2 * rb))
        need(f"obstacle {j + 1}/boundary", w.r_W - np.linalg.norm(w.centers[j]) - (w.radii[j] + 2 * rM + 2 * rb))
    for i, a in enumerate(A):
        need(f"start {i}/boundary", w.r_W - np.linalg.norm(a.start) - (a.radius + 2 * rM + 2 * rb))
        need(f"goal {i}/boundary", w.r_W - np.linalg.norm(a.goal) - (a.radius + 2 * rM + eps + 2 * rb))
        for j in range(w.M):
            need(f"start {i}/obstacle {j + 1}",
                 np.linalg.norm(w.centers[j] - a.start) - (w.radii[j] + a.radius + 2 * rM + 2 * rb))
            need(f"goal {i}/obstacle {j + 1}",
                 np.linalg.norm(w.centers[j] - a.goal) - (w.radii[j] + a.radius + 2 * rM + eps + 2 * rb))
        for j, b in enumerate(A):
            if j == i:
                continue
            need(f"goal {i}/start {j}",
                 np.linalg.norm(a.goal - b.start) - (a.radius + b.radius + 2 * rM + eps + 2 * rb))
            if j < i:
                need(f"goals {j},{i}",
                     np.linalg.norm(a.goal - b.goal) - (a.radius + b.radius + 2 * rM + 2 * eps + 2 * rb))
                need(f"starts {j},{i}", np.linalg.norm(a.start - b.start) - (a.radius + b.radius + 2 * rM + 2 * rb))
    sensing, literal = [], []
    base = 2 * rM + 2 * rb
    for i, a in enumerate(A):
        for j, b in enumerate(A):
            if j == i:
                continue
            reach = a.radius + b.radius + base
            if not a.sensing_radius > math.sqrt(fleet.spec.tau) + reach:
                sensing.append((i, j))
            if not a.sensing_radius > math.sqrt(min(rb**2, fleet.r_bar_d)) + reach:
                literal.append((i, j))
    return {
        "spacing_ok": not v,
        "spacing_violations": v,
        "sensing_ok": not sensing,
        "sensing_violations": sensing,
        "sensing_literal_ok": not literal,
        "tau": fleet.spec.tau,
        "r_bar_d": fleet.r_bar_d,
        "d_star_star": fleet.d_star_star,
        "ok": not v and not sensing,
    }


def random_fleet_layout(rng: np.random.Generator, N: int, M: int, r_W: float, agent_radius: float = 2.0,
                        obstacle_radius: float = 2.0, r_bar: float = 4.0, epsilon: float = 0.1,
                        margin: float = 1.0, n: int = 2, max_tries: int = 1_000_000):
    """Rejection-sample goals, starts and obstacles meeting the fleet spacing
    conditions with an extra ``margin`` on every inequality.

    Returns ``(world, starts, goals)``.
    """
    rM = agent_radius
    base = 2 * rM + 2 * r_bar + margin
    ra, ro = agent_radius, obstacle_radius
    goals, starts, obs = [], [], []
    tries = 0

    def draw(lim):
        nonlocal tries
        while True:
            tries += 1
            if tries > max_tries:
                raise RuntimeError("could not place the fleet layout")
            p = rng.uniform(-lim, lim, n)
            if np.linalg.norm(p) < lim:
                return p

    def far(p, pts, gap):
        return all(np.linalg.norm(p - q) > gap for q in pts)

    while len(goals) < N:
        p = draw(r_W - ra - base - epsilon)
        if far(p, goals, 2 * ra + base + 2 * epsilon):
            goals.append(p)
    while len(starts) < N:
        p = draw(r_W - ra - base)
        if far(p, starts, 2 * ra + base) and far(p, goals, 2 * ra + base + epsilon):
            starts.append(p)
    while len(obs) < M:
        p = draw(r_W - ro - base)
        if (far(p, obs, 2 * ro + base) and far(p, starts, ro + ra + base)
                and far(p, goals, ro + ra + base + epsilon)):
            obs.append(p)
    world = World(r_W, np.array(obs).reshape(-1, n), np.full(M, ro))
    return world, np.array(starts), np.array(goals)
