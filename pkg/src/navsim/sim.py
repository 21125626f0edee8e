"""Fixed-step closed-loop simulation, events, metrics and trajectory logs.

The plant and the estimators are integrated together with classical RK4;
the controller is evaluated inside every stage, so the discrete system is a
consistent approximation of the continuous closed loop.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from navsim.barrier import tau_for_world
from navsim.controller import (ControllerGains, SingularJacobian, adaptive_law, check_gains, star_reference)
from navsim.multiagent import (Fleet, OutsideAgentFreeSpace, ProtocolViolation, advance_phase, agent_control,
                               agent_distances, beta_min, fleet_clearance)
from navsim.navfield import NavField, OutsideFreeSpace
from navsim.plant import PlantParams, plant_derivative
from navsim.starmap import InvalidMap, StarMap
from navsim.world import World

VARIANTS = ("single_sphere", "single_sphere_disturbed", "single_star", "fleet")


class NonFiniteState(RuntimeError):
    pass


def rk4_step(f, y, t: float, h: float, k1=None):
    """One classical RK4 step of ``y' = f(t, y)``; ``k1`` may be supplied
    when the caller already evaluated ``f(t, y)``."""
    if not h > 0:
        raise ValueError("step must be positive")
    if k1 is None:
        k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + (0.5 * h) * k1)
    k3 = f(t + 0.5 * h, y + (0.5 * h) * k2)
    k4 = f(t + h, y + h * k3)
    out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(f"non-finite state at t={t + h}: y={y!r}")
    return out


@dataclass(eq=False)
class Scenario:
    """Declarative experiment. Exactly one of ``world``/``smap``/``fleet``
    is set, matching ``variant``."""

    variant: str
    world: World | None = None
    smap: StarMap | None = None
    fleet: Fleet | None = None
    x0: np.ndarray | None = None
    v0: np.ndarray | None = None
    x_d: np.ndarray | None = None
    gains: ControllerGains = field(default_factory=ControllerGains)
    k1: float = 0.04
    k2: float = 5.0
    tau: float | None = None
    plant: PlantParams | None = None
    m_hat0: float = 0.5
    alpha_hat0: float = 0.0
    h: float = 1e-3
    T: float = 100.0
    seed: int = 0
    epsilon: float = 0.1
    stop_on_converge: bool = False
    name: str = "scenario"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not self.h > 0 or not self.T > self.h:
            raise ValueError("need h > 0 and T > h")
        if self.variant == "fleet":
            if self.fleet is None:
                raise ValueError("fleet scenario needs a fleet")
            return
        for name in ("x0", "x_d"):
            if getattr(self, name) is None:
                raise ValueError(f"{name} required")
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.v0 = np.zeros_like(self.x0) if self.v0 is None else np.asarray(self.v0, dtype=float)
        if self.plant is None:
            raise ValueError("plant parameters required")
        if self.variant == "single_star":
            if self.smap is None:
                raise ValueError("star scenario needs a star map")
        elif self.world is None:
            raise ValueError("sphere scenario needs a world")


@dataclass
class TrajectoryLog:
    columns: list
    data: np.ndarray
    events: list = field(default_factory=list)  # (t, kind, info)
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def block(self, prefix: str, n: int) -> np.ndarray:
        return np.column_stack([self.column(f"{prefix}{k + 1}") for k in range(n)])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def event_times(self, kind: str) -> list:
        return [e[0] for e in self.events if e[1] == kind]

    def to_csv(self, path, decimate: int = 1):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            rows = self.data[::decimate]
            if decimate > 1 and len(self.data) and (len(self.data) - 1) % decimate:
                rows = np.vstack([rows, self.data[-1:]])
            for row in rows:
                w.writerow([format(v, ".17g") for v in row])

    @classmethod
    def from_csv(cls, path) -> "TrajectoryLog":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            cols = next(r)
            data = np.array([[float(v) for v in row] for row in r], dtype=float).reshape(-1, len(cols))
        return cls(cols, data)


def prepare_field(scenario: Scenario):
    """``(field, report, d**)`` for a single-robot scenario."""
    if scenario.variant == "single_star":
        smap = scenario.smap
        y_d = smap.H(scenario.x_d)
        spec, report, dss = tau_for_world(smap.world, y_d, scenario.k1, scenario.k2, scenario.tau)
        return NavField(smap.world, spec, y_d, scenario.k1, scenario.k2), report, dss
    spec, report, dss = tau_for_world(scenario.world, scenario.x_d, scenario.k1, scenario.k2, scenario.tau)
    return NavField(scenario.world, spec, scenario.x_d, scenario.k1, scenario.k2), report, dss


class _SingleSystem:
    """Closed loop ``y = (x, v, m_hat, alpha_hat)`` for one robot."""

    def __init__(self, scenario: Scenario, field: NavField):
        self.sc, self.field = scenario, field
        self.n = len(scenario.x0)
        self.star = scenario.variant == "single_star"
        self.g = scenario.plant.g
        self.last_u = None
        self.last_vd = None
        self.last_grad = None

    def __call__(self, t, y):
        n = self.n
        x, v, mh, ah = y[:n], y[n:2 * n], y[2 * n], y[2 * n + 1]
        if self.star:
            ff_grad, v_d, vdd = star_reference(self.field, self.sc.smap, x, v)
        else:
            grad, hess = self.field.grad_hess(x)
            ff_grad, v_d, vdd = grad, -grad, -hess @ v
        u, m_dot, a_dot = adaptive_law(self.sc.gains, ff_grad, v_d, vdd, v, mh, ah, self.g)
        xd, vd = plant_derivative(self.sc.plant, x, v, u, t)
        self.last_u, self.last_vd = u, v_d
        out = np.empty_like(y)
        out[:n] = xd
        out[n:2 * n] = vd
        out[2 * n] = m_dot
        out[2 * n + 1] = a_dot
        return out


def _single_diagnostics(sc: Scenario, field: NavField, x, v, mh, ah, v_d):
    """``(V, clearance, xi)``; uses the true mass and friction bound."""
    m, alpha, g = sc.plant.m, sc.plant.alpha_true, sc.gains
    if sc.variant == "single_star":
        y = sc.smap.H(x)
        grad = field.grad_phi(y)
        clear = sc.smap.clearance(x)
    else:
        y = x
        grad = -v_d
        clear = sc.world.clearance(x)
    e_v = v - v_d
    V = (g.k_phi * field.phi_normalized(y) + 0.5 * m * (e_v @ e_v)
         + 0.75 / g.k_alpha * (ah - alpha) ** 2 + 0.5 / g.k_m * (mh - m) ** 2)
    xi = math.sqrt(grad @ grad + e_v @ e_v + (mh - m) ** 2 + (ah - alpha) ** 2)
    return V, clear, xi


def run(scenario: Scenario) -> TrajectoryLog:
    if scenario.variant == "fleet":
        return run_fleet(scenario)
    return run_single(scenario)


def run_single(sc: Scenario) -> TrajectoryLog:
    field_, report, dss = prepare_field(sc)
    check_gains(sc.gains, sc.plant.alpha_true)
    n = len(sc.x0)
    inside = sc.smap.in_free_space(sc.x0) if sc.variant == "single_star" else sc.world.in_free_space(sc.x0)
    if not inside:
        raise ValueError("initial position outside the free space")
    sys_ = _SingleSystem(sc, field_)
    steps = int(round(sc.T / sc.h))
    cols = (["t"] + [f"x{k + 1}" for k in range(n)] + [f"v{k + 1}" for k in range(n)]
            + [f"u{k + 1}" for k in range(n)] + ["m_hat", "alpha_hat", "V", "min_clearance", "xi"])
    data = np.full((steps + 1, len(cols)), np.nan)
    events = []
    y = np.concatenate([sc.x0, sc.v0, [sc.m_hat0, sc.alpha_hat0]])
    converged = False
    last = steps
    for k in range(steps + 1):
        t = k * sc.h
        x, v = y[:n], y[n:2 * n]
        try:
            k1 = sys_(t, y)
        except (OutsideFreeSpace, InvalidMap) as exc:
            events.append((t, "collision", {"detail": str(exc)}))
            last = k - 1
            break
        V, clear, xi = _single_diagnostics(sc, field_, x, v, y[2 * n], y[2 * n + 1], sys_.last_vd)
        row = data[k]
        row[0] = t
        row[1:1 + 2 * n] = y[:2 * n]
        row[1 + 2 * n:1 + 3 * n] = sys_.last_u
        row[1 + 3 * n:] = (y[2 * n], y[2 * n + 1], V, clear, xi)
        if not clear > 0:
            events.append((t, "collision", {"clearance": clear}))
            last = k
            break
        if not converged and np.linalg.norm(x - sc.x_d) <= sc.epsilon and np.linalg.norm(v) <= sc.epsilon:
            converged = True
            events.append((t, "converged", {}))
            if sc.stop_on_converge:
                last = k
                break
        if k == steps:
            break
        try:
            y = rk4_step(sys_, y, t, sc.h, k1)
        except (OutsideFreeSpace, InvalidMap) as exc:
            events.append((t + sc.h, "collision", {"detail": str(exc)}))
            last = k
            break
        except SingularJacobian as exc:
            events.append((t + sc.h, "singular_map", {"detail": str(exc)}))
            last = k
            break
    else:
        last = steps
    if not any(e[1] == "collision" for e in events) and last == steps:
        events.append((steps * sc.h, "horizon", {}))
    meta = {"variant": sc.variant, "n": n, "tau": field_.spec.tau, "r_bar": report.r_bar,
            "r_bar_d": report.r_bar_d, "d_star_star": dss, "goal": sc.x_d.tolist(), "h": sc.h, "T": sc.T,
            "m": sc.plant.m, "alpha_true": sc.plant.alpha_true, "epsilon": sc.epsilon, "seed": sc.seed}
    return TrajectoryLog(cols, data[: last + 1], events, meta)


class _FleetSystem:
    def __init__(self, sc: Scenario):
        self.sc = sc
        self.fleet = sc.fleet
        self.n = sc.fleet.n
        self.phase = sc.fleet.initial_phase()
        self.last_u = None

    def __call__(self, t, y):
        fleet, n, N = self.fleet, self.n, self.fleet.N
        Y = y.reshape(N, 2 * n + 2)
        X, Vel = Y[:, :n], Y[:, n:2 * n]
        out = np.zeros_like(Y)
        U = np.zeros((N, n))
        for i in self.phase.remaining:
            a = fleet.agents[i]
            u, m_dot, a_dot = agent_control(fleet, self.phase, i, X, Vel, Y[i, 2 * n], Y[i, 2 * n + 1])
            xd, vd = plant_derivative(a.plant, X[i], Vel[i], u, t)
            out[i, :n] = xd
            out[i, n:2 * n] = vd
            out[i, 2 * n] = m_dot
            out[i, 2 * n + 1] = a_dot
            U[i] = u
        self.last_u = U
        return out.reshape(-1)


def run_fleet(sc: Scenario) -> TrajectoryLog:
    fleet = sc.fleet
    N, n = fleet.N, fleet.n
    for a in fleet.agents:
        check_gains(a.gains, a.plant.alpha_true)
    sys_ = _FleetSystem(sc)
    w = 2 * n + 2
    y = np.concatenate([np.concatenate([a.start, np.zeros(n), [a.m_hat0, a.alpha_hat0]]) for a in fleet.agents])
    for i in range(N):
        bad = [(k, v) for k, v in agent_distances(fleet, sys_.phase, i, y.reshape(N, w)[:, :n]) if not v > 0]
        if bad:
            raise ValueError(f"agent {i} starts outside its free space: {bad}")
    steps = int(round(sc.T / sc.h))
    cols = ["t"]
    for i in range(N):
        cols += ([f"a{i}_x{k + 1}" for k in range(n)] + [f"a{i}_v{k + 1}" for k in range(n)]
                 + [f"a{i}_u{k + 1}" for k in range(n)] + [f"a{i}_m_hat", f"a{i}_alpha_hat"])
    cols += ["leader", "min_clearance", "beta_min"]
    rows = []
    events = []
    conv_times = {}
    for k in range(steps + 1):
        t = k * sc.h
        Y = y.reshape(N, w)
        X = Y[:, :n]
        # promotions happen between steps, before the next control evaluation
        while True:
            try:
                new, promoted = advance_phase(fleet, sys_.phase, X, t)
            except ProtocolViolation as exc:
                events.append((t, "protocol_violation", {"detail": str(exc)}))
                new, promoted = None, False
            if new is None:
                break
            if not promoted:
                break
            iL = sys_.phase.leader
            Y[iL, n:2 * n] = 0.0
            conv_times[iL] = t
            events.append((t, "phase_promotion", {"agent": iL}))
            sys_.phase = new
            if new.done:
                break
        if events and events[-1][1] == "protocol_violation":
            break
        bmin = beta_min(fleet, X)
        clear = fleet_clearance(fleet, X)
        if sys_.phase.done:
            U = np.zeros((N, n))
            k1 = None
        else:
            try:
                k1 = sys_(t, y)
            except OutsideAgentFreeSpace as exc:
                events.append((t, "collision", {"detail": str(exc)}))
                break
            U = sys_.last_u
        row = [t]
        for i in range(N):
            row += list(Y[i, :2 * n]) + list(U[i]) + [Y[i, 2 * n], Y[i, 2 * n + 1]]
        leader = sys_.phase.leader
        row += [float(-1 if leader is None else leader), clear, bmin]
        rows.append(row)
        if not bmin > 0 or not clear > 0:
            events.append((t, "collision", {"beta_min": bmin, "clearance": clear}))
            break
        if sys_.phase.done:
            events.append((t, "converged", {}))
            break
        if k == steps:
            events.append((t, "horizon", {}))
            break
        try:
            y = rk4_step(sys_, y, t, sc.h, k1)
        except OutsideAgentFreeSpace as exc:
            events.append((t + sc.h, "collision", {"detail": str(exc)}))
            break
    meta = {"variant": "fleet", "n": n, "N": N, "tau": fleet.spec.tau, "priority": list(fleet.priority),
            "epsilon": fleet.epsilon, "h": sc.h, "T": sc.T, "seed": sc.seed,
            "convergence_times": {str(i): t for i, t in conv_times.items()},
            "goals": [a.goal.tolist() for a in fleet.agents], "radii": [a.radius for a in fleet.agents]}
    return TrajectoryLog(cols, np.array(rows, dtype=float).reshape(-1, len(cols)), events, meta)


def metrics(log: TrajectoryLog, v_tol: float = 1e-6) -> dict:
    """Run summary: safety, terminal error, effort, Lyapunov descent,
    convergence times."""
    meta = log.meta
    n = meta.get("n", 2)
    kinds = [e[1] for e in log.events]
    out = {
        "rows": int(len(log.data)),
        "events": [[float(t), k, info] for t, k, info in log.events],
        "collision": "collision" in kinds,
        "converged": "converged" in kinds,
        "min_clearance": float(np.min(log.column("min_clearance"))) if len(log.data) else math.nan,
    }
    if meta.get("variant") == "fleet":
        N = meta["N"]
        U = [np.linalg.norm(log.block(f"a{i}_u", n), axis=1) for i in range(N)]
        out["max_u"] = float(max(u.max() for u in U)) if len(log.data) else math.nan
        out["beta_min"] = float(np.min(log.column("beta_min"))) if len(log.data) else math.nan
        out["promotions"] = kinds.count("phase_promotion")
        out["promotion_order"] = [e[2]["agent"] for e in log.events if e[1] == "phase_promotion"]
        out["convergence_times"] = meta.get("convergence_times", {})
        errs = []
        for i, goal in enumerate(meta["goals"]):
            xi = log.block(f"a{i}_x", n)[-1]
            errs.append(float(np.linalg.norm(xi - np.asarray(goal))))
        out["terminal_errors"] = errs
        return out
    X = log.block("x", n)
    Vel = log.block("v", n)
    goal = np.asarray(meta["goal"])
    err = np.linalg.norm(X - goal, axis=1)
    V = log.column("V")
    dV = np.diff(V)
    ah = log.column("alpha_hat")
    out.update({
        "terminal_error": float(err[-1]),
        "terminal_speed": float(np.linalg.norm(Vel[-1])),
        "max_u": float(np.max(np.linalg.norm(log.block("u", n), axis=1))),
        "v_violations": int(np.count_nonzero(dV > v_tol)),
        "v_violation_fraction": float(np.count_nonzero(dV > v_tol) / max(len(dV), 1)),
        "alpha_hat_monotone": bool(np.all(np.diff(ah) >= 0)),
        "terminal_m_hat": float(log.column("m_hat")[-1]),
        "max_xi": float(np.max(log.column("xi"))),
        "convergence_time": next((float(t) for t, k, _ in log.events if k == "converged"), None),
    })
    return out
