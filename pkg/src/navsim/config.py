"""Scenario configuration: strict JSON parsing, overrides, canonical form.

Lengths are in metres, time in seconds, angles in radians, masses in kg.
Unknown keys anywhere in the document are rejected.
"""
from __future__ import annotations

import dataclasses
import json
import types
import typing
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    pass


@dataclass
class ObstacleConfig:
    center: list[float]
    radius: float


@dataclass
class RandomWorldConfig:
    count: int
    seed: int | None = None  # None: use sim.seed
    inflated_radius_range: list[float] = field(default_factory=lambda: [0.25, 0.75])
    rbar: float = 0.5
    n: int = 2
    keep_out: list[list[float]] = field(default_factory=list)


@dataclass
class WorldConfig:
    r_W: float
    r: float = 0.0
    obstacles: list[ObstacleConfig] = field(default_factory=list)
    random: RandomWorldConfig | None = None


@dataclass
class StarObstacleConfig:
    center: list[float]
    shape: dict
    target_radius: float
    margin: float


@dataclass
class StarWorldConfig:
    r_W: float
    obstacles: list[StarObstacleConfig]
    r: float = 0.0


@dataclass
class AgentConfig:
    radius: float
    start: list[float]
    goal: list[float]
    sensing_radius: float = 20.0


@dataclass
class RandomFleetConfig:
    agents: int
    obstacles: int
    seed: int | None = None
    agent_radius: float = 2.0
    obstacle_radius: float = 2.0
    margin: float = 1.0
    sensing_radius: float = 20.0
    n: int = 2


@dataclass
class FleetConfig:
    r_W: float
    obstacles: list[ObstacleConfig] = field(default_factory=list)
    agents: list[AgentConfig] = field(default_factory=list)
    random: RandomFleetConfig | None = None
    priority: list[int] | None = None
    epsilon: float = 0.1
    r_bar: float = 4.0


@dataclass
class FrictionConfig:
    variant: str = "zero"
    c: float = 0.0
    alpha: float = 0.0


@dataclass
class DisturbanceConfig:
    variant: str = "none"
    d_bar: float = 0.0
    seed: int = 0


@dataclass
class PlantConfig:
    mass: float = 1.0
    gravity: list[float] | None = None  # None: 0 in 2-D, (0, 0, -9.81) in 3-D
    friction: FrictionConfig = field(default_factory=FrictionConfig)
    disturbance: DisturbanceConfig = field(default_factory=DisturbanceConfig)
    alpha_true: float | None = None


@dataclass
class ControllerConfig:
    k1: float = 0.04
    k2: float = 5.0
    k_phi: float = 1.0
    k_v: float = 20.0
    k_m: float = 0.01
    k_alpha: float = 0.01
    sigma_m: float = 0.0
    sigma_alpha: float = 0.0
    tau: float | None = None
    m_hat0: float = 0.5
    alpha_hat0: float = 0.0


@dataclass
class SimConfig:
    start: list[float] | None = None
    goal: list[float] | None = None
    velocity: list[float] | None = None
    step: float = 1e-3
    horizon: float = 100.0
    seed: int = 0
    epsilon: float = 0.1
    stop_on_converge: bool = False
    variant: str | None = None


@dataclass
class OutputConfig:
    name: str = "run"
    dir: str | None = None
    decimate: int = 1
    svg: bool = True


@dataclass
class Config:
    plant: PlantConfig = field(default_factory=PlantConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    world: WorldConfig | None = None
    star_world: StarWorldConfig | None = None
    fleet: FleetConfig | None = None

    def __post_init__(self):
        present = [k for k in ("world", "star_world", "fleet") if getattr(self, k) is not None]
        if len(present) != 1:
            raise ConfigError(f"exactly one of world/star_world/fleet required, got {present or 'none'}")


def _convert(tp, value, path):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(inner[0], value, path)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list")
        return [_convert(args[0], v, f"{path}[{i}]") for i, v in enumerate(value)]
    if tp is dict:
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected an object")
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    raise ConfigError(f"{path}: unsupported type {tp}")


def _build(cls, data, path="config"):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {unknown}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kwargs[f.name] = _convert(hints[f.name], data[f.name], f"{path}.{f.name}")
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(f"{path}: missing required key {f.name!r}")
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_config(data: dict) -> Config:
    return _build(Config, data)


def apply_overrides(data: dict, overrides) -> dict:
    """Apply ``section.key=value`` overrides; values are parsed as JSON when
    possible, otherwise taken as strings."""
    data = json.loads(json.dumps(data))
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            if node.get(p) is None:
                node[p] = {}
            node = node[p]
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = value
    return data


def load_config(path, overrides=()) -> Config:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc}") from exc
    return parse_config(apply_overrides(data, overrides))


def to_dict(cfg: Config) -> dict:
    """Canonical dict: every field present, ``None`` sections dropped."""
    def strip(obj):
        if isinstance(obj, dict):
            return {k: strip(v) for k, v in obj.items() if v is not None}
        if isinstance(obj, list):
            return [strip(v) for v in obj]
        return obj

    return strip(dataclasses.asdict(cfg))


def dumps(cfg: Config) -> str:
    return json.dumps(to_dict(cfg), sort_keys=True, indent=2)


# --- scenario construction ------------------------------------------------

def variant_of(cfg: Config) -> str:
    if cfg.fleet is not None:
        v = "fleet"
    elif cfg.star_world is not None:
        v = "single_star"
    elif cfg.plant.disturbance.variant != "none":
        v = "single_sphere_disturbed"
    else:
        v = "single_sphere"
    if cfg.sim.variant is not None and cfg.sim.variant != v:
        raise ConfigError(f"sim.variant {cfg.sim.variant!r} does not match the configured sections ({v})")
    return v


def _dimension(cfg: Config) -> int:
    if cfg.world is not None and cfg.world.random is not None:
        return cfg.world.random.n
    if cfg.fleet is not None and cfg.fleet.random is not None:
        return cfg.fleet.random.n
    for vec in (cfg.sim.start, cfg.sim.goal):
        if vec is not None:
            return len(vec)
    if cfg.fleet is not None and cfg.fleet.agents:
        return len(cfg.fleet.agents[0].start)
    return 2


def build_plant(cfg: Config, n: int):
    from navsim.plant import DisturbanceModel, FrictionModel, PlantParams

    p = cfg.plant
    g = p.gravity if p.gravity is not None else ([0.0] * n if n == 2 else [0.0, 0.0, -9.81])
    if len(g) != n:
        raise ConfigError("plant.gravity dimension mismatch")
    fr = FrictionModel(p.friction.variant, p.friction.c, p.friction.alpha)
    dist = DisturbanceModel(p.disturbance.variant, p.disturbance.d_bar, p.disturbance.seed, n)
    return PlantParams(p.mass, np.array(g, dtype=float), fr, dist, p.alpha_true)


def build_gains(cfg: Config):
    from navsim.controller import ControllerGains

    c = cfg.controller
    return ControllerGains(c.k_phi, c.k_v, c.k_m, c.k_alpha, c.sigma_m, c.sigma_alpha)


def build_world(cfg: Config):
    from navsim.world import World, random_world

    w = cfg.world
    s = cfg.sim
    if w.random is not None:
        if w.obstacles:
            raise ConfigError("world: give either obstacles or random, not both")
        rc = w.random
        keep = [list(p) for p in rc.keep_out]
        for p in (s.start, s.goal):
            if p is not None and list(p) not in keep:
                keep.append(list(p))
        seed = rc.seed if rc.seed is not None else s.seed
        return random_world(np.random.default_rng(seed), rc.count, w.r_W, tuple(rc.inflated_radius_range),
                            w.r, rc.rbar, rc.n, keep)
    n = _dimension(cfg)
    centers = np.array([o.center for o in w.obstacles], dtype=float).reshape(-1, n)
    radii = np.array([o.radius for o in w.obstacles], dtype=float)
    return World(w.r_W, centers, radii, w.r)


def build_star_map(cfg: Config):
    from navsim.starmap import StarMap, StarObstacle, make_shape

    sw = cfg.star_world
    obs = [StarObstacle(np.array(o.center, float), make_shape(o.shape), o.target_radius, o.margin)
           for o in sw.obstacles]
    return StarMap(sw.r_W, obs, sw.r, _dimension(cfg))


def build_fleet(cfg: Config):
    from navsim.multiagent import Fleet, FleetAgent, random_fleet_layout
    from navsim.world import World

    fc, c = cfg.fleet, cfg.controller
    if fc.random is not None:
        if fc.agents or fc.obstacles:
            raise ConfigError("fleet: give either agents/obstacles or random, not both")
        rc = fc.random
        seed = rc.seed if rc.seed is not None else cfg.sim.seed
        world, starts, goals = random_fleet_layout(
            np.random.default_rng(seed), rc.agents, rc.obstacles, fc.r_W, rc.agent_radius, rc.obstacle_radius,
            fc.r_bar, fc.epsilon, rc.margin, rc.n)
        specs = [(rc.agent_radius, s, g, rc.sensing_radius) for s, g in zip(starts, goals)]
        n = rc.n
    else:
        n = _dimension(cfg)
        centers = np.array([o.center for o in fc.obstacles], dtype=float).reshape(-1, n)
        world = World(fc.r_W, centers, np.array([o.radius for o in fc.obstacles], dtype=float))
        specs = [(a.radius, a.start, a.goal, a.sensing_radius) for a in fc.agents]
    plant, gains = build_plant(cfg, n), build_gains(cfg)
    agents = [FleetAgent(r, np.asarray(s, float), np.asarray(g, float), plant, gains, sr, c.k1, c.k2, c.m_hat0,
                         c.alpha_hat0) for r, s, g, sr in specs]
    return Fleet(world, agents, fc.epsilon, fc.r_bar, None if fc.priority is None else tuple(fc.priority), c.tau)


def build_scenario(cfg: Config):
    from navsim.sim import Scenario

    variant = variant_of(cfg)
    s, c = cfg.sim, cfg.controller
    common = dict(variant=variant, k1=c.k1, k2=c.k2, tau=c.tau, gains=build_gains(cfg), m_hat0=c.m_hat0,
                  alpha_hat0=c.alpha_hat0, h=s.step, T=s.horizon, seed=s.seed, epsilon=s.epsilon,
                  stop_on_converge=s.stop_on_converge, name=cfg.output.name)
    if variant == "fleet":
        return Scenario(fleet=build_fleet(cfg), **common)
    if s.start is None or s.goal is None:
        raise ConfigError("sim.start and sim.goal are required for single-robot scenarios")
    n = len(s.start)
    plant = build_plant(cfg, n)
    if variant == "single_star":
        return Scenario(smap=build_star_map(cfg), x0=s.start, v0=s.velocity, x_d=s.goal, plant=plant, **common)
    return Scenario(world=build_world(cfg), x0=s.start, v0=s.velocity, x_d=s.goal, plant=plant, **common)
