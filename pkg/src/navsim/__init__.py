"""Adaptive potential-field navigation for robots with uncertain
second-order dynamics: sphere worlds, star worlds and prioritized fleets."""

from navsim.barrier import BarrierSpec, certify, saddle_threshold, select_tau, tau_for_world
from navsim.controller import ControllerGains, EstimatorState, control, star_control
from navsim.navfield import NavField, find_critical_points
from navsim.plant import DisturbanceModel, FrictionModel, PlantParams
from navsim.sim import Scenario, TrajectoryLog, metrics, rk4_step, run
from navsim.starmap import StarMap, StarObstacle, validate_map
from navsim.world import World, random_world

__all__ = [
    "BarrierSpec", "certify", "saddle_threshold", "select_tau", "tau_for_world",
    "ControllerGains", "EstimatorState", "control", "star_control",
    "NavField", "find_critical_points",
    "DisturbanceModel", "FrictionModel", "PlantParams",
    "Scenario", "TrajectoryLog", "metrics", "rk4_step", "run",
    "StarMap", "StarObstacle", "validate_map",
    "World", "random_world",
]
