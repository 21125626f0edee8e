"""Simulation-side robot dynamics: mass, friction, gravity, disturbance.

Nothing here is visible to the controller.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FrictionModel:
    """Friction force ``f(x, v)``.

    variant ``"zero"``; ``"viscous"`` with ``f = c v`` (``c`` scalar or
    matrix); ``"paper_sinusoidal"`` with
    ``f = alpha/16 * sin(0.5 (x1 + x2)) * diag(exp(-|v_i|) + 1) v``.
    """

    variant: str = "zero"
    c: object = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.variant not in ("zero", "viscous", "paper_sinusoidal"):
            raise ValueError(f"unknown friction variant {self.variant!r}")

    def __call__(self, x, v) -> np.ndarray:
        return friction_eval(self, x, v)

    def bound(self) -> float:
        """Tightest constant ``a`` with ``|f(x, v)| <= a |v|`` for this model."""
        if self.variant == "zero":
            return 0.0
        if self.variant == "viscous":
            return float(np.linalg.norm(np.atleast_2d(self.c), 2)) if np.ndim(self.c) else abs(float(self.c))
        # |sin| <= 1 and each diagonal entry of F(v) is at most 2
        return self.alpha / 8.0


def friction_eval(model: FrictionModel, x, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if model.variant == "zero":
        return np.zeros_like(v)
    if model.variant == "viscous":
        c = np.asarray(model.c, dtype=float)
        return c @ v if c.ndim == 2 else c * v
    # sgn(0) = 0 keeps F continuous with value 2 at v_i = 0; exp(-sgn(v)v) = exp(-|v|)
    s = math.sin(0.5 * (x[0] + x[1]))
    return (model.alpha / 16.0 * s) * (np.exp(-np.abs(v)) + 1.0) * v


@dataclass(frozen=True)
class DisturbanceModel:
    """Additive disturbance ``d(x, v, t)``.

    ``"paper_sinusoid"`` is ``2 [sin(0.5 t + pi/3), cos(0.4 t - pi/4)]`` (zero
    beyond the second component in 3-D). ``"bounded_random"`` is a seeded sum
    of random sinusoids clamped to norm ``d_bar``; it is a deterministic
    function of ``t`` so RK4 stages see a consistent signal.
    """

    variant: str = "none"
    d_bar: float = 0.0
    seed: int = 0
    n: int = 2
    _freqs: np.ndarray = field(default=None, repr=False, compare=False)
    _phases: np.ndarray = field(default=None, repr=False, compare=False)
    _amps: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.variant not in ("none", "paper_sinusoid", "bounded_random"):
            raise ValueError(f"unknown disturbance variant {self.variant!r}")
        if self.variant == "bounded_random":
            rng = np.random.default_rng(self.seed)
            k = 4
            object.__setattr__(self, "_freqs", rng.uniform(0.05, 2.0, (k, self.n)))
            object.__setattr__(self, "_phases", rng.uniform(0, 2 * np.pi, (k, self.n)))
            object.__setattr__(self, "_amps", rng.uniform(0.2, 1.0, (k, self.n)) * self.d_bar / k)

    @property
    def bound(self) -> float:
        if self.variant == "none":
            return 0.0
        if self.variant == "paper_sinusoid":
            return 2.0 * math.sqrt(2.0)
        return self.d_bar

    def __call__(self, x, v, t: float) -> np.ndarray:
        if self.variant == "none":
            return np.zeros(len(v))
        if self.variant == "paper_sinusoid":
            out = np.zeros(len(v))
            out[0] = 2.0 * math.sin(0.5 * t + math.pi / 3)
            out[1] = 2.0 * math.cos(0.4 * t - math.pi / 4)
            return out
        out = (self._amps * np.sin(self._freqs * t + self._phases)).sum(axis=0)
        norm = np.linalg.norm(out)
        if norm > self.d_bar:
            out *= self.d_bar / norm
        return out


@dataclass(frozen=True, eq=False)
class PlantParams:
    m: float
    g: np.ndarray
    friction: FrictionModel = FrictionModel()
    disturbance: DisturbanceModel = DisturbanceModel()
    alpha_true: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "g", np.asarray(self.g, dtype=float))
        if self.m <= 0:
            raise ValueError("mass must be positive")
        if self.alpha_true is None:
            object.__setattr__(self, "alpha_true", self.friction.bound())
        if self.alpha_true < 0:
            raise ValueError("alpha_true must be nonnegative")


def friction_bound_certify(model: FrictionModel, alpha_true: float, samples: int = 20_000,
                           region: float = 20.0, n: int = 2, seed: int = 0):
    """Monte-Carlo worst ratio ``|f(x, v)| / |v|`` over a box of half-width
    ``region``; returns ``(ratio <= alpha_true, ratio)``."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = rng.uniform(-region, region, n)
        # mix of scales so the exp(-|v|) factor is exercised near its maximum
        v = rng.uniform(-1, 1, n) * 10.0 ** rng.uniform(-4, 1)
        nv = np.linalg.norm(v)
        if nv == 0:
            continue
        worst = max(worst, float(np.linalg.norm(friction_eval(model, x, v)) / nv))
    return worst <= alpha_true, worst


def plant_derivative(params: PlantParams, x, v, u, t: float):
    """``(x_dot, v_dot)`` of ``m v_dot + f(x, v) + m g + d(x, v, t) = u``."""
    f = friction_eval(params.friction, x, v)
    d = params.disturbance(x, v, t)
    return np.array(v, dtype=float), (u - f - d) / params.m - params.g
