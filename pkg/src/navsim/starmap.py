"""Star-shaped obstacles and a local diffeomorphism onto a sphere world.

Each obstacle j has centre ``p_j`` and a radial boundary function
``rho_j`` over unit directions. Inside the influence shell
``rho_j <= |x - p_j| <= rho_j + mu_j`` points are moved radially:

    H(x) = p_j + theta * (s - sigma(w) * (rho_j(theta) - rbar_j)),
    s = |x - p_j|, theta = (x - p_j) / s, w = (s - rho_j(theta)) / mu_j,

with ``sigma = 1 - smoothstep`` (1 on the boundary, 0 at the outer edge).
The boundary lands on the sphere of radius ``rbar_j``; outside all shells
``H`` is the identity. Directions are preserved, so ``H`` is a
diffeomorphism iff the new radius is increasing in ``s``, which
``validate_map`` checks through ``det J_H``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev
from scipy.interpolate import CubicSpline

from navsim.barrier import smoothstep, smoothstep_prime
from navsim.world import World


class Circle:
    def __init__(self, radius: float):
        self.radius_value = float(radius)
        self.rho_min = self.rho_max = self.radius_value

    def radius(self, u) -> float:
        return self.radius_value

    def radius_grad(self, u) -> np.ndarray:
        return np.zeros(len(u))

    def to_dict(self):
        return {"shape": "circle", "radius": self.radius_value}


class StarPolygon:
    """Smooth 2-D star: ``rho(phi) = rho0 (1 + amplitude cos(frequency (phi - phase)))``."""

    def __init__(self, rho0: float, amplitude: float, frequency: int, phase: float = 0.0):
        if not 0 <= amplitude < 1:
            raise ValueError("amplitude must be in [0, 1)")
        self.rho0, self.amplitude, self.frequency, self.phase = float(rho0), float(amplitude), int(frequency), float(phase)
        self.rho_min = self.rho0 * (1 - self.amplitude)
        self.rho_max = self.rho0 * (1 + self.amplitude)

    def radius(self, u) -> float:
        a = math.atan2(u[1], u[0])
        return self.rho0 * (1 + self.amplitude * math.cos(self.frequency * (a - self.phase)))

    def radius_grad(self, u) -> np.ndarray:
        a = math.atan2(u[1], u[0])
        drho = -self.rho0 * self.amplitude * self.frequency * math.sin(self.frequency * (a - self.phase))
        s2 = u[0] * u[0] + u[1] * u[1]
        return drho * np.array([-u[1], u[0]]) / s2

    def to_dict(self):
        return {"shape": "star_polygon", "rho0": self.rho0, "amplitude": self.amplitude,
                "frequency": self.frequency, "phase": self.phase}


class SplineStar:
    """2-D periodic cubic spline through radii at equally spaced angles."""

    def __init__(self, radii):
        radii = np.asarray(radii, dtype=float)
        if len(radii) < 4 or np.any(radii <= 0):
            raise ValueError("need at least 4 positive control radii")
        self.control = radii
        ang = np.linspace(0, 2 * np.pi, len(radii) + 1)
        self._spline = CubicSpline(ang, np.append(radii, radii[0]), bc_type="periodic")
        self._dspline = self._spline.derivative()
        grid = self._spline(np.linspace(0, 2 * np.pi, 7201))
        self.rho_min, self.rho_max = float(grid.min()), float(grid.max())
        if self.rho_min <= 0:
            raise ValueError("spline radius must stay positive")

    def radius(self, u) -> float:
        return float(self._spline(math.atan2(u[1], u[0]) % (2 * np.pi)))

    def radius_grad(self, u) -> np.ndarray:
        drho = float(self._dspline(math.atan2(u[1], u[0]) % (2 * np.pi)))
        return drho * np.array([-u[1], u[0]]) / (u[0] * u[0] + u[1] * u[1])

    def to_dict(self):
        return {"shape": "spline", "radii": self.control.tolist()}


class AxisymmetricStar:
    """3-D star symmetric about ``axis``:
    ``rho = rho0 (1 + amplitude T_k(cos psi))`` with ``psi`` the angle to the
    axis. Written through the Chebyshev polynomial ``T_k`` so it is smooth at
    the poles."""

    def __init__(self, rho0: float, amplitude: float, frequency: int, axis=(0.0, 0.0, 1.0)):
        if not 0 <= amplitude < 1:
            raise ValueError("amplitude must be in [0, 1)")
        self.rho0, self.amplitude, self.frequency = float(rho0), float(amplitude), int(frequency)
        axis = np.asarray(axis, dtype=float)
        self.axis = axis / np.linalg.norm(axis)
        coef = np.zeros(self.frequency + 1)
        coef[-1] = 1.0
        self._T = chebyshev.Chebyshev(coef)
        self._dT = self._T.deriv()
        self.rho_min = self.rho0 * (1 - self.amplitude)
        self.rho_max = self.rho0 * (1 + self.amplitude)

    def radius(self, u) -> float:
        c = float(self.axis @ u) / math.sqrt(u @ u)
        return self.rho0 * (1 + self.amplitude * self._T(c))

    def radius_grad(self, u) -> np.ndarray:
        s = math.sqrt(u @ u)
        th = u / s
        c = float(self.axis @ th)
        return self.rho0 * self.amplitude * self._dT(c) * (self.axis - c * th) / s

    def to_dict(self):
        return {"shape": "axisymmetric", "rho0": self.rho0, "amplitude": self.amplitude,
                "frequency": self.frequency, "axis": self.axis.tolist()}


def make_shape(desc: dict):
    kind = desc.get("shape")
    args = {k: v for k, v in desc.items() if k != "shape"}
    if kind == "circle":
        return Circle(**args)
    if kind == "star_polygon":
        return StarPolygon(**args)
    if kind == "spline":
        return SplineStar(**args)
    if kind == "axisymmetric":
        return AxisymmetricStar(**args)
    raise ValueError(f"unknown star shape {kind!r}")


@dataclass(frozen=True, eq=False)
class StarObstacle:
    center: np.ndarray
    shape: object
    target_radius: float
    margin: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.shape.rho_min <= 0:
            raise ValueError("star radius must be positive")
        if self.margin <= 0 or self.target_radius <= 0:
            raise ValueError("margin and target radius must be positive")

    @property
    def outer_radius(self) -> float:
        return self.shape.rho_max + self.margin

    def boundary_points(self, count: int) -> np.ndarray:
        n = len(self.center)
        if n == 2:
            a = 2 * np.pi * np.arange(count) / count
            dirs = np.column_stack([np.cos(a), np.sin(a)])
        else:
            from navsim.navfield import _unit_directions

            dirs = _unit_directions(3, count)
        return np.array([self.center + self.shape.radius(d) * d for d in dirs])


class InvalidMap(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StarMap:
    """Star world (workspace radius ``r_W``, robot radius ``r``) and its
    target sphere world with obstacles ``(p_j, target_radius_j)``."""

    r_W: float
    obstacles: tuple
    r: float = 0.0
    n: int = 2
    world: World = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if self.obstacles:
            n = len(self.obstacles[0].center)
            object.__setattr__(self, "n", n)
            centers = np.array([o.center for o in self.obstacles])
            radii = np.array([o.target_radius - self.r for o in self.obstacles])
            world = World(self.r_W, centers, radii, self.r)
        else:
            world = World.empty(self.r_W, self.n, self.r)
        object.__setattr__(self, "world", world)

    @property
    def r_W_bar(self) -> float:
        return self.r_W - self.r

    def _shell(self, x):
        """``(obstacle, u, s)`` for the shell containing ``x``, else None."""
        for ob in self.obstacles:
            u = x - ob.center
            s = math.sqrt(u @ u)
            if s >= ob.outer_radius:
                continue
            rho = ob.shape.radius(u) if s > 0 else ob.shape.rho_max
            # tolerance admits boundary points carrying rounding error
            if s < rho * (1.0 - 1e-12):
                raise InvalidMap(f"x={x} lies inside a star obstacle")
            if s < rho + ob.margin:
                return ob, u, s, rho
        return None

    def H(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        hit = self._shell(x)
        if hit is None:
            return x.copy()
        ob, u, s, rho = hit
        sig = 1.0 - smoothstep(max(s - rho, 0.0) / ob.margin)
        R = s - sig * (rho - ob.target_radius)
        return ob.center + (R / s) * u

    def J_H(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        n = len(x)
        hit = self._shell(x)
        if hit is None:
            return np.eye(n)
        ob, u, s, rho = hit
        th = u / s
        w = max(s - rho, 0.0) / ob.margin
        sig = 1.0 - smoothstep(w)
        dsig = -smoothstep_prime(w)
        delta = rho - ob.target_radius
        grad_rho = ob.shape.radius_grad(u)
        R = s - sig * delta
        grad_R = th - dsig * delta * (th - grad_rho) / ob.margin - sig * grad_rho
        return np.outer(th, grad_R) + (R / s) * (np.eye(n) - np.outer(th, th))

    def in_free_space(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if not x @ x < self.r_W_bar**2:
            return False
        for ob in self.obstacles:
            u = x - ob.center
            s = math.sqrt(u @ u)
            if s <= ob.shape.rho_min or (s <= ob.shape.rho_max and s <= ob.shape.radius(u)):
                return False
        return True

    def clearance(self, x) -> float:
        """Smallest radial gap to a star boundary or workspace gap (metres)."""
        x = np.asarray(x, dtype=float)
        gap = self.r_W_bar - math.sqrt(x @ x)
        for ob in self.obstacles:
            u = x - ob.center
            s = math.sqrt(u @ u)
            gap = min(gap, s - (ob.shape.radius(u) if s > 0 else ob.shape.rho_max))
        return gap


def H(smap: StarMap, x) -> np.ndarray:
    return smap.H(x)


def J_H(smap: StarMap, x) -> np.ndarray:
    return smap.J_H(x)


@dataclass
class MapReport:
    ok: bool
    min_abs_det: float
    boundary_residual: float
    shells_ok: bool
    problems: list

    def to_dict(self):
        return dict(self.__dict__)


def validate_map(smap: StarMap, resolution: int = 201, boundary_samples: int = 1000) -> MapReport:
    """Grid validation of the star map."""
    problems = []
    obs = smap.obstacles
    for i, a in enumerate(obs):
        if np.linalg.norm(a.center) + a.outer_radius >= smap.r_W_bar:
            problems.append(f"shell {i + 1} leaves the workspace")
        if a.target_radius >= a.shape.rho_min + a.margin:
            problems.append(f"target sphere {i + 1} exceeds its shell")
        for j in range(i):
            b = obs[j]
            if np.linalg.norm(a.center - b.center) <= a.outer_radius + b.outer_radius:
                problems.append(f"shells {j + 1} and {i + 1} overlap")
    shells_ok = not problems
    spacing = smap.world.validate(None)
    if not spacing.ok:
        problems.append(f"target sphere world spacing violated: {spacing.violations}")

    min_det = math.inf
    residual = 0.0
    if shells_ok:
        axis = np.linspace(-smap.r_W_bar, smap.r_W_bar, resolution)
        grids = np.meshgrid(*([axis] * smap.n), indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        pts = pts[np.einsum("ij,ij->i", pts, pts) < smap.r_W_bar**2]
        for x in pts:
            if smap.in_free_space(x):
                min_det = min(min_det, abs(np.linalg.det(smap.J_H(x))))
        for ob in obs:
            for b in ob.boundary_points(boundary_samples):
                residual = max(residual, abs(np.linalg.norm(smap.H(b) - ob.center) - ob.target_radius))
        if not min_det > 1e-6:
            problems.append(f"Jacobian nearly singular (min |det| = {min_det:.3g})")
        if not residual <= 1e-6:
            problems.append(f"boundary residual {residual:.3g}")
    else:
        min_det = 0.0
    return MapReport(not problems, float(min_det), float(residual), shells_ok, problems)
