"""Second-order navigation function over a sphere world."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from navsim.barrier import BarrierSpec, f_ell
from navsim.world import World


class OutsideFreeSpace(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class NavField:
    """``phi(x) = k1 |x - x_d|^2 + k2 * sum_j beta(d_j(x))`` over j = 0..M."""

    world: World
    spec: BarrierSpec
    x_d: np.ndarray
    k1: float
    k2: float

    def __post_init__(self):
        x_d = np.asarray(self.x_d, dtype=float)
        object.__setattr__(self, "x_d", x_d)
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("gains k1, k2 must be positive")
        if x_d.shape != (self.world.n,):
            raise ValueError("goal dimension mismatch")
        if not np.min(self.world.distances(x_d)) > self.spec.tau:
            raise ValueError("goal must be outside every barrier's influence range")

    @property
    def n(self) -> int:
        return self.world.n

    def _check(self, x, d0, d):
        if not (d0 > 0 and (d.size == 0 or d.min() > 0)):
            raise OutsideFreeSpace(f"x={x} is outside the free space")

    def phi(self, x) -> float:
        x = np.asarray(x, dtype=float)
        d0 = self.world._RW2 - x @ x
        d = self.world.obstacle_distances(x)
        self._check(x, d0, d)
        e = x - self.x_d
        total = self.spec.beta(d0) + sum(self.spec.beta(z) for z in d[d < self.spec.tau])
        total += float(np.count_nonzero(d >= self.spec.tau))
        return float(self.k1 * (e @ e) + self.k2 * total)

    def phi_normalized(self, x) -> float:
        """``phi`` shifted so its value at the goal is zero."""
        return self.phi(x) - self.k2 * (self.world.M + 1) * self.spec.beta(self.spec.tau)

    def grad_hess(self, x):
        """Gradient and Hessian of ``phi`` at ``x`` from one distance pass."""
        x = np.asarray(x, dtype=float)
        world, tau, k2 = self.world, self.spec.tau, self.k2
        d0 = world._RW2 - x @ x
        diff = x - world.centers
        d = np.einsum("ij,ij->i", diff, diff) - world._R2
        self._check(x, d0, d)
        grad = 2.0 * self.k1 * (x - self.x_d)
        hess = np.eye(self.n) * (2.0 * self.k1)
        if d0 < tau:
            b1, b2 = self.spec.derivatives(d0)
            grad -= (2.0 * k2 * b1) * x
            hess += (4.0 * k2 * b2) * np.outer(x, x) - (2.0 * k2 * b1) * np.eye(self.n)
        for j in np.flatnonzero(d < tau):
            b1, b2 = self.spec.derivatives(d[j])
            r = diff[j]
            grad += (2.0 * k2 * b1) * r
            hess += (4.0 * k2 * b2) * np.outer(r, r) + (2.0 * k2 * b1) * np.eye(self.n)
        hess = 0.5 * (hess + hess.T)
        return grad, hess

    def grad_phi(self, x) -> np.ndarray:
        return self.grad_hess(x)[0]

    def hess_phi(self, x) -> np.ndarray:
        return self.grad_hess(x)[1]

    def v_d(self, x) -> np.ndarray:
        return -self.grad_phi(x)

    def v_d_dot(self, x, v) -> np.ndarray:
        return -self.hess_phi(x) @ np.asarray(v, dtype=float)

    def active_barriers(self, x) -> list[int]:
        """Indices j in 0..M whose barrier is inside its influence range."""
        return [int(j) for j in np.flatnonzero(self.world.distances(x) < self.spec.tau)]


# module-level spellings of the field operations
def phi(field: NavField, x) -> float:
    return field.phi(x)


def grad_phi(field: NavField, x) -> np.ndarray:
    return field.grad_phi(x)


def hess_phi(field: NavField, x) -> np.ndarray:
    return field.hess_phi(x)


def v_d(field: NavField, x) -> np.ndarray:
    return field.v_d(x)


def v_d_dot(field: NavField, x, v) -> np.ndarray:
    return field.v_d_dot(x, v)


@dataclass
class CriticalPoint:
    x_star: np.ndarray
    kind: str  # "goal" | "saddle" | "degenerate" | "minimum"
    hessian_eigenvalues: np.ndarray
    obstacle: int | None = None  # active obstacle index (1-based) for undesired points
    d_star: float | None = None
    f_ell: float | None = None

    def to_dict(self) -> dict:
        return {
            "x_star": self.x_star.tolist(),
            "kind": self.kind,
            "hessian_eigenvalues": self.hessian_eigenvalues.tolist(),
            "obstacle": self.obstacle,
            "d_star": self.d_star,
            "f_ell": self.f_ell,
        }


@dataclass
class CriticalPointReport:
    points: list = field(default_factory=list)
    seeds: int = 0
    failed_seeds: int = 0

    @property
    def saddles(self):
        return [p for p in self.points if p.kind == "saddle"]


def _classify(eig: np.ndarray) -> str:
    scale = max(np.abs(eig).max(), 1e-300)
    if np.any(np.abs(eig) <= 1e-8 * scale):
        return "degenerate"
    if np.all(eig > 0):
        return "minimum"
    return "saddle"


def _newton(field: NavField, x, max_iter: int = 100):
    for _ in range(max_iter):
        try:
            g, H = field.grad_hess(x)
        except OutsideFreeSpace:
            return None
        gnorm = np.linalg.norm(g)
        if gnorm < 1e-13:
            return x
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        while True:
            x_new = x - t * step
            if field.world.in_free_space(x_new):
                break
            t *= 0.5
            if t < 1e-12:
                return None
        if np.linalg.norm(x_new - x) <= 1e-15 * max(1.0, np.linalg.norm(x)):
            x = x_new
            break
        x = x_new
    g = field.grad_phi(x)
    return x if np.linalg.norm(g) < 1e-9 else None


def _unit_directions(n: int, count: int) -> np.ndarray:
    if n == 2:
        a = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(a), np.sin(a)])
    # Fibonacci sphere
    i = np.arange(count) + 0.5
    polar = np.arccos(1 - 2 * i / count)
    az = np.pi * (1 + 5**0.5) * i
    return np.column_stack([np.cos(az) * np.sin(polar), np.sin(az) * np.sin(polar), np.cos(polar)])


def find_critical_points(field: NavField, angular: int | None = None, radial: int = 8) -> CriticalPointReport:
    """Newton search for zeros of the gradient.

    Seeds are the goal plus a polar grid over each obstacle's barrier-active
    annulus (``0 < d_j < tau``); undesired critical points can only live
    there. Seeds whose Newton iteration leaves the free space or stalls are
    skipped and counted.
    """
    world, tau = field.world, field.spec.tau
    n = world.n
    if angular is None:
        angular = 32 if n == 2 else 128
    seeds = [field.x_d.copy()]
    dirs = _unit_directions(n, angular)
    fracs = (np.arange(radial) + 0.5) / radial
    R = world.inflated_radii
    for j in range(world.M):
        for frac, u in itertools.product(fracs, dirs):
            rad = math.sqrt(R[j] ** 2 + frac * tau)
            seeds.append(world.centers[j] + rad * u)
    report = CriticalPointReport(seeds=len(seeds))
    found: list[np.ndarray] = []
    for s in seeds:
        if not world.in_free_space(s):
            report.failed_seeds += 1
            continue
        x = _newton(field, s)
        if x is None:
            report.failed_seeds += 1
            continue
        if any(np.linalg.norm(x - y) < 1e-6 for y in found):
            continue
        found.append(x)
    r_under = float(R.min()) if world.M else None
    for x in found:
        eig = np.linalg.eigvalsh(field.hess_phi(x))
        kind = _classify(eig)
        cp = CriticalPoint(x, kind, eig)
        if np.linalg.norm(x - field.x_d) < 1e-6 and kind == "minimum":
            cp.kind = "goal"
        else:
            d = world.obstacle_distances(x)
            if d.size:
                k = int(np.argmin(d))
                if d[k] < tau:
                    cp.obstacle = k + 1
                    cp.d_star = float(d[k])
                    cp.f_ell = f_ell(d[k], field.k1, field.k2, world.r_W_bar, r_under, field.spec)
        report.points.append(cp)
    report.points.sort(key=lambda p: (p.kind != "goal", tuple(p.x_star)))
    return report


def distance_to_line(x, a, b) -> float:
    """Distance from ``x`` to the line through ``a`` and ``b``."""
    x, a, b = (np.asarray(v, dtype=float) for v in (x, a, b))
    u = (b - a) / np.linalg.norm(b - a)
    w = x - a
    return float(np.linalg.norm(w - (w @ u) * u))
