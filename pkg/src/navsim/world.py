"""Sphere-world geometry: workspace ball, spherical obstacles, distance surrogates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class World:
    """Spherical workspace of radius ``r_W`` centred at the origin with
    spherical obstacles ``(centers[j], radii[j])`` and a robot of radius ``r``.

    Lengths are in metres. The robot is reduced to a point by inflating each
    obstacle by ``r`` and shrinking the workspace by ``r``.
    """

    r_W: float
    centers: np.ndarray
    radii: np.ndarray
    r: float = 0.0

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        radii = np.asarray(self.radii, dtype=float).reshape(-1)
        if centers.size == 0:
            centers = np.zeros((0, centers.shape[-1] if centers.ndim == 2 and centers.shape[-1] else 2))
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", radii)
        if self.r_W <= 0:
            raise ValueError("workspace radius must be positive")
        if self.r < 0:
            raise ValueError("robot radius must be nonnegative")
        if len(radii) != len(centers):
            raise ValueError("centers and radii lengths differ")
        if np.any(radii <= 0):
            raise ValueError("obstacle radii must be positive")
        if centers.shape[1] not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if len(centers) and np.any(np.linalg.norm(centers, axis=1) >= self.r_W):
            raise ValueError("obstacle centers must lie strictly inside the workspace")
        centers.setflags(write=False)
        radii.setflags(write=False)
        # cached squared inflated radii for the hot path
        object.__setattr__(self, "_R2", (radii + self.r) ** 2)
        object.__setattr__(self, "_RW2", (self.r_W - self.r) ** 2)

    @classmethod
    def empty(cls, r_W: float, n: int = 2, r: float = 0.0) -> "World":
        return cls(r_W, np.zeros((0, n)), np.zeros(0), r)

    @property
    def n(self) -> int:
        return self.centers.shape[1]

    @property
    def M(self) -> int:
        return len(self.radii)

    @property
    def r_W_bar(self) -> float:
        return self.r_W - self.r

    @property
    def inflated_radii(self) -> np.ndarray:
        return self.radii + self.r

    def d_j(self, j: int, x) -> float:
        """Squared-distance surrogate to obstacle ``j`` (1-based, as in the
        obstacle index set); positive iff the robot sphere is clear of it."""
        if not 1 <= j <= self.M:
            raise IndexError(f"obstacle index {j} out of range 1..{self.M}")
        x = np.asarray(x, dtype=float)
        diff = x - self.centers[j - 1]
        return float(diff @ diff - self._R2[j - 1])

    def d_0(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self._RW2 - x @ x)

    def obstacle_distances(self, x) -> np.ndarray:
        """All ``d_j(x)``, j = 1..M, as an array."""
        diff = x - self.centers
        return np.einsum("ij,ij->i", diff, diff) - self._R2

    def distances(self, x) -> np.ndarray:
        """``[d_0(x), d_1(x), ..., d_M(x)]``."""
        x = np.asarray(x, dtype=float)
        return np.concatenate(([self._RW2 - x @ x], self.obstacle_distances(x)))

    def in_free_space(self, x) -> bool:
        return bool(np.min(self.distances(x)) > 0)

    def clearance(self, x) -> float:
        """Smallest Euclidean gap (metres) between the point robot and the
        inflated obstacles or the shrunk workspace boundary."""
        x = np.asarray(x, dtype=float)
        gap = self.r_W_bar - np.sqrt(x @ x)
        if self.M:
            gaps = np.linalg.norm(x - self.centers, axis=1) - self.inflated_radii
            gap = min(gap, gaps.min())
        return float(gap)

    def validate(self, x_d) -> "FeasibilityReport":
        return validate(self, x_d)


@dataclass
class FeasibilityReport:
    ok: bool
    violations: list = field(default_factory=list)
    r_bar: float = 0.0
    r_bar_d: float = 0.0

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [[name, float(s)] for name, s in self.violations],
            "r_bar": self.r_bar,
            "r_bar_d": self.r_bar_d,
        }


def validate(world: World, x_d) -> FeasibilityReport:
    """Check obstacle spacing and compute the clearance margins.

    ``r_bar`` is 99% of half the smallest spacing slack, which keeps the
    strict inequalities of the spacing condition robust to rounding.
    ``r_bar_d`` is the squared-distance clearance of the goal (``inf`` when
    ``x_d`` is None).
    """
    r, C, ro = world.r, world.centers, world.radii
    slacks = []
    for j in range(world.M):
        for i in range(j):
            slacks.append(((f"obstacle {i + 1}", f"obstacle {j + 1}"),
                           np.linalg.norm(C[i] - C[j]) - (ro[i] + ro[j] + 2 * r)))
        slacks.append(((f"obstacle {j + 1}", "boundary"),
                       world.r_W - np.linalg.norm(C[j]) - (ro[j] + 2 * r)))
    violations = [(pair, float(s)) for pair, s in slacks if not s > 0]
    if slacks:
        r_bar = 0.99 * min(s for _, s in slacks) / 2
    else:
        # no obstacles: only the goal clearance constrains tau
        r_bar = 0.99 * world.r_W_bar
    if x_d is None:
        r_bar_d = float("inf")
    else:
        r_bar_d = float(min(world.distances(np.asarray(x_d, dtype=float))))
    if not r_bar_d > 0:
        violations.append((("goal", "free space"), r_bar_d))
    ok = not violations
    return FeasibilityReport(ok, violations, float(r_bar) if ok else min(float(r_bar), 0.0), r_bar_d)


def random_world(
    rng: np.random.Generator,
    count: int,
    r_W: float,
    inflated_radius_range=(0.25, 0.75),
    r: float = 0.0,
    rbar: float = 0.5,
    n: int = 2,
    keep_out=(),
    max_tries: int = 1_000_000,
) -> World:
    """Rejection-sample obstacles until the spacing condition holds with
    margin ``rbar``.

    Radii are drawn for the *inflated* obstacle (obstacle + robot radius).
    Points in ``keep_out`` (starts, goals) keep a distance of at least
    ``inflated radius + 2 rbar`` from every obstacle centre.
    """
    lo, hi = inflated_radius_range
    if lo <= r:
        raise ValueError("inflated radii must exceed the robot radius")
    keep_out = [np.asarray(p, dtype=float) for p in keep_out]
    centers, radii = [], []
    tries = 0
    while len(centers) < count:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(f"placed only {len(centers)}/{count} obstacles")
        rb = rng.uniform(lo, hi)
        ro = rb - r
        lim = r_W - ro - 2 * r - 2 * rbar
        c = rng.uniform(-lim, lim, n)
        if np.linalg.norm(c) >= lim:
            continue
        if any(np.linalg.norm(c - cj) <= ro + rj + 2 * r + 2 * rbar for cj, rj in zip(centers, radii)):
            continue
        if any(np.linalg.norm(c - p) <= rb + 2 * rbar for p in keep_out):
            continue
        centers.append(c)
        radii.append(ro)
    return World(r_W, np.array(centers).reshape(-1, n), np.array(radii), r)
