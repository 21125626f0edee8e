"""Reciprocal quintic barrier with a plateau at the influence range ``tau``.

``beta(z) = 1 / p(z / tau)`` for ``z < tau`` and ``1`` beyond, where
``p(s) = 6 s^5 - 15 s^4 + 10 s^3`` is the C2 smoothstep. Since
``p(1) = 1`` and ``p'(1) = p''(1) = 0`` the junction at ``tau`` is C2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


def smoothstep(s):
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0)


def smoothstep_prime(s):
    t = s * (s - 1.0)
    return 30.0 * t * t


def smoothstep_second(s):
    return 60.0 * s * (2.0 * s - 1.0) * (s - 1.0)


@dataclass(frozen=True)
class BarrierSpec:
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    def beta(self, z: float) -> float:
        if z <= 0:
            raise ValueError(f"barrier argument must be positive, got {z}")
        if z >= self.tau:
            return 1.0
        return 1.0 / smoothstep(z / self.tau)

    def beta_prime(self, z: float) -> float:
        if z <= 0:
            raise ValueError(f"barrier argument must be positive, got {z}")
        if z >= self.tau:
            return 0.0
        s = z / self.tau
        p = smoothstep(s)
        return -smoothstep_prime(s) / (self.tau * p * p)

    def beta_second(self, z: float) -> float:
        if z <= 0:
            raise ValueError(f"barrier argument must be positive, got {z}")
        if z >= self.tau:
            return 0.0
        s = z / self.tau
        p, dp, ddp = smoothstep(s), smoothstep_prime(s), smoothstep_second(s)
        return (2.0 * dp * dp - p * ddp) / (self.tau * self.tau * p * p * p)

    def derivatives(self, z: float):
        """``(beta', beta'')`` at ``z`` in one pass; hot path for the field."""
        if z <= 0:
            raise ValueError(f"barrier argument must be positive, got {z}")
        if z >= self.tau:
            return 0.0, 0.0
        tau = self.tau
        s = z / tau
        p, dp, ddp = smoothstep(s), smoothstep_prime(s), smoothstep_second(s)
        return -dp / (tau * p * p), (2.0 * dp * dp - p * ddp) / (tau * tau * p * p * p)

    # vectorised forms, used by the certification and threshold scans
    def beta_array(self, z):
        z = np.asarray(z, dtype=float)
        s = np.minimum(z / self.tau, 1.0)
        return 1.0 / smoothstep(s)

    def beta_second_array(self, z):
        z = np.asarray(z, dtype=float)
        s = np.minimum(z / self.tau, 1.0)
        p, dp, ddp = smoothstep(s), smoothstep_prime(s), smoothstep_second(s)
        return np.where(z >= self.tau, 0.0, (2 * dp * dp - p * ddp) / (self.tau**2 * p**3))


def beta(spec: BarrierSpec, z: float) -> float:
    return spec.beta(z)


def beta_prime(spec: BarrierSpec, z: float) -> float:
    return spec.beta_prime(z)


def beta_second(spec: BarrierSpec, z: float) -> float:
    return spec.beta_second(z)


def f_ell(d, k1: float, k2: float, r_W_bar: float, r_underbar: float, spec: BarrierSpec):
    """Lower bound on the saddle non-degeneracy ratio at barrier value ``d``.

    A critical point with barrier value ``d`` is non-degenerate whenever this
    exceeds one.
    """
    d = np.asarray(d, dtype=float)
    a = d + r_underbar**2
    out = k2 / (2.0 * k1 * r_W_bar) * spec.beta_second_array(d) * a * np.sqrt(a)
    return float(out) if out.ndim == 0 else out


def saddle_threshold(k1: float, k2: float, r_W_bar: float, r_underbar: float, spec: BarrierSpec) -> float:
    """Largest ``d**`` in ``(0, tau)`` with ``f_ell(d) > 1`` for all ``d < d**``.

    ``f_ell`` is decreasing on ``(0, tau)`` with ``f_ell(tau) = 0``, so the
    crossing is unique and bisection runs to machine resolution. Returns 0
    (with a warning) when ``f_ell`` never exceeds one near zero.
    """
    if min(k1, k2, r_W_bar, r_underbar) <= 0:
        raise ValueError("gains and radii must be positive")

    def f(d):
        return f_ell(d, k1, k2, r_W_bar, r_underbar, spec)

    lo = spec.tau * 1e-12
    if not f(lo) > 1:
        warnings.warn("non-degeneracy threshold unattainable for these gains", RuntimeWarning)
        return 0.0
    hi = spec.tau
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 1:
            lo = mid
        else:
            hi = mid
    return lo


def select_tau(report, d_star_star: float = math.inf, override: float | None = None) -> BarrierSpec:
    """Influence range ``0.99 * min(r_bar**2, r_bar_d, d**)``.

    ``override`` admits a hand-picked value (e.g. ``tau = r_bar**2``); a
    value outside the open admissible interval only warns.
    """
    if not report.ok:
        raise ValueError("cannot select tau for an infeasible world")
    bound = min(report.r_bar**2, report.r_bar_d)
    if override is not None:
        if not 0 < override < bound:
            warnings.warn(
                f"tau override {override} outside (0, {bound}); at most one active barrier is not guaranteed",
                RuntimeWarning,
            )
        return BarrierSpec(float(override))
    return BarrierSpec(0.99 * min(bound, d_star_star))


def tau_for_world(world, x_d, k1: float, k2: float, override: float | None = None):
    """Validate ``world``, compute the saddle threshold for the candidate
    barrier ``tau0 = min(r_bar**2, r_bar_d)`` and select ``tau``.

    Returns ``(spec, report, d_star_star)``; ``d**`` is ``inf`` in an
    obstacle-free world.
    """
    report = world.validate(x_d)
    if not report.ok:
        raise ValueError(f"infeasible world: {report.violations}")
    candidate = BarrierSpec(min(report.r_bar**2, report.r_bar_d))
    if world.M:
        dss = saddle_threshold(k1, k2, world.r_W_bar, float(world.inflated_radii.min()), candidate)
    else:
        dss = math.inf
    return select_tau(report, dss, override), report, dss


@dataclass
class CertifyReport:
    strictly_decreasing: bool
    blows_up_at_zero: bool
    convex: bool
    tilde_decreasing: bool

    @property
    def ok(self) -> bool:
        return self.strictly_decreasing and self.blows_up_at_zero and self.convex and self.tilde_decreasing

    def to_dict(self) -> dict:
        return {**self.__dict__, "ok": self.ok}


def certify(spec, points: int = 10_000) -> CertifyReport:
    """Grid check of the barrier properties on ``(0, tau)``.

    ``spec`` only needs ``tau`` and scalar ``beta``/``beta_second`` methods,
    so arbitrary candidate barriers can be certified.
    """
    tau = spec.tau
    z = tau * np.geomspace(1e-4, 1.0 - 1e-3, points)
    b = np.array([spec.beta(v) for v in z])
    bz = np.array([spec.beta_second(v) for v in z])
    # beta~(z) vs beta~(1.01 z), restricted so 1.01 z stays below tau
    zt = z[z * 1.01 < tau]
    tilde = np.array([spec.beta_second(v) * v * math.sqrt(v) for v in zt])
    tilde_next = np.array([spec.beta_second(1.01 * v) * 1.01 * v * math.sqrt(1.01 * v) for v in zt])
    return CertifyReport(
        strictly_decreasing=bool(np.all(np.diff(b) < 0)),
        blows_up_at_zero=bool(spec.beta(tau * 1e-6) > 1e6 * spec.beta(tau)),
        convex=bool(np.all(bz > 0)),
        tilde_decreasing=bool(len(zt) > 0 and np.all(tilde > tilde_next)),
    )
