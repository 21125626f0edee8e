"""Adaptive tracking law and estimator dynamics.

The controller sees only ``(x, v, m_hat, alpha_hat)`` and the navigation
field; mass, friction and disturbance stay on the plant side.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from navsim.navfield import NavField


@dataclass(frozen=True)
class ControllerGains:
    k_phi: float = 1.0
    k_v: float = 20.0
    k_m: float = 0.01
    k_alpha: float = 0.01
    sigma_m: float = 0.0
    sigma_alpha: float = 0.0

    def __post_init__(self):
        if min(self.k_phi, self.k_v, self.k_m, self.k_alpha) <= 0:
            raise ValueError("k_phi, k_v, k_m, k_alpha must be positive")
        if min(self.sigma_m, self.sigma_alpha) < 0:
            raise ValueError("sigma gains must be nonnegative")
        if self.sigma_modified and self.k_v <= 0.5:
            raise ValueError("sigma-modified law requires k_v > 1/2")

    @property
    def sigma_modified(self) -> bool:
        return self.sigma_m > 0 or self.sigma_alpha > 0


@dataclass(frozen=True)
class EstimatorState:
    m_hat: float
    alpha_hat: float = 0.0

    def __post_init__(self):
        if self.alpha_hat < 0:
            raise ValueError("alpha_hat must start nonnegative")


def check_gains(gains: ControllerGains, alpha_true: float) -> list[str]:
    """Sufficient-condition check ``k_phi > alpha / 2``; a miss only warns."""
    msgs = []
    if not gains.k_phi > alpha_true / 2:
        msgs.append(f"k_phi={gains.k_phi} <= alpha/2={alpha_true / 2}: convergence not guaranteed (sufficient condition)")
        warnings.warn(msgs[-1], RuntimeWarning)
    return msgs


def adaptive_law(gains: ControllerGains, grad, v_d, v_d_dot, v, m_hat, alpha_hat, g):
    """Shared tail of every variant: returns ``(u, m_hat_dot, alpha_hat_dot)``
    given the (possibly pulled-back) potential gradient term ``grad``."""
    e_v = v - v_d
    ff = v_d_dot + g
    u = -gains.k_phi * grad + m_hat * ff - (gains.k_v + 1.5 * alpha_hat) * e_v
    m_dot = -gains.k_m * (e_v @ ff) - gains.sigma_m * m_hat
    a_dot = gains.k_alpha * (e_v @ e_v) - gains.sigma_alpha * alpha_hat
    return u, m_dot, a_dot


def closed_loop_terms(gains: ControllerGains, field: NavField, x, v, est: EstimatorState, g):
    grad, hess = field.grad_hess(x)
    return adaptive_law(gains, grad, -grad, -hess @ v, v, est.m_hat, est.alpha_hat, g)


def control(gains: ControllerGains, field: NavField, x, v, est: EstimatorState, g) -> np.ndarray:
    return closed_loop_terms(gains, field, np.asarray(x, float), np.asarray(v, float), est, np.asarray(g, float))[0]


def estimator_derivative(gains: ControllerGains, field: NavField, x, v, est: EstimatorState, g):
    _, m_dot, a_dot = closed_loop_terms(gains, field, np.asarray(x, float), np.asarray(v, float), est,
                                        np.asarray(g, float))
    return m_dot, a_dot


class SingularJacobian(RuntimeError):
    pass


def star_reference(field: NavField, smap, x, v, fd_step: float | None = None):
    """Pulled-back reference for a star world.

    Returns ``(pullback, v_d, v_d_dot)`` where ``pullback = J^T grad phi(H(x))``
    and ``v_d = -J^{-1} grad phi(H(x))``. The time derivative is
    ``J^{-1} (-Jdot v_d - hess phi(H) J v)`` with ``Jdot`` a central
    difference of ``J_H`` along ``v``, so only first derivatives of ``H`` are
    needed.
    """
    y = smap.H(x)
    J = smap.J_H(x)
    check_conditioning(J)
    grad, hess = field.grad_hess(y)
    v_d = -np.linalg.solve(J, grad)
    nv = math.sqrt(v @ v)
    if nv == 0.0:
        Jdot = np.zeros_like(J)
    else:
        h = fd_step if fd_step is not None else 1e-6 / max(nv, 1.0)
        Jdot = (smap.J_H(x + 0.5 * h * v) - smap.J_H(x - 0.5 * h * v)) / h
    v_d_dot = np.linalg.solve(J, -Jdot @ v_d - hess @ (J @ v))
    return J.T @ grad, v_d, v_d_dot


def check_conditioning(J: np.ndarray, limit: float = 1e12):
    if J.shape == (2, 2):
        det = abs(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
        fro2 = float(np.sum(J * J))
        # sigma1 * sigma2 = |det|, sigma1^2 + sigma2^2 = |J|_F^2
        if det == 0.0:
            raise SingularJacobian("singular map Jacobian")
        disc = math.sqrt(max(fro2 * fro2 - 4 * det * det, 0.0))
        s1 = math.sqrt(0.5 * (fro2 + disc))
        cond = s1 * s1 / det
    else:
        cond = np.linalg.cond(J)
    if not cond < limit:
        raise SingularJacobian(f"map Jacobian condition number {cond:.3g} exceeds {limit:g}")


def star_closed_loop_terms(gains: ControllerGains, field: NavField, smap, x, v, est: EstimatorState, g,
                           fd_step: float | None = None):
    pullback, v_d, v_d_dot = star_reference(field, smap, x, v, fd_step)
    return adaptive_law(gains, pullback, v_d, v_d_dot, v, est.m_hat, est.alpha_hat, g)


def star_control(gains: ControllerGains, field: NavField, smap, x, v, est: EstimatorState, g) -> np.ndarray:
    return star_closed_loop_terms(gains, field, smap, np.asarray(x, float), np.asarray(v, float), est,
                                  np.asarray(g, float))[0]


def lyapunov_V(field: NavField, x, v, est: EstimatorState, m: float, alpha: float, gains: ControllerGains,
               smap=None) -> float:
    """Diagnostic Lyapunov value; needs the true ``m`` and friction bound."""
    x = np.asarray(x, float)
    v = np.asarray(v, float)
    if smap is None:
        y, v_d = x, field.v_d(x)
    else:
        y = smap.H(x)
        v_d = -np.linalg.solve(smap.J_H(x), field.grad_phi(y))
    e_v = v - v_d
    a_t = est.alpha_hat - alpha
    m_t = est.m_hat - m
    return float(gains.k_phi * field.phi_normalized(y) + 0.5 * m * (e_v @ e_v)
                 + 0.75 / gains.k_alpha * a_t * a_t + 0.5 / gains.k_m * m_t * m_t)


def ultimate_bound(gains: ControllerGains, alpha: float, m: float, d_bar: float):
    """``(k_xi, d_xi, sqrt(d_xi / k_xi))`` for the sigma-modified law; the
    Lyapunov derivative is negative outside the returned radius."""
    k_xi = min(gains.k_phi - alpha / 2, gains.k_v - 0.5, gains.sigma_m / 2, 0.75 * gains.sigma_alpha)
    d_xi = d_bar**2 / 2 + 0.75 * gains.sigma_alpha * alpha**2 + 0.5 * gains.sigma_m * m**2
    if k_xi <= 0:
        return k_xi, d_xi, math.inf
    return k_xi, d_xi, math.sqrt(d_xi / k_xi)


def xi_norm(field: NavField, x, v, est: EstimatorState, m: float, alpha: float) -> float:
    grad = field.grad_phi(x)
    e_v = np.asarray(v, float) + grad
    return math.sqrt(grad @ grad + e_v @ e_v + (est.m_hat - m) ** 2 + (est.alpha_hat - alpha) ** 2)
