"""Lax wave curves and Riemann solvers.

A k-wave of signed strength ``sigma`` joins ``u`` to ``Psi_k(sigma, u)``:
the rarefaction branch (``sigma >= 0``) follows the integral curve of
``r_k``; the shock branch (``sigma < 0``) solves
``u+ - u = sigma * rt_k(u, u+)`` where ``rt_k`` is the k-th eigenvector of
the path-averaged Jacobian, scaled by ``D lambda_k(u) . rt_k = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NoConvergence, OutOfDomain
from .flux_model import (
    FluxModel,
    avg_jac4,
    eig_full,
    eigvals4,
    grad_lam,
    lam_k,
    r_k,
    raw_eigvec,
)

RK_MAX_STEP = 1e-3
SHOCK_TOL = 1e-12
SHOCK_MAXITER = 50
RIEMANN_TOL = 1e-10
RIEMANN_FD_STEP = 1e-7
RIEMANN_MAXITER = 50


def _in_box(model, u1, u2):
    lim = model.delta * (1.0 + 1e-12)
    return abs(u1) <= lim and abs(u2) <= lim


# --------------------------------------------------------------------------
# float kernels


def integral_curve(model: FluxModel, k: int, s: float, u1: float, u2: float):
    """Integrate ``dR/ds = r_k(R)`` from ``(u1, u2)`` over ``[0, s]`` (either sign) with RK4."""
    if s == 0.0:
        return u1, u2
    n = max(1, math.ceil(abs(s) / RK_MAX_STEP))
    h = s / n
    for _ in range(n):
        a1, a2 = r_k(model, k, u1, u2)
        b1, b2 = r_k(model, k, u1 + 0.5 * h * a1, u2 + 0.5 * h * a2)
        c1, c2 = r_k(model, k, u1 + 0.5 * h * b1, u2 + 0.5 * h * b2)
        d1, d2 = r_k(model, k, u1 + h * c1, u2 + h * c2)
        u1 += h * (a1 + 2.0 * b1 + 2.0 * c1 + d1) / 6.0
        u2 += h * (a2 + 2.0 * b2 + 2.0 * c2 + d2) / 6.0
        if not _in_box(model, u1, u2):
            raise OutOfDomain(f"{k}-rarefaction curve left the domain at ({u1:.6g}, {u2:.6g})")
    return u1, u2


def shock_state(model: FluxModel, k: int, sigma: float, u1: float, u2: float):
    """Return ``(w1, w2, speed)`` on the k-th Hugoniot branch through ``u``."""
    if sigma == 0.0:
        return u1, u2, lam_k(model, k, u1, u2)
    g1, g2 = grad_lam(model, k, u1, u2)

    def resid(w1, w2):
        a, b, c, d = avg_jac4(model, u1, u2, w1, w2)
        lam = eigvals4(a, b, c, d)[k - 1]
        v1, v2 = raw_eigvec(a, b, c, d, lam)
        nrm = g1 * v1 + g2 * v2
        return w1 - u1 - sigma * v1 / nrm, w2 - u2 - sigma * v2 / nrm, lam

    r1, r2 = r_k(model, k, u1, u2)
    w1 = u1 + sigma * r1
    w2 = u2 + sigma * r2
    tol = min(SHOCK_TOL, SHOCK_TOL * abs(sigma) + 1e-15)
    h = 1e-7
    prev = math.inf
    for _ in range(SHOCK_MAXITER):
        f1, f2, lam = resid(w1, w2)
        res = max(abs(f1), abs(f2))
        if res <= tol or (res <= SHOCK_TOL and res >= 0.5 * prev):
            if not _in_box(model, w1, w2):
                raise OutOfDomain(f"{k}-shock state ({w1:.6g}, {w2:.6g}) outside the domain")
            return w1, w2, lam
        prev = res
        p1, p2, _ = resid(w1 + h, w2)
        q1, q2, _ = resid(w1, w2 + h)
        j11 = (p1 - f1) / h
        j21 = (p2 - f2) / h
        j12 = (q1 - f1) / h
        j22 = (q2 - f2) / h
        det = j11 * j22 - j12 * j21
        w1 -= (j22 * f1 - j12 * f2) / det
        w2 -= (-j21 * f1 + j11 * f2) / det
        if not (math.isfinite(w1) and math.isfinite(w2)):
            break
    raise NoConvergence(f"{k}-shock Newton failed (sigma={sigma:.6g}, residual={prev:.3g})")


def lax_state(model: FluxModel, k: int, sigma: float, u1: float, u2: float):
    if sigma < 0.0:
        w1, w2, _ = shock_state(model, k, sigma, u1, u2)
        return w1, w2
    return integral_curve(model, k, sigma, u1, u2)


def riemann_kernel(model: FluxModel, a1, a2, b1, b2):
    """Solve ``Psi_2(s2, Psi_1(s1, a)) = b``; returns ``(s1, s2, m1, m2)``."""
    if a1 == b1 and a2 == b2:
        return 0.0, 0.0, a1, a2
    d1 = b1 - a1
    d2 = b2 - a2
    _, _, _, _, l1, l2 = eig_full(model, a1, a2)
    s1 = l1[0] * d1 + l1[1] * d2
    s2 = l2[0] * d1 + l2[1] * d2
    jump = max(abs(d1), abs(d2))
    tol = min(RIEMANN_TOL, 1e-12 * jump + 1e-15)
    h = RIEMANN_FD_STEP
    prev = math.inf
    for _ in range(RIEMANN_MAXITER):
        m1, m2 = lax_state(model, 1, s1, a1, a2)
        w1, w2 = lax_state(model, 2, s2, m1, m2)
        g1 = w1 - b1
        g2 = w2 - b2
        res = max(abs(g1), abs(g2))
        if res <= tol or (res <= RIEMANN_TOL and res >= 0.5 * prev):
            return s1, s2, m1, m2
        prev = res
        p1, p2 = lax_state(model, 1, s1 + h, a1, a2)
        p1, p2 = lax_state(model, 2, s2, p1, p2)
        q1, q2 = lax_state(model, 2, s2 + h, m1, m2)
        j11 = (p1 - w1) / h
        j21 = (p2 - w2) / h
        j12 = (q1 - w1) / h
        j22 = (q2 - w2) / h
        det = j11 * j22 - j12 * j21
        s1 -= (j22 * g1 - j12 * g2) / det
        s2 -= (-j21 * g1 + j11 * g2) / det
        if not (math.isfinite(s1) and math.isfinite(s2)):
            break
    raise NoConvergence(f"Riemann Newton failed (residual={prev:.3g})")


# --------------------------------------------------------------------------
# public operations


def _pair(u):
    return float(u[0]), float(u[1])


def _check_family(family):
    if family not in (1, 2):
        raise ValueError(f"family must be 1 or 2, got {family!r}")


def rarefaction_curve(model: FluxModel, family: int, sigma: float, u) -> np.ndarray:
    """State reached from ``u`` along the k-th rarefaction curve after ``sigma >= 0``."""
    _check_family(family)
    if sigma < 0:
        raise ValueError("rarefaction strength must be non-negative")
    u1, u2 = _pair(u)
    model.check_domain((u1, u2))
    return np.array(integral_curve(model, family, float(sigma), u1, u2))


def shock_curve(model: FluxModel, family: int, sigma: float, u):
    """State and speed of the admissible k-shock of strength ``sigma < 0`` from ``u``.

    Returns
    -------
    state : ndarray
    speed : float
        The k-th eigenvalue of the averaged Jacobian, i.e. the
        Rankine-Hugoniot speed.
    """
    _check_family(family)
    if sigma > 0:
        raise ValueError("shock strength must be negative")
    u1, u2 = _pair(u)
    model.check_domain((u1, u2))
    w1, w2, s = shock_state(model, family, float(sigma), u1, u2)
    return np.array([w1, w2]), s


def lax_curve(model: FluxModel, family: int, sigma: float, u) -> np.ndarray:
    _check_family(family)
    u1, u2 = _pair(u)
    model.check_domain((u1, u2))
    return np.array(lax_state(model, family, float(sigma), u1, u2))


@dataclass(frozen=True)
class RiemannSolution:
    sigma1: float
    sigma2: float
    middle_state: np.ndarray
    equivalence_constant: float

    @property
    def sigmas(self):
        return (self.sigma1, self.sigma2)


def _equivalence_constant(s1, s2, d1, d2):
    jump = max(abs(d1), abs(d2))
    total = abs(s1) + abs(s2)
    if jump == 0.0 or total == 0.0:
        return 1.0
    ratio = total / jump
    return max(ratio, 1.0 / ratio)


def solve_riemann(model: FluxModel, uL, uR) -> RiemannSolution:
    """Find ``(sigma1, sigma2)`` with ``uR = Psi_2(sigma2, Psi_1(sigma1, uL))``.

    Newton iteration with a forward-difference Jacobian (step ``1e-7``),
    started from the linearization ``sigma_k = l_k(uL) . (uR - uL)``.
    """
    a1, a2 = _pair(uL)
    b1, b2 = _pair(uR)
    model.check_domain((a1, a2), "left state")
    model.check_domain((b1, b2), "right state")
    s1, s2, m1, m2 = riemann_kernel(model, a1, a2, b1, b2)
    return RiemannSolution(s1, s2, np.array([m1, m2]), _equivalence_constant(s1, s2, b1 - a1, b2 - a2))


def apply_feedback(K, u):
    k = np.asarray(K, dtype=float)
    return (
        float(k[0, 0] * u[0] + k[0, 1] * u[1]),
        float(k[1, 0] * u[0] + k[1, 1] * u[1]),
    )


def solve_boundary_riemann(model: FluxModel, K, uL_trace, u0_trace) -> RiemannSolution:
    """Waves entering at ``x = 0`` joining ``K uL_trace`` (boundary value) to ``u0_trace``."""
    return solve_riemann(model, np.array(apply_feedback(K, uL_trace)), u0_trace)


def check_lax_admissibility(model: FluxModel, front, tol: float = 1e-10) -> bool:
    """``lambda_k(uR) < speed < lambda_k(uL)`` for a shock front.

    ``front`` needs ``family``, ``uL``, ``uR`` and ``speed`` attributes.
    """
    k = front.family
    lr = lam_k(model, k, float(front.uR[0]), float(front.uR[1]))
    ll = lam_k(model, k, float(front.uL[0]), float(front.uL[1]))
    return lr - tol < front.speed < ll + tol and lr < ll


# --------------------------------------------------------------------------
# interaction constants


@dataclass(frozen=True)
class InteractionEstimate:
    C_transversal: float
    C_same: float
    C_boundary: float
    samples: int

    @property
    def C_delta(self) -> float:
        return max(self.C_transversal, self.C_same, self.C_boundary)


def transversal_residual(model, u, sig2, sig1, alpha=1.0):
    """Interaction of a 2-front (left) with a 1-front (right).

    Returns ``(lhs, rhs)`` of the estimate
    ``|s1 - s1^| + |s2 - s2^| <= C |s1^| |s2^|`` in strengths rescaled by
    ``alpha`` for family 1.
    """
    a1, a2 = u
    m1, m2 = lax_state(model, 2, sig2, a1, a2)
    b1, b2 = lax_state(model, 1, sig1, m1, m2)
    s1, s2, _, _ = riemann_kernel(model, a1, a2, b1, b2)
    lhs = abs(s1 - sig1) / alpha + abs(s2 - sig2)
    rhs = abs(sig1) / alpha * abs(sig2)
    return lhs, rhs


def same_family_residual(model, k, u, sig_a, sig_b, alpha=1.0):
    """Two k-fronts with strengths ``sig_a`` (left) and ``sig_b`` (right)."""
    a1, a2 = u
    m1, m2 = lax_state(model, k, sig_a, a1, a2)
    b1, b2 = lax_state(model, k, sig_b, m1, m2)
    s1, s2, _, _ = riemann_kernel(model, a1, a2, b1, b2)
    sc = (1.0 / alpha, 1.0)
    sk, sother = (s1, s2) if k == 1 else (s2, s1)
    lhs = abs(sk - (sig_a + sig_b)) * sc[k - 1] + abs(sother) * sc[2 - k]
    ta = abs(sig_a) * sc[k - 1]
    tb = abs(sig_b) * sc[k - 1]
    return lhs, ta * tb * (ta + tb)


def boundary_residual(model, K, k, u, sig_hat, alpha=1.0):
    """A k-front hitting ``x = L``: deviation of the reflected strengths from their linearization."""
    a1, a2 = u
    b1, b2 = lax_state(model, k, sig_hat, a1, a2)
    ka = apply_feedback(K, (a1, a2))
    kb = apply_feedback(K, (b1, b2))
    s1, s2, _, _ = riemann_kernel(model, ka[0], ka[1], kb[0], kb[1])
    _, _, _, _, l1, l2 = eig_full(model, ka[0], ka[1])
    rk = r_k(model, k, a1, a2)
    krk = apply_feedback(K, rk)
    c1 = l1[0] * krk[0] + l1[1] * krk[1]
    c2 = l2[0] * krk[0] + l2[1] * krk[1]
    sc = (1.0 / alpha, 1.0)
    lhs = sc[0] * abs(s1 - sig_hat * c1) + sc[1] * abs(s2 - sig_hat * c2)
    return lhs, (sc[k - 1] * sig_hat) ** 2


def estimate_interaction_constants(
    model: FluxModel,
    samples: int = 200,
    seed: int = 0,
    state_radius: Optional[float] = None,
    sigma_max: Optional[float] = None,
    K=None,
    alpha: float = 1.0,
) -> InteractionEstimate:
    """Fit the interaction constants as the largest observed ratio lhs/rhs.

    States are drawn uniformly from the box of radius ``state_radius``;
    strength magnitudes uniformly from ``[sigma_max/10, sigma_max]``.  Same
    family pairs always include at least one shock.
    """
    rng = np.random.default_rng(seed)
    rad = state_radius if state_radius is not None else 0.25 * model.delta
    smax = sigma_max if sigma_max is not None else min(0.05, 0.25 * model.delta)

    def strength(sign=None):
        mag = rng.uniform(0.1 * smax, smax)
        if sign is None:
            sign = 1.0 if rng.random() < 0.5 else -1.0
        return sign * mag

    ct = cs = cb = 0.0
    for _ in range(samples):
        u = tuple(rng.uniform(-rad, rad, 2))
        lhs, rhs = transversal_residual(model, u, strength(), strength(), alpha)
        ct = max(ct, lhs / rhs)
        k = 1 if rng.random() < 0.5 else 2
        sa = strength()
        sb = strength(-1.0) if sa > 0 else strength()
        if rng.random() < 0.5:
            sa, sb = sb, sa
        lhs, rhs = same_family_residual(model, k, u, sa, sb, alpha)
        cs = max(cs, lhs / rhs)
        if K is not None:
            k = 1 if rng.random() < 0.5 else 2
            lhs, rhs = boundary_residual(model, K, k, u, strength(), alpha)
            cb = max(cb, lhs / rhs)
    return InteractionEstimate(ct, cs, cb, samples)
