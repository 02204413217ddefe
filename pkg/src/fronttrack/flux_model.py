"""Flux models for 2x2 systems ``u_t + f(u)_x = 0`` with positive speeds.

Eigenvectors follow one fixed convention throughout the package: ``r_k`` is
scaled so that ``D lambda_k . r_k = 1`` (the directional derivative is taken
by central differences), and ``l_1, l_2`` form the dual basis.  With this
scaling the strength of a rarefaction equals the increment of its
characteristic speed.

Hot paths work on plain floats; the public functions accept and return
numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    NotGenuinelyNonlinear,
    NotHyperbolic,
    NotPositive,
    OutOfDomain,
)

FD_STEP = 1e-6
_HYP_TOL = 1e-14

_gl_x, _gl_w = np.polynomial.legendre.leggauss(5)
GL_NODES = tuple(float(x) for x in 0.5 * (_gl_x + 1.0))
GL_WEIGHTS = tuple(float(w) for w in 0.5 * _gl_w)


class FluxModel:
    """A 2x2 flux with its Jacobian, valid on the box ``|u|_inf <= delta``.

    Parameters
    ----------
    name : str
        Identifier used in configs and output files.
    flux : callable
        ``flux(u) -> array of shape (2,)``.
    jacobian : callable, optional
        ``jacobian(u) -> array of shape (2, 2)``.  When omitted, the
        Jacobian is approximated by central differences of ``flux`` with
        step ``1e-6``.
    delta : float
        Radius of the validity box.
    jac_scalar, flux_scalar : callable, optional
        Float-only fast paths ``(u1, u2) -> tuple``.  Builtin models set
        these; user models normally leave them alone.
    """

    def __init__(
        self,
        name: str,
        flux: Callable[[np.ndarray], np.ndarray],
        jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        delta: float = 0.4,
        *,
        jac_scalar: Optional[Callable[[float, float], tuple]] = None,
        flux_scalar: Optional[Callable[[float, float], tuple]] = None,
        params: Optional[dict] = None,
    ):
        if not delta > 0:
            raise ValueError("delta must be positive")
        self.name = name
        self.delta = float(delta)
        self.params = dict(params or {})
        self._flux = flux
        self._jacobian = jacobian

        if flux_scalar is None:
            def flux_scalar(u1, u2, _f=flux):
                f = _f(np.array([u1, u2]))
                return float(f[0]), float(f[1])
        if jac_scalar is None:
            if jacobian is not None:
                def jac_scalar(u1, u2, _j=jacobian):
                    a = np.asarray(_j(np.array([u1, u2])), dtype=float)
                    return float(a[0, 0]), float(a[0, 1]), float(a[1, 0]), float(a[1, 1])
            else:
                def jac_scalar(u1, u2, _f=flux_scalar, e=FD_STEP):
                    fp1 = _f(u1 + e, u2)
                    fm1 = _f(u1 - e, u2)
                    fp2 = _f(u1, u2 + e)
                    fm2 = _f(u1, u2 - e)
                    return (
                        (fp1[0] - fm1[0]) / (2 * e),
                        (fp2[0] - fm2[0]) / (2 * e),
                        (fp1[1] - fm1[1]) / (2 * e),
                        (fp2[1] - fm2[1]) / (2 * e),
                    )
        self.flux2 = flux_scalar
        self.jac4 = jac_scalar

    def flux(self, u) -> np.ndarray:
        return np.array(self.flux2(float(u[0]), float(u[1])))

    def jacobian(self, u) -> np.ndarray:
        a, b, c, d = self.jac4(float(u[0]), float(u[1]))
        return np.array([[a, b], [c, d]])

    def in_domain(self, u, slack: float = 0.0) -> bool:
        lim = self.delta * (1.0 + 1e-12) + slack
        return abs(u[0]) <= lim and abs(u[1]) <= lim

    def check_domain(self, u, what: str = "state"):
        if not self.in_domain(u):
            raise OutOfDomain(
                f"{what} ({u[0]:.6g}, {u[1]:.6g}) outside |u| <= {self.delta:g} for {self.name}"
            )

    def __repr__(self):
        return f"FluxModel({self.name!r}, delta={self.delta})"


@dataclass(frozen=True)
class EigenStructure:
    lambda1: float
    lambda2: float
    r1: np.ndarray
    r2: np.ndarray
    l1: np.ndarray
    l2: np.ndarray

    @property
    def lambdas(self):
        return (self.lambda1, self.lambda2)

    def r(self, k: int) -> np.ndarray:
        return self.r1 if k == 1 else self.r2

    def l(self, k: int) -> np.ndarray:  # noqa: E743
        return self.l1 if k == 1 else self.l2


# --------------------------------------------------------------------------
# float kernels


def eigvals4(a, b, c, d):
    half_tr = 0.5 * (a + d)
    disc = 0.25 * (a - d) ** 2 + b * c
    scale = 1e-300 + abs(a) + abs(b) + abs(c) + abs(d)
    if disc <= (_HYP_TOL * scale) ** 2:
        raise NotHyperbolic(f"eigenvalues coincide or are complex (discriminant {disc:.3g})")
    s = math.sqrt(disc)
    return half_tr - s, half_tr + s


def raw_eigvec(a, b, c, d, lam):
    """Closed-form (unnormalized) right eigenvector of ``[[a, b], [c, d]]``."""
    if b == 0.0 and c == 0.0:
        return (1.0, 0.0) if abs(lam - a) <= abs(lam - d) else (0.0, 1.0)
    if abs(b) >= abs(c):
        return (b, lam - a)
    return (lam - d, c)


def lam_k(model: FluxModel, k: int, u1: float, u2: float) -> float:
    return eigvals4(*model.jac4(u1, u2))[k - 1]


def grad_lam(model: FluxModel, k: int, u1: float, u2: float, e: float = FD_STEP):
    """Central-difference gradient of ``lambda_k`` at ``(u1, u2)``."""
    g1 = (lam_k(model, k, u1 + e, u2) - lam_k(model, k, u1 - e, u2)) / (2 * e)
    g2 = (lam_k(model, k, u1, u2 + e) - lam_k(model, k, u1, u2 - e)) / (2 * e)
    return g1, g2


def _directional(model, k, u1, u2, v1, v2, e=FD_STEP):
    """``D lambda_k . v`` for a unit vector v."""
    return (lam_k(model, k, u1 + e * v1, u2 + e * v2) - lam_k(model, k, u1 - e * v1, u2 - e * v2)) / (2 * e)


def r_k(model: FluxModel, k: int, u1: float, u2: float):
    """Normalized right eigenvector ``r_k`` (``D lambda_k . r_k = 1``)."""
    a, b, c, d = model.jac4(u1, u2)
    lam = eigvals4(a, b, c, d)[k - 1]
    v1, v2 = raw_eigvec(a, b, c, d, lam)
    n = math.hypot(v1, v2)
    v1 /= n
    v2 /= n
    g = _directional(model, k, u1, u2, v1, v2)
    if abs(g) < 1e-12:
        raise NotGenuinelyNonlinear(f"D lambda_{k} . r_{k} vanishes at ({u1:.6g}, {u2:.6g})")
    return v1 / g, v2 / g


def eig_full(model: FluxModel, u1: float, u2: float):
    """Return ``(lam1, lam2, r1, r2, l1, l2)`` as float tuples."""
    a, b, c, d = model.jac4(u1, u2)
    lam1, lam2 = eigvals4(a, b, c, d)
    rs = []
    for k, lam in ((1, lam1), (2, lam2)):
        v1, v2 = raw_eigvec(a, b, c, d, lam)
        n = math.hypot(v1, v2)
        v1 /= n
        v2 /= n
        g = _directional(model, k, u1, u2, v1, v2)
        if abs(g) < 1e-12:
            raise NotGenuinelyNonlinear(f"D lambda_{k} . r_{k} vanishes at ({u1:.6g}, {u2:.6g})")
        rs.append((v1 / g, v2 / g))
    (r1x, r1y), (r2x, r2y) = rs
    det = r1x * r2y - r2x * r1y
    l1 = (r2y / det, -r2x / det)
    l2 = (-r1y / det, r1x / det)
    return lam1, lam2, rs[0], rs[1], l1, l2


def avg_jac4(model: FluxModel, u1, u2, w1, w2):
    """5-point Gauss-Legendre average of the Jacobian along the segment u -> w."""
    a = b = c = d = 0.0
    d1 = w1 - u1
    d2 = w2 - u2
    for t, wt in zip(GL_NODES, GL_WEIGHTS):
        ja, jb, jc, jd = model.jac4(u1 + t * d1, u2 + t * d2)
        a += wt * ja
        b += wt * jb
        c += wt * jc
        d += wt * jd
    return a, b, c, d


# --------------------------------------------------------------------------
# public operations


def eigen_structure(model: FluxModel, u) -> EigenStructure:
    """Eigenvalues and normalized eigenvectors of ``Df(u)``.

    Raises
    ------
    OutOfDomain
        If ``|u|_inf > delta``.
    NotHyperbolic
        If the eigenvalues are not real and distinct.
    NotPositive
        If ``lambda_1 <= 0``.
    """
    u1, u2 = float(u[0]), float(u[1])
    model.check_domain((u1, u2))
    lam1, lam2, r1, r2, l1, l2 = eig_full(model, u1, u2)
    if lam1 <= 0.0:
        raise NotPositive(f"lambda_1 = {lam1:.6g} <= 0 at ({u1:.6g}, {u2:.6g})")
    return EigenStructure(lam1, lam2, np.array(r1), np.array(r2), np.array(l1), np.array(l2))


def averaged_matrix(model: FluxModel, uL, uR) -> np.ndarray:
    """Path average ``int_0^1 Df(uL + t (uR - uL)) dt``."""
    model.check_domain(uL, "left state")
    model.check_domain(uR, "right state")
    a, b, c, d = avg_jac4(model, float(uL[0]), float(uL[1]), float(uR[0]), float(uR[1]))
    return np.array([[a, b], [c, d]])


@dataclass(frozen=True)
class NonlinearityReport:
    min_values: tuple  # (family 1, family 2)
    passed: bool
    samples: int


def check_genuine_nonlinearity(model: FluxModel, samples: int = 21) -> NonlinearityReport:
    """Sample ``D lambda_k . r_k`` on a ``samples x samples`` grid of the domain box.

    The eigenvector used here is the closed-form one before rescaling, with
    its sign chosen to make the product non-negative where possible.  The
    check passes iff both minima are strictly positive.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    grid = np.linspace(-model.delta, model.delta, samples) if samples > 1 else np.array([0.0])
    mins = [math.inf, math.inf]
    for u1 in grid:
        for u2 in grid:
            a, b, c, d = model.jac4(float(u1), float(u2))
            lams = eigvals4(a, b, c, d)
            for k in (1, 2):
                v1, v2 = raw_eigvec(a, b, c, d, lams[k - 1])
                n = math.hypot(v1, v2)
                g = n * _directional(model, k, float(u1), float(u2), v1 / n, v2 / n)
                mins[k - 1] = min(mins[k - 1], abs(g))
    tol = 1e-8
    return NonlinearityReport((mins[0], mins[1]), mins[0] > tol and mins[1] > tol, samples)


# --------------------------------------------------------------------------
# builtin models


def decoupled_burgers(delta: float = 0.4) -> FluxModel:
    """``f(u) = (u1 + u1^2/2, 2 u2 + u2^2/2)``: two independent Burgers equations."""

    def flux2(u1, u2):
        return u1 + 0.5 * u1 * u1, 2.0 * u2 + 0.5 * u2 * u2

    def jac4(u1, u2):
        return 1.0 + u1, 0.0, 0.0, 2.0 + u2

    return FluxModel(
        "decoupled_burgers",
        lambda u: np.array(flux2(u[0], u[1])),
        lambda u: np.array([[1.0 + u[0], 0.0], [0.0, 2.0 + u[1]]]),
        delta,
        jac_scalar=jac4,
        flux_scalar=flux2,
        params={"delta": delta},
    )


def coupled_drift(delta: float = 0.4) -> FluxModel:
    """``f(u) = (2 u1 + u2, (1 + u1)^3/3 - 1/3 + 2 u2)``; speeds ``1 - u1`` and ``3 + u1``."""

    def flux2(u1, u2):
        return 2.0 * u1 + u2, (1.0 + u1) ** 3 / 3.0 - 1.0 / 3.0 + 2.0 * u2

    def jac4(u1, u2):
        return 2.0, 1.0, (1.0 + u1) ** 2, 2.0

    return FluxModel(
        "coupled_drift",
        lambda u: np.array(flux2(u[0], u[1])),
        lambda u: np.array([[2.0, 1.0], [(1.0 + u[0]) ** 2, 2.0]]),
        delta,
        jac_scalar=jac4,
        flux_scalar=flux2,
        params={"delta": delta},
    )


def linear_model(lambda1: float = 1.0, lambda2: float = 2.0, delta: float = 0.4) -> FluxModel:
    """``f(u) = diag(lambda1, lambda2) u``.  Linearly degenerate; useful as a counterexample."""

    def flux2(u1, u2):
        return lambda1 * u1, lambda2 * u2

    def jac4(u1, u2):
        return lambda1, 0.0, 0.0, lambda2

    return FluxModel(
        "linear",
        lambda u: np.array(flux2(u[0], u[1])),
        lambda u: np.diag([lambda1, lambda2]).astype(float),
        delta,
        jac_scalar=jac4,
        flux_scalar=flux2,
        params={"lambda1": lambda1, "lambda2": lambda2, "delta": delta},
    )


BUILTIN_MODELS = {
    "decoupled_burgers": decoupled_burgers,
    "coupled_drift": coupled_drift,
    "linear": linear_model,
}


def get_model(name: str, **params) -> FluxModel:
    try:
        factory = BUILTIN_MODELS[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(BUILTIN_MODELS)}") from None
    return factory(**params)
