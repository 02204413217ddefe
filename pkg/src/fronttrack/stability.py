"""Stability quantities of a 2x2 feedback matrix ``K``.

``rho_p(K) = inf_D ||D K D^-1||_p`` over positive diagonal ``D``;
``rho_0(K) = max_theta rho(diag(e^{i theta}) K)``.  For 2x2 matrices every
optimization is one-dimensional.  Here ``||M||_1`` is the largest row sum
and ``||M||_inf`` the largest column sum; both conventions give the same
``rho`` values since ``rho_1 = rho_inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateEigenbasis, InconclusiveNearBoundary
from .flux_model import FluxModel, eigen_structure

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _as_matrix(K) -> np.ndarray:
    return np.asarray(K, dtype=float).reshape(2, 2)


def spectral_radius_nonneg(P) -> float:
    """Perron root of a nonnegative 2x2 matrix, closed form."""
    (a, b), (c, d) = np.asarray(P, dtype=float)
    return 0.5 * (a + d + math.sqrt((a - d) ** 2 + 4.0 * b * c))


def rho1(K) -> float:
    """``rho(|K|)``."""
    return spectral_radius_nonneg(np.abs(_as_matrix(K)))


def golden_min(f, lo: float, hi: float, tol: float = 1e-8, coarse: int = 97):
    """Minimize ``f`` on ``[lo, hi]``: coarse bracketing scan, then golden section."""
    xs = np.linspace(lo, hi, coarse)
    vals = [f(x) for x in xs]
    i = int(np.argmin(vals))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, coarse - 1)]
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    fx = f(x)
    if vals[i] < fx:
        return float(xs[i]), float(vals[i])
    return x, fx


def _scaled(K, d):
    """``diag(1, d) K diag(1, 1/d)``."""
    return np.array([[K[0, 0], K[0, 1] / d], [K[1, 0] * d, K[1, 1]]])


def norm_p(M, p) -> float:
    M = np.asarray(M, dtype=float)
    if p == 1:
        return float(np.abs(M).sum(axis=1).max())
    if p in (math.inf, "inf"):
        return float(np.abs(M).sum(axis=0).max())
    if p == 2:
        s = float((M * M).sum())
        det = float(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])
        return math.sqrt(0.5 * (s + math.sqrt(max(s * s - 4.0 * det * det, 0.0))))
    raise ValueError(f"unsupported p = {p!r}")


def rho_p(K, p, tol: float = 1e-8, return_scaling: bool = False):
    """Infimum of ``||D K D^-1||_p`` over positive diagonal ``D``.

    Minimizes over ``log d`` in ``[-12, 12]`` with ``D = diag(1, d)``.
    """
    K = _as_matrix(K)
    if p == "inf":
        p = math.inf
    if K[0, 1] == 0.0 or K[1, 0] == 0.0:
        # triangular: the infimum is the spectral radius, reached only as d -> 0 or inf
        d = math.inf if K[1, 0] == 0.0 else 0.0
        val = max(abs(K[0, 0]), abs(K[1, 1]))
        return (val, d) if return_scaling else val
    f = lambda s: norm_p(_scaled(K, math.exp(s)), p)  # noqa: E731
    s, val = golden_min(f, -12.0, 12.0, tol)
    if f(0.0) <= val:
        s, val = 0.0, f(0.0)
    return (val, math.exp(s)) if return_scaling else val


def _phase_radius(K, t1, t2):
    """Spectral radius of ``diag(e^{i t1}, e^{i t2}) K`` for arrays of angles."""
    z1 = np.exp(1j * t1)
    z2 = np.exp(1j * t2)
    a = z1 * K[0, 0]
    b = z1 * K[0, 1]
    c = z2 * K[1, 0]
    d = z2 * K[1, 1]
    half = 0.5 * (a + d)
    root = np.sqrt(0.25 * (a - d) ** 2 + b * c)
    return np.maximum(np.abs(half + root), np.abs(half - root))


def rho0(K, n: int = 720, refine: int = 41) -> float:
    """``max_theta rho(diag(e^{i theta_1}, e^{i theta_2}) K)`` on an ``n x n`` grid, refined once."""
    K = _as_matrix(K)
    th = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    t1, t2 = np.meshgrid(th, th, indexing="ij")
    r = _phase_radius(K, t1, t2)
    i, j = np.unravel_index(int(np.argmax(r)), r.shape)
    best = float(r[i, j])
    step = th[1] - th[0]
    loc = np.linspace(-step, step, refine)
    u1, u2 = np.meshgrid(th[i] + loc, th[j] + loc, indexing="ij")
    return max(best, float(_phase_radius(K, u1, u2).max()))


def rho2(K) -> float:
    return rho_p(K, 2)


def rho_inf(K) -> float:
    return rho_p(K, math.inf)


# --------------------------------------------------------------------------
# boundary condition in eigen-coordinates


def eigen_coordinates(model: FluxModel, K) -> np.ndarray:
    """``M[i, k] = l_i(0) . K r_k(0)``."""
    es = eigen_structure(model, np.zeros(2))
    R = np.column_stack([es.r1, es.r2])
    det = float(np.linalg.det(R)) / (np.linalg.norm(es.r1) * np.linalg.norm(es.r2))
    if abs(det) < 1e-10:
        raise DegenerateEigenbasis(f"eigenvectors at 0 are nearly parallel (sin angle {det:.3g})")
    Lm = np.vstack([es.l1, es.l2])
    return Lm @ _as_matrix(K) @ R


def alpha_form(M, alpha: float) -> float:
    """``max(|M11| + a |M21|, |M12| / a + |M22|)``."""
    P = np.abs(np.asarray(M, dtype=float))
    return max(P[0, 0] + alpha * P[1, 0], P[0, 1] / alpha + P[1, 1])


class Condition12(NamedTuple):
    satisfied: bool
    margin: float
    alpha_star: float

    @property
    def value(self) -> float:
        return 1.0 - self.margin


def optimal_alpha(M, tol: float = 1e-8):
    """Minimize :func:`alpha_form` over ``log alpha`` in ``[-40, 40]``.

    The function is unimodal in ``log alpha``; among (near) minimizers the
    one closest to ``alpha = 1`` is returned.
    """
    f = lambda s: alpha_form(M, math.exp(s))  # noqa: E731
    s, val = golden_min(f, -40.0, 40.0, tol)
    flat = val + 1e-12 * max(1.0, abs(val))
    if f(0.0) <= flat:
        return 1.0, min(val, f(0.0))
    # walk from the minimizer toward 0 while the value stays flat
    a, b = (s, 0.0)
    while abs(b - a) > tol:
        m = 0.5 * (a + b)
        if f(m) <= flat:
            a = m
        else:
            b = m
    return math.exp(a), f(a)


def condition12(model: FluxModel, K) -> Condition12:
    """Boundary dissipativity at ``u = 0`` after the best rescaling of ``r_1``.

    Satisfied iff ``inf_alpha max(|l1.Kr1| + a |l2.Kr1|, |l1.Kr2| / a + |l2.Kr2|) < 1``;
    ``margin`` is one minus that infimum.
    """
    M = eigen_coordinates(model, K)
    alpha, val = optimal_alpha(M)
    return Condition12(val < 1.0, 1.0 - val, alpha)


@dataclass(frozen=True)
class FeedbackMatrix:
    entries: np.ndarray
    rho1: float
    rho0: float
    rho2: float
    rho_inf: float
    condition12_margin: float

    @classmethod
    def analyze(cls, K, model: Optional[FluxModel] = None) -> "FeedbackMatrix":
        K = _as_matrix(K)
        margin = condition12(model, K).margin if model is not None else 1.0 - rho1(K)
        return cls(K.copy(), rho1(K), rho0(K), rho2(K), rho_inf(K), margin)


# --------------------------------------------------------------------------
# linear characteristic roots


def _char(z, lam, K):
    e1 = np.exp(-z / lam[0])
    e2 = np.exp(-z / lam[1])
    det = K[0, 0] * K[1, 1] - K[0, 1] * K[1, 0]
    return 1.0 - K[0, 0] * e1 - K[1, 1] * e2 + det * e1 * e2


def _char_prime(z, lam, K):
    e1 = np.exp(-z / lam[0])
    e2 = np.exp(-z / lam[1])
    det = K[0, 0] * K[1, 1] - K[0, 1] * K[1, 0]
    return K[0, 0] * e1 / lam[0] + K[1, 1] * e2 / lam[1] - det * (1 / lam[0] + 1 / lam[1]) * e1 * e2


def _newton(z, lam, K, iters=60, tol=1e-13):
    for _ in range(iters):
        fz = _char(z, lam, K)
        dz = fz / _char_prime(z, lam, K)
        z = z - dz
        if abs(dz) <= tol * max(1.0, abs(z)):
            break
    return z


def _arg_increments(vals):
    return np.angle(vals[..., 1:] / vals[..., :-1])


def count_roots(lam, K, re_lo, re_hi, im_lo, im_hi, nx=400, ny=400, sub=8, max_sub=128):
    """Winding number of the characteristic function around each grid cell.

    Each cell edge is split into ``sub`` pieces; ``sub`` doubles until no
    piece turns the argument by more than ``pi / 2``.

    Returns
    -------
    counts : ndarray of int, shape (nx, ny)
    xs, ys : ndarray
        Cell edge coordinates.
    """
    K = _as_matrix(K)
    xs = np.linspace(re_lo, re_hi, nx + 1)
    ys = np.linspace(im_lo, im_hi, ny + 1)
    while True:
        xf = np.linspace(re_lo, re_hi, nx * sub + 1)
        yf = np.linspace(im_lo, im_hi, ny * sub + 1)
        # horizontal edges: rows at ys, fine in x
        H = _char(xf[None, :] + 1j * ys[:, None], lam, K)
        # vertical edges: columns at xs, fine in y
        Vv = _char(xs[:, None] + 1j * yf[None, :], lam, K)
        dH = _arg_increments(H)
        dV = _arg_increments(Vv)
        if max(np.abs(dH).max(), np.abs(dV).max()) < 0.5 * math.pi or sub >= max_sub:
            break
        sub *= 2
    # per-cell edge sums
    h_edge = dH.reshape(ny + 1, nx, sub).sum(axis=2)  # [row j, cell i], left to right
    v_edge = dV.reshape(nx + 1, ny, sub).sum(axis=2)  # [col i, cell j], bottom to top
    wind = h_edge[:-1, :].T + v_edge[1:, :] - h_edge[1:, :].T - v_edge[:-1, :]
    counts = np.rint(wind / (2.0 * math.pi)).astype(int)
    return counts, xs, ys


def find_roots(lam, K, re_lo, re_hi, im_lo=-200.0, im_hi=200.0, nx=400, ny=400):
    """Roots located by cell counting and polished by Newton (with multiplicity)."""
    counts, xs, ys = count_roots(lam, K, re_lo, re_hi, im_lo, im_hi, nx, ny)
    roots = []
    for i, j in zip(*np.nonzero(counts)):
        z0 = complex(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]))
        z = _newton(z0, lam, _as_matrix(K))
        roots.extend([z] * int(max(counts[i, j], 1)))
    return roots, int(counts.sum())


@dataclass(frozen=True)
class SpectralVerdict:
    stable: bool
    worst_root: Optional[complex]
    n_roots: int

    def __iter__(self):
        return iter((self.stable, self.worst_root))


def linear_spectral_check(lambdas, K, delta: float = 0.01, re_max: float = 10.0,
                          im_max: float = 200.0, grid: int = 400, report_band: float = 2.0) -> SpectralVerdict:
    """Are all roots of ``det(I - diag(e^{-z/l1}, e^{-z/l2}) K)`` left of ``Re z = -delta``?

    Scans ``[-delta, re_max] x [-im_max, im_max]``.  When that rectangle is
    root free, a band of width ``report_band`` left of it is scanned too so
    the rightmost root can still be reported.

    Raises
    ------
    InconclusiveNearBoundary
        If a root sits within ``1e-6`` of ``Re z = -delta``.
    """
    lam = tuple(float(v) for v in lambdas)
    if min(lam) <= 0:
        raise ValueError("speeds must be positive")
    K = _as_matrix(K)
    roots, n = find_roots(lam, K, -delta, re_max, -im_max, im_max, grid, grid)
    stable = n == 0
    if stable and report_band > 0:
        nb = max(int(grid * report_band / (re_max + delta)), 16)
        roots, _ = find_roots(lam, K, -delta - report_band, -delta, -im_max, im_max, nb, grid)
    for z in roots:
        if abs(z.real + delta) < 1e-6:
            raise InconclusiveNearBoundary(f"root {z:.6g} on the boundary Re z = {-delta}", root=z)
    worst = max(roots, key=lambda z: z.real) if roots else None
    return SpectralVerdict(stable, worst, n)
