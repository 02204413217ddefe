"""Piecewise-constant functions on ``[0, L]`` with values in R^2."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np


class PiecewiseConstant:
    """``U(x) = values[i]`` for ``breaks[i-1] <= x < breaks[i]``.

    Parameters
    ----------
    L : float
        Domain length.
    breaks : array_like, shape (n,)
        Strictly increasing interior breakpoints in ``(0, L)``.
    values : array_like, shape (n + 1, 2)
        Value on each piece, left to right.
    """

    def __init__(self, L: float, breaks, values):
        self.L = float(L)
        self.breaks = np.asarray(breaks, dtype=float).reshape(-1)
        self.values = np.asarray(values, dtype=float).reshape(-1, 2)
        if len(self.values) != len(self.breaks) + 1:
            raise ValueError("need exactly one more value than breakpoints")
        if np.any(np.diff(self.breaks) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if len(self.breaks) and (self.breaks[0] <= 0 or self.breaks[-1] >= self.L):
            raise ValueError("breakpoints must lie strictly inside (0, L)")

    @classmethod
    def constant(cls, L: float, u) -> "PiecewiseConstant":
        return cls(L, [], [u])

    def __call__(self, x):
        idx = np.searchsorted(self.breaks, x, side="right")
        return self.values[idx]

    @property
    def left_trace(self) -> np.ndarray:
        """``U(0+)``."""
        return self.values[0]

    @property
    def right_trace(self) -> np.ndarray:
        """``U(L-)``."""
        return self.values[-1]

    def jumps(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def total_variation(self) -> float:
        """Sum of sup-norm jumps across the interior breakpoints."""
        if len(self.breaks) == 0:
            return 0.0
        return float(np.abs(self.jumps()).max(axis=1).sum())

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())

    def merged(self) -> "PiecewiseConstant":
        """Drop breakpoints across which the value does not change."""
        if len(self.breaks) == 0:
            return self
        keep = np.any(self.jumps() != 0.0, axis=1)
        vals = np.vstack([self.values[:1], self.values[1:][keep]])
        return PiecewiseConstant(self.L, self.breaks[keep], vals)

    def l1_distance(self, other: "PiecewiseConstant") -> float:
        """Exact ``int_0^L |U - W|_inf dx`` over the union of breakpoints."""
        if abs(self.L - other.L) > 1e-12 * self.L:
            raise ValueError("domains differ")
        grid = np.union1d(self.breaks, other.breaks)
        edges = np.concatenate([[0.0], grid, [self.L]])
        mids = 0.5 * (edges[:-1] + edges[1:])
        widths = np.diff(edges)
        diff = np.abs(self(mids) - other(mids)).max(axis=1)
        return float(np.dot(widths, diff))

    def __repr__(self):
        return f"PiecewiseConstant(L={self.L}, pieces={len(self.values)})"


# --------------------------------------------------------------------------
# initial data generators


def jump(L: float, x0: float, u_left, u_right) -> PiecewiseConstant:
    return PiecewiseConstant(L, [x0], [u_left, u_right])


def sample_profile(profile: Callable[[np.ndarray], np.ndarray], L: float, cells: int) -> PiecewiseConstant:
    """Sample ``profile`` at the centres of ``cells`` equal cells.

    Point sampling never increases the total variation of the profile.
    """
    if cells < 1:
        raise ValueError("cells must be positive")
    dx = L / cells
    centres = (np.arange(cells) + 0.5) * dx
    vals = np.asarray(profile(centres), dtype=float).reshape(cells, 2)
    breaks = np.arange(1, cells) * dx
    return PiecewiseConstant(L, breaks, vals).merged()


def cell_averages(profile: Callable[[np.ndarray], np.ndarray], L: float, cells: int, order: int = 4) -> np.ndarray:
    """Gauss-Legendre cell averages of ``profile``, shape ``(cells, 2)``."""
    x, w = np.polynomial.legendre.leggauss(order)
    dx = L / cells
    left = np.arange(cells) * dx
    pts = left[:, None] + 0.5 * dx * (x[None, :] + 1.0)
    vals = np.asarray(profile(pts.ravel()), dtype=float).reshape(cells, order, 2)
    return 0.5 * np.einsum("j,cjk->ck", w, vals)


def sine_profile(L: float, amplitude: float, direction=(1.0, 1.0)):
    d = np.asarray(direction, dtype=float)

    def profile(x):
        s = amplitude * np.sin(2.0 * math.pi * np.asarray(x) / L)
        return s[..., None] * d

    return profile


def bump_profile(L: float, amplitude: float, direction=(1.0, 1.0), centre=None, width=None):
    """Smooth ``cos^2`` bump supported in ``[centre - width/2, centre + width/2]``."""
    d = np.asarray(direction, dtype=float)
    c = 0.5 * L if centre is None else centre
    w = 0.5 * L if width is None else width

    def profile(x):
        z = (np.asarray(x) - c) / w
        s = np.where(np.abs(z) < 0.5, amplitude * np.cos(math.pi * z) ** 2, 0.0)
        return s[..., None] * d

    return profile


def from_breakpoints(L: float, xs: Sequence[float], values) -> PiecewiseConstant:
    return PiecewiseConstant(L, xs, values).merged()


def cell_means(U: PiecewiseConstant, cells: int) -> np.ndarray:
    """Exact averages of ``U`` over ``cells`` equal cells, shape ``(cells, 2)``."""
    edges = np.linspace(0.0, U.L, cells + 1)
    knots = np.concatenate([[0.0], U.breaks, [U.L]])
    # antiderivative at the knots, then linear interpolation in between
    F = np.vstack([np.zeros(2), np.cumsum(np.diff(knots)[:, None] * U.values, axis=0)])
    Fe = np.column_stack([np.interp(edges, knots, F[:, c]) for c in range(2)])
    return np.diff(Fe, axis=0) / np.diff(edges)[:, None]


def from_cells(L: float, averages) -> PiecewiseConstant:
    """Piecewise-constant function with the given cell values on a uniform grid."""
    v = np.asarray(averages, dtype=float).reshape(-1, 2)
    n = len(v)
    return PiecewiseConstant(L, np.arange(1, n) * (L / n), v).merged()
