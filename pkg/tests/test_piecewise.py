import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fronttrack.piecewise import (PiecewiseConstant, bump_profile, cell_averages, cell_means, from_cells,
                                  jump, sample_profile, sine_profile)


@st.composite
def pcs(draw, L=1.0):
    n = draw(st.integers(0, 6))
    xs = sorted(set(draw(st.lists(st.floats(0.01, 0.99), min_size=n, max_size=n))))
    vals = draw(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=len(xs) + 1,
                         max_size=len(xs) + 1))
    return PiecewiseConstant(L, xs, vals)


def midpoint_l1(U, W, n=20000):
    x = (np.arange(n) + 0.5) / n * U.L
    return float(np.abs(U(x) - W(x)).max(axis=1).sum() * U.L / n)


@given(pcs(), pcs())
def test_l1_distance_against_sampling(U, W):
    d = U.l1_distance(W)
    assert d == pytest.approx(midpoint_l1(U, W), abs=2e-3)
    assert d == pytest.approx(W.l1_distance(U), abs=1e-15)
    assert U.l1_distance(U) == 0.0


def test_l1_distance_exact_example():
    U = jump(1.0, 0.3, (0, 0), (1, 0))
    W = jump(1.0, 0.6, (0, 0), (1, 0))
    assert U.l1_distance(W) == pytest.approx(0.3, abs=1e-15)


def test_validation():
    with pytest.raises(ValueError):
        PiecewiseConstant(1.0, [0.5, 0.4], [(0, 0)] * 3)
    with pytest.raises(ValueError):
        PiecewiseConstant(1.0, [1.0], [(0, 0)] * 2)
    with pytest.raises(ValueError):
        PiecewiseConstant(1.0, [0.5], [(0, 0)])


def test_merged_drops_flat_breaks():
    U = PiecewiseConstant(1.0, [0.2, 0.5], [(0, 0), (0, 0), (1, 1)]).merged()
    assert list(U.breaks) == [0.5]


@pytest.mark.parametrize("cells", [5, 20, 100])
def test_sampling_does_not_increase_variation(cells):
    # TV of A sin(2 pi x) (1, 1) in the sup norm is 4 A
    U = sample_profile(sine_profile(1.0, 0.02), 1.0, cells)
    assert U.total_variation() <= 4 * 0.02 + 1e-15
    V = sample_profile(bump_profile(1.0, 0.05), 1.0, cells)
    assert V.total_variation() <= 2 * 0.05 + 1e-15


@given(pcs(), st.integers(16, 64))
def test_cell_means_preserve_integral(U, cells):
    m = cell_means(U, cells)
    integral = np.array([np.dot(np.diff(np.concatenate([[0], U.breaks, [1]])), U.values[:, c]) for c in (0, 1)])
    np.testing.assert_allclose(m.sum(axis=0) / cells, integral, atol=1e-12)


def test_cell_averages_of_sine():
    n = 32
    avg = cell_averages(sine_profile(1.0, 1.0), 1.0, n, order=6)
    edges = np.arange(n + 1) / n
    exact = -(np.cos(2 * np.pi * edges[1:]) - np.cos(2 * np.pi * edges[:-1])) / (2 * np.pi) * n
    np.testing.assert_allclose(avg[:, 0], exact, atol=1e-10)
    W = from_cells(1.0, avg)
    assert W.sup_norm() <= 1.0
