import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fronttrack.errors import InconclusiveNearBoundary
from fronttrack.stability import (FeedbackMatrix, alpha_form, condition12, count_roots, eigen_coordinates,
                                  linear_spectral_check, norm_p, optimal_alpha, rho0, rho1, rho2, rho_inf,
                                  rho_p)

from conftest import K_a

entries = st.floats(-2, 2, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-3)
mats = arrays(float, (2, 2), elements=entries)


def brute_rho_p(K, p, n=4001):
    """Scan ``log d`` on a fine grid; the oracle for the golden-section search."""
    best = math.inf
    for s in np.linspace(-12, 12, n):
        d = math.exp(s)
        M = np.array([[K[0, 0], K[0, 1] / d], [K[1, 0] * d, K[1, 1]]])
        best = min(best, norm_p(M, p))
    return best


def brute_rho0(K, n=400):
    best = 0.0
    for t in np.linspace(0, 2 * math.pi, n, endpoint=False):
        best = max(best, np.abs(np.linalg.eigvals(np.diag([1.0, cmath.exp(1j * t)]) @ K)).max())
    return best


def K_a_rightmost(a):
    """Rightmost root real part for lambda = (1, 2): with w = exp(-z/2), a w^2 + a w - 1 = 0."""
    w = np.roots([a, a, -1.0])
    return -2.0 * math.log(np.abs(w).min())


# --------------------------------------------------------------- rho


@pytest.mark.parametrize("a", [-0.7, -0.3, 0.0, 0.3, 0.45, 0.55, 1.3])
def test_rho_of_K_a(a):
    K = K_a(a)
    assert rho1(K) == pytest.approx(2 * abs(a), abs=1e-12)
    assert rho0(K) == pytest.approx(2 * abs(a), abs=1e-3)
    assert rho2(K) == pytest.approx(2 * abs(a), abs=1e-6)
    assert rho_inf(K) == pytest.approx(2 * abs(a), abs=1e-6)


def test_rho_examples():
    assert rho_p(np.array([[0.0, 0.0], [1.0, 0.0]]), 1) == 0.0
    assert rho_p(np.array([[0.2, 5.0], [0.0, -0.3]]), 2, return_scaling=True) == (0.3, math.inf)
    assert rho1(np.diag([0.5, -0.8])) == pytest.approx(0.8)
    assert rho0(np.array([[0, 1], [0, 0]])) == 0.0
    # rank-one sign pattern: phases cannot beat the absolute value
    K = np.array([[0.2, -0.4], [0.3, 0.1]])
    assert rho0(K) <= rho1(K) + 1e-12


@given(mats)
def test_rho_p_matches_grid_scan(K):
    for p in (1, 2, math.inf):
        assert rho_p(K, p) <= brute_rho_p(K, p) + 1e-6


@given(mats)
def test_rho1_equals_rho_inf_and_transpose(K):
    assert rho_inf(K) == pytest.approx(rho1(K), rel=1e-6, abs=1e-6)
    assert rho_p(K, 1) == pytest.approx(rho1(K), rel=1e-6, abs=1e-6)
    assert rho1(K.T) == pytest.approx(rho1(K), rel=1e-12, abs=1e-15)


@given(mats, st.floats(0.01, 100))
def test_scaling_invariance(K, d):
    D = np.diag([1.0, d])
    KD = D @ K @ np.linalg.inv(D)
    assert rho1(KD) == pytest.approx(rho1(K), rel=1e-9, abs=1e-12)
    assert rho2(KD) == pytest.approx(rho2(K), rel=1e-5, abs=1e-6)
    assert rho0(KD) == pytest.approx(rho0(K), rel=1e-5, abs=1e-6)


@given(mats)
def test_rho_ordering(K):
    r0 = rho0(K)
    assert r0 <= rho2(K) + 1e-6
    assert rho2(K) <= rho1(K) + 1e-6
    assert r0 == pytest.approx(brute_rho0(K), abs=2e-3 * max(1, r0))
    assert max(abs(np.linalg.eigvals(K))) <= r0 + 1e-9


# ------------------------------------------------------- condition12


def test_eigen_coordinates_decoupled_is_K(burgers):
    K = np.array([[0.1, -0.2], [0.3, 0.05]])
    np.testing.assert_allclose(eigen_coordinates(burgers, K), K, atol=1e-14)


@given(mats)
def test_condition12_is_rho1_of_eigen_coordinates(K):
    from fronttrack.flux_model import coupled_drift
    m = coupled_drift()
    M = eigen_coordinates(m, K)
    c = condition12(m, K)
    assert c.value == pytest.approx(rho1(M), rel=1e-6, abs=1e-9)
    assert c.value == pytest.approx(alpha_form(M, c.alpha_star), rel=1e-12)


def test_condition12_flip(model):
    assert condition12(model, K_a(0.49)).satisfied
    assert not condition12(model, K_a(0.51)).satisfied


def test_optimal_alpha_prefers_one_when_flat():
    alpha, val = optimal_alpha(np.diag([0.3, 0.4]))
    assert alpha == 1.0 and val == pytest.approx(0.4)
    alpha, val = optimal_alpha(np.array([[0.0, 0.8], [0.2, 0.0]]))
    assert val == pytest.approx(0.4, rel=1e-6) and alpha == pytest.approx(2.0, rel=1e-4)


def test_feedback_matrix_record(drift):
    fm = FeedbackMatrix.analyze(K_a(0.3), drift)
    assert fm.rho1 == pytest.approx(0.6)
    assert fm.condition12_margin == pytest.approx(1 - condition12(drift, K_a(0.3)).value)


# -------------------------------------------------------- linear roots


@pytest.mark.parametrize("a", [-0.7, 0.3, 0.45, 0.55])
def test_rightmost_root_oracle(a):
    v = linear_spectral_check((1.0, 2.0), K_a(a), im_max=60.0)
    expect = K_a_rightmost(a)
    assert v.stable == (expect < -0.01)
    assert v.worst_root.real == pytest.approx(expect, abs=1e-8)
    assert abs(1 - a * cmath.exp(-v.worst_root) - a * cmath.exp(-v.worst_root / 2)) < 1e-9


def test_count_roots_matches_oracle():
    # roots of 1 - a e^{-z} - a e^{-z/2}: z = -2 log w + 4 pi i k
    a = 0.55
    w = np.roots([a, a, -1.0])
    zs = [complex(-2 * cmath.log(complex(wi))) + 4j * math.pi * k for wi in w for k in range(-3, 4)]
    inside = [z for z in zs if -1.5 < z.real < 1.0 and -30 < z.imag < 30]
    counts, _, _ = count_roots((1.0, 2.0), K_a(a), -1.5, 1.0, -30.3, 29.7, 50, 120)
    assert counts.sum() == len(inside)


def test_zero_feedback_is_stable():
    v = linear_spectral_check((1.0, 2.0), np.zeros((2, 2)))
    assert v.stable and v.n_roots == 0 and v.worst_root is None


def test_inconclusive_and_bad_speeds():
    # place the rightmost root on Re z = -delta: root w = -r of a w^2 + a w = 1
    delta = 0.01
    r = math.exp(delta / 2)
    a = 1.0 / (r * r - r)
    with pytest.raises(ValueError):
        linear_spectral_check((0.0, 1.0), K_a(0.3))
    with pytest.raises(InconclusiveNearBoundary):
        linear_spectral_check((1.0, 2.0), K_a(a), delta=delta, im_max=40.0)
