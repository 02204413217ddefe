import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fronttrack.errors import NotHyperbolic, NotPositive, OutOfDomain
from fronttrack.flux_model import (FluxModel, averaged_matrix, check_genuine_nonlinearity,
                                   coupled_drift, decoupled_burgers, eigen_structure, get_model,
                                   grad_lam, linear_model)

box = st.floats(-0.4, 0.4)


def test_burgers_eigenstructure_at_origin(burgers):
    es = eigen_structure(burgers, (0.0, 0.0))
    assert es.lambdas == pytest.approx((1.0, 2.0), abs=1e-14)
    np.testing.assert_allclose(es.r1, [1, 0], atol=1e-8)
    np.testing.assert_allclose(es.r2, [0, 1], atol=1e-8)
    np.testing.assert_allclose(es.l1, [1, 0], atol=1e-8)
    np.testing.assert_allclose(es.l2, [0, 1], atol=1e-8)


def test_drift_eigenstructure_matches_numpy(drift):
    # independent oracle: numpy eigendecomposition of [[2, 1], [1, 2]]
    w, v = np.linalg.eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
    order = np.argsort(w)
    es = eigen_structure(drift, (0.0, 0.0))
    assert es.lambdas == pytest.approx(tuple(w[order]), abs=1e-12)
    for k, col in zip((1, 2), order):
        r = es.r(k)
        ref = v[:, col]
        assert abs(r[0] * ref[1] - r[1] * ref[0]) < 1e-10  # parallel
    # r1 ~ (-1, 1), r2 ~ (1, 1) with D lambda . r = 1 fixes scale and sign
    np.testing.assert_allclose(es.r1, [-1, 1], atol=1e-7)
    np.testing.assert_allclose(es.r2, [1, 1], atol=1e-7)


@given(box, box)
def test_duality_and_normalization(u1, u2):
    for m in (decoupled_burgers(), coupled_drift()):
        es = eigen_structure(m, (u1, u2))
        for i in (1, 2):
            for k in (1, 2):
                assert es.l(i) @ es.r(k) == pytest.approx(float(i == k), abs=1e-12)
            g = grad_lam(m, i, u1, u2)
            assert g[0] * es.r(i)[0] + g[1] * es.r(i)[1] == pytest.approx(1.0, abs=1e-6)


def test_eigen_residual_on_1000_states():
    rng = np.random.default_rng(7)
    for m in (decoupled_burgers(), coupled_drift()):
        for u in rng.uniform(-m.delta, m.delta, (1000, 2)):
            A = m.jacobian(u)
            es = eigen_structure(m, u)
            for k in (1, 2):
                res = np.abs(A @ es.r(k) - es.lambdas[k - 1] * es.r(k)).max()
                assert res <= 1e-10 * (1 + np.abs(A).sum(axis=1).max())


def test_eigen_structure_errors():
    m = decoupled_burgers()
    with pytest.raises(OutOfDomain):
        eigen_structure(m, (0.5, 0.0))
    neg = FluxModel("neg", lambda u: np.array([-u[0] + u[0] ** 2 / 2, u[1] + u[1] ** 2 / 2]),
                    lambda u: np.array([[-1 + u[0], 0.0], [0.0, 1 + u[1]]]))
    with pytest.raises(NotPositive):
        eigen_structure(neg, (0.0, 0.0))
    rot = FluxModel("rot", lambda u: np.array([u[1], -u[0]]), lambda u: np.array([[0.0, 1.0], [-1.0, 0.0]]))
    with pytest.raises(NotHyperbolic):
        eigen_structure(rot, (0.0, 0.0))
    same = linear_model(1.0, 1.0)
    with pytest.raises(NotHyperbolic):
        eigen_structure(same, (0.0, 0.0))


def test_averaged_matrix_examples(burgers):
    u = np.array([0.1, -0.2])
    np.testing.assert_allclose(averaged_matrix(burgers, u, u), burgers.jacobian(u), atol=1e-15)
    np.testing.assert_allclose(averaged_matrix(burgers, (0, 0), (0.2, 0)), np.diag([1.1, 2.0]), atol=1e-14)
    lin = linear_model(1.0, 2.5)
    np.testing.assert_allclose(averaged_matrix(lin, (0.1, 0.3), (-0.2, 0.05)), np.diag([1.0, 2.5]), atol=1e-14)


def test_averaged_matrix_drift_closed_form(drift):
    # entry (2,1) averages (1 + u1)^2 along the segment: exact polynomial integral
    a, b = 0.1, -0.3
    exact = ((1 + b) ** 3 - (1 + a) ** 3) / (3 * (b - a))
    A = averaged_matrix(drift, (a, 0.0), (b, 0.2))
    assert A[1, 0] == pytest.approx(exact, abs=1e-14)
    assert A[0, 1] == 1.0


@given(box, box, box, box)
def test_averaged_matrix_path_symmetric(a1, a2, b1, b2):
    for m in (decoupled_burgers(), coupled_drift()):
        A = averaged_matrix(m, (a1, a2), (b1, b2))
        B = averaged_matrix(m, (b1, b2), (a1, a2))
        np.testing.assert_allclose(A, B, atol=1e-12)


def test_genuine_nonlinearity_reports():
    for m in (decoupled_burgers(), coupled_drift()):
        rep = check_genuine_nonlinearity(m, 11)
        assert rep.passed
        assert rep.min_values == pytest.approx((1.0, 1.0), abs=1e-6)
    rep = check_genuine_nonlinearity(linear_model(), 5)
    assert not rep.passed
    assert rep.min_values == pytest.approx((0.0, 0.0), abs=1e-9)


def test_finite_difference_jacobian_matches_analytic(drift):
    fd = FluxModel("fd", drift.flux)
    for u in [(0.0, 0.0), (0.2, -0.1), (-0.3, 0.35)]:
        np.testing.assert_allclose(fd.jacobian(u), drift.jacobian(u), atol=1e-8)


def test_get_model():
    assert get_model("coupled_drift").name == "coupled_drift"
    assert get_model("decoupled_burgers", delta=0.3).delta == 0.3
    with pytest.raises(KeyError):
        get_model("nope")
