import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fronttrack.errors import NoFeasibleParams, ViolationFound
from fronttrack.front_tracking import EventRecord, run
from fronttrack.functionals import (FunctionalParams, cutoff_functionals, decay_fit, expand_absorbed,
                                    feedback_quantity, fit_rate, glimm_Q, glimm_V, monitor_decay,
                                    q_bruteforce, q_from_arrays, select_parameters, sideways_tv,
                                    tv_star, tv_star_states, v_from_arrays)
from fronttrack.piecewise import PiecewiseConstant, jump, sample_profile, sine_profile

from conftest import K_a

Z = np.zeros((2, 2))


def params(gamma=0.4, alpha=1.0, c0=1.0, eps=0.05):
    return FunctionalParams(delta0=0.1, c_star=0.9, gamma=gamma, epsilon=eps, C_delta=1.0, c0=c0,
                            nu=0.9 * gamma, M=2.0, alpha=alpha)


class Snap:
    """Minimal geometric state: fronts plus the states between them."""

    def __init__(self, x, sigma, family, states, extra=None, t=0.0):
        self.x = np.asarray(x, float)
        self.sigma = np.asarray(sigma, float)
        self.family = np.asarray(family)
        self.states = np.asarray(states, float)
        self.extra = extra
        self.t = t


# ------------------------------------------------------------------ TV*


def test_tv_star_examples():
    assert tv_star(K_a(0.3), PiecewiseConstant.constant(1.0, (0, 0))) == 0.0
    u = jump(1.0, 0.5, (0.0, 0.0), (0.1, -0.02))
    assert tv_star(Z, u) == pytest.approx(0.1)
    # mismatch |K u(L) - u(0)| counted once
    assert tv_star(Z, PiecewiseConstant.constant(1.0, (0.03, -0.05))) == pytest.approx(0.05)
    assert tv_star(np.eye(2), PiecewiseConstant.constant(1.0, (0.03, -0.05))) == 0.0


def test_tv_star_sup_norm_jumps():
    s = [(0, 0), (0.1, -0.2), (0.1, 0.0)]
    assert tv_star_states(np.eye(2), s) == pytest.approx(0.2 + 0.2 + 0.1)


# ------------------------------------------------------------------ V, Q


def test_v_single_front():
    s = Snap([0.5], [0.1], [1], [(0, 0), (0.1, 0)])
    from fronttrack.flux_model import decoupled_burgers
    # K = I would leave a mismatch; K_a(0.) = 0 and u(0+) = 0 means matched
    assert glimm_V(s, Z, params(), decoupled_burgers()) == pytest.approx(0.1 * math.exp(-0.2))


def test_v_boundary_term_weight_one(burgers):
    s = Snap([], [], [], [(0.02, -0.01)])
    assert glimm_V(s, Z, params(), burgers) == pytest.approx(0.03, rel=1e-9)


def test_q_examples():
    p = params(gamma=0.0)
    assert glimm_Q(Snap([0.5], [0.1], [1], [(0, 0)] * 2), p) == 0.0
    # 2-front behind a 1-front
    assert glimm_Q(Snap([0.2, 0.6], [0.03, -0.07], [2, 1], [(0, 0)] * 3), p) == pytest.approx(0.03 * 0.07)
    # 1-front behind a 2-front: diverging
    assert glimm_Q(Snap([0.2, 0.6], [0.03, -0.07], [1, 2], [(0, 0)] * 3), p) == 0.0
    # two rarefactions of one family
    assert glimm_Q(Snap([0.2, 0.6], [0.03, 0.07], [1, 1], [(0, 0)] * 3), p) == 0.0
    assert glimm_Q(Snap([0.2, 0.6], [0.03, -0.07], [2, 2], [(0, 0)] * 3), p) == pytest.approx(0.0021)


def test_alpha_scales_family_one():
    assert v_from_arrays([0.0, 0.0], [0.2, 0.1], [1, 2], 0.0, alpha=2.0) == pytest.approx(0.2)


def test_expand_absorbed_riemann_order():
    x, s, f = expand_absorbed([0.1, 0.4], [0.02, -0.03], [2, 1], [0.005, 0.0])
    np.testing.assert_array_equal(f, [1, 2, 1])
    np.testing.assert_allclose(s, [0.005, 0.02, -0.03])
    np.testing.assert_allclose(x, [0.1, 0.1, 0.4])


fronts = st.lists(
    st.tuples(st.floats(0, 1), st.floats(-0.1, 0.1), st.sampled_from([1, 2]),
              st.sampled_from([0.0, 0.0, 1e-4, -1e-4])),
    max_size=25,
)


@given(fronts, st.floats(0, 2), st.floats(0.25, 4))
def test_q_prefix_sums_match_double_sum(fs, gamma, alpha):
    fs = sorted(fs, key=lambda r: r[0])
    x, s, f, e = (np.array(c) if fs else np.array([]) for c in zip(*fs)) if fs else ([], [], [], [])
    a = q_from_arrays(x, s, f, gamma, alpha, e)
    b = q_bruteforce(x, s, f, gamma, alpha, e)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-18)


def test_relabeling_run_states(drift):
    u0 = sample_profile(sine_profile(1.0, 0.02), 1.0, 10)
    p = select_parameters(drift, K_a(0.3), 1.0, samples=50)
    st_ = run(drift, K_a(0.3), u0, 0.05, 1.0, p).state
    v0, q0 = glimm_V(st_, K_a(0.3), p), glimm_Q(st_, p)
    assert len(st_.fronts) > 2
    for k, fr in enumerate(reversed(st_.fronts)):
        fr.id = 10_000 + k
    assert glimm_V(st_, K_a(0.3), p) == v0 and glimm_Q(st_, p) == q0


# -------------------------------------------------------------- cutoffs


def test_cutoff_functionals():
    s = Snap([0.2, 0.6], [0.03, -0.07], [2, 1], [(0, 0)] * 3)
    p = params()
    V, Q = cutoff_functionals(s, 0.0, p)
    assert V == pytest.approx(0.1) and Q == pytest.approx(0.0021)
    V, Q = cutoff_functionals(s, 0.4, p)
    assert V == pytest.approx(0.07) and Q == 0.0
    assert cutoff_functionals(s, 1.0, p) == (0.0, 0.0)


# ------------------------------------------------------- parameter choice


def test_select_parameters_absorbing(burgers):
    p = select_parameters(burgers, Z, 1.0, samples=50)
    assert p.feedback_value == 0.0
    assert math.exp(-p.gamma) - p.epsilon > 0
    assert p.nu == pytest.approx(p.c_star * p.gamma)


def test_select_parameters_feedback(burgers):
    p = select_parameters(burgers, K_a(0.3), 1.0, samples=50)
    assert p.feedback_value < math.exp(-p.gamma) - p.epsilon
    assert feedback_quantity(burgers, K_a(0.3), 1e-12) == pytest.approx(0.6, abs=1e-9)
    assert p.c0 == pytest.approx(2 * p.C_delta * math.exp(2 * p.gamma))
    assert 0 < p.c_star <= 0.99 * (1 - p.delta0) + 1e-12


def test_select_parameters_infeasible(burgers):
    with pytest.raises(NoFeasibleParams) as e:
        select_parameters(burgers, K_a(0.6), 1.0, samples=20)
    assert e.value.rho1 == pytest.approx(1.2, abs=1e-6)


# -------------------------------------------------------------- monitor


def test_monitor_zero_run_is_vacuous():
    rep = monitor_decay([], params(), J0=0.0)
    assert rep.passed and rep.n_intervals == 0


def _ev(t, Jb, Ja, kind="interior_transversal", Vb=0.01, sig=(0.0,)):
    return EventRecord(t=t, x=0.5, type=kind, family_in=(1,), sigma_in=sig, sigma_out=(0.0,),
                       V_before=Vb, J_before=Jb, J_after=Ja)


def test_monitor_flags_each_mechanism():
    p = params()
    ok = [_ev(1.0, math.exp(-p.nu), math.exp(-p.nu))]
    assert monitor_decay(ok, p, J0=1.0).passed
    slow = [_ev(1.0, 1.0, 1.0)]
    assert [v.check for v in monitor_decay(slow, p, J0=1.0).violations] == ["inter-event decay"]
    up = [_ev(0.0, 0.1, 0.2)]
    rep = monitor_decay(up, p, J0=0.1)
    assert [v.check for v in rep.violations] == ["interior monotonicity"] and rep.n_increases == 1
    bnd = [_ev(0.0, 0.1, 0.1, kind="boundary_hit", sig=(0.05,))]
    assert [v.check for v in monitor_decay(bnd, p, J0=0.1).violations] == ["boundary estimate"]
    with pytest.raises(ViolationFound):
        monitor_decay(up, p, J0=0.1, raise_on_violation=True)


def test_monitor_skips_large_v():
    p = params(c0=1e3)
    rep = monitor_decay([_ev(0.0, 0.1, 0.2, Vb=0.01)], p, J0=0.1)
    assert rep.passed and rep.n_interior_unchecked == 1


def test_decay_fit_exact_exponential():
    t = np.linspace(0, 5, 50)
    nu, C = decay_fit(t, 3.0 * np.exp(-0.7 * t))
    assert nu == pytest.approx(0.7, rel=1e-3)
    assert C == pytest.approx(1.0, abs=0.05)
    assert fit_rate([0, 1], [1, 0]) != fit_rate([0, 1], [1, 0])  # nan


def test_decay_fit_ignores_roundoff_tail():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    y = np.array([1.0, math.exp(-1), 1e-20, 0.0])
    nu, _ = decay_fit(t, y)
    assert nu > 0


# -------------------------------------------------------------- sideways


def test_sideways_tv_examples(burgers):
    assert sideways_tv([], 0.5, 1.0) == 0.0
    res = run(burgers, Z, jump(1.0, 0.3, (0, 0), (-0.05, 0.03)), 0.05, 2.0)
    assert sideways_tv(res.segments, 0.5, 2.0) == pytest.approx(0.05 + 0.03, abs=1e-12)
    # before any front reaches x = 0.9
    assert sideways_tv(res.segments, 0.9, 0.1) == 0.0


def test_sideways_tv_stable_under_refinement(drift):
    vals = []
    for h in (0.04, 0.02):
        u0 = sample_profile(sine_profile(1.0, 0.02), 1.0, round(1 / h))
        res = run(drift, K_a(0.3), u0, h, 10.0)
        vals.append(max(sideways_tv(res.segments, x, 10.0) for x in np.linspace(0.05, 0.95, 10)))
    assert vals[1] == pytest.approx(vals[0], rel=0.2)
