"""Weighted Glimm functionals, parameter selection and the decay monitor.

Strengths of family-1 waves are divided by ``alpha`` everywhere in this
module: rescaling ``r_1 -> alpha r_1`` rescales every 1-strength by
``1 / alpha`` and can make the boundary reflection coefficients smaller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .errors import NoFeasibleParams, ViolationFound
from .flux_model import FluxModel, eig_full, eigvals4
from .wave_curves import apply_feedback, estimate_interaction_constants, riemann_kernel

GRID = 21
SCAN_RATIO = 0.8
SCAN_STEPS = 60


@dataclass(frozen=True)
class FunctionalParams:
    """Weights of ``J = V + c0 Q``.

    Attributes
    ----------
    delta0 : float
        Sup-norm radius inside which the run must stay.
    c_star : float
        Lower bound for every front speed.
    gamma, epsilon : float
        Spatial weight rate and boundary dissipation margin.
    C_delta : float
        Interaction constant (empirical, with safety factor).
    c0 : float
        ``2 C_delta exp(2 gamma L)``.
    nu : float
        Guaranteed decay rate ``c_star * gamma``.
    M : float
        Upper bound for the speeds on the ``delta0`` box.
    alpha : float
        Scale of ``r_1`` used for all strengths.
    """

    delta0: float
    c_star: float
    gamma: float
    epsilon: float
    C_delta: float
    c0: float
    nu: float
    M: float
    L: float = 1.0
    alpha: float = 1.0
    feedback_value: float = math.nan
    include_boundary_in_Q: bool = False

    @property
    def smallness_bound(self) -> float:
        """Largest ``J(0)`` for which monotonicity at every event is guaranteed."""
        return min(self.epsilon, 1.0 / self.c0) if self.c0 > 0 else self.epsilon

    def with_overrides(self, **kw) -> "FunctionalParams":
        """Replace fields; ``c0`` and ``nu`` are recomputed unless given."""
        p = replace(self, **kw)
        if "c0" not in kw:
            p = replace(p, c0=2.0 * p.C_delta * math.exp(2.0 * p.gamma * p.L))
        if "nu" not in kw:
            p = replace(p, nu=p.c_star * p.gamma)
        return p


# --------------------------------------------------------------------------
# total variation


def tv_star_states(K, states) -> float:
    """TV* of the piecewise-constant function with consecutive values ``states``."""
    s = np.asarray(states, dtype=float).reshape(-1, 2)
    tv = float(np.abs(np.diff(s, axis=0)).max(axis=1).sum()) if len(s) > 1 else 0.0
    ku = apply_feedback(K, s[-1])
    return tv + max(abs(ku[0] - s[0, 0]), abs(ku[1] - s[0, 1]))


def _states_of(U):
    if hasattr(U, "values"):
        return U.values
    s = U.states
    return s() if callable(s) else s


def tv_star(K, U) -> float:
    """Total variation on ``[0, L]`` plus the boundary mismatch ``|K U(L-) - U(0+)|``.

    ``U`` may be a :class:`PiecewiseConstant`, a snapshot or a live state.
    Jumps are measured in the sup norm.
    """
    return tv_star_states(K, _states_of(U))


# --------------------------------------------------------------------------
# V and Q


def expand_absorbed(x, sig, fam, extra):
    """Split fronts carrying an absorbed wave into two coincident virtual fronts.

    A front whose jump also holds an other-family strength ``extra`` is
    replaced by its 1-wave followed by its 2-wave, the order in which the
    Riemann problem across it would emit them.
    """
    x = np.asarray(x, dtype=float)
    sig = np.asarray(sig, dtype=float)
    fam = np.asarray(fam)
    if extra is None or len(sig) == 0:
        return x, sig, fam
    extra = np.asarray(extra, dtype=float)
    hit = extra != 0.0
    if not hit.any():
        return x, sig, fam
    reps = np.where(hit, 2, 1)
    xo = np.repeat(x, reps)
    so = np.repeat(sig, reps)
    fo = np.repeat(fam, reps)
    first = np.cumsum(reps) - reps
    h = first[hit]
    s1 = np.where(fam[hit] == 1, sig[hit], extra[hit])
    s2 = np.where(fam[hit] == 1, extra[hit], sig[hit])
    so[h], so[h + 1] = s1, s2
    fo[h], fo[h + 1] = 1, 2
    return xo, so, fo


def _weights(x, sig, fam, gamma, alpha):
    """``|sigma| e^{-gamma x}`` per front, 1-strengths divided by ``alpha``."""
    fam = np.asarray(fam)
    a = np.abs(np.asarray(sig, dtype=float))
    if alpha != 1.0:
        a = np.where(fam == 1, a / alpha, a)
    return a * np.exp(-gamma * np.asarray(x, dtype=float))


def _excl_cumsum(v):
    return np.cumsum(v) - v


def v_from_arrays(x, sig, fam, gamma, alpha=1.0, extra=None) -> float:
    if len(sig) == 0:
        return 0.0
    x, sig, fam = expand_absorbed(x, sig, fam, extra)
    return float(_weights(x, sig, fam, gamma, alpha).sum())


def q_from_arrays(x, sig, fam, gamma, alpha=1.0, extra=None) -> float:
    """Interaction potential in O(n) via prefix sums.

    Fronts are ordered by index; ``j < i`` means ``j`` lies to the left,
    which also settles fronts issued from the same point.
    """
    x, sig, fam = expand_absorbed(x, sig, fam, extra)
    if len(sig) < 2:
        return 0.0
    w = _weights(x, sig, fam, gamma, alpha)
    f1 = fam == 1
    f2 = ~f1
    shock = sig < 0
    behind2 = _excl_cumsum(np.where(f2, w, 0.0))
    q = float(np.sum(np.where(f1, w * behind2, 0.0)))
    for mask in (f1, f2):
        wk = np.where(mask, w, 0.0)
        all_k = _excl_cumsum(wk)
        shocks_k = _excl_cumsum(np.where(shock, wk, 0.0))
        q += float(np.sum(np.where(mask & shock, w * all_k, 0.0)))
        q += float(np.sum(np.where(mask & ~shock, w * shocks_k, 0.0)))
    return q


def q_bruteforce(x, sig, fam, gamma, alpha=1.0, extra=None) -> float:
    """Direct double sum over approaching pairs; reference for :func:`q_from_arrays`."""
    x, sig, fam = expand_absorbed(x, sig, fam, extra)
    w = _weights(x, sig, fam, gamma, alpha)
    q = 0.0
    n = len(sig)
    for i in range(n):
        for j in range(i):
            if (fam[i] == 1 and fam[j] == 2) or (fam[i] == fam[j] and (sig[i] < 0 or sig[j] < 0)):
                q += w[i] * w[j]
    return q


def boundary_strengths(model: FluxModel, K, leftmost, right_trace):
    """``(sigma_01, sigma_02)`` joining ``K u(L-)`` to ``u(0+)``; zero when they agree."""
    ku = apply_feedback(K, right_trace)
    u0 = (float(leftmost[0]), float(leftmost[1]))
    if ku == u0:
        return 0.0, 0.0
    s1, s2, _, _ = riemann_kernel(model, ku[0], ku[1], u0[0], u0[1])
    return s1, s2


def functionals_from_arrays(model, K, params: FunctionalParams, x, sig, fam, leftmost, right_trace,
                            extra=None):
    """Return ``(V, Q, J)`` of a front configuration."""
    g, a = params.gamma, params.alpha
    b1, b2 = boundary_strengths(model, K, leftmost, right_trace)
    V = v_from_arrays(x, sig, fam, g, a, extra) + abs(b1) / a + abs(b2)
    if params.include_boundary_in_Q and (b1 or b2):
        x = np.concatenate([[0.0, 0.0], x])
        sig = np.concatenate([[b1, b2], sig])
        fam = np.concatenate([[1, 2], fam])
        if extra is not None:
            extra = np.concatenate([[0.0, 0.0], extra])
    Q = q_from_arrays(x, sig, fam, g, a, extra)
    return V, Q, V + params.c0 * Q


def _unpack(state):
    """``(x, sigma, family, leftmost, right_trace, extra)`` of a snapshot or live state."""
    if hasattr(state, "arrays"):
        x, sig, fam = state.arrays()
        return x, sig, fam, state.leftmost_state, state.right_trace, state.extras()
    return (state.x, state.sigma, state.family, state.states[0], state.states[-1],
            getattr(state, "extra", None))


def glimm_V(state, K, params: FunctionalParams, model: Optional[FluxModel] = None) -> float:
    """Weighted total strength, boundary mismatch included with weight 1."""
    x, sig, fam, left, right, ext = _unpack(state)
    model = model or getattr(state, "model", None)
    b1, b2 = (0.0, 0.0)
    if model is not None:
        b1, b2 = boundary_strengths(model, K, left, right)
    elif tuple(apply_feedback(K, right)) != (float(left[0]), float(left[1])):
        raise ValueError("a model is needed to resolve the boundary mismatch")
    return v_from_arrays(x, sig, fam, params.gamma, params.alpha, ext) + abs(b1) / params.alpha + abs(b2)


def glimm_Q(state, params: FunctionalParams) -> float:
    x, sig, fam, _, _, ext = _unpack(state)
    return q_from_arrays(x, sig, fam, params.gamma, params.alpha, ext)


def glimm_J(state, K, params: FunctionalParams, model: Optional[FluxModel] = None) -> float:
    return glimm_V(state, K, params, model) + params.c0 * glimm_Q(state, params)


@dataclass(frozen=True)
class FunctionalValues:
    t: float
    V: float
    Q: float
    J: float
    TVstar: float


def evaluate(state, K, params: FunctionalParams, model: Optional[FluxModel] = None) -> FunctionalValues:
    V = glimm_V(state, K, params, model)
    Q = glimm_Q(state, params)
    return FunctionalValues(float(state.t), V, Q, V + params.c0 * Q, tv_star(K, state))


def cutoff_functionals(state, X: float, params: FunctionalParams, K=None, model=None):
    """Unweighted ``V`` and ``Q`` restricted to fronts with ``x >= X``.

    The boundary strengths (located at ``x = 0``) count only when ``X <= 0``.
    """
    x, sig, fam, left, right, ext = _unpack(state)
    keep = np.asarray(x) >= X
    a = params.alpha
    ek = None if ext is None else np.asarray(ext)[keep]
    Vt = v_from_arrays(x[keep], sig[keep], fam[keep], 0.0, a, ek)
    Qt = q_from_arrays(x[keep], sig[keep], fam[keep], 0.0, a, ek)
    if X <= 0 and K is not None:
        model = model or getattr(state, "model", None)
        if model is not None:
            b1, b2 = boundary_strengths(model, K, left, right)
            Vt += abs(b1) / a + abs(b2)
    return Vt, Qt


def sideways_tv(segments, x: float, T: float) -> float:
    """Variation in time of ``t -> u_h(t, x)`` on ``(0, T)``.

    Sums the sup-norm jumps of every front segment crossing the vertical
    line at ``x`` strictly before ``T``; a segment counts when it starts
    left of ``x`` and ends at or beyond it, so kinks are not double counted.
    """
    total = 0.0
    for s in segments:
        x1 = s.x0 + s.speed * (s.t1 - s.t0)
        if s.x0 < x <= x1:
            tc = s.t0 + (x - s.x0) / s.speed
            if tc < T:
                total += max(abs(s.uR[0] - s.uL[0]), abs(s.uR[1] - s.uL[1]))
    return total


# --------------------------------------------------------------------------
# parameter selection


def feedback_quantity(model: FluxModel, K, delta0: float, alpha: float = 1.0, grid: int = GRID) -> float:
    """``max_{|u| <= delta0, k} sum_i |l_i(Ku) . K r_k(u)|`` on a ``grid x grid`` state grid.

    Family-1 eigenvectors are scaled by ``alpha`` (dual vectors by ``1/alpha``).
    """
    K = np.asarray(K, dtype=float)
    pts = np.linspace(-delta0, delta0, grid) if grid > 1 else np.array([0.0])
    worst = 0.0
    for u1 in pts:
        for u2 in pts:
            _, _, r1, r2, _, _ = eig_full(model, u1, u2)
            ku = apply_feedback(K, (u1, u2))
            _, _, _, _, l1, l2 = eig_full(model, ku[0], ku[1])
            for k, r in ((1, r1), (2, r2)):
                kr = apply_feedback(K, r)
                c1 = (l1[0] * kr[0] + l1[1] * kr[1]) / alpha
                c2 = l2[0] * kr[0] + l2[1] * kr[1]
                if k == 1:
                    c1 *= alpha
                    c2 *= alpha
                worst = max(worst, abs(c1) + abs(c2))
    return worst


def _speed_bounds(model, radius, grid=GRID):
    pts = np.linspace(-radius, radius, grid)
    lo1, hi1, lo2, hi2 = math.inf, -math.inf, math.inf, -math.inf
    for u1 in pts:
        for u2 in pts:
            l1, l2 = eigvals4(*model.jac4(u1, u2))
            lo1, hi1 = min(lo1, l1), max(hi1, l1)
            lo2, hi2 = min(lo2, l2), max(hi2, l2)
    return lo1, hi1, lo2, hi2


def select_parameters(
    model: FluxModel,
    K,
    L: float,
    *,
    grid: int = GRID,
    ratio: float = SCAN_RATIO,
    delta0_start: Optional[float] = None,
    C_delta: Optional[float] = None,
    safety: float = 2.0,
    samples: int = 200,
    seed: int = 0,
) -> FunctionalParams:
    """Choose ``delta0, c_star, gamma, epsilon`` and the derived weights.

    ``alpha`` comes from the boundary condition check at ``u = 0``.  Then
    ``delta0`` is scanned downward (factor ``ratio``) from ``delta / 2``
    until the feedback quantity ``m`` is below 1.  ``gamma`` is the largest
    value of ``ratio**j / L`` keeping ``exp(-gamma L) >= (1 + m) / 2``, so
    half of the available margin goes to ``epsilon``, which is the largest
    ``0.5 ratio**j`` below ``exp(-gamma L) - m``.

    Raises
    ------
    NoFeasibleParams
        If the boundary condition fails at ``u = 0``; ``rho1`` carries its
        value.
    """
    from .stability import condition12

    K = np.asarray(K, dtype=float).reshape(2, 2)
    cond = condition12(model, K)
    value, alpha = cond.value, cond.alpha_star
    if not cond.satisfied:
        raise NoFeasibleParams(
            f"boundary reflection coefficient {value:.6g} >= 1 at u = 0 for every scaling", rho1=value
        )
    _, hi1, lo2, _ = _speed_bounds(model, model.delta, grid)
    if not hi1 < lo2:
        raise NoFeasibleParams("characteristic families overlap on the model domain", rho1=value)

    d0 = 0.5 * model.delta if delta0_start is None else delta0_start
    for _ in range(SCAN_STEPS):
        kmax = float(np.abs(K).sum(axis=1).max())
        if kmax * d0 <= model.delta:
            m = feedback_quantity(model, K, d0, alpha, grid)
            if m < 1.0:
                break
        d0 *= ratio
    else:
        raise NoFeasibleParams("no delta0 satisfies the feedback condition", rho1=value)

    target = 0.5 * (1.0 + m)
    gamma = 1.0 / L
    for _ in range(SCAN_STEPS):
        if math.exp(-gamma * L) >= target:
            break
        gamma *= ratio
    margin = math.exp(-gamma * L) - m
    eps = 0.5
    while eps >= margin:
        eps *= ratio

    lo1, _, _, hi2 = _speed_bounds(model, d0, grid)
    c_star = 0.99 * lo1
    if C_delta is None:
        est = estimate_interaction_constants(
            model, samples=samples, seed=seed, state_radius=d0, K=K, alpha=alpha
        )
        C_delta = safety * est.C_delta
    c0 = 2.0 * C_delta * math.exp(2.0 * gamma * L)
    return FunctionalParams(
        delta0=d0, c_star=c_star, gamma=gamma, epsilon=eps, C_delta=C_delta, c0=c0,
        nu=c_star * gamma, M=hi2, L=L, alpha=alpha, feedback_value=m,
    )


# --------------------------------------------------------------------------
# decay monitor


@dataclass
class Violation:
    index: int
    t: float
    check: str
    excess: float


@dataclass
class DecayReport:
    violations: List[Violation] = field(default_factory=list)
    worst_margin: float = math.inf
    fitted_rate: float = math.nan
    nu: float = math.nan
    n_intervals: int = 0
    n_interior_checked: int = 0
    n_interior_unchecked: int = 0
    n_boundary: int = 0
    n_increases: int = 0
    max_increase: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.violations


def fit_rate(t: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares decay rate ``-d log y / dt`` over the positive samples."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = y > 0
    if keep.sum() < 2 or np.ptp(t[keep]) == 0:
        return math.nan
    slope = np.polyfit(t[keep], np.log(y[keep]), 1)[0]
    return float(-slope)


def decay_fit(t, y, t_final: Optional[float] = None, n: int = 401, floor: float = 1e-12):
    """Exponential envelope ``y(t) <= C exp(-nu t) y(0)`` of an event-sampled series.

    ``y`` is piecewise constant in time (it changes only at events), so it
    is resampled on ``n`` uniform times before the least-squares fit of
    ``log y``; values below ``floor * y(0)`` are roundoff and are left out.
    ``C`` is then the smallest constant valid at every recorded time.

    Returns
    -------
    (nu, C) : tuple of float
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0 or y[0] <= 0:
        return math.nan, math.nan
    T = t[-1] if t_final is None else t_final
    g = np.linspace(t[0], T, n)
    yg = y[np.searchsorted(t, g, side="right") - 1]
    keep = yg > floor * y[0]
    nu = fit_rate(g[keep], yg[keep])
    if not math.isfinite(nu):
        return nu, math.nan
    C = float(np.max(y * np.exp(nu * (t - t[0]))) / y[0])
    return nu, C


def monitor_decay(events, params: FunctionalParams, J0: Optional[float] = None, t0: float = 0.0,
                  rtol: float = 1e-9, atol: float = 1e-15, raise_on_violation: bool = False) -> DecayReport:
    """Check the three decay mechanisms of ``J`` along an event log.

    (a) ``J(t_{k+1}-) <= exp(-c_star gamma (t_{k+1} - t_k)) J(t_k+)``;
    (b) ``J(t+) <= J(t-)`` at interior events with ``c0 V(t-) <= 1``;
    (c) ``J(t+) - J(t-) <= |s| (c0 V(t-) - epsilon)`` at boundary events,
    ``s`` the (scaled) strength of the front leaving at ``x = L``.

    Returns a :class:`DecayReport`; with ``raise_on_violation`` the first
    violation raises :class:`ViolationFound` instead.
    """
    rep = DecayReport(nu=params.nu)
    rate = params.c_star * params.gamma

    def fail(i, t, check, excess):
        v = Violation(i, t, check, excess)
        rep.violations.append(v)
        if raise_on_violation:
            raise ViolationFound(f"{check} violated at t = {t:.6g} by {excess:.3g}", event=events[i])

    def slack(bound, value):
        return bound * (1.0 + rtol) + atol - value

    prev_t, prev_J = t0, J0
    ts, js = [], []
    if J0 is not None:
        ts.append(t0)
        js.append(J0)
    for i, ev in enumerate(events):
        if prev_J is not None:
            bound = math.exp(-rate * (ev.t - prev_t)) * prev_J
            s = slack(bound, ev.J_before)
            rep.n_intervals += 1
            rep.worst_margin = min(rep.worst_margin, s)
            if s < 0:
                fail(i, ev.t, "inter-event decay", -s)
        incr = ev.J_after - ev.J_before
        if incr > rtol * ev.J_before + atol:
            rep.n_increases += 1
            rep.max_increase = max(rep.max_increase, incr)
        if ev.type == "boundary_hit":
            rep.n_boundary += 1
            k = ev.family_in[0]
            sh = abs(ev.sigma_in[0]) / (params.alpha if k == 1 else 1.0)
            if ev.extra_in:
                sh += abs(ev.extra_in[0]) / (params.alpha if k == 2 else 1.0)
            bound = ev.J_before + sh * (params.c0 * ev.V_before - params.epsilon)
            s = slack(bound, ev.J_after)
            rep.worst_margin = min(rep.worst_margin, s)
            if s < 0:
                fail(i, ev.t, "boundary estimate", -s)
        else:
            if params.c0 * ev.V_before <= 1.0:
                rep.n_interior_checked += 1
                s = slack(ev.J_before, ev.J_after)
                rep.worst_margin = min(rep.worst_margin, s)
                if s < 0:
                    fail(i, ev.t, "interior monotonicity", -s)
            else:
                rep.n_interior_unchecked += 1
        prev_t, prev_J = ev.t, ev.J_after
        ts.append(ev.t)
        js.append(ev.J_after)
    rep.fitted_rate = fit_rate(ts, js)
    return rep
