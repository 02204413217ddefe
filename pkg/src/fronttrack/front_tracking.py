"""Event-driven wave-front tracking on ``[0, L]`` with boundary feedback.

The approximate solution is piecewise constant; its discontinuities
(fronts) move on straight lines between events.  An event is either two
adjacent fronts meeting in the interior or the rightmost front reaching
``x = L``.  Interactions are resolved with the interior Riemann solver,
boundary hits with the boundary Riemann problem between ``K u(L-)`` and
``u(0+)``, whose waves enter at ``x = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import functionals as fn
from .errors import CannotSeparate, DataTooLarge, GuardTripped, NoEvent
from .flux_model import FluxModel, lam_k
from .piecewise import PiecewiseConstant
from .wave_curves import apply_feedback, integral_curve, riemann_kernel, shock_state

SHOCK = "shock"
RAREFACTION = "rarefaction"

INTERIOR_SAME = "interior_same_family"
INTERIOR_TRANSVERSAL = "interior_transversal"
BOUNDARY_HIT = "boundary_hit"
INIT = "init"

SIMULTANEITY_TOL = 1e-11
DROP_TOL = 1e-12
JUMP_FLOOR = 1e-13
PERTURB_MAX_J = 40


class Front:
    """A straight discontinuity ``x(t) = x0 + speed * (t - t0)``.

    ``speed0`` is the speed dictated by the wave (Rankine-Hugoniot speed
    for shocks, ``lambda_k`` of the right state for rarefaction fronts);
    ``speed`` differs from it only after a perturbation.  ``extra`` is the
    strength of an other-family wave too weak to be emitted whose jump this
    front carries as well; it is zero for ordinary fronts.
    """

    __slots__ = ("id", "x0", "t0", "speed", "speed0", "family", "sigma", "uL", "uR", "birth_time",
                 "extra")

    def __init__(self, id, x0, t0, speed, family, sigma, uL, uR):
        self.id = id
        self.x0 = x0
        self.t0 = t0
        self.speed = speed
        self.speed0 = speed
        self.family = family
        self.sigma = sigma
        self.uL = uL
        self.uR = uR
        self.birth_time = t0
        self.extra = 0.0

    @property
    def kind(self) -> str:
        return SHOCK if self.sigma < 0 else RAREFACTION

    def x(self, t: float) -> float:
        return self.x0 + self.speed * (t - self.t0)

    def __repr__(self):
        return (
            f"Front(id={self.id}, family={self.family}, sigma={self.sigma:.3g}, "
            f"x0={self.x0:.6g}, t0={self.t0:.6g}, speed={self.speed:.6g})"
        )


@dataclass(frozen=True)
class Snapshot:
    """Frozen copy of the solution at time ``t``.

    ``states`` has one row per piece, so ``states[0]`` is ``u(0+)`` and
    ``states[-1]`` is ``u(L-)``.
    """

    t: float
    L: float
    x: np.ndarray
    states: np.ndarray
    family: np.ndarray
    sigma: np.ndarray
    speed: np.ndarray
    extra: Optional[np.ndarray] = None

    @property
    def n_fronts(self) -> int:
        return len(self.x)

    @property
    def leftmost_state(self) -> np.ndarray:
        return self.states[0]

    @property
    def right_trace(self) -> np.ndarray:
        return self.states[-1]

    def to_piecewise(self) -> PiecewiseConstant:
        """Collapse coincident fronts and fronts sitting on the boundary."""
        keep_x: List[float] = []
        keep_v: List[np.ndarray] = [self.states[0]]
        for i, xi in enumerate(self.x):
            v = self.states[i + 1]
            if xi <= 0.0:
                keep_v[0] = v
            elif xi >= self.L:
                break
            elif keep_x and xi <= keep_x[-1]:
                keep_v[-1] = v
            else:
                keep_x.append(float(xi))
                keep_v.append(v)
        return PiecewiseConstant(self.L, keep_x, keep_v)


@dataclass
class EventRecord:
    t: float
    x: float
    type: str
    family_in: tuple
    sigma_in: tuple
    sigma_out: tuple
    extra_in: tuple = ()
    V_before: float = math.nan
    Q_before: float = math.nan
    J_before: float = math.nan
    V_after: float = math.nan
    Q_after: float = math.nan
    J_after: float = math.nan


@dataclass
class Segment:
    """A straight piece of a front trajectory, ``t0 <= t <= t1``."""

    t0: float
    t1: float
    x0: float
    speed: float
    family: int
    sigma: float
    uL: tuple
    uR: tuple


@dataclass
class RunStatus:
    completed: bool
    reason: str
    t_end: float
    n_events: int = 0
    max_fronts: int = 0
    max_rarefaction: float = 0.0
    max_rarefaction_ratio: float = 0.0
    perturbations: int = 0
    max_perturbation: float = 0.0
    lax_failures: int = 0
    min_speed: float = math.inf
    max_boundary_residual: float = 0.0
    dropped: float = 0.0
    message: str = ""


@dataclass
class SeriesRow:
    t: float
    V: float
    Q: float
    J: float
    TVstar: float
    max_rarefaction: float
    front_count: int


@dataclass
class RunResult:
    trajectory: List[Snapshot]
    events: List[EventRecord]
    status: RunStatus
    series: List[SeriesRow] = field(default_factory=list)
    segments: List[Segment] = field(default_factory=list)
    state: Optional["SolutionState"] = None

    def __iter__(self):
        return iter((self.trajectory, self.events, self.status))


class SolutionState:
    """The piecewise-constant approximation ``u_h(t, .)`` and its event engine.

    Fronts are kept sorted by position.  ``_pair_t[i]`` caches the absolute
    time at which fronts ``i`` and ``i + 1`` meet (``inf`` if they never do);
    only entries next to a change are recomputed, and the next event is a
    linear scan of that list plus the boundary arrival of the last front.
    """

    def __init__(self, model: FluxModel, K, L: float, h: float, leftmost_state, t: float = 0.0,
                 delta0: Optional[float] = None, drop_tol: float = DROP_TOL):
        self.model = model
        self.K = np.asarray(K, dtype=float).reshape(2, 2)
        self.L = float(L)
        self.h = float(h)
        self.t = float(t)
        self.leftmost_state = tuple(float(v) for v in leftmost_state)
        self.fronts: List[Front] = []
        self._pair_t: List[float] = []
        self.event_count = 0
        self.delta0 = model.delta if delta0 is None else float(delta0)
        self.drop_tol = drop_tol
        self._next_id = 0
        self.segments: Optional[List[Segment]] = []
        self.lax_failures = 0
        self.dropped = 0.0
        self.max_rarefaction = 0.0
        self.min_speed = math.inf

    # ----------------------------------------------------------------- access

    def positions(self, t: Optional[float] = None) -> np.ndarray:
        t = self.t if t is None else t
        return np.array([f.x0 + f.speed * (t - f.t0) for f in self.fronts])

    def arrays(self, t: Optional[float] = None):
        """``(x, sigma, family)`` arrays at time ``t``."""
        t = self.t if t is None else t
        fr = self.fronts
        x = np.array([f.x0 + f.speed * (t - f.t0) for f in fr])
        sig = np.array([f.sigma for f in fr])
        fam = np.array([f.family for f in fr], dtype=np.int8)
        return x, sig, fam

    def extras(self) -> np.ndarray:
        return np.array([f.extra for f in self.fronts])

    @property
    def right_trace(self):
        return self.fronts[-1].uR if self.fronts else self.leftmost_state

    def states(self) -> np.ndarray:
        return np.array([self.leftmost_state] + [f.uR for f in self.fronts])

    def snapshot(self, t: Optional[float] = None) -> Snapshot:
        t = self.t if t is None else t
        x, sig, fam = self.arrays(t)
        return Snapshot(
            t=t, L=self.L, x=x, states=self.states(), family=fam, sigma=sig,
            speed=np.array([f.speed for f in self.fronts]), extra=self.extras(),
        )

    def boundary_residual(self) -> float:
        ku = apply_feedback(self.K, self.right_trace)
        u0 = self.leftmost_state
        return max(abs(ku[0] - u0[0]), abs(ku[1] - u0[1]))

    def set_fronts(self, fronts: List[Front]):
        """Install ``fronts`` (sorted by position) and rebuild the pair cache."""
        self.fronts = list(fronts)
        self._pair_t = [math.inf] * max(len(self.fronts) - 1, 0)
        self._refresh_pairs(0, len(self.fronts) - 2)

    def make_front(self, x, speed, family, sigma, uL, uR, t: Optional[float] = None) -> Front:
        """A front with the next id, not yet part of the state."""
        return self._new_front(float(x), self.t if t is None else t, float(speed), family, float(sigma),
                               tuple(uL), tuple(uR))

    # ----------------------------------------------------------- construction

    def _new_front(self, x, t, speed, family, sigma, uL, uR, wave_end=None) -> Front:
        """``wave_end`` is the end state of the front's own k-wave when ``uR`` also holds an absorbed wave."""
        f = Front(self._next_id, x, t, speed, family, sigma, uL, uR)
        self._next_id += 1
        if sigma < 0:
            end = uR if wave_end is None else wave_end
            lr = lam_k(self.model, family, end[0], end[1])
            ll = lam_k(self.model, family, uL[0], uL[1])
            if not (lr - 1e-10 < speed < ll + 1e-10):
                self.lax_failures += 1
        elif sigma > self.max_rarefaction:
            self.max_rarefaction = sigma
        if speed < self.min_speed:
            self.min_speed = speed
        return f

    def build_fan(self, family: int, sigma: float, u_minus, t: float, x: float, u_plus=None) -> List[Front]:
        """Fronts approximating a k-rarefaction of strength ``sigma`` issued from ``(t, x)``.

        A single front at speed ``lambda_k(u+)`` if ``sigma <= h``; otherwise
        ``p = ceil(sigma / h)`` fronts of strength ``sigma / p``, the j-th
        travelling at ``lambda_k`` of the state on its right.
        """
        m = self.model
        if sigma <= self.h:
            if u_plus is None:
                u_plus = integral_curve(m, family, sigma, u_minus[0], u_minus[1])
            return [self._new_front(x, t, lam_k(m, family, u_plus[0], u_plus[1]), family, sigma, u_minus, u_plus)]
        p = math.ceil(sigma / self.h)
        s = sigma / p
        out = []
        u = u_minus
        for j in range(p):
            if j == p - 1 and u_plus is not None:
                w = u_plus
            else:
                w = integral_curve(m, family, s, u[0], u[1])
            out.append(self._new_front(x, t, lam_k(m, family, w[0], w[1]), family, s, u, w))
            u = w
        return out

    def _single(self, family, sigma, uL, uR, t, x) -> Front:
        m = self.model
        if sigma < 0:
            e1, e2, speed = shock_state(m, family, sigma, uL[0], uL[1])
            return self._new_front(x, t, speed, family, sigma, uL, uR, (e1, e2))
        speed = lam_k(m, family, uR[0], uR[1])
        return self._new_front(x, t, speed, family, sigma, uL, uR)

    def _waves(self, uL, uR, t, x, fan1: bool, fan2: bool):
        """Solve the Riemann problem ``uL | uR`` and return the new fronts, left to right.

        A wave weaker than ``drop_tol`` is not emitted; its jump is carried
        by the other wave's front so neighbouring states stay glued.  If
        both are that weak the stronger one carries the whole jump, and a
        jump below ``JUMP_FLOOR`` is discarded.
        """
        if max(abs(uR[0] - uL[0]), abs(uR[1] - uL[1])) <= JUMP_FLOOR:
            self.dropped += max(abs(uR[0] - uL[0]), abs(uR[1] - uL[1]))
            return (0.0, 0.0), []
        s1, s2, m1, m2 = riemann_kernel(self.model, uL[0], uL[1], uR[0], uR[1])
        mid = (m1, m2)
        out: List[Front] = []
        keep1 = abs(s1) > self.drop_tol
        keep2 = abs(s2) > self.drop_tol
        if not (keep1 or keep2):
            keep1 = abs(s1) >= abs(s2)
            keep2 = not keep1
        self.dropped += (0.0 if keep1 else abs(s1)) + (0.0 if keep2 else abs(s2))
        if not keep2:
            mid = uR
        if keep1:
            if s1 > 0 and fan1:
                out.extend(self.build_fan(1, s1, uL, t, x, mid))
            else:
                out.append(self._single(1, s1, uL, mid, t, x))
            if not keep2:
                out[-1].extra = s2
        left2 = mid if keep1 else uL
        if keep2:
            n1 = len(out)
            if s2 > 0 and fan2:
                out.extend(self.build_fan(2, s2, left2, t, x, uR))
            else:
                out.append(self._single(2, s2, left2, uR, t, x))
            if not keep1:
                out[n1].extra = s1
        for f in out:
            self._check_sup(f.uR)
        return (s1, s2), out

    def _check_sup(self, u):
        if max(abs(u[0]), abs(u[1])) > self.delta0 * (1 + 1e-12):
            raise GuardTripped(
                f"state ({u[0]:.4g}, {u[1]:.4g}) left |u| <= delta0 = {self.delta0:.4g} at t = {self.t:.6g}",
                state=self,
            )

    # ------------------------------------------------------------ event times

    def _meet(self, a: Front, b: Front) -> float:
        ds = a.speed - b.speed
        if ds <= 0.0:
            return math.inf
        # intercept form: x = (x0 - s t0) + s t
        return ((b.x0 - b.speed * b.t0) - (a.x0 - a.speed * a.t0)) / ds

    def _refresh_pairs(self, lo: int, hi: int):
        """Recompute cached meeting times of pairs ``lo..hi`` (inclusive)."""
        fr = self.fronts
        lo = max(lo, 0)
        hi = min(hi, len(fr) - 2)
        for i in range(lo, hi + 1):
            self._pair_t[i] = self._meet(fr[i], fr[i + 1])

    def boundary_time(self) -> float:
        if not self.fronts:
            return math.inf
        f = self.fronts[-1]
        return f.t0 + (self.L - f.x0) / f.speed

    def candidates(self, tol: float = SIMULTANEITY_TOL):
        """All events within ``tol`` of the earliest one.

        Returns ``(t_min, pairs, boundary)`` where ``pairs`` lists left
        indices of meeting pairs and ``boundary`` tells whether the last
        front reaches ``L`` in that window.
        """
        tb = self.boundary_time()
        if self._pair_t:
            pt = np.asarray(self._pair_t)
            tp = float(pt.min())
        else:
            pt = None
            tp = math.inf
        tmin = min(tb, tp)
        if not math.isfinite(tmin):
            return tmin, [], False
        pairs = [] if pt is None else np.flatnonzero(pt <= tmin + tol).tolist()
        return tmin, pairs, tb <= tmin + tol

    def next_event(self):
        """Earliest future event as ``(time, ("pair", i) | ("boundary", n - 1))``."""
        tmin, pairs, bnd = self.candidates()
        if not math.isfinite(tmin):
            raise NoEvent("no fronts left to interact or exit")
        if pairs and (not bnd or self._pair_t[pairs[0]] <= self.boundary_time()):
            return tmin, ("pair", pairs[0])
        return tmin, ("boundary", len(self.fronts) - 1)

    # ----------------------------------------------------------- perturbation

    def _set_speed(self, i: int, speed: float):
        f = self.fronts[i]
        t = self.t
        self._close_segment(f, t)
        f.x0 = f.x(t)
        f.t0 = t
        f.speed = speed
        self._refresh_pairs(i - 1, i)

    def perturb_speeds(self, pairs: Sequence[int], boundary: bool, c_star: float = 0.0) -> float:
        """Separate simultaneous events by slowing one of the fronts involved.

        The front with the largest id is tried first, then the others in
        decreasing id order.  Its speed is lowered by the smallest
        ``h * 2**-j`` (``j = 40, 39, ..., 1``) that lowers the number of tied
        earliest events; callers repeat until the earliest event is unique.
        Returns the applied decrement.
        """
        n = len(self.fronts)
        tied = len(pairs) + int(boundary)
        involved = set()
        for i in pairs:
            involved.update((i, i + 1))
        if boundary:
            involved.add(n - 1)
        order = sorted(involved, key=lambda i: -self.fronts[i].id)
        for i in order:
            f = self.fronts[i]
            base = f.speed
            left = self.fronts[i - 1] if i > 0 else None
            for j in range(PERTURB_MAX_J, 0, -1):
                dv = self.h * 2.0 ** (-j)
                new = base - dv
                if abs(new - f.speed0) > self.h or new < c_star:
                    break
                if (f.sigma > 0 and left is not None and left.sigma > 0
                        and left.family == f.family and left.speed > new):
                    break
                self._set_speed(i, new)
                _, p2, b2 = self.candidates()
                if len(p2) + int(b2) < tied:
                    return dv
                self._set_speed(i, base)
        raise CannotSeparate(f"could not separate simultaneous events at t = {self.t:.12g}")

    def disjoint(self, pairs: Sequence[int], boundary: bool) -> bool:
        """True when no front takes part in two of the tied events."""
        used = set()
        for i in pairs:
            if i in used or i + 1 in used:
                return False
            used.update((i, i + 1))
        return not (boundary and len(self.fronts) - 1 in used)

    def earliest_of(self, pairs: Sequence[int], boundary: bool):
        """The single tied event with the smallest exact time (lowest index on equality)."""
        best = min(pairs, key=lambda i: (self._pair_t[i], i)) if pairs else None
        tb = self.boundary_time() if boundary else math.inf
        if best is not None and self._pair_t[best] <= tb:
            return self._pair_t[best], [best], False
        return tb, [], True

    # ----------------------------------------------------------------- events

    def _close_segment(self, f: Front, t: float):
        if self.segments is not None and t > f.t0:
            self.segments.append(Segment(f.t0, t, f.x0, f.speed, f.family, f.sigma, f.uL, f.uR))

    def apply_interior_interaction(self, i: int, t: float) -> EventRecord:
        """Resolve the meeting of fronts ``i`` and ``i + 1`` at time ``t``."""
        a, b = self.fronts[i], self.fronts[i + 1]
        x = 0.5 * (a.x(t) + b.x(t))
        same = a.family == b.family
        if same and a.sigma > 0 and b.sigma > 0:
            raise AssertionError(f"two {a.family}-rarefaction fronts met at t = {t:.12g}")
        self.t = t
        if same:
            k = a.family
            sig, new = self._waves(a.uL, b.uR, t, x, fan1=(k != 1), fan2=(k != 2))
            kind = INTERIOR_SAME
        else:
            sig, new = self._waves(a.uL, b.uR, t, x, fan1=False, fan2=False)
            kind = INTERIOR_TRANSVERSAL
        self._close_segment(a, t)
        self._close_segment(b, t)
        self.fronts[i:i + 2] = new
        m = len(new)
        # slots i-1 .. i+1 are replaced by the pairs around the new fronts
        left = self._pair_t[:max(i - 1, 0)]
        right = self._pair_t[i + 2:]
        mid = max(len(self.fronts) - 1, 0) - len(left) - len(right)
        self._pair_t = left + [math.inf] * mid + right
        self._refresh_pairs(i - 1, i + m - 1)
        self.event_count += 1
        return EventRecord(t, x, kind, (a.family, b.family), (a.sigma, b.sigma), sig, (a.extra, b.extra))

    def apply_boundary_event(self, t: float) -> EventRecord:
        """The last front reaches ``x = L``: remove it and emit the boundary waves at ``x = 0``."""
        f = self.fronts[-1]
        self.t = t
        self._close_segment(f, t)
        self.fronts.pop()
        if self._pair_t:
            self._pair_t.pop()
        trace = f.uL
        u0 = self.leftmost_state
        ku = apply_feedback(self.K, trace)
        self._check_sup(ku)
        sig, new = self._waves(ku, u0, t, 0.0, fan1=True, fan2=True)
        if new:
            # the new fronts sit at x = 0, left of everything else
            self.fronts[0:0] = new
            old = self._pair_t
            self._pair_t = [math.inf] * (len(self.fronts) - 1 - len(old)) + old
            self._refresh_pairs(0, len(new) - 1)
        self.leftmost_state = ku
        self.event_count += 1
        return EventRecord(t, self.L, BOUNDARY_HIT, (f.family,), (f.sigma,), sig, (f.extra,))

    def finalize_segments(self, t: float):
        for f in self.fronts:
            self._close_segment(f, t)
            f.x0 = f.x(t)
            f.t0 = t

    def check_invariants(self, tol: float = 1e-9):
        """Raise ``AssertionError`` if gluing, ordering or the pair cache is broken."""
        fr = self.fronts
        prev = self.leftmost_state
        xs = self.positions()
        for i, f in enumerate(fr):
            if max(abs(f.uL[0] - prev[0]), abs(f.uL[1] - prev[1])) > tol:
                raise AssertionError(f"state mismatch at front {i}")
            prev = f.uR
        if len(xs) > 1 and np.any(np.diff(xs) < -1e-12):
            raise AssertionError("fronts out of order")
        assert len(self._pair_t) == max(len(fr) - 1, 0), "pair cache length"
        for i in range(len(fr) - 1):
            exp = self._meet(fr[i], fr[i + 1])
            got = self._pair_t[i]
            assert exp == got or (math.isinf(exp) and math.isinf(got)), f"pair cache stale at {i}"


def default_drop_tol(h: float) -> float:
    """Strength below which a wave is absorbed into its neighbour: ``h**2``.

    Without a cutoff, boundary reflections under a full-rank ``K`` split
    every front into two and the count grows exponentially; ``h**2`` keeps
    the absorbed error below the ``O(h)`` accuracy of the scheme.
    """
    return max(h * h, DROP_TOL)


def initialize(model: FluxModel, K, u0h: PiecewiseConstant, h: float, *,
               delta0: Optional[float] = None, tv_threshold: Optional[float] = None,
               drop_tol: Optional[float] = None) -> SolutionState:
    """Front-tracking state at ``t = 0``.

    Every discontinuity of ``u0h`` and the boundary mismatch between
    ``K u0h(L-)`` and ``u0h(0+)`` are resolved; all rarefactions are split
    into fans of accuracy ``h``.

    Raises
    ------
    DataTooLarge
        If ``TV*(u0h)`` exceeds ``tv_threshold`` (default ``delta / 2``) or
        the data leaves the box of radius ``delta0``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    K = np.asarray(K, dtype=float).reshape(2, 2)
    d0 = model.delta if delta0 is None else delta0
    if drop_tol is None:
        drop_tol = default_drop_tol(h)
    thr = 0.5 * model.delta if tv_threshold is None else tv_threshold
    tv = fn.tv_star(K, u0h)
    if tv > thr:
        raise DataTooLarge(f"TV* of the initial data is {tv:.4g} > {thr:.4g}")
    if u0h.sup_norm() > d0:
        raise DataTooLarge(f"sup norm of the initial data {u0h.sup_norm():.4g} exceeds {d0:.4g}")
    vals = [tuple(float(c) for c in v) for v in u0h.values]
    ku = apply_feedback(K, vals[-1])
    st = SolutionState(model, K, u0h.L, h, ku, 0.0, delta0=d0, drop_tol=drop_tol)
    if max(abs(ku[0]), abs(ku[1])) > d0:
        raise DataTooLarge("K u0(L-) leaves the admissible box")
    fronts: List[Front] = []
    _, new = st._waves(ku, vals[0], 0.0, 0.0, True, True)
    fronts.extend(new)
    if not new:
        st.leftmost_state = vals[0]
    for xb, left, right in zip(u0h.breaks, vals[:-1], vals[1:]):
        _, new = st._waves(left, right, 0.0, float(xb), True, True)
        if new:
            new[0].uL = fronts[-1].uR if fronts else st.leftmost_state
        fronts.extend(new)
    st.set_fronts(fronts)
    return st


def _record_functionals(st: SolutionState, params, t: float):
    snap_x, sig, fam = st.arrays(t)
    return fn.functionals_from_arrays(
        st.model, st.K, params, snap_x, sig, fam, st.leftmost_state, st.right_trace, st.extras()
    )


def _series_row(st: SolutionState, params, t: float) -> SeriesRow:
    x, sig, fam = st.arrays(t)
    if params is not None:
        V, Q, J = fn.functionals_from_arrays(st.model, st.K, params, x, sig, fam,
                                             st.leftmost_state, st.right_trace, st.extras())
    else:
        V = Q = J = math.nan
    tv = fn.tv_star_states(st.K, st.states())
    rare = sig[sig > 0]
    mr = float(rare.max()) if len(rare) else 0.0
    return SeriesRow(t, V, Q, J, tv, mr, len(st.fronts))


def run(model: FluxModel, K, u0h: PiecewiseConstant, h: float, t_final: float,
        params=None, *, front_cap: int = 100_000, snapshot_stride: int = 0,
        snapshot_times: Iterable[float] = (), delta0: Optional[float] = None,
        tv_threshold: Optional[float] = None, drop_tol: Optional[float] = None,
        record_segments: bool = True, check_every: int = 0,
        raise_on_guard: bool = False) -> RunResult:
    """Advance the front-tracking approximation from ``t = 0`` to ``t_final``.

    Parameters
    ----------
    params : FunctionalParams, optional
        When given, ``V``, ``Q`` and ``J`` are recorded before and after
        every event and ``c_star`` bounds the perturbed speeds from below.
    snapshot_stride : int
        Store a snapshot every ``snapshot_stride`` events (0 disables).
        Snapshots are always taken at ``t = 0``, at each of
        ``snapshot_times`` and at the final time.
    check_every : int
        Verify state invariants every ``check_every`` events (0 disables).

    Returns
    -------
    RunResult
        Unpacks as ``(trajectory, events, status)``.
    """
    if delta0 is None and params is not None:
        delta0 = params.delta0
    st = initialize(model, K, u0h, h, delta0=delta0, tv_threshold=tv_threshold, drop_tol=drop_tol)
    if not record_segments:
        st.segments = None
    c_star = params.c_star if params is not None else 0.0
    times = sorted(float(t) for t in snapshot_times if 0.0 < t <= t_final)
    ti = 0
    trajectory = [st.snapshot(0.0)]
    events: List[EventRecord] = []
    series = [_series_row(st, params, 0.0)]
    status = RunStatus(True, "completed", t_final)
    max_fronts = len(st.fronts)
    n_pert = 0
    max_pert = 0.0
    max_bres = st.boundary_residual()
    try:
        while True:
            tmin, pairs, bnd = st.candidates()
            if len(pairs) + int(bnd) > 1 and tmin <= t_final:
                try:
                    dv = st.perturb_speeds(pairs, bnd, c_star)
                except CannotSeparate:
                    # imminent events: no admissible speed change moves them apart
                    if not st.disjoint(pairs, bnd):
                        raise
                    tmin, pairs, bnd = st.earliest_of(pairs, bnd)
                else:
                    n_pert += 1
                    max_pert = max(max_pert, dv)
                    continue
            while ti < len(times) and times[ti] < min(tmin, t_final) + 0.0:
                trajectory.append(st.snapshot(times[ti]))
                ti += 1
            if tmin > t_final:
                break
            if params is not None:
                before = _record_functionals(st, params, tmin)
            if pairs:
                rec = st.apply_interior_interaction(pairs[0], tmin)
            else:
                rec = st.apply_boundary_event(tmin)
            if params is not None:
                rec.V_before, rec.Q_before, rec.J_before = before
            row = _series_row(st, params, tmin)
            rec.V_after, rec.Q_after, rec.J_after = row.V, row.Q, row.J
            series.append(row)
            events.append(rec)
            max_bres = max(max_bres, st.boundary_residual())
            max_fronts = max(max_fronts, len(st.fronts))
            if len(st.fronts) > front_cap:
                raise GuardTripped(f"front count {len(st.fronts)} exceeds cap {front_cap}", state=st)
            if snapshot_stride and st.event_count % snapshot_stride == 0:
                trajectory.append(st.snapshot(tmin))
            if check_every and st.event_count % check_every == 0:
                st.check_invariants()
    except GuardTripped as exc:
        if raise_on_guard:
            raise
        status = RunStatus(False, "guard_tripped", st.t, message=str(exc))
    while ti < len(times) and status.completed:
        trajectory.append(st.snapshot(times[ti]))
        ti += 1
    t_end = t_final if status.completed else st.t
    st.t = t_end
    st.finalize_segments(t_end)
    if not trajectory or trajectory[-1].t != t_end:
        trajectory.append(st.snapshot(t_end))
    status.n_events = st.event_count
    status.max_fronts = max_fronts
    status.max_rarefaction = st.max_rarefaction
    status.max_rarefaction_ratio = st.max_rarefaction / h
    status.perturbations = n_pert
    status.max_perturbation = max_pert
    status.lax_failures = st.lax_failures
    status.min_speed = st.min_speed
    status.max_boundary_residual = max_bres
    status.dropped = st.dropped
    return RunResult(trajectory, events, status, series, st.segments or [], st)


# --------------------------------------------------------------------------
# weak formulation


def smooth_bump(t_lo: float, t_hi: float, x_lo: float, x_hi: float):
    """``phi(t, x) = psi(t) psi(x)`` with ``psi(z) = exp(-1 / (1 - z^2))`` on each rescaled interval.

    Smooth, compactly supported in ``(t_lo, t_hi) x (x_lo, x_hi)``, peak ``e^-2``.
    """
    tc, tr = 0.5 * (t_lo + t_hi), 0.5 * (t_hi - t_lo)
    xc, xr = 0.5 * (x_lo + x_hi), 0.5 * (x_hi - x_lo)

    def psi(z):
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        inside = np.abs(z) < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
        return out

    def phi(t, x):
        return psi((np.asarray(t) - tc) / tr) * psi((np.asarray(x) - xc) / xr)

    return phi


def weak_residual(model: FluxModel, segments: Sequence[Segment], phi, order: int = 8) -> np.ndarray:
    """``int int (u_h phi_t + f(u_h) phi_x) dx dt`` for a test function vanishing on the boundary.

    For piecewise-constant ``u_h`` the double integral collapses onto the
    fronts: each segment contributes ``int (s [u] - [f]) phi(t, x(t)) dt``.
    The line integrals use ``order``-point Gauss-Legendre quadrature.

    Returns
    -------
    ndarray, shape (2,)
    """
    if not segments:
        return np.zeros(2)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    t0 = np.array([s.t0 for s in segments])
    t1 = np.array([s.t1 for s in segments])
    x0 = np.array([s.x0 for s in segments])
    sp = np.array([s.speed for s in segments])
    uL = np.array([s.uL for s in segments], dtype=float)
    uR = np.array([s.uR for s in segments], dtype=float)
    fL = np.array([model.flux2(a, b) for a, b in uL])
    fR = np.array([model.flux2(a, b) for a, b in uR])
    jump = sp[:, None] * (uR - uL) - (fR - fL)
    half = 0.5 * (t1 - t0)
    tq = 0.5 * (t0 + t1)[:, None] + half[:, None] * nodes[None, :]
    xq = x0[:, None] + sp[:, None] * (tq - t0[:, None])
    line = (phi(tq, xq) * weights[None, :]).sum(axis=1) * half
    return (jump * line[:, None]).sum(axis=0)
