"""Run orchestration, deterministic writers, sweeps and the finite-volume oracle."""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import RunConfig
from .errors import CFLViolation, FrontTrackError
from .flux_model import eigvals4
from .front_tracking import RunResult, run
from .functionals import (DecayReport, FunctionalParams, _speed_bounds, decay_fit, monitor_decay,
                          select_parameters, tv_star)
from .piecewise import PiecewiseConstant, cell_averages, cell_means, from_cells

OUTPUT_ROOT_ENV = "FRONTTRACK_OUTPUT_ROOT"
EVENTS_HEADER = "t,x,type,family_in,sigma_in1,sigma_in2,sigma_out1,sigma_out2,V,Q,J"
SERIES_HEADER = "t,V,Q,J,TVstar,max_rarefaction,front_count"
BOUNDARY_TOL = 1e-10


def output_dir(cfg: RunConfig, override=None) -> Path:
    """``override`` if given, else the config directory under ``$FRONTTRACK_OUTPUT_ROOT`` (default cwd)."""
    if override is not None:
        return Path(override)
    d = Path(cfg.directory)
    if d.is_absolute():
        return d
    return Path(os.environ.get(OUTPUT_ROOT_ENV, ".")) / d


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


# --------------------------------------------------------------------------
# single runs


def parameters_for(cfg: RunConfig, model=None) -> FunctionalParams:
    model = model or cfg.build_model()
    p = select_parameters(
        model, cfg.K, cfg.L, grid=cfg.grid, ratio=cfg.ratio, C_delta=cfg.overrides.get("C_delta"),
        safety=cfg.safety, samples=cfg.samples, seed=cfg.seed,
    )
    extra = {k: v for k, v in cfg.overrides.items() if k != "C_delta"}
    if extra:
        p = p.with_overrides(**extra)
    if cfg.include_boundary_in_Q:
        p = p.with_overrides(include_boundary_in_Q=True, c0=p.c0, nu=p.nu)
    return p


@dataclass
class RunOutputs:
    """Paths of the written files plus the in-memory results.

    ``runtime`` is wall-clock seconds; it is kept out of the files so that
    identical configs give byte-identical outputs.
    """

    directory: Optional[Path]
    events_path: Optional[Path]
    series_path: Optional[Path]
    snapshots_path: Optional[Path]
    summary_path: Optional[Path]
    summary: Dict[str, object]
    result: RunResult
    report: DecayReport
    params: FunctionalParams
    runtime: float

    @property
    def passed(self) -> bool:
        """All monitors pass: run completed, no decay violations, boundary trace matched."""
        return bool(self.summary["passed"])


def summarize(cfg: RunConfig, res: RunResult, rep: DecayReport, params: FunctionalParams) -> Dict[str, object]:
    st = res.status
    t = [r.t for r in res.series]
    tv = [r.TVstar for r in res.series]
    nu_hat, C = decay_fit(t, tv, st.t_end)
    out: Dict[str, object] = {
        "model": cfg.model,
        "K": ",".join(_num(v) for v in np.asarray(cfg.K).ravel()),
        "L": cfg.L,
        "h": cfg.h,
        "t_final": cfg.t_final,
        "completed": st.completed,
        "reason": st.reason,
        "t_end": st.t_end,
        "events": st.n_events,
        "max_fronts": st.max_fronts,
        "perturbations": st.perturbations,
        "max_perturbation": st.max_perturbation,
        "lax_failures": st.lax_failures,
        "min_speed": st.min_speed,
        "max_rarefaction": st.max_rarefaction,
        "max_rarefaction_over_h": st.max_rarefaction_ratio,
        "max_boundary_residual": st.max_boundary_residual,
        "absorbed_strength": st.dropped,
        "TV0": tv[0],
        "TV_end": tv[-1],
        "J0": res.series[0].J,
        "J_end": res.series[-1].J,
        "nu": params.nu,
        "nu_hat": nu_hat,
        "tv_envelope_C": C,
        "J_rate": rep.fitted_rate,
        "violations": len(rep.violations),
        "increases": rep.n_increases,
        "interior_unchecked": rep.n_interior_unchecked,
        "delta0": params.delta0,
        "c_star": params.c_star,
        "gamma": params.gamma,
        "epsilon": params.epsilon,
        "C_delta": params.C_delta,
        "c0": params.c0,
        "alpha": params.alpha,
        "smallness_bound": params.smallness_bound,
    }
    out["passed"] = bool(
        st.completed and not rep.violations and st.max_boundary_residual <= BOUNDARY_TOL
        and st.lax_failures == 0
    )
    return out


def run_simulation(cfg: RunConfig, out_dir=None, write: bool = True) -> RunOutputs:
    """Select parameters, run front tracking, monitor ``J`` and write the outputs.

    Errors from any stage are re-raised with the model and ``h`` prefixed.
    """
    t0 = time.perf_counter()
    try:
        model = cfg.build_model()
        params = parameters_for(cfg, model)
        res = run(
            model, cfg.K, cfg.initial_data(), cfg.h, cfg.t_final, params,
            front_cap=cfg.front_cap, snapshot_stride=cfg.snapshot_stride,
            snapshot_times=cfg.snapshot_times, drop_tol=cfg.drop_tol,
        )
    except FrontTrackError as exc:
        if exc.args:
            exc.args = (f"{cfg.model}, h={cfg.h:g}: {exc.args[0]}",) + exc.args[1:]
        raise
    rep = monitor_decay(res.events, params, J0=res.series[0].J)
    runtime = time.perf_counter() - t0
    summary = summarize(cfg, res, rep, params)
    paths: List[Optional[Path]] = [None] * 5
    if write:
        d = output_dir(cfg, out_dir)
        d.mkdir(parents=True, exist_ok=True)
        paths = [d, d / "events.csv", d / "series.csv", d / "snapshots.txt", d / "summary.txt"]
        write_events(paths[1], res)
        write_series(paths[2], res)
        if cfg.write_snapshots:
            write_snapshots(paths[3], res.trajectory)
        else:
            paths[3] = None
        write_summary(paths[4], summary)
    return RunOutputs(*paths, summary, res, rep, params, runtime)


# --------------------------------------------------------------------------
# writers


def write_events(path, res: RunResult):
    lines = [EVENTS_HEADER]
    s0 = res.series[0]
    lines.append(",".join(["0.0", "0.0", "init", "", "", "", "", "", _num(s0.V), _num(s0.Q), _num(s0.J)]))
    for e in res.events:
        sin = list(e.sigma_in) + [None] * (2 - len(e.sigma_in))
        fam = "-".join(str(k) for k in e.family_in)
        lines.append(",".join([
            _num(e.t), _num(e.x), e.type, fam, _num(sin[0]), _num(sin[1]),
            _num(e.sigma_out[0]), _num(e.sigma_out[1]), _num(e.V_after), _num(e.Q_after), _num(e.J_after),
        ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_series(path, res: RunResult):
    lines = [SERIES_HEADER]
    for r in res.series:
        lines.append(",".join(_num(v) for v in (r.t, r.V, r.Q, r.J, r.TVstar, r.max_rarefaction, r.front_count)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_snapshots(path, trajectory):
    """One block per snapshot: ``t = ...`` then ``x,u1,u2`` rows, the first at ``x = 0``."""
    out = []
    for snap in trajectory:
        pc = snap.to_piecewise() if hasattr(snap, "to_piecewise") else snap[1]
        t = snap.t if hasattr(snap, "t") else snap[0]
        out.append(f"t = {_num(t)}")
        out.append("x,u1,u2")
        xs = np.concatenate([[0.0], pc.breaks])
        for x, v in zip(xs, pc.values):
            out.append(f"{_num(x)},{_num(v[0])},{_num(v[1])}")
        out.append("")
    Path(path).write_text("\n".join(out), encoding="utf-8")


def write_summary(path, summary: Dict[str, object]):
    lines = []
    for k, v in summary.items():
        if isinstance(v, (bool, str)):
            lines.append(f"{k} = {v}")
        else:
            lines.append(f"{k} = {_num(v)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# --------------------------------------------------------------------------
# finite-volume oracle


def _flux_rows(model, U: np.ndarray) -> np.ndarray:
    try:
        f1, f2 = model.flux2(U[:, 0], U[:, 1])
        F = np.column_stack([np.broadcast_to(f1, U[:, 0].shape), np.broadcast_to(f2, U[:, 1].shape)])
        if F.shape == U.shape:
            return F
    except (TypeError, ValueError):
        pass
    return np.array([model.flux2(float(a), float(b)) for a, b in U])


def godunov(model, K, U0: np.ndarray, L: float, times: Sequence[float], cfl: float = 0.45,
            max_speed: Optional[float] = None) -> List[Tuple[float, np.ndarray]]:
    """First-order Godunov scheme for positive characteristic speeds.

    Both waves of every interface Riemann problem move right, so the
    Godunov state at ``x/t = 0`` is the left cell value and the numerical
    flux is ``f(u_left)``.  The inflow ghost cell holds ``K u_N``; the
    outflow boundary is upwind (extrapolation).

    Returns ``(t, cell values)`` at each requested time.
    """
    if not 0 < cfl <= 1:
        raise CFLViolation(f"CFL number {cfl} outside (0, 1]")
    K = np.asarray(K, dtype=float).reshape(2, 2)
    U = np.array(U0, dtype=float)
    n = len(U)
    dx = L / n
    if max_speed is None:
        lo1, _, _, hi2 = _speed_bounds(model, model.delta, 11)
        if lo1 <= 0:
            raise CFLViolation("characteristic speeds must be positive for upwinding")
        max_speed = hi2
    dt_max = cfl * dx / max_speed
    out = []
    t = 0.0
    for target in sorted(times):
        while t < target - 1e-14:
            dt = min(dt_max, target - t)
            F = _flux_rows(model, U)
            ghost = K @ U[-1]
            fg = np.asarray(model.flux2(float(ghost[0]), float(ghost[1])))
            Fin = np.vstack([fg[None, :], F[:-1]])
            U = U - (dt / dx) * (F - Fin)
            t += dt
        lam = [eigvals4(*model.jac4(float(a), float(b))) for a, b in U[:: max(1, n // 64)]]
        if min(l1 for l1, _ in lam) <= 0 or max(l2 for _, l2 in lam) * dt_max / dx > 1.0:
            raise CFLViolation(f"CFL condition broken near t = {t:.6g}")
        out.append((target, U.copy()))
    return out


def fv_reference(cfg: RunConfig, cells: int, times: Optional[Sequence[float]] = None,
                 cfl: float = 0.45) -> List[Tuple[float, PiecewiseConstant]]:
    """Godunov trajectory on ``cells`` uniform cells at ``times``.

    Initial values are cell averages of the underlying smooth profile for
    ``sine``/``bump`` data, exact averages of the piecewise-constant data
    otherwise.  ``times`` defaults to the config snapshot times plus
    ``t_final``.
    """
    if cells < 16:
        raise ValueError("cells must be at least 16")
    model = cfg.build_model()
    prof = cfg.initial.profile(cfg.L)
    if prof is not None:
        U0 = cell_averages(prof, cfg.L, cells)
    else:
        U0 = cell_means(cfg.initial_data(), cells)
    if times is None:
        times = sorted(set(cfg.snapshot_times) | {cfg.t_final})
    return [(t, from_cells(cfg.L, U)) for t, U in godunov(model, cfg.K, U0, cfg.L, times, cfl)]


@dataclass
class Comparison:
    t: float
    l1: float
    normalized: float


def compare(cfg: RunConfig, cells: int, times: Optional[Sequence[float]] = None) -> List[Comparison]:
    """Exact ``L^1`` distance between front tracking and Godunov at ``times``.

    ``normalized`` divides by ``TV*(u0h) L``.
    """
    if times is None:
        times = sorted(set(cfg.snapshot_times) | {cfg.t_final})
    model = cfg.build_model()
    u0 = cfg.initial_data()
    res = run(model, cfg.K, u0, cfg.h, max(times), None, front_cap=cfg.front_cap,
              snapshot_times=times, drop_tol=cfg.drop_tol, record_segments=False)
    if not res.status.completed:
        raise FrontTrackError(f"front tracking stopped early: {res.status.message}")
    ft = {s.t: s.to_piecewise() for s in res.trajectory}
    fv = fv_reference(cfg, cells, times)
    scale = tv_star(cfg.K, u0) * cfg.L
    out = []
    for t, pc in fv:
        d = ft[t].l1_distance(pc)
        out.append(Comparison(t, d, d / scale if scale > 0 else math.nan))
    return out


# --------------------------------------------------------------------------
# sweeps

SWEEP_COLUMNS = ("status", "nu_hat", "nu", "tv_envelope_C", "violations", "increases",
                 "max_rarefaction_over_h", "events", "max_fronts", "TV0", "TV_end", "message")


def _sweep_one(args):
    cfg, combo, out_dir = args
    row: Dict[str, object] = dict(combo)
    try:
        c = cfg.replace(**combo)
        o = run_simulation(c, out_dir=out_dir, write=out_dir is not None)
        row.update({k: o.summary.get(k) for k in SWEEP_COLUMNS if k in o.summary})
        row["status"] = "passed" if o.passed else "failed"
        row["message"] = o.result.status.message
    except FrontTrackError as exc:
        row["status"] = type(exc).__name__
        row["message"] = str(exc)
    return row


def sweep(cfg: RunConfig, vary: Dict[str, Sequence[float]], workers: int = 1,
          out_dir=None, write: bool = True) -> List[Dict[str, object]]:
    """Run every combination of ``vary`` (cartesian product, in the given order).

    Failures are recorded in the row and the sweep continues.  Rows come
    back in combination order whatever ``workers`` is.
    """
    keys = list(vary)
    combos = [dict(zip(keys, vals)) for vals in itertools.product(*(vary[k] for k in keys))]
    base = output_dir(cfg, out_dir)
    jobs = [(cfg, c, (base / f"run_{i:03d}") if write else None) for i, c in enumerate(combos)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    if write:
        base.mkdir(parents=True, exist_ok=True)
        write_sweep(base / "sweep.csv", rows, keys)
    return rows


def write_sweep(path, rows, keys):
    cols = list(keys) + list(SWEEP_COLUMNS)
    lines = [",".join(cols)]
    for r in rows:
        vals = []
        for c in cols:
            v = r.get(c)
            if isinstance(v, str):
                vals.append('"' + v.replace('"', "'") + '"' if ("," in v or '"' in v) else v)
            else:
                vals.append(_num(v))
        lines.append(",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
