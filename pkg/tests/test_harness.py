import numpy as np
import pytest

from fronttrack.config import parse_config
from fronttrack.errors import CFLViolation, DataTooLarge
from fronttrack.harness import (EVENTS_HEADER, OUTPUT_ROOT_ENV, SERIES_HEADER, compare, fv_reference,
                                godunov, output_dir, run_simulation, sweep)


def make_cfg(model="decoupled_burgers", feedback="a = 0.3", h=0.05, t_final=2.0, init=None, extra=""):
    init = init or "kind = sine\namplitude = 0.02"
    return parse_config(f"""
[model]
name = {model}
[feedback]
{feedback}
[run]
h = {h}
t_final = {t_final}
snapshot_times = 0.5, 1
[initial_data]
{init}
[output]
directory = out/test
{extra}
""")


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0], [r.split(",") for r in lines[1:]]


# ---------------------------------------------------------------- outputs


def test_output_files_and_headers(tmp_path):
    out = run_simulation(make_cfg(), out_dir=tmp_path)
    head, rows = read_csv(out.events_path)
    assert head == EVENTS_HEADER and rows[0][2] == "init"
    assert len(rows) == out.result.status.n_events + 1
    head, rows = read_csv(out.series_path)
    assert head == SERIES_HEADER
    assert len(rows) == out.result.status.n_events + 1
    snaps = out.snapshots_path.read_text().split("\n\n")
    assert snaps[0].startswith("t = 0.0\nx,u1,u2\n0.0,")
    assert [b.splitlines()[0] for b in snaps if b] == ["t = 0.0", "t = 0.5", "t = 1.0", "t = 2.0"]
    summary = out.summary_path.read_text()
    assert "nu_hat = " in summary and "violations = 0" in summary
    assert "runtime" not in summary
    assert out.passed


def test_outputs_are_byte_identical(tmp_path):
    cfg = make_cfg(model="coupled_drift")
    a = run_simulation(cfg, out_dir=tmp_path / "a")
    b = run_simulation(cfg, out_dir=tmp_path / "b")
    for pa, pb in [(a.events_path, b.events_path), (a.series_path, b.series_path),
                   (a.snapshots_path, b.snapshots_path), (a.summary_path, b.summary_path)]:
        assert pa.read_bytes() == pb.read_bytes()


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
    cfg = make_cfg()
    assert output_dir(cfg) == tmp_path / "out" / "test"
    assert output_dir(cfg, tmp_path / "x") == tmp_path / "x"
    out = run_simulation(cfg)
    assert out.directory == tmp_path / "out" / "test" and out.events_path.exists()


def test_zero_data_run(tmp_path):
    out = run_simulation(make_cfg(init="kind = zero"), out_dir=tmp_path)
    _, rows = read_csv(out.events_path)
    assert len(rows) == 1  # init row only
    _, rows = read_csv(out.series_path)
    assert all(float(r[4]) == 0.0 for r in rows)
    assert out.passed


def test_absorbing_jump_run(tmp_path):
    cfg = make_cfg(feedback="k = 0, 0, 0, 0", h=0.02, init="kind = jump\nx0 = 0.5\nleft = 0, 0\nright = 0.15, 0")
    out = run_simulation(cfg, out_dir=tmp_path)
    t = np.array([r.t for r in out.result.series])
    tv = np.array([r.TVstar for r in out.result.series])
    hit = t[np.argmax(tv == 0)]
    assert tv[-1] == 0.0 and np.all(tv[t >= hit] == 0)
    assert hit <= cfg.L / out.params.c_star


def test_errors_carry_context():
    cfg = make_cfg(init="kind = jump\nx0 = 0.5\nleft = 0, 0\nright = 0.35, 0")
    with pytest.raises(DataTooLarge, match="decoupled_burgers, h=0.05"):
        run_simulation(cfg, write=False)


# ------------------------------------------------------------ finite volume


def test_godunov_zero_data_stays_zero(burgers):
    out = godunov(burgers, np.eye(2) * 0.3, np.zeros((32, 2)), 1.0, [0.5, 1.0])
    assert all(np.all(U == 0) for _, U in out)
    with pytest.raises(CFLViolation):
        godunov(burgers, np.zeros((2, 2)), np.zeros((32, 2)), 1.0, [0.1], cfl=1.5)


def test_godunov_burgers_shock_speed():
    cfg = make_cfg(feedback="k = 0, 0, 0, 0", init="kind = jump\nx0 = 0.2\nleft = 0.06, 0\nright = -0.04, 0")
    T = 0.4
    cells = 200
    ((t, U),) = fv_reference(cfg, cells, [T])
    # lambda_1 = 1 + u1 on this model: RH speed is 1 + (uL + uR) / 2
    x_exact = 0.2 + (1 + 0.5 * (0.06 - 0.04)) * T
    mid = 0.5 * (0.06 - 0.04)
    vals = U((np.arange(cells) + 0.5) / cells)[:, 0]
    # last downward crossing of the midpoint value; the boundary wave sits further left
    cross = np.flatnonzero((vals[:-1] >= mid) & (vals[1:] < mid))
    x_num = (cross[-1] + 1) / cells
    assert abs(x_num - x_exact) <= 1.0 / cells


def test_fv_rejects_coarse_grids():
    with pytest.raises(ValueError):
        fv_reference(make_cfg(), 8, [0.1])


def test_compare_decreases_under_refinement():
    cfg = make_cfg(model="coupled_drift", t_final=1.0)
    d = [compare(cfg.replace(h=h), cells, [1.0])[0].normalized for h, cells in ((0.04, 64), (0.02, 128))]
    assert d[1] < d[0]


# ------------------------------------------------------------------ sweep


def test_sweep_records_failures_and_continues(tmp_path):
    cfg = make_cfg(t_final=1.0)
    rows = sweep(cfg, {"a": [0.3, 0.6]}, out_dir=tmp_path)
    assert [r["a"] for r in rows] == [0.3, 0.6]
    assert rows[0]["status"] == "passed"
    assert rows[1]["status"] == "NoFeasibleParams"
    assert "1.2" in rows[1]["message"]
    table = (tmp_path / "sweep.csv").read_text().splitlines()
    assert table[0].startswith("a,status,") and len(table) == 3
    assert (tmp_path / "run_000" / "events.csv").exists()


def test_sweep_parallel_matches_serial():
    cfg = make_cfg(t_final=1.0)
    vary = {"h": [0.05, 0.025], "amplitude": [0.01, 0.02]}
    a = sweep(cfg, vary, write=False)
    b = sweep(cfg, vary, workers=2, write=False)
    assert a == b
    assert [(r["h"], r["amplitude"]) for r in a] == [(0.05, 0.01), (0.05, 0.02), (0.025, 0.01), (0.025, 0.02)]


def test_sweep_rarefaction_ratio_bounded():
    cfg = make_cfg(model="coupled_drift", t_final=2.0)
    rows = sweep(cfg, {"h": [0.04, 0.02, 0.01]}, write=False)
    assert all(r["max_rarefaction_over_h"] <= 3 for r in rows)


def test_sweep_rate_shrinks_toward_critical_a():
    cfg = make_cfg(t_final=10.0, h=0.04)
    rows = sweep(cfg, {"a": [0.1, 0.3, 0.45]}, write=False)
    assert all(r["status"] == "passed" for r in rows)
    nus = [r["nu_hat"] for r in rows]
    assert nus[0] > nus[1] > nus[2] > 0


# ---------------------------------------------------------- self-convergence


@pytest.mark.slow
def test_self_convergence(model):
    from fronttrack.config import feedback_matrix_a
    from fronttrack.front_tracking import run
    from fronttrack.piecewise import sample_profile, sine_profile

    sols = []
    for h in (0.04, 0.02, 0.01, 0.005):
        u0 = sample_profile(sine_profile(1.0, 0.02), 1.0, round(1 / h))
        res = run(model, feedback_matrix_a(0.3), u0, h, 1.0, snapshot_times=[1.0], record_segments=False)
        sols.append(res.trajectory[-1].to_piecewise())
    d = [a.l1_distance(b) for a, b in zip(sols, sols[1:])]
    assert d[0] / d[1] >= 1.5 and d[1] / d[2] >= 1.5
