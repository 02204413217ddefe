"""Command line entry point: ``fronttrack simulate|analyze|sweep|compare``.

The exit code is 0 only when every monitor of the command passes.
"""

from __future__ import annotations

import argparse
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import load_config
from .errors import FrontTrackError
from .flux_model import BUILTIN_MODELS, get_model
from .harness import compare, output_dir, run_simulation, sweep
from .stability import condition12, linear_spectral_check, rho0, rho1, rho2, rho_inf, rho_p

EXIT_OK = 0
EXIT_MONITOR = 1
EXIT_ERROR = 2


def _floats(text: str, n: Optional[int] = None) -> List[float]:
    vals = [float(v) for v in text.split(",") if v.strip()]
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers")
    return vals


def _vary(text: str):
    key, _, vals = text.partition("=")
    if not key or not vals:
        raise argparse.ArgumentTypeError("expected key=v1,v2,...")
    return key.strip(), _floats(vals)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = run_simulation(cfg, out_dir=args.out)
    s = out.summary
    for key in ("model", "h", "events", "max_fronts", "nu", "nu_hat", "tv_envelope_C", "violations",
                "increases", "max_rarefaction_over_h", "max_boundary_residual", "passed"):
        print(f"{key} = {s[key]}")
    print(f"runtime = {out.runtime:.3f} s")
    print(f"outputs in {out.directory}")
    return EXIT_OK if out.passed else EXIT_MONITOR


def analyze_record(K, lambdas=(1.0, 2.0), model_name: Optional[str] = None) -> Dict[str, object]:
    """All matrix-level quantities for one ``K`` as an ordered dict."""
    K = np.asarray(K, dtype=float).reshape(2, 2)
    rec: Dict[str, object] = {
        "K": ",".join(repr(float(v)) for v in K.ravel()),
        "rho1": rho1(K),
        "rho_inf": rho_inf(K),
        "rho_p1": rho_p(K, 1),
        "rho_p2": rho2(K),
        "rho_pinf": rho_p(K, np.inf),
        "rho0": rho0(K),
    }
    if model_name is not None:
        c = condition12(get_model(model_name), K)
        rec.update(condition12_model=model_name, condition12=c.satisfied,
                   condition12_value=c.value, alpha_star=c.alpha_star)
    verdict = linear_spectral_check(tuple(lambdas), K)
    rec.update(lambdas=",".join(repr(float(v)) for v in lambdas), linear_stable=verdict.stable,
               worst_root=verdict.worst_root, roots_in_box=verdict.n_roots)
    return rec


def cmd_analyze(args) -> int:
    rec = analyze_record(args.k, args.lambdas, args.model)
    for k, v in rec.items():
        print(f"{k} = {v}")
    ok = rec["linear_stable"] and rec.get("condition12", True)
    return EXIT_OK if ok else EXIT_MONITOR


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    vary = dict(args.vary)
    rows = sweep(cfg, vary, workers=args.workers, out_dir=args.out)
    keys = list(vary)
    cols = keys + ["status", "nu_hat", "nu", "violations", "max_rarefaction_over_h"]
    print("  ".join(f"{c:>14}" for c in cols))
    for r in rows:
        cells = []
        for c in cols:
            v = r.get(c, "")
            cells.append(f"{v:>14.6g}" if isinstance(v, float) else f"{str(v):>14}")
        print("  ".join(cells))
    print(f"table written to {output_dir(cfg, args.out) / 'sweep.csv'}")
    return EXIT_OK if all(r["status"] == "passed" for r in rows) else EXIT_MONITOR


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    times = args.times or None
    rows = compare(cfg, args.cells, times)
    print("t,l1,l1_over_TV0_L")
    for r in rows:
        print(f"{r.t!r},{r.l1!r},{float(r.normalized)!r}")
    if args.tol is not None and any(not r.normalized <= args.tol for r in rows):
        return EXIT_MONITOR
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fronttrack", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run front tracking and the decay monitor")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (overrides the config and the env root)")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="stability quantities of a feedback matrix")
    a.add_argument("--k", required=True, type=lambda t: _floats(t, 4), help="k11,k12,k21,k22")
    a.add_argument("--lambdas", type=lambda t: _floats(t, 2), default=[1.0, 2.0])
    a.add_argument("--model", choices=sorted(BUILTIN_MODELS), help="also check the nonlinear condition")
    a.set_defaults(func=cmd_analyze)

    w = sub.add_parser("sweep", help="run a config over parameter ranges")
    w.add_argument("config")
    w.add_argument("--vary", type=_vary, action="append", required=True, help="key=v1,v2,... (a, h, amplitude)")
    w.add_argument("--workers", type=int, default=1)
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="L1 distance to a Godunov reference")
    c.add_argument("config")
    c.add_argument("--cells", type=int, required=True)
    c.add_argument("--times", type=_floats, help="comparison times (default: snapshot times and t_final)")
    c.add_argument("--tol", type=float, help="fail if a normalized distance exceeds this")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FrontTrackError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
