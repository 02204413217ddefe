"""Run configuration: an INI-style file with flat ``key = value`` sections.

Grammar
-------
Sections and keys (all keys optional unless marked)::

    [model]          name (required), delta
    [feedback]       a            -> K = a [[1, 1], [1, 1]]
                     k            -> k11, k12, k21, k22   (exactly one of a, k)
    [run]            h (required), t_final (required), L, front_cap,
                     snapshot_stride, snapshot_times, drop_tol, seed
    [initial_data]   kind = zero | sine | bump | jump | breakpoints
                     amplitude, cells, direction        (sine, bump)
                     centre, width                      (bump)
                     x0, left, right                    (jump)
                     x, u1, u2                          (breakpoints)
    [functionals]    delta0, c_star, gamma, epsilon, C_delta, alpha,
                     include_boundary_in_Q, grid, ratio, samples, safety
    [output]         directory, snapshots

Lists are comma separated.  ``#`` and ``;`` start comment lines.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ConfigParseError, ValidationError
from .flux_model import BUILTIN_MODELS, get_model
from .piecewise import (PiecewiseConstant, bump_profile, from_breakpoints, jump, sample_profile,
                        sine_profile)

SCHEMA = {
    "model": {"name", "delta"},
    "feedback": {"a", "k"},
    "run": {"h", "t_final", "l", "front_cap", "snapshot_stride", "snapshot_times", "drop_tol", "seed"},
    "initial_data": {"kind", "amplitude", "cells", "direction", "centre", "width", "x0", "left",
                     "right", "x", "u1", "u2"},
    "functionals": {"delta0", "c_star", "gamma", "epsilon", "c_delta", "alpha",
                    "include_boundary_in_q", "grid", "ratio", "samples", "safety"},
    "output": {"directory", "snapshots"},
}
REQUIRED = {("model", "name"), ("run", "h"), ("run", "t_final")}
INITIAL_KINDS = ("zero", "sine", "bump", "jump", "breakpoints")
PARAM_KEYS = {"delta0": "delta0", "c_star": "c_star", "gamma": "gamma", "epsilon": "epsilon",
              "c_delta": "C_delta", "alpha": "alpha"}


def feedback_matrix_a(a: float) -> np.ndarray:
    """``K_a = a [[1, 1], [1, 1]]``; rank one with ``rho(|K_a|) = 2|a|``."""
    return float(a) * np.ones((2, 2))


@dataclass
class InitialData:
    kind: str = "zero"
    amplitude: float = 0.0
    cells: Optional[int] = None
    direction: Tuple[float, float] = (1.0, 1.0)
    centre: Optional[float] = None
    width: Optional[float] = None
    x0: float = 0.5
    left: Tuple[float, float] = (0.0, 0.0)
    right: Tuple[float, float] = (0.0, 0.0)
    x: Tuple[float, ...] = ()
    u1: Tuple[float, ...] = ()
    u2: Tuple[float, ...] = ()

    def profile(self, L: float):
        """The smooth profile behind ``sine``/``bump`` data, else ``None``."""
        if self.kind == "sine":
            return sine_profile(L, self.amplitude, self.direction)
        if self.kind == "bump":
            return bump_profile(L, self.amplitude, self.direction, self.centre, self.width)
        return None

    def build(self, L: float, h: float) -> PiecewiseConstant:
        """Piecewise-constant data; profile kinds are sampled on ``cells`` cells (default ``L / h``)."""
        cells = self.cells if self.cells is not None else max(1, round(L / h))
        if self.kind == "zero":
            return PiecewiseConstant.constant(L, (0.0, 0.0))
        if self.kind == "sine":
            return sample_profile(sine_profile(L, self.amplitude, self.direction), L, cells)
        if self.kind == "bump":
            prof = bump_profile(L, self.amplitude, self.direction, self.centre, self.width)
            return sample_profile(prof, L, cells)
        if self.kind == "jump":
            return jump(L, self.x0, self.left, self.right)
        return from_breakpoints(L, self.x, np.column_stack([self.u1, self.u2]))


@dataclass
class RunConfig:
    model: str
    K: np.ndarray
    h: float
    t_final: float
    L: float = 1.0
    model_params: Dict[str, float] = field(default_factory=dict)
    a: Optional[float] = None
    initial: InitialData = field(default_factory=InitialData)
    front_cap: int = 100_000
    snapshot_stride: int = 0
    snapshot_times: Tuple[float, ...] = ()
    drop_tol: Optional[float] = None
    seed: int = 0
    overrides: Dict[str, float] = field(default_factory=dict)
    include_boundary_in_Q: bool = False
    grid: int = 21
    ratio: float = 0.8
    samples: int = 200
    safety: float = 2.0
    directory: str = "fronttrack_out"
    write_snapshots: bool = True

    def build_model(self):
        return get_model(self.model, **self.model_params)

    def initial_data(self) -> PiecewiseConstant:
        return self.initial.build(self.L, self.h)

    def replace(self, **kw) -> "RunConfig":
        """Copy with fields changed; ``a`` also resets ``K``, ``amplitude`` goes to the initial data."""
        import copy

        new = copy.deepcopy(self)
        for key, val in kw.items():
            if key == "a":
                new.a = float(val)
                new.K = feedback_matrix_a(val)
            elif key == "amplitude":
                new.initial.amplitude = float(val)
            elif hasattr(new, key):
                setattr(new, key, val)
            else:
                raise ValidationError(key, "not a configurable field")
        validate(new)
        return new


# --------------------------------------------------------------------------
# parsing


def _key_lines(text: str) -> Dict[Tuple[str, str], int]:
    """Map ``(section, key)`` to the 1-based line where the key appears."""
    out = {}
    section = None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"([^=:]+)[=:]", line)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip().lower()), n)
    return out


def _floats(field_name: str, text: str, n: Optional[int] = None) -> Tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ValidationError(field_name, f"expected numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ValidationError(field_name, f"expected {n} values, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise ValidationError(field_name, "values must be finite")
    return vals


def _float(field_name: str, text: str) -> float:
    return _floats(field_name, text, 1)[0]


def _int(field_name: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValidationError(field_name, f"expected an integer, got {text!r}") from None


def _bool(field_name: str, text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValidationError(field_name, f"expected a boolean, got {text!r}")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration.

    Raises
    ------
    ConfigParseError
        Malformed text, duplicate or unknown keys (with the line number).
    ValidationError
        Well-formed but invalid values; ``.field`` names the culprit.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigParseError("key outside of any [section]", exc.lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigParseError(exc.message.split(": ", 1)[-1], exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigParseError(f"cannot parse {line.strip()!r}", lineno) from None

    lines = _key_lines(text)
    for sec in cp.sections():
        if sec.lower() not in SCHEMA:
            raise ConfigParseError(f"unknown section [{sec}]", _section_line(text, sec))
        for key in cp[sec]:
            if key not in SCHEMA[sec.lower()]:
                raise ConfigParseError(f"unknown key {key!r} in [{sec}]", lines.get((sec.lower(), key)))
    sec = {s.lower(): cp[s] for s in cp.sections()}
    for s, k in sorted(REQUIRED):
        if s not in sec or k not in sec[s]:
            raise ValidationError(k, f"missing required key in [{s}]")

    mdl = sec["model"]
    name = mdl["name"].strip()
    model_params = {}
    if "delta" in mdl:
        model_params["delta"] = _float("delta", mdl["delta"])

    fb = sec.get("feedback", {})
    if "a" in fb and "k" in fb:
        raise ValidationError("feedback", "give either a or k, not both")
    a = None
    if "a" in fb:
        a = _float("a", fb["a"])
        K = feedback_matrix_a(a)
    elif "k" in fb:
        K = np.array(_floats("k", fb["k"], 4)).reshape(2, 2)
    else:
        K = np.zeros((2, 2))

    rn = sec["run"]
    cfg = RunConfig(
        model=name, K=K, a=a, model_params=model_params,
        h=_float("h", rn["h"]), t_final=_float("t_final", rn["t_final"]),
    )
    if "l" in rn:
        cfg.L = _float("L", rn["l"])
    if "front_cap" in rn:
        cfg.front_cap = _int("front_cap", rn["front_cap"])
    if "snapshot_stride" in rn:
        cfg.snapshot_stride = _int("snapshot_stride", rn["snapshot_stride"])
    if "snapshot_times" in rn:
        cfg.snapshot_times = _floats("snapshot_times", rn["snapshot_times"])
    if "drop_tol" in rn:
        cfg.drop_tol = _float("drop_tol", rn["drop_tol"])
    if "seed" in rn:
        cfg.seed = _int("seed", rn["seed"])

    cfg.initial = _parse_initial(sec.get("initial_data", {}))

    fn = sec.get("functionals", {})
    for key, attr in PARAM_KEYS.items():
        if key in fn:
            cfg.overrides[attr] = _float(key, fn[key])
    if "include_boundary_in_q" in fn:
        cfg.include_boundary_in_Q = _bool("include_boundary_in_Q", fn["include_boundary_in_q"])
    if "grid" in fn:
        cfg.grid = _int("grid", fn["grid"])
    if "samples" in fn:
        cfg.samples = _int("samples", fn["samples"])
    if "ratio" in fn:
        cfg.ratio = _float("ratio", fn["ratio"])
    if "safety" in fn:
        cfg.safety = _float("safety", fn["safety"])

    out = sec.get("output", {})
    if "directory" in out:
        cfg.directory = out["directory"].strip()
    if "snapshots" in out:
        cfg.write_snapshots = _bool("snapshots", out["snapshots"])
    validate(cfg)
    return cfg


def _section_line(text: str, name: str) -> Optional[int]:
    for n, raw in enumerate(text.splitlines(), 1):
        if raw.strip().lower() == f"[{name.lower()}]":
            return n
    return None


def _parse_initial(sec) -> InitialData:
    d = InitialData()
    if "kind" in sec:
        d.kind = sec["kind"].strip().lower()
    if "amplitude" in sec:
        d.amplitude = _float("amplitude", sec["amplitude"])
    if "cells" in sec:
        d.cells = _int("cells", sec["cells"])
    if "direction" in sec:
        d.direction = _floats("direction", sec["direction"], 2)
    if "centre" in sec:
        d.centre = _float("centre", sec["centre"])
    if "width" in sec:
        d.width = _float("width", sec["width"])
    if "x0" in sec:
        d.x0 = _float("x0", sec["x0"])
    if "left" in sec:
        d.left = _floats("left", sec["left"], 2)
    if "right" in sec:
        d.right = _floats("right", sec["right"], 2)
    for key in ("x", "u1", "u2"):
        if key in sec:
            setattr(d, key, _floats(key, sec[key]))
    return d


def validate(cfg: RunConfig) -> None:
    """Raise :class:`ValidationError` naming the first invalid field."""
    if cfg.model not in BUILTIN_MODELS:
        raise ValidationError("model", f"unknown model {cfg.model!r}")
    if "delta" in cfg.model_params and not cfg.model_params["delta"] > 0:
        raise ValidationError("delta", "must be positive")
    if not np.all(np.isfinite(cfg.K)):
        raise ValidationError("K", "entries must be finite")
    if not cfg.h > 0:
        raise ValidationError("h", "must be positive")
    if not cfg.L > 0:
        raise ValidationError("L", "must be positive")
    if not cfg.t_final >= 0:
        raise ValidationError("t_final", "must be non-negative")
    if cfg.front_cap < 1:
        raise ValidationError("front_cap", "must be positive")
    if cfg.snapshot_stride < 0:
        raise ValidationError("snapshot_stride", "must be non-negative")
    if any(t < 0 for t in cfg.snapshot_times):
        raise ValidationError("snapshot_times", "must be non-negative")
    if cfg.drop_tol is not None and not cfg.drop_tol > 0:
        raise ValidationError("drop_tol", "must be positive")
    for key, val in cfg.overrides.items():
        if not val > 0:
            raise ValidationError(key, "must be positive")
    if not 0 < cfg.ratio < 1:
        raise ValidationError("ratio", "must lie in (0, 1)")
    if cfg.grid < 2 or cfg.samples < 1:
        raise ValidationError("grid" if cfg.grid < 2 else "samples", "too small")
    if not cfg.directory:
        raise ValidationError("directory", "must not be empty")
    _validate_initial(cfg.initial, cfg.L)


def _validate_initial(d: InitialData, L: float) -> None:
    if d.kind not in INITIAL_KINDS:
        raise ValidationError("initial_data", f"kind must be one of {', '.join(INITIAL_KINDS)}")
    if d.cells is not None and d.cells < 1:
        raise ValidationError("cells", "must be positive")
    if d.kind == "jump" and not 0 < d.x0 < L:
        raise ValidationError("x0", "must lie strictly inside (0, L)")
    if d.kind == "bump" and d.width is not None and not d.width > 0:
        raise ValidationError("width", "must be positive")
    if d.kind == "breakpoints":
        x = np.asarray(d.x, dtype=float)
        if len(d.u1) != len(x) + 1 or len(d.u2) != len(x) + 1:
            raise ValidationError("initial_data", "u1 and u2 need one more value than x")
        if np.any(np.diff(x) <= 0):
            raise ValidationError("initial_data", "breakpoints x must be strictly increasing")
        if len(x) and (x[0] <= 0 or x[-1] >= L):
            raise ValidationError("initial_data", "breakpoints must lie strictly inside (0, L)")


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
