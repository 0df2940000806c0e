"""Scenario files: a flat ``key = value`` format with ``[section]`` headers.

Grammar (UTF-8 text, one statement per line)::

    # comment                      full-line comment; '#' after a value starts a comment too
    key = value                    top-level keys before the first section
    [section]                      one of: kernel, assumptions, geometry, run, acceptance
    key = value

Value syntax by type:

    int         12   or  1e6   (must be integral)
    float       0.5  or  -1e-3
    angle       a float in radians, or  pi,  pi/2,  3*pi/4
    bool        true | false
    auto-float  a float or the word  auto
    ints        space-separated ints            e.g.  50 0
    floats      space-separated floats
    points      points separated by ';'         e.g.  1 0; 2 0; 3 5
    grid        t: r r r; t: r r                e.g.  1000: 100 200; 10000: 300 1000
    words       space-separated tokens

Every key is checked against the schema below; unknown keys, bad values,
duplicates and missing mandatory keys raise :class:`ParseError` carrying the
file name and line number.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ParseError
from .geometry import Cone, LyapunovParams
from .kernels import AssumptionParams, KernelSpec

EXPERIMENTS = ("exit_cone", "direction", "decompose", "supermartingale", "escape_bound",
               "concentration", "hit_ball", "verify_assumptions", "geometry", "normalize",
               "rwre_replay", "determinism")

NEEDS_KERNEL = {"exit_cone", "direction", "decompose", "supermartingale", "escape_bound",
                "hit_ball", "verify_assumptions", "rwre_replay"}

SCHEMA = {
    "": {"name": "word", "experiment": "word", "description": "text"},
    "kernel": {"variant": "word", "dim": "int", "c": "float", "beta": "float",
               "env_seed": "int", "chi_bound": "float"},
    "assumptions": {"kappa": "float", "k": "int", "n0": "int", "B0": "float", "eps_plus": "float",
                    "beta": "float", "c": "float", "delta": "float", "A0": "float"},
    "geometry": {"axis": "floats", "half_angle": "angle", "nu": "auto", "s": "auto", "K": "float",
                 "forbidden": "word", "ball_offset": "floats", "ball_radius_factor": "float",
                 "outer_factor": "float", "N": "ints", "census_states": "int",
                 "census_span": "float", "points": "int", "stay_angle": "angle",
                 "growth_factor": "float"},
    "run": {"x0": "ints", "n_runs": "int", "horizon": "int", "checkpoints": "ints",
            "master_seed": "int", "workers": "int", "T": "int", "trace_runs": "int",
            "output_dir": "text", "states": "points", "x1_range": "ints", "x2_values": "ints",
            "grid": "grid", "maximal_t": "int", "worker_counts": "ints", "scenarios": "words",
            "sites": "int", "directions": "points", "horizon_factor": "float",
            "max_runs": "int", "max_horizon": "int", "precheck_states": "int",
            "random_cases": "int"},
    "acceptance": {"min_stop_fraction": "float", "max_seconds": "float", "p_min": "float",
                   "min_stay_fraction": "float", "min_growth_fraction": "float",
                   "slack": "float", "tolerance": "float", "min_hit_fraction": "float",
                   "expect_pass": "bool", "expect_closed_form": "bool", "expect": "ints",
                   "median_decrease": "bool"},
}

MANDATORY = [("", "name"), ("", "experiment"), ("run", "master_seed")]

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


class _Err(Exception):
    pass


def _int(tok: str) -> int:
    try:
        v = float(tok)
    except ValueError:
        raise _Err(f"expected an integer, got {tok!r}") from None
    if not math.isfinite(v) or v != int(v):
        raise _Err(f"expected an integer, got {tok!r}")
    if re.fullmatch(r"[-+]?\d+", tok):
        return int(tok)
    return int(v)


def _float(tok: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise _Err(f"expected a number, got {tok!r}") from None
    if not math.isfinite(v):
        raise _Err(f"expected a finite number, got {tok!r}")
    return v


def _angle(tok: str) -> float:
    t = tok.replace(" ", "")
    m = re.fullmatch(rf"(?:({_NUM})\*)?pi(?:/({_NUM}))?", t)
    if m:
        return (float(m.group(1)) if m.group(1) else 1.0) * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
    return _float(tok)


def _convert(kind: str, raw: str):
    if kind in ("word", "text"):
        if not raw:
            raise _Err("empty value")
        if kind == "word" and " " in raw:
            raise _Err(f"expected a single word, got {raw!r}")
        return raw
    if kind == "int":
        return _int(raw)
    if kind == "float":
        return _float(raw)
    if kind == "angle":
        return _angle(raw)
    if kind == "auto":
        return "auto" if raw == "auto" else _float(raw)
    if kind == "bool":
        if raw not in ("true", "false"):
            raise _Err(f"expected true or false, got {raw!r}")
        return raw == "true"
    if kind == "ints":
        return tuple(_int(t) for t in raw.split())
    if kind == "floats":
        return tuple(_float(t) for t in raw.split())
    if kind == "words":
        return tuple(raw.split())
    if kind == "points":
        pts = [tuple(_int(t) for t in chunk.split()) for chunk in raw.split(";") if chunk.strip()]
        if not pts:
            raise _Err("no points given")
        return tuple(pts)
    if kind == "grid":
        rows = []
        for chunk in raw.split(";"):
            if not chunk.strip():
                continue
            if ":" not in chunk:
                raise _Err(f"grid rows look like 't: r r r', got {chunk.strip()!r}")
            t, rs = chunk.split(":", 1)
            rows.append((_int(t.strip()), tuple(_float(r) for r in rs.split())))
        return tuple(rows)
    raise AssertionError(kind)


@dataclass
class Scenario:
    """A validated scenario; sections are plain dicts of typed values."""

    name: str
    experiment: str
    sections: dict
    lines: dict = field(default_factory=dict)
    path: str | None = None
    digest: str = ""
    base_dir: str = "."

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    @property
    def master_seed(self) -> int:
        return self.get("run", "master_seed")

    def kernel_spec(self) -> KernelSpec:
        k = self.sections.get("kernel", {})
        v = k.get("variant")
        dim = k.get("dim", 2)
        if v == "zero":
            return KernelSpec.zero_drift(dim)
        if v == "radial":
            return KernelSpec.radial(k.get("c", 0.0), k.get("beta", 1.0), dim)
        if v == "principal_a":
            return KernelSpec.principal_a(k.get("c", 0.0), k.get("beta", 1.0), dim)
        if v == "principal_b":
            return KernelSpec.principal_b(k.get("c", 0.0), k.get("beta", 1.0), dim)
        if v == "half_plane":
            return KernelSpec.half_plane()
        if v == "rwre":
            return KernelSpec.rwre(k.get("env_seed", 0), k.get("chi_bound", 0.125), dim)
        raise AssertionError(v)

    def assumption_params(self) -> AssumptionParams:
        a = dict(self.sections.get("assumptions", {}))
        return AssumptionParams(**a)

    def cone(self) -> Cone:
        d = self.get("kernel", "dim", 2)
        axis = self.get("geometry", "axis", (1.0,) + (0.0,) * (d - 1))
        return Cone.around(axis, self.get("geometry", "half_angle", math.pi / 2))

    def output_dir(self, override: str | None = None) -> Path:
        if override:
            return Path(override) / self.name
        out = self.get("run", "output_dir")
        if out is None:
            return Path("results") / self.name
        p = Path(out)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def with_run(self, **values) -> "Scenario":
        secs = {k: dict(v) for k, v in self.sections.items()}
        run = secs.setdefault("run", {})
        for k, v in values.items():
            if v is not None:
                run[k] = v
        return replace(self, sections=secs)


def _validate(sc: Scenario, path):
    def fail(msg, section="", key=None):
        raise ParseError(msg, path, sc.lines.get((section, key)))

    for section, key in MANDATORY:
        if key not in sc.sections.get(section, {}):
            where = f"[{section}] " if section else ""
            raise ParseError(f"missing mandatory key {where}{key}", path)
    if sc.experiment not in EXPERIMENTS:
        fail(f"unknown experiment {sc.experiment!r}; choose from {', '.join(EXPERIMENTS)}", "", "experiment")
    if sc.experiment in NEEDS_KERNEL:
        if "variant" not in sc.sections.get("kernel", {}):
            raise ParseError(f"experiment {sc.experiment} needs [kernel] variant", path)
        variant = sc.get("kernel", "variant")
        if variant not in ("zero", "radial", "principal_a", "principal_b", "half_plane", "rwre"):
            fail(f"unknown kernel variant {variant!r}", "kernel", "variant")
        if variant == "half_plane" and sc.get("kernel", "dim", 2) != 2:
            fail("the half-plane excursion kernel is specified for dim = 2 only", "kernel", "dim")
        try:
            sc.kernel_spec()
        except ValueError as exc:
            fail(str(exc), "kernel", "variant")
    if sc.experiment == "rwre_replay" and sc.get("kernel", "variant") != "rwre":
        fail("rwre_replay needs the rwre kernel", "kernel", "variant")
    if "assumptions" in sc.sections:
        try:
            sc.assumption_params()
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad [assumptions]: {exc}", path) from None
    required = {
        "exit_cone": [("run", "x0"), ("run", "n_runs"), ("run", "horizon")],
        "direction": [("run", "x0"), ("run", "n_runs"), ("run", "checkpoints")],
        "decompose": [("run", "x0"), ("run", "n_runs"), ("run", "T"), ("assumptions", "kappa")],
        "escape_bound": [("run", "n_runs"), ("run", "horizon"), ("geometry", "K")],
        "concentration": [("assumptions", "kappa"), ("run", "grid"), ("run", "n_runs")],
        "hit_ball": [("geometry", "N"), ("run", "n_runs")],
        "verify_assumptions": [("assumptions", "kappa")],
        "normalize": [("run", "directions")],
        "determinism": [("run", "scenarios"), ("run", "worker_counts")],
    }.get(sc.experiment, [])
    for section, key in required:
        if key not in sc.sections.get(section, {}):
            raise ParseError(f"experiment {sc.experiment} needs [{section}] {key}", path)
    x0 = sc.get("run", "x0")
    if x0 is not None and sc.experiment in NEEDS_KERNEL and len(x0) != sc.get("kernel", "dim", 2):
        fail("x0 length does not match the kernel dimension", "run", "x0")
    if sc.experiment in ("exit_cone",) and sc.get("geometry", "axis") is not None:
        if len(sc.get("geometry", "axis")) != sc.get("kernel", "dim", 2):
            fail("cone axis length does not match the kernel dimension", "geometry", "axis")
    for key in ("n_runs", "horizon", "T", "workers"):
        v = sc.get("run", key)
        if v is not None and v < 1:
            fail(f"{key} must be at least 1", "run", key)


def parse_scenario_text(text: str, path=None) -> Scenario:
    sections: dict = {"": {}}
    lines: dict = {}
    current = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            m = re.fullmatch(r"\[\s*([A-Za-z_]+)\s*\]", line)
            if not m or m.group(1) not in SCHEMA or m.group(1) == "":
                raise ParseError(f"unknown section header {line!r}", path, lineno)
            current = m.group(1)
            if current in sections:
                raise ParseError(f"section [{current}] appears twice", path, lineno)
            sections[current] = {}
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", path, lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        schema = SCHEMA[current]
        if key not in schema:
            where = f"[{current}]" if current else "top level"
            raise ParseError(f"unknown key {key!r} in {where}", path, lineno)
        if key in sections[current]:
            raise ParseError(f"duplicate key {key!r}", path, lineno)
        try:
            sections[current][key] = _convert(schema[key], value)
        except _Err as exc:
            raise ParseError(f"{key}: {exc}", path, lineno) from None
        lines[(current, key)] = lineno
    top = sections.pop("")
    sc = Scenario(top.get("name", ""), top.get("experiment", ""), sections, lines,
                  str(path) if path else None,
                  hashlib.sha256(text.encode("utf-8")).hexdigest())
    sections[""] = top
    _validate(sc, path)
    sections.pop("")
    return sc


def parse_scenario(path) -> Scenario:
    """Read and validate a scenario file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read scenario: {exc.strerror}", str(p)) from None
    sc = parse_scenario_text(text, str(p))
    sc.base_dir = str(p.parent)
    return sc


def lyapunov_from(sc: Scenario):
    """Fixed ``(nu, s)`` from the scenario, or ``None`` when either is ``auto``/absent."""
    nu, s = sc.get("geometry", "nu", "auto"), sc.get("geometry", "s", "auto")
    if nu == "auto" or s == "auto":
        return None
    return LyapunovParams(nu, s)
