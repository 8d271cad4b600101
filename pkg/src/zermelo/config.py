"""INI-style run configuration.

Sections and keys (all optional unless noted)::

    [surface]
    name = flat_torus | sphere | hyperbolic_disk | conformal | frame   (required)
    f = <expr>                       conformal factor, for name = conformal
    e1x, e1y, e2x, e2y = <expr>      orthonormal frame, for name = frame
    domain = x0, x1, y0, y1          numbers or expressions such as 2*pi
    periodic_x, periodic_y, pole_compactification, disk = true | false
    euler_characteristic = <int>

    [drift]
    kind = form | vector
    comp1, comp2 = <expr>            frame components
    norm_margin = 0.02
    region = x0, x1, y0, y1          working region for sampling checks

    [solver]     rtol, atol, t_max, level_tol, max_step
    [quadrature] grid = NX,NY,NT; scheme; tol
    [start]      x, y, theta
    [output]     format = csv | json; path
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import numpy as np
import sympy as sp

from .drift import DriftSpec
from .errors import ConfigError, ValidationError
from .expr import parse
from .geometry import Chart, Surface, builtin_surface
from .hamiltonian import CoZermeloProblem, FiberPoint, SolverConfig, ZermeloProblem
from .integrals import QuadratureGrid

BUNDLED_PREFIX = "builtin:"


def _number(text, what):
    if str(text).strip().lower() in ("inf", "+inf", "-inf"):
        return float(str(text).strip())
    try:
        value = float(sp.sympify(parse(str(text))).evalf())
    except (ConfigError, TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: cannot read a number from {text!r} ({exc})") from None
    return value


def _numbers(text, n, what):
    parts = [p for p in str(text).split(",") if p.strip()]
    if len(parts) != n:
        raise ConfigError(f"{what}: expected {n} comma-separated values, got {text!r}")
    return tuple(_number(p, what) for p in parts)


def _bool(section, key, default=False):
    try:
        return section.getboolean(key, fallback=default)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key}: {exc}") from None


@dataclass
class RunConfig:
    surface: Surface
    drift: DriftSpec
    region: Optional[tuple] = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    t_max: float = 10.0
    grid: QuadratureGrid = field(default_factory=QuadratureGrid)
    quadrature_tol: float = 1e-4
    start: tuple = (0.0, 0.0, 0.0)
    output_format: str = "json"
    output_path: Optional[str] = None
    source: str = ""

    def problem(self, validate=True):
        cls = CoZermeloProblem if self.drift.kind.value == "form" else ZermeloProblem
        return cls(self.surface, self.drift, validate=validate, region=self.region)

    @property
    def start_point(self):
        x, y, th = self.start
        return FiberPoint(np.array([x, y]), th)


def _surface(sec):
    name = sec.get("name", "").strip()
    if not name:
        raise ConfigError("[surface] name is required")
    if name not in ("conformal", "frame"):
        return builtin_surface(name)
    dom = sec.get("domain")
    if dom is None:
        raise ConfigError(f"[surface] domain is required for name = {name}")
    chi = sec.get("euler_characteristic")
    if chi is not None:
        try:
            chi = int(chi)
        except ValueError:
            raise ConfigError(f"[surface] euler_characteristic must be an integer, got {chi!r}") from None
    chart = Chart(
        _numbers(dom, 4, "[surface] domain"),
        _bool(sec, "periodic_x"),
        _bool(sec, "periodic_y"),
        chi,
        _bool(sec, "pole_compactification"),
        _bool(sec, "disk"),
    )
    if name == "conformal":
        if "f" not in sec:
            raise ConfigError("[surface] f is required for name = conformal")
        return Surface.from_conformal(parse(sec["f"]), chart, name=sec.get("label", "conformal"))
    try:
        comps = [parse(sec[k]) for k in ("e1x", "e1y", "e2x", "e2y")]
    except KeyError as exc:
        raise ConfigError(f"[surface] {exc.args[0]} is required for name = frame") from None
    return Surface.from_frame(comps[:2], comps[2:], chart, name=sec.get("label", "frame"))


def _drift(sec):
    kind = sec.get("kind", "form").strip()
    if kind not in ("form", "vector"):
        raise ConfigError(f"[drift] kind must be form or vector, got {kind!r}")
    margin = _number(sec.get("norm_margin", "0.02"), "[drift] norm_margin")
    c1 = parse(sec.get("comp1", "0"))
    c2 = parse(sec.get("comp2", "0"))
    return DriftSpec(kind, c1, c2, margin)


def parse_config(text, source="<string>") -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if not cp.has_section("surface"):
        raise ConfigError(f"{source}: missing [surface] section")
    surface = _surface(cp["surface"])
    drift_sec = cp["drift"] if cp.has_section("drift") else cp["DEFAULT"]
    drift = _drift(drift_sec)
    region = None
    if cp.has_option("drift", "region"):
        region = _numbers(cp["drift"]["region"], 4, "[drift] region")

    cfg = RunConfig(surface, drift, region, source=source)
    if cp.has_section("solver"):
        s = cp["solver"]
        cfg.solver = SolverConfig(
            rtol=_number(s.get("rtol", "1e-10"), "[solver] rtol"),
            atol=_number(s.get("atol", "1e-10"), "[solver] atol"),
            max_step=_number(s.get("max_step"), "[solver] max_step") if "max_step" in s else np.inf,
            level_tol=_number(s.get("level_tol", "1e-8"), "[solver] level_tol"),
        )
        cfg.t_max = _number(s.get("t_max", "10"), "[solver] t_max")
        if not cfg.t_max > 0:
            raise ValidationError("[solver] t_max must be positive")
    if cp.has_section("quadrature"):
        q = cp["quadrature"]
        cfg.grid = QuadratureGrid.parse(q.get("grid", "96,96,96"), q.get("scheme", "auto"))
        cfg.quadrature_tol = _number(q.get("tol", "1e-4"), "[quadrature] tol")
    if cp.has_section("start"):
        st = cp["start"]
        cfg.start = tuple(_number(st.get(k, "0"), f"[start] {k}") for k in ("x", "y", "theta"))
    if cp.has_section("output"):
        o = cp["output"]
        cfg.output_format = o.get("format", "json")
        cfg.output_path = o.get("path") or None
        if cfg.output_format not in ("csv", "json"):
            raise ConfigError("[output] format must be csv or json")
    return cfg


def bundled_configs():
    root = resources.files("zermelo") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def read_config_text(path):
    if path.startswith(BUNDLED_PREFIX):
        name = path[len(BUNDLED_PREFIX):]
        res = resources.files("zermelo") / "configs" / f"{name}.ini"
        if not res.is_file():
            raise ConfigError(f"no bundled config {name!r}; available: {bundled_configs()}")
        return res.read_text(), path
    if not os.path.isfile(path):
        raise ConfigError(f"config file {path!r} not found")
    with open(path, encoding="utf-8") as fh:
        return fh.read(), path


def load_config(path) -> RunConfig:
    text, source = read_config_text(path)
    return parse_config(text, source)


def _fmt(x):
    return repr(float(x))


def emit_config(surface, drift, region=None, extra=None) -> str:
    """INI text describing ``(surface, drift)``; needs symbolic fields."""
    if not (surface.is_symbolic and drift.is_symbolic):
        raise ValidationError("only symbolic surfaces and drifts can be written as a config")
    ch = surface.chart
    lines = ["[surface]", "name = frame", f"label = {surface.name}"]
    for key, comp in zip(("e1x", "e1y", "e2x", "e2y"), surface.frame):
        lines.append(f"{key} = {comp.text}")
    lines.append("domain = " + ", ".join(_fmt(v) for v in ch.domain))
    lines += [
        f"periodic_x = {str(ch.periodic_x).lower()}",
        f"periodic_y = {str(ch.periodic_y).lower()}",
        f"pole_compactification = {str(ch.pole_compactification).lower()}",
        f"disk = {str(ch.disk).lower()}",
    ]
    if ch.euler_characteristic is not None:
        lines.append(f"euler_characteristic = {ch.euler_characteristic}")
    lines += ["", "[drift]", f"kind = {drift.kind.value}", f"comp1 = {drift.comp1.text}",
              f"comp2 = {drift.comp2.text}", f"norm_margin = {_fmt(drift.norm_margin)}"]
    if region is not None:
        lines.append("region = " + ", ".join(_fmt(v) for v in region))
    for name, body in (extra or {}).items():
        lines += ["", f"[{name}]"] + [f"{k} = {v}" for k, v in body.items()]
    return "\n".join(lines) + "\n"
