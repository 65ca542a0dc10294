"""Experiment configuration: INI files with a fixed, documented schema.

Example::

    [experiment]
    domain = disk              ; disk | polydisk
    radius = 1.0
    m_schedule = 1, 2, 4, 8, 16, 32, 64
    checks = kernel, envelope, bounds, converge, phi
    seed = 42
    output = out

    [grid]
    mode = radial              ; radial | cartesian | log_radial
    points_per_axis = 10
    margin = 0.05
    log_floor = -8
    n_phases = 1

    [tolerances]
    quad_tol = 1e-10
    clip_threshold = 1e-12
    envelope_tol = 1e-9
    kernel_rtol = 1e-7
    phi_tol = 0.2

    [weight pole]
    catalog = log_pole
    gamma = 1

Every ``[weight LABEL]`` section names a catalog entry (``catalog``, default
``LABEL``) plus its parameters. Unknown sections or keys are errors. The only
environment override is the output directory (``BERGMANLAB_OUT``).
"""
from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .domains import Domain, GridSpec
from .exceptions import BergmanLabError, ConfigError
from .weights import CATALOG_NAMES, Weight, catalog

CHECKS = ("kernel", "envelope", "bounds", "converge", "phi")
OUT_ENV = "BERGMANLAB_OUT"

_EXPERIMENT_KEYS = {"domain", "radius", "m_schedule", "checks", "seed", "output"}
_GRID_KEYS = {"mode", "points_per_axis", "margin", "log_floor", "n_phases"}
_TOL_DEFAULTS = {"quad_tol": 1e-10, "clip_threshold": 1e-12, "envelope_tol": 1e-9,
                 "kernel_rtol": 1e-7, "phi_tol": 0.2}
_WEIGHT_PARAMS = {
    "zero": set(),
    "log_pole": {"gamma"},
    "neg_abs_square": set(),
    "abs_square": set(),
    "radial_custom": {"table", "psh"},
    "angular_bump": {"eps", "center", "width"},
}


@dataclass
class ExperimentConfig:
    domain: Domain = field(default_factory=Domain.disk)
    weights: dict = field(default_factory=dict)
    grid: GridSpec = field(default_factory=lambda: GridSpec("radial", 10, 0.05))
    m_schedule: tuple = (1, 2, 4, 8, 16, 32, 64)
    quad_tol: float = 1e-10
    clip_threshold: float = 1e-12
    envelope_tol: float = 1e-9
    kernel_rtol: float = 1e-7
    phi_tol: float = 0.2
    checks: tuple = CHECKS
    seed: int = 42
    output: Path = Path("out")
    source: str | None = None

    def with_overrides(self, out=None, only=None, seed=None) -> "ExperimentConfig":
        cfg = self
        if out is not None:
            cfg = replace(cfg, output=Path(out))
        if only is not None:
            cfg = replace(cfg, checks=parse_checks(only))
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        return cfg


def parse_checks(text) -> tuple:
    items = [c.strip() for c in (text.split(",") if isinstance(text, str) else text) if c.strip()]
    bad = [c for c in items if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown check(s) {bad}; expected a subset of {list(CHECKS)}", key="checks")
    if not items:
        raise ConfigError("no checks selected", key="checks")
    return tuple(c for c in CHECKS if c in items)


class _Locator:
    """Maps (section, key) to 1-based line numbers of the source text."""

    def __init__(self, text: str):
        self.lines = {}
        section = None
        for i, line in enumerate(text.splitlines(), start=1):
            s = line.strip()
            m = re.match(r"\[(.+)\]", s)
            if m:
                section = m.group(1).strip()
                self.lines[(section, None)] = i
                continue
            m = re.match(r"([^=:;#\s][^=:]*?)\s*[=:]", s)
            if m and section is not None:
                self.lines.setdefault((section, m.group(1).strip().lower()), i)

    def __call__(self, section, key=None):
        return self.lines.get((section, key))


def _float_list(text: str):
    return [float(x) for x in re.split(r"[,\s]+", text.strip()) if x]


def _weight_param(name: str, key: str, text: str):
    if key == "psh":
        if text not in ("yes", "no", "unknown"):
            raise ValueError("psh must be yes, no or unknown")
        return text
    if key == "center":
        return complex(text.replace(" ", ""))
    if key == "table":
        pairs = []
        for item in text.split(","):
            if item.strip():
                r, v = item.split(":")
                pairs.append((float(r), float(v)))
        return pairs
    vals = _float_list(text)
    if key == "gamma" and len(vals) > 1:
        return tuple(vals)
    if len(vals) != 1:
        raise ValueError("expected a single number")
    return vals[0]


def loads(text: str, source=None) -> ExperimentConfig:
    """Parse configuration text; raises :class:`ConfigError` with line/key diagnostics."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        parser.read_string(text, source=str(source) if source else "<config>")
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("missing section header", line=exc.lineno, source=source) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", line=line, source=source) from exc
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(exc.message.split(": ", 1)[-1], line=exc.lineno,
                          key=getattr(exc, "option", None), source=source) from exc
    where = _Locator(text)

    def fail(msg, section, key=None):
        raise ConfigError(msg, line=where(section, key), key=key, source=source)

    def check_keys(section, allowed):
        for key in parser[section]:
            if key not in allowed:
                fail(f"unknown key in [{section}]", section, key)

    def get(section, key, conv, default):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except (ValueError, TypeError, BergmanLabError) as exc:
            fail(f"invalid value {raw!r} ({exc})", section, key)

    for section in parser.sections():
        if section not in ("experiment", "grid", "tolerances") and not section.startswith("weight "):
            fail(f"unknown section [{section}]", section)

    cfg = ExperimentConfig(source=str(source) if source else None)
    if parser.has_section("experiment"):
        check_keys("experiment", _EXPERIMENT_KEYS)
        kind = get("experiment", "domain", str, "disk")
        if kind not in ("disk", "polydisk"):
            fail("domain must be disk or polydisk", "experiment", "domain")
        radius = get("experiment", "radius", float, 1.0)
        try:
            cfg.domain = Domain.disk(radius) if kind == "disk" else Domain.polydisk(radius)
        except BergmanLabError as exc:
            fail(str(exc), "experiment", "radius")
        sched = get("experiment", "m_schedule", lambda s: tuple(int(x) for x in _float_list(s)),
                    cfg.m_schedule)
        if not sched or any(m < 1 for m in sched) or any(b <= a for a, b in zip(sched, sched[1:])):
            fail("m_schedule must be strictly increasing positive integers", "experiment", "m_schedule")
        cfg.m_schedule = sched
        cfg.checks = get("experiment", "checks", parse_checks, CHECKS)
        cfg.seed = get("experiment", "seed", int, 42)
        cfg.output = Path(get("experiment", "output", str, "out"))

    if parser.has_section("grid"):
        check_keys("grid", _GRID_KEYS)
        kw = {
            "mode": get("grid", "mode", str, "radial"),
            "points_per_axis": get("grid", "points_per_axis", int, 10),
            "margin": get("grid", "margin", float, 0.05),
            "log_floor": get("grid", "log_floor", float, -8.0),
            "n_phases": get("grid", "n_phases", int, 1),
        }
        try:
            cfg.grid = GridSpec(**kw)
        except BergmanLabError as exc:
            fail(str(exc), "grid")
        if cfg.grid.margin >= min(cfg.domain.radius):
            fail("margin must be smaller than the domain radius", "grid", "margin")

    if parser.has_section("tolerances"):
        check_keys("tolerances", set(_TOL_DEFAULTS))
        for key, default in _TOL_DEFAULTS.items():
            val = get("tolerances", key, float, default)
            if not val > 0:
                fail("tolerances must be positive", "tolerances", key)
            setattr(cfg, key, val)

    weights = {}
    n = cfg.domain.complex_dim
    for section in parser.sections():
        if not section.startswith("weight "):
            continue
        label = section[len("weight "):].strip()
        if not label:
            fail("weight sections need a label: [weight LABEL]", section)
        name = parser.get(section, "catalog", fallback=label)
        if name not in CATALOG_NAMES:
            fail(f"unknown catalog weight {name!r}; expected one of {list(CATALOG_NAMES)}",
                 section, "catalog" if parser.has_option(section, "catalog") else None)
        check_keys(section, {"catalog"} | _WEIGHT_PARAMS[name])
        params = {key: get(section, key, lambda s, k=key: _weight_param(name, k, s), None)
                  for key in parser[section] if key != "catalog"}
        try:
            weights[label] = catalog(name, n=n, radius=min(cfg.domain.radius), **params)
        except BergmanLabError as exc:
            fail(str(exc), section)
    if not weights:
        raise ConfigError("config defines no [weight LABEL] sections", source=source)
    cfg.weights = weights

    env_out = os.environ.get(OUT_ENV)
    if env_out:
        cfg.output = Path(env_out)
    return cfg


def load(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=path) from exc
    return loads(text, source=path)


def weight_label(cfg: ExperimentConfig, w: Weight) -> str:
    for label, other in cfg.weights.items():
        if other is w:
            return label
    return w.name
