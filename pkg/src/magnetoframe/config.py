"""
Experiment configuration: an INI-style file read with ``configparser``.

Example::

    [space]
    kind = heisenberg
    tau = 0.5

    [integrator]
    step = 1e-3
    t_end = 1

    [sampling]
    theta0 = pi/6, pi/4, pi/3
    seed = 7

Every key is optional; unknown sections or keys are rejected.  Errors name
the offending ``section.key`` and, when it can be found, the file line.
"""

import configparser
import os
import re
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import sympy as sp

from .errors import ConfigError
from .magnetic import IntegratorConfig
from .sasaki import DEFAULT_THETA0, PipelineConfig, SampleSpec, default_base_points
from .spaces import SpaceSpec, default_specs

OUT_ENV = "MAGNETOFRAME_OUT"
_EXPR = re.compile(r"[0-9eE.+\-*/() pi]*")

_SCHEMA = {
    "space": {"kind": str, "kappa": float, "tau": float, "amplitude": float, "half_width": float,
              "z_half_width": float, "orientation": int, "derivative_mode": str, "metric": str,
              "xi": str},
    "integrator": {"method": str, "step": float, "max_steps": int, "drift_tolerance": float,
                   "t_end": float},
    "surface": {"n_t": int, "n_s": int, "s_min": float, "s_max": float, "max_refinements": int},
    "tolerances": {"tau": float, "h": float, "k": float, "invariant": float},
    "sampling": {"theta0": "angles", "base_points": "points", "grid": int, "extent": float,
                 "random": int, "seed": int, "checks_points": int},
    "output": {"dir": str},
}


@dataclass(frozen=True)
class ExperimentConfig:
    space: SpaceSpec = field(default_factory=lambda: default_specs()["heisenberg"])
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    t_end: float = 1.0
    n_t: int = 64
    n_s: int = 16
    s_range: tuple = (0.0, 1.0)
    max_refinements: int = 2
    tol_tau: float = 1e-6
    tol_H: float = 1e-3
    tol_K: float = 1e-5
    invariant_tol: float = 1e-6
    theta0: tuple = tuple(DEFAULT_THETA0)
    base_points: tuple = tuple(map(tuple, default_base_points()))
    sample_grid: int = 3
    sample_extent: float = 1.0
    sample_random: int = 0
    checks_points: int = 20
    seed: int = 0
    out: Optional[str] = None

    def validate(self):
        for name in ("tol_tau", "tol_H", "tol_K", "invariant_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"tolerances: {name} must be > 0")
        th = np.asarray(self.theta0, dtype=float)
        if th.size == 0 or np.any(th <= 0) or np.any(th > np.pi / 2 + 1e-12):
            raise ConfigError("sampling.theta0: angles must lie in (0, pi/2]")
        if self.n_t < 8 or self.n_s < 8:
            raise ConfigError("surface: n_t and n_s must be >= 8")
        if self.s_range[0] == self.s_range[1]:
            raise ConfigError("surface: s_min and s_max must differ")
        if self.t_end == 0:
            raise ConfigError("integrator.t_end must be non-zero")
        if self.max_refinements < 0:
            raise ConfigError("surface.max_refinements must be >= 0")
        if self.sample_grid < 1 or self.sample_random < 0 or self.checks_points < 1:
            raise ConfigError("sampling: grid and checks_points must be >= 1, random >= 0")
        if not self.sample_extent > 0:
            raise ConfigError("sampling.extent must be > 0")
        if len(self.base_points) == 0:
            raise ConfigError("sampling.base_points: at least one point is required")
        self.space.validate()
        return self

    @property
    def samples(self):
        return SampleSpec(self.sample_grid, self.sample_extent, self.sample_random, self.seed)

    def pipeline(self):
        return PipelineConfig(integrator=self.integrator, t_end=self.t_end, n_t=self.n_t, n_s=self.n_s,
                              s_range=self.s_range, tol_H=self.tol_H, tol_tau=self.tol_tau,
                              tol_K=self.tol_K, max_refinements=self.max_refinements,
                              samples=self.samples)

    def output_dir(self):
        return self.out or os.environ.get(OUT_ENV) or "."


def _number(text):
    """A real number; simple expressions in ``pi`` are accepted."""
    try:
        return float(text)
    except ValueError:
        pass
    if not _EXPR.fullmatch(text.strip()):
        raise ValueError(f"not a number: {text!r}")
    try:
        value = sp.sympify(text, locals={"pi": sp.pi})
        return float(value)
    except (sp.SympifyError, TypeError, ValueError):
        raise ValueError(f"not a number: {text!r}") from None


def parse_angles(text):
    return tuple(_number(t) for t in text.split(",") if t.strip())


def _points(text):
    pts = []
    for chunk in text.split(";"):
        if chunk.strip():
            vals = [_number(v) for v in chunk.split(",")]
            if len(vals) != 3:
                raise ValueError(f"base point {chunk.strip()!r} needs 3 coordinates")
            pts.append(tuple(vals))
    return tuple(pts)


def _line_of(lines, section, key):
    current = None
    for n, raw in enumerate(lines, 1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip().lower()
        elif current == section and s.split("=", 1)[0].strip().lower() == key:
            return n
    return None


def _convert(kind, text):
    if kind == "angles":
        return parse_angles(text)
    if kind == "points":
        return _points(text)
    if kind is float:
        return _number(text)
    if kind is int:
        return int(text)
    return text.strip()


def parse_config(text, source="<config>"):
    """Parse config text into an ``ExperimentConfig``; raises ``ConfigError``."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    lines = text.splitlines()
    values = {}
    for section in parser.sections():
        sec = section.lower()
        if sec not in _SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            where = _line_of(lines, sec, key)
            loc = f"{source}:{where}" if where else source
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"{loc}: unknown key {sec}.{key}")
            try:
                values[(sec, key)] = _convert(_SCHEMA[sec][key], raw)
            except ValueError as exc:
                raise ConfigError(f"{loc}: {sec}.{key}: {exc}") from None
    return build_config(values, source)


def build_config(values, source="<config>"):
    get = values.get
    space_kw = {k: v for (s, k), v in values.items() if s == "space"}
    kind = space_kw.get("kind", "heisenberg")
    space = replace(default_specs().get(kind, SpaceSpec(kind)), **space_kw)
    integ = {k: v for (s, k), v in values.items() if s == "integrator" and k != "t_end"}
    try:
        integrator = IntegratorConfig(**integ)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    defaults = ExperimentConfig()
    cfg = ExperimentConfig(
        space=space, integrator=integrator,
        t_end=get(("integrator", "t_end"), defaults.t_end),
        n_t=get(("surface", "n_t"), defaults.n_t),
        n_s=get(("surface", "n_s"), defaults.n_s),
        s_range=(get(("surface", "s_min"), defaults.s_range[0]), get(("surface", "s_max"), defaults.s_range[1])),
        max_refinements=get(("surface", "max_refinements"), defaults.max_refinements),
        tol_tau=get(("tolerances", "tau"), defaults.tol_tau),
        tol_H=get(("tolerances", "h"), defaults.tol_H),
        tol_K=get(("tolerances", "k"), defaults.tol_K),
        invariant_tol=get(("tolerances", "invariant"), defaults.invariant_tol),
        theta0=get(("sampling", "theta0"), defaults.theta0),
        base_points=get(("sampling", "base_points"), defaults.base_points),
        sample_grid=get(("sampling", "grid"), defaults.sample_grid),
        sample_extent=get(("sampling", "extent"), defaults.sample_extent),
        sample_random=get(("sampling", "random"), defaults.sample_random),
        checks_points=get(("sampling", "checks_points"), defaults.checks_points),
        seed=get(("sampling", "seed"), defaults.seed),
        out=get(("output", "dir")),
    )
    try:
        return cfg.validate()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, source=str(path))


def apply_overrides(cfg, space=None, tau=None, kappa=None, theta0=None, out=None, seed=None, tol_h=None):
    """Command-line overrides on top of a parsed config."""
    spec = cfg.space
    if space is not None:
        spec = default_specs().get(space, SpaceSpec(space))
    if tau is not None or kappa is not None:
        spec = replace(spec, tau=spec.tau if tau is None else tau, kappa=spec.kappa if kappa is None else kappa)
    kw = {"space": spec}
    if theta0 is not None:
        kw["theta0"] = theta0
    if out is not None:
        kw["out"] = out
    if seed is not None:
        kw["seed"] = seed
    if tol_h is not None:
        kw["tol_H"] = tol_h
    return replace(cfg, **kw).validate()
