"""INI experiment configuration.

Sections: ``[experiment]`` (name, seed, threads, output, suite parameters),
``[grid]``, ``[equation]``, ``[noise]``, ``[coefficient.<tag>]`` (one per
noise component, in tag order), ``[ic]`` and ``[tolerances]``.
Numbers may be written with ``pi`` (``pi/4``, ``0.5*pi``).
"""

from __future__ import annotations

import configparser
import io
import math
import re
from dataclasses import dataclass, field

import numpy as np

from ..coefficients import CoefficientSet, make_coefficient
from ..geometry import Grid
from ..signals import NoiseModel
from ..solver import SolverConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_number"]


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


_PI = re.compile(r"^([+-]?[\d.eE+-]*)\s*\*?\s*pi\s*(?:/\s*([\d.]+))?$")


def parse_number(text):
    """Float parser that also accepts ``[a*]pi[/b]``."""
    s = str(text).strip()
    try:
        return float(s)
    except ValueError:
        pass
    m = _PI.match(s)
    if not m:
        raise ConfigError(f"not a number: {text!r}")
    a = m.group(1)
    coef = 1.0 if a in ("", "+") else -1.0 if a == "-" else float(a)
    den = float(m.group(2)) if m.group(2) else 1.0
    return coef * math.pi / den


def _numbers(text):
    return [parse_number(t) for t in str(text).replace(",", " ").split()]


@dataclass
class ExperimentConfig:
    name: str
    sections: dict = field(default_factory=dict)   # verbatim echo, section -> {key: str}
    seed: int = 0
    threads: int = 1
    out: str | None = None

    # typed accessors -----------------------------------------------------

    def get(self, section, key, default=None):
        return self.sections.get(section, {}).get(key, default)

    def number(self, section, key, default=None):
        v = self.get(section, key)
        if v is None:
            if default is None:
                raise ConfigError(f"missing [{section}] {key}")
            return float(default)
        return parse_number(v)

    def integer(self, section, key, default=None):
        return int(round(self.number(section, key, default)))

    def numbers(self, section, key, default=None):
        v = self.get(section, key)
        if v is None:
            if default is None:
                raise ConfigError(f"missing [{section}] {key}")
            return [float(x) for x in default]
        return _numbers(v)

    def tol(self, key, default):
        return self.number("tolerances", key, default)

    def param(self, key, default=None):
        return self.get("experiment", key, default)

    def set(self, section, key, value):
        self.sections.setdefault(section, {})[key] = str(value)
        return self

    # builders ------------------------------------------------------------

    def grid(self, n=None):
        ext = self.numbers("grid", "extent", [-4.0, 4.0])
        if n is None:
            n = [int(v) for v in self.numbers("grid", "n", [200])]
        n = [int(v) for v in np.atleast_1d(n)]
        radius = self.get("grid", "radius")
        radius = None if radius is None else parse_number(radius)
        try:
            if len(ext) == 2:
                return Grid.interval(ext[0], ext[1], n[0], radius=radius)
            if len(ext) == 4:
                n = n * 2 if len(n) == 1 else n
                return Grid.rectangle(ext[:2], ext[2:], tuple(n), radius=radius)
        except ValueError as exc:
            raise ConfigError(f"[grid]: {exc}") from None
        raise ConfigError("[grid] extent needs 2 (interval) or 4 (rectangle) numbers")

    def solver(self, dt=None, m=None):
        delta = self.get("equation", "delta", "auto")
        delta = delta if delta == "auto" else parse_number(delta)
        try:
            return SolverConfig(
                m=self.number("equation", "m", 2.0) if m is None else m,
                dt=self.number("equation", "dt", 1e-3) if dt is None else dt,
                delta=delta,
                newton_tol=self.number("equation", "newton_tol", 1e-10),
                newton_max=self.integer("equation", "newton_max", 50),
                anchor=self.get("equation", "anchor", "step"),
            )
        except ValueError as exc:
            raise ConfigError(f"[equation]: {exc}") from None

    def noise_model(self):
        kind = self.get("noise", "model", "brownian")
        dim = len(self.coefficient_specs()) or 1
        try:
            if kind == "brownian":
                return NoiseModel.brownian(dim)
            if kind == "fbm":
                return NoiseModel.fbm(self.number("noise", "hurst", 0.5), dim)
        except ValueError as exc:
            raise ConfigError(f"[noise]: {exc}") from None
        if kind == "zero":
            return None
        raise ConfigError(f"[noise] model must be brownian, fbm or zero, got {kind!r}")

    def coefficient_specs(self):
        tags = sorted((s for s in self.sections if s.startswith("coefficient.")),
                      key=lambda s: (len(s), s))
        return [self.sections[t] for t in tags]

    def coefficients(self, grid):
        funcs = []
        for spec in self.coefficient_specs() or [{"kind": "constant", "value": "0"}]:
            spec = dict(spec)
            kind = spec.pop("kind", "constant")
            params = {}
            for k, v in spec.items():
                vals = _numbers(v)
                params[k] = tuple(vals) if k in ("freq", "phase", "center") else vals[0]
            try:
                funcs.append(make_coefficient(kind, **params))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"[coefficient] {kind}: {exc}") from None
        return CoefficientSet(grid, funcs)

    def ic_params(self):
        return dict(self.sections.get("ic", {}))

    def to_ini(self):
        cp = configparser.ConfigParser()
        cp.optionxform = str
        for sec, items in self.sections.items():
            cp[sec] = items
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def load_config(source, seed=None, threads=None, out=None):
    """Parse an INI file path (or INI text when it contains a newline)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        if "\n" in str(source):
            cp.read_string(str(source))
        else:
            with open(source) as fh:
                cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    sections = {s: dict(cp[s]) for s in cp.sections()}
    if "experiment" not in sections or "name" not in sections["experiment"]:
        raise ConfigError("config needs [experiment] name = ...")
    exp = sections["experiment"]
    try:
        cfg = ExperimentConfig(
            name=exp["name"].strip(),
            sections=sections,
            seed=int(exp.get("seed", 0)) if seed is None else int(seed),
            threads=int(exp.get("threads", 1)) if threads is None else int(threads),
            out=exp.get("output") if out is None else out,
        )
    except ValueError as exc:
        raise ConfigError(f"[experiment]: {exc}") from None
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    return cfg
