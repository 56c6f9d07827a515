"""Run configuration: a YAML file with a strict schema.

Angles are given in units of pi.  Unknown keys are rejected, and every error names
the offending key and its line in the file.  Example::

    geometry:
      width: 2.0
      depth: 1.0
      omega_left: 0.45      # pi
      omega_right: 0.45
      M: 32
      N: 16
    physics:
      sigma: 1.0
      beta_c: 1.0
      g: 1.0
      omega_s: 0.45
    initial:
      standing_wave: {amplitude: 0.005, mode: 2}
    numerics:
      t_end: 0.5
    output:
      dir: run
      cadence: 10
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .dynamics import Physics
from .errors import ConfigError
from .geometry import GeometryConfig

__all__ = ["RunConfig", "load_config", "parse_config", "config_hash", "PRESETS"]


def _num(kind, lo=None, hi=None, lo_open=False, hi_open=False, optional=False):
    return {"kind": kind, "lo": lo, "hi": hi, "lo_open": lo_open, "hi_open": hi_open, "optional": optional}


SCHEMA = {
    "geometry": {
        "width": _num(float, 0, lo_open=True),
        "depth": _num(float, 0, lo_open=True),
        "omega_left": _num(float, 0, 0.5, True, True),
        "omega_right": _num(float, 0, 0.5, True, True),
        "M": _num(int, 1),
        "N": _num(int, 1),
        "grading": _num(float, 1),
        "mu_floor": _num(float, 0, lo_open=True),
        "corner_radius": _num(float, 0, lo_open=True),
    },
    "physics": {
        "sigma": _num(float, 0, lo_open=True),
        "beta_c": _num(float, 0, lo_open=True),
        "g": _num(float, 0),
        "omega_s": _num(float, 0, 1, True, True),
        "a": _num(float, 0, optional=True),
    },
    "numerics": {
        "dt": _num(float, 0, lo_open=True, optional=True),
        "cfl": _num(float, 0, lo_open=True),
        "t_end": _num(float, 0, lo_open=True),
        "integrator": {"kind": str, "choices": ("rk4", "picard")},
        "picard_tol": _num(float, 0, lo_open=True),
        "picard_max_iter": _num(int, 1),
    },
    "output": {
        "dir": {"kind": str},
        "cadence": _num(int, 1),
        "report_cadence": _num(int, 1),
        "figures": {"kind": bool},
    },
}

PRESETS = {
    "flat": {},
    "standing_wave": {"amplitude": _num(float, 0), "mode": _num(int, 1)},
    "angle_relaxation": {"omega_0": _num(float, 0, 0.5, True, True), "width": _num(float, 0, lo_open=True)},
}

ANGLE_KEYS = {("geometry", "omega_left"), ("geometry", "omega_right"), ("physics", "omega_s"), ("initial", "omega_0")}


@dataclass(frozen=True)
class NumericsConfig:
    dt: float | None = None
    cfl: float = 0.3
    t_end: float = 0.1
    integrator: str = "rk4"
    picard_tol: float = 1e-10
    picard_max_iter: int = 30


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "run"
    cadence: int = 10
    report_cadence: int = 1
    figures: bool = True


@dataclass(frozen=True)
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    physics: Physics = field(default_factory=Physics)
    preset: str = "flat"
    preset_params: dict = field(default_factory=dict)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    raw: dict = field(default_factory=dict, compare=False)

    def canonical(self):
        """Plain nested dict of every setting, defaults included (angles in units of pi)."""
        phys = asdict(self.physics)
        phys.pop("c_cfl")
        phys["omega_s"] = phys["omega_s"] / np.pi
        geo = asdict(self.geometry)
        geo["omega_left"] /= np.pi
        geo["omega_right"] /= np.pi
        init = dict(self.preset_params)
        if "omega_0" in init:
            init["omega_0"] = init["omega_0"] / np.pi
        return {
            "geometry": geo,
            "physics": phys,
            "initial": {self.preset: init},
            "numerics": asdict(self.numerics),
            "output": asdict(self.output),
        }


def config_hash(cfg: RunConfig) -> str:
    text = json.dumps(cfg.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# ------------------------------------------------------------------ parsing
def _line(node):
    return node.start_mark.line + 1


def _err(path, node, msg):
    where = f" (line {_line(node)})" if node is not None else ""
    raise ConfigError(f"{'.'.join(path)}: {msg}{where}")


def _scalar(loader, node, spec, path):
    if not isinstance(node, yaml.ScalarNode):
        _err(path, node, "expected a scalar value")
    value = loader.construct_object(node, deep=True)
    kind = spec["kind"]
    if value is None:
        if spec.get("optional"):
            return None
        _err(path, node, "a value is required")
    if kind is bool:
        if not isinstance(value, bool):
            _err(path, node, f"expected true/false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            _err(path, node, f"expected a string, got {value!r}")
        if "choices" in spec and value not in spec["choices"]:
            _err(path, node, f"must be one of {', '.join(spec['choices'])}, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _err(path, node, f"expected a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            _err(path, node, f"expected an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
    if not np.isfinite(value):
        _err(path, node, "must be finite")
    lo, hi = spec.get("lo"), spec.get("hi")
    if lo is not None and (value < lo or (spec["lo_open"] and value == lo)):
        _err(path, node, f"must be {'>' if spec['lo_open'] else '>='} {lo}, got {value}")
    if hi is not None and (value > hi or (spec["hi_open"] and value == hi)):
        _err(path, node, f"must be {'<' if spec['hi_open'] else '<='} {hi}, got {value}")
    return value


def _mapping(loader, node, schema, path):
    if not isinstance(node, yaml.MappingNode):
        _err(path, node, "expected a mapping")
    out = {}
    for knode, vnode in node.value:
        key = loader.construct_object(knode)
        if key not in schema:
            allowed = ", ".join(sorted(schema))
            _err(path + [str(key)], knode, f"unknown key (allowed: {allowed})")
        if key in out:
            _err(path + [str(key)], knode, "duplicate key")
        out[key] = _scalar(loader, vnode, schema[key], path + [key])
    return out


def _initial(loader, node, path):
    if not isinstance(node, yaml.MappingNode) or len(node.value) != 1:
        _err(path, node, f"exactly one preset is required ({', '.join(PRESETS)})")
    knode, vnode = node.value[0]
    name = loader.construct_object(knode)
    if name not in PRESETS:
        _err(path + [str(name)], knode, f"unknown preset (allowed: {', '.join(PRESETS)})")
    if isinstance(vnode, yaml.ScalarNode) and loader.construct_object(vnode) is None:
        return name, {}
    params = _mapping(loader, vnode, PRESETS[name], path + [name])
    if name == "angle_relaxation" and "omega_0" not in params:
        _err(path + [name, "omega_0"], vnode, "a value is required")
    return name, params


def parse_config(text: str, source="<config>") -> RunConfig:
    """Parse and validate configuration text."""
    loader = yaml.SafeLoader(text)
    try:
        root = loader.get_single_node()
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: YAML syntax error: {exc}") from exc
    finally:
        loader.dispose()
    if root is None:
        raise ConfigError(f"{source}: empty configuration")
    if not isinstance(root, yaml.MappingNode):
        _err([], root, "top level must be a mapping")
    blocks, preset, params = {}, None, {}
    for knode, vnode in root.value:
        key = loader.construct_object(knode)
        if key in blocks or (key == "initial" and preset is not None):
            _err([str(key)], knode, "duplicate block")
        if key == "initial":
            preset, params = _initial(loader, vnode, ["initial"])
        elif key in SCHEMA:
            blocks[key] = _mapping(loader, vnode, SCHEMA[key], [key])
        else:
            allowed = ", ".join(sorted(list(SCHEMA) + ["initial"]))
            _err([str(key)], knode, f"unknown block (allowed: {allowed})")
    if preset is None:
        raise ConfigError(f"initial: exactly one preset is required ({', '.join(PRESETS)})")

    for block, key in ANGLE_KEYS:
        target = params if block == "initial" else blocks.get(block, {})
        if target.get(key) is not None:
            target[key] = target[key] * np.pi

    geo = GeometryConfig(**blocks.get("geometry", {}))
    try:
        phys = Physics(**blocks.get("physics", {}))
    except ValueError as exc:
        raise ConfigError(f"physics: {exc}") from exc
    num = dict(blocks.get("numerics", {}))
    phys = Physics(**{**asdict(phys), "c_cfl": num.get("cfl", NumericsConfig.cfl)})
    raw = {k: dict(v) for k, v in blocks.items()}
    raw["initial"] = {preset: dict(params)}
    return RunConfig(geo, phys, preset, params, NumericsConfig(**num), OutputConfig(**blocks.get("output", {})), raw)


def load_config(path) -> RunConfig:
    path = Path(path)
    text = path.read_text()
    return parse_config(text, str(path))
