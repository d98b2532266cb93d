"""Run configurations: sectioned key-value text with quoted expressions.

Example::

    [run]
    command = compute

    [ambient]
    kind = euclidean

    [surface]
    preset = ellipsoid
    axes = 1, 1.3, 0.7
    grid = 96, 96
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from typing import Any

COMMANDS = ("compute", "verify", "anomaly", "vary", "probe", "sweep")


class ConfigError(ValueError):
    pass


# value kinds: str, int, float, bool, expr (quoted), floats, ints, exprs
SCHEMA: dict[str, dict[str, str]] = {
    "run": {"command": "str", "n": "int", "mode": "str", "radius": "float", "order": "int", "label": "str"},
    "ambient": {"kind": "str", "dimension": "int", "c": "float", "omega": "expr"},
    "surface": {
        "preset": "str",
        "radius": "float",
        "center": "floats",
        "R": "float",
        "a": "float",
        "axes": "floats",
        "rho": "float",
        "embedding": "exprs",
        "topology": "str",
        "grid": "ints",
        "orientation": "str",
        "collar": "str",
    },
    "anomaly": {"omega": "expr", "random": "int"},
    "vary": {"f": "expr", "t0": "float"},
    "probe": {"model": "str", "eps_min": "float", "eps_max": "float", "samples": "int", "tail_powers": "int"},
    "sweep": {
        "parameter": "str",
        "start": "float",
        "stop": "float",
        "count": "int",
        "a": "float",
        "grid": "ints",
        "refine": "bool",
    },
    "output": {"json": "str", "csv": "str", "collar": "str"},
    "tolerances": {},
}

CHOICES = {
    ("run", "command"): COMMANDS,
    ("run", "mode"): ("grid", "homogeneous"),
    ("ambient", "kind"): ("euclidean", "spaceform", "conformal"),
    ("surface", "preset"): ("sphere", "torus", "ellipsoid", "circle", "geodesic-sphere", "parametric"),
    ("surface", "topology"): ("sphere", "torus", "curve"),
    ("probe", "model"): ("hyperbolic-ball", "hyperbolic-disc"),
    ("sweep", "parameter"): ("torus-ratio",),
}

_QUOTED = re.compile(r'"([^"]*)"')


def _parse_value(kind: str, raw: str, where: str) -> Any:
    raw = raw.strip()
    try:
        if kind == "str":
            return raw.strip('"')
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if kind == "floats":
            return [float(x) for x in raw.split(",") if x.strip()]
        if kind == "ints":
            return [int(x) for x in raw.split(",") if x.strip()]
        if kind == "expr":
            m = _QUOTED.fullmatch(raw)
            if not m:
                raise ValueError("expressions must be double-quoted")
            return m.group(1)
        if kind == "exprs":
            items = _QUOTED.findall(raw)
            rest = _QUOTED.sub("", raw).replace(",", "").strip()
            if rest or not items:
                raise ValueError("expression lists must be comma-separated double-quoted strings")
            return items
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot read {raw!r} as {kind}: {exc}") from None
    raise ConfigError(f"{where}: unknown value kind {kind}")


def _format_value(kind: str, value: Any) -> str:
    if kind == "expr":
        return f'"{value}"'
    if kind == "exprs":
        return ", ".join(f'"{v}"' for v in value)
    if kind in ("floats", "ints"):
        return ", ".join(repr(v) for v in value)
    if kind == "bool":
        return "true" if value else "false"
    if kind == "float":
        return repr(float(value))
    return str(value)


@dataclass
class RunConfig:
    sections: dict = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def section(self, name: str) -> dict:
        return dict(self.sections.get(name, {}))

    @property
    def command(self) -> str:
        return self.get("run", "command", "compute")

    def set(self, section: str, key: str, value):
        self.sections.setdefault(section, {})[key] = value

    def to_dict(self) -> dict:
        return {s: dict(v) for s, v in self.sections.items()}

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.to_dict() == other.to_dict()


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(
        interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"), inline_comment_prefixes=(";",)
    )
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    out = RunConfig()
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if sec == "tolerances":
                kind = "float"
            elif key in SCHEMA[sec]:
                kind = SCHEMA[sec][key]
            else:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            value = _parse_value(kind, raw, f"[{sec}] {key}")
            choices = CHOICES.get((sec, key))
            if choices and value not in choices:
                raise ConfigError(f"[{sec}] {key} = {value!r}; expected one of {', '.join(choices)}")
            out.set(sec, key, value)
    return out


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for sec, values in cfg.sections.items():
        lines.append(f"[{sec}]")
        for key, value in values.items():
            kind = "float" if sec == "tolerances" else SCHEMA[sec][key]
            lines.append(f"{key} = {_format_value(kind, value)}")
        lines.append("")
    return "\n".join(lines)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
