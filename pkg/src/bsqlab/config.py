"""Flat key = value configuration files with typed, validated keys.

Format: one `key = value` assignment per line; blank lines and lines
starting with `#` are ignored.  Unknown keys are rejected by name.  The
same keys can be overridden on the command line with --set key=value.

Every key has a documented default (see KEYS); the grid defaults are
n = 1024, half_length = 32*pi, n0 = 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError

__all__ = ["KEYS", "RunConfig", "parse_config", "load_config_file"]


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_float_list(text: str) -> tuple:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _parse_int_list(text: str) -> tuple:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _power_of_two(v: int) -> bool:
    return v >= 16 and (v & (v - 1)) == 0


@dataclass(frozen=True)
class _Key:
    name: str
    parse: callable
    default: object
    constraint: str
    check: callable = lambda v: True


KEYS = {
    k.name: k
    for k in [
        _Key("n", int, 1024, "power of two >= 16", _power_of_two),
        _Key("half_length", float, 32.0 * math.pi, "> 0", lambda v: v > 0),
        _Key("n0", int, 4, "N0 >= 4 required", lambda v: v >= 4),
        _Key("model", str, "eps", "unit or eps", lambda v: v in ("unit", "eps")),
        _Key("eps", float, 0.1, "in (0, 1]", lambda v: 0 < v <= 1),
        _Key(
            "eps_list",
            _parse_float_list,
            (0.2, 0.1, 0.05, 0.025),
            "descending values in (0, 1)",
            lambda v: all(0 < e < 1 for e in v) and all(a > b for a, b in zip(v, v[1:])),
        ),
        _Key("seed", int, 1234, "integer", lambda v: True),
        _Key("n_seeds", int, 1, ">= 1", lambda v: v >= 1),
        _Key("amplitude", float, 0.1, "> 0", lambda v: v > 0),
        _Key("sigma", float, 4.0, "> 0", lambda v: v > 0),
        _Key("data_family", str, "gaussian", "gaussian or multibump", lambda v: v in ("gaussian", "multibump")),
        _Key("dt_safety", float, 0.5, "> 0", lambda v: v > 0),
        _Key("horizon", float, 10.0, "> 0", lambda v: v > 0),
        _Key("horizon_factor", float, 10.0, "> 0", lambda v: v > 0),
        _Key("horizon_exponent", float, 1.5, "> 0", lambda v: v > 0),
        _Key("exit_factor", float, 2.0, "> 1", lambda v: v > 1),
        _Key("sample_every", int, 20, ">= 1", lambda v: v >= 1),
        _Key("d_values", _parse_int_list, (4, 5, 6, 7, 8, 9, 10), "nonempty integers", lambda v: len(v) > 0),
        _Key("levels", int, 4, ">= 1", lambda v: v >= 1),
        _Key("dump_states", _parse_bool, False, "boolean", lambda v: True),
        _Key("jobs", int, 1, ">= 1", lambda v: v >= 1),
        _Key("output_dir", str, "out", "directory path", lambda v: len(v) > 0),
        _Key("verbosity", int, 1, ">= 0", lambda v: v >= 0),
    ]
}


@dataclass
class RunConfig:
    """Fully defaulted, validated configuration values."""

    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        values = object.__getattribute__(self, "values")
        if name in values:
            return values[name]
        raise AttributeError(name)

    @property
    def seeds(self) -> tuple:
        return tuple(self.values["seed"] + i for i in range(self.values["n_seeds"]))


def _assign(values: dict, key: str, raw: str, origin: str) -> None:
    key = key.strip()
    if key not in KEYS:
        raise ConfigurationError(f"unknown configuration key {key!r} ({origin})")
    spec = KEYS[key]
    try:
        value = spec.parse(raw.strip())
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(
            f"bad value for {key!r} ({origin}): {raw!r} is not {spec.parse.__name__}"
        ) from exc
    if not spec.check(value):
        raise ConfigurationError(f"constraint violated for {key!r} ({origin}): {spec.constraint}")
    values[key] = value


def load_config_file(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"line {lineno} of {path}: expected key = value")
        key, _, raw = stripped.partition("=")
        _assign(values, key, raw, f"{path}:{lineno}")
    return values


def parse_config(path=None, overrides=()) -> RunConfig:
    """Defaults, then the config file, then --set overrides, validated."""
    values = {name: key.default for name, key in KEYS.items()}
    if path is not None:
        if not Path(path).exists():
            raise ConfigurationError(f"config file not found: {path}")
        values.update(load_config_file(path))
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        _assign(values, key, raw, "--set")
    return RunConfig(values)
