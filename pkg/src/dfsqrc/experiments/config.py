"""Experiment configuration: INI presets plus flag overrides."""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import ConfigError

PRESETS = ("paper-defaults",)
METHODS = ("two_qubit", "fock")
BASES = ("singlet", "population")
INITS = ("ground", "random_product")
TIME_RULES = ("times_gamma", "per_gamma")

_BOOL = configparser.ConfigParser.BOOLEAN_STATES


def _bool(text: str) -> bool:
    try:
        return _BOOL[text.strip().lower()]
    except KeyError:
        raise ConfigError(f"not a boolean: {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(",", " ").split())


# config key -> (section, parser)
_KEYS = {
    "seed": ("experiment", int),
    "method": ("experiment", str),
    "basis": ("experiment", str),
    "sweep": ("experiment", _ints),
    "n_test": ("experiment", int),
    "n_runs": ("experiment", int),
    "workers": ("experiment", int),
    "reservoir_init": ("experiment", str),
    "reequilibrate": ("experiment", _bool),
    "pump_ratio": ("dynamics", float),
    "eq_coef": ("dynamics", float),
    "read_coef": ("dynamics", float),
    "time_rule": ("dynamics", str),
    "coupling": ("dynamics", float),
    "step_bound": ("dynamics", float),
    "stride": ("dynamics", int),
    "nu_min": ("teacher", float),
    "n_fock": ("teacher", int),
    "ridge": ("readout", float),
    "intercept": ("readout", _bool),
    "threshold": ("readout", float),
}


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    method: str
    basis: str
    sweep: tuple[int, ...]
    n_test: int
    n_runs: int
    workers: int
    reservoir_init: str
    reequilibrate: bool
    pump_ratio: float
    eq_coef: float
    read_coef: float
    time_rule: str
    coupling: float
    step_bound: float
    stride: int
    nu_min: float
    n_fock: int
    ridge: float
    intercept: bool
    threshold: float

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        for name, allowed in (
            ("method", METHODS),
            ("basis", BASES),
            ("reservoir_init", INITS),
            ("time_rule", TIME_RULES),
        ):
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if not self.sweep:
            raise ConfigError("sweep is empty")
        if any(n <= 0 or n % 2 for n in self.sweep):
            raise ConfigError(f"training-set sizes must be even and positive, got {self.sweep}")
        for name in ("n_test", "n_runs", "workers", "stride"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.n_fock < 2:
            raise ConfigError(f"n_fock must be >= 2, got {self.n_fock}")
        if not 0 < self.nu_min <= 1:
            raise ConfigError(f"nu_min must lie in (0, 1], got {self.nu_min}")
        if self.pump_ratio < 0 or self.eq_coef < 0 or self.read_coef < 0 or self.ridge < 0:
            raise ConfigError("pump_ratio, eq_coef, read_coef and ridge must be non-negative")
        if self.step_bound <= 0:
            raise ConfigError(f"step_bound must be positive, got {self.step_bound}")
        object.__setattr__(self, "sweep", tuple(sorted(set(self.sweep))))

    @property
    def n_train(self) -> int:
        """Largest training-set size of the sweep."""
        return self.sweep[-1]

    @property
    def teacher_dims(self) -> tuple[int, int]:
        return (2, 2) if self.method == "two_qubit" else (self.n_fock, self.n_fock)

    def replace(self, **overrides) -> "ExperimentConfig":
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["sweep"] = list(self.sweep)
        return d

    def to_ini(self) -> str:
        sections: dict[str, list[str]] = {}
        for key, (section, _) in _KEYS.items():
            value = getattr(self, key)
            if key == "sweep":
                value = ", ".join(str(n) for n in value)
            elif isinstance(value, bool):
                value = str(value).lower()
            sections.setdefault(section, []).append(f"{key} = {value}")
        return "".join(f"[{name}]\n" + "\n".join(lines) + "\n\n" for name, lines in sections.items())


def _read_preset(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {PRESETS}")
    return resources.files("dfsqrc").joinpath("presets").joinpath(f"{name}.ini").read_text()


def _parse(cp: configparser.ConfigParser, source: str) -> dict:
    values = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            if key not in _KEYS or _KEYS[key][0] != section:
                raise ConfigError(f"{source}: unknown key [{section}] {key}")
            try:
                values[key] = _KEYS[key][1](raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {key}: {raw!r}") from exc
    return values


def load_config(path: str | Path | None = None, overrides: dict | None = None, preset: str = "paper-defaults"):
    """Preset, then the optional INI file at ``path``, then ``overrides`` (None values ignored)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.read_string(_read_preset(preset))
    values = _parse(cp, preset)
    if path is not None:
        user = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            user.read_string(Path(path).read_text(), source=str(path))
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values.update(_parse(user, str(path)))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = value
    missing = set(_KEYS) - set(values)
    if missing:
        raise ConfigError(f"missing config keys {sorted(missing)}")
    return ExperimentConfig(**values)
