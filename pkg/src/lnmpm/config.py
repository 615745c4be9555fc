"""Run configuration for the command-line tool.

A TOML file with up to five tables; every key is optional and defaults to
the design point::

    [geometry]   top_width (um), etch_depth (nm), film_thickness (nm), ...
    [solver]     spacing (nm), padding (um), tol, signal_wavelength (um), ...
    [sweep]      width / etch / pump wavelength ranges and sample counts
    [spdc]       source and detection chain (rates Hz, times ps, duration s)
    [io]         out, cache_dir

Unknown tables or keys raise :class:`ConfigError`.
"""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError, IoError
from .geometry import DEFAULT_PADDING_UM, DEFAULT_SPACING_NM, WaveguideGeometry
from .photon_stats import (
    REFERENCE_CHANNEL_EFFICIENCY,
    REFERENCE_DARK_RATE,
    REFERENCE_JITTER_PS,
    REFERENCE_WINDOW_PS,
    SourceDetectionSpec,
)

__all__ = [
    "GeometryConfig",
    "SolverConfig",
    "SweepConfig",
    "SpdcConfig",
    "IoConfig",
    "RunConfig",
    "load_config",
    "parse_config",
]


@dataclass(frozen=True)
class GeometryConfig:
    top_width: float = 1.43
    etch_depth: float = 460.0
    film_thickness: float = 600.0
    layer_thicknesses: tuple = (300.0, 300.0)
    layer_orientations: tuple = (1, -1)
    sidewall_angle: float = 75.0
    length: float = 5.2

    def build(self) -> WaveguideGeometry:
        return WaveguideGeometry(**asdict(self))


@dataclass(frozen=True)
class SolverConfig:
    spacing: float = DEFAULT_SPACING_NM
    padding: float = DEFAULT_PADDING_UM
    tol: float = 1e-12
    num_modes: int = 4
    formulation: str = "semivectorial"
    signal_wavelength: float = 1.53
    mode_wavelength: float = 1.53


@dataclass(frozen=True)
class SweepConfig:
    width_min: float = 1.30
    width_max: float = 1.60
    width_count: int = 21
    etch_min: float = 300.0
    etch_max: float = 500.0
    etch_count: int = 21
    pump_min: float = 0.74
    pump_max: float = 0.80
    width_xtol: float = 1e-3
    wavelength_min: float = 0.4
    wavelength_max: float = 2.0
    wavelength_count: int = 33


@dataclass(frozen=True)
class SpdcConfig:
    pair_rate: float = 1.0e6
    duration: float = 1.0
    layout: str = "two_detector"
    efficiencies: float | tuple = REFERENCE_CHANNEL_EFFICIENCY
    dark_rates: float | tuple = REFERENCE_DARK_RATE
    jitter_sigma: float | tuple = REFERENCE_JITTER_PS
    coincidence_window: float = REFERENCE_WINDOW_PS
    histogram_bin: float = 100.0
    histogram_span: float = 1.0e6
    dead_time: float = 0.0
    block_duration: float = 0.1
    seed: int = 0
    format: str = "ttag"

    def build(self) -> SourceDetectionSpec:
        data = asdict(self)
        for key in ("histogram_span", "format"):
            data.pop(key)
        return SourceDetectionSpec(**data)


@dataclass(frozen=True)
class IoConfig:
    out: str = "lnmpm-out"
    cache_dir: str = ""


_SECTIONS = {
    "geometry": GeometryConfig,
    "solver": SolverConfig,
    "sweep": SweepConfig,
    "spdc": SpdcConfig,
    "io": IoConfig,
}


@dataclass(frozen=True)
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    spdc: SpdcConfig = field(default_factory=SpdcConfig)
    io: IoConfig = field(default_factory=IoConfig)

    def as_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in _SECTIONS}

    def digest(self) -> str:
        text = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"), default=list)
        return hashlib.sha256(text.encode()).hexdigest()

    def override(self, section: str, **values) -> "RunConfig":
        values = {k: v for k, v in values.items() if v is not None}
        if not values:
            return self
        return replace(self, **{section: _build_section(section, values, getattr(self, section))})

    def validate(self) -> "RunConfig":
        """Construct the geometry and SPDC spec once so bad values fail early."""
        try:
            self.geometry.build()
            self.spdc.build()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.spdc.format not in ("ttag", "csv"):
            raise ConfigError(f"spdc.format must be 'ttag' or 'csv', not {self.spdc.format!r}")
        if self.solver.formulation not in ("semivectorial", "scalar"):
            raise ConfigError(f"unknown solver.formulation {self.solver.formulation!r}")
        return self


_PER_CHANNEL = {"spdc.efficiencies", "spdc.dark_rates", "spdc.jitter_sigma"}


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce(name, value, default):
    if name in _PER_CHANNEL and isinstance(value, list):
        if not all(_is_number(v) for v in value):
            raise ConfigError(f"{name}: expected numbers, got {value!r}")
        return tuple(float(v) for v in value)
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = _is_number(value)
        value = float(value) if ok else value
    elif isinstance(default, tuple):
        ok = isinstance(value, list) and all(_is_number(v) for v in value)
        value = tuple(value) if ok else value
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError(f"{name}: expected {type(default).__name__}, got {value!r}")
    return value


def _build_section(section: str, values: dict, base=None):
    cls = _SECTIONS[section]
    base = base if base is not None else cls()
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    coerced = {k: _coerce(f"{section}.{k}", v, getattr(cls(), k)) for k, v in values.items()}
    return replace(base, **coerced)


def parse_config(text: str) -> RunConfig:
    """Parse TOML text into a validated :class:`RunConfig`."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    parts = {}
    for name, values in data.items():
        if not isinstance(values, dict):
            raise ConfigError(f"[{name}] must be a table")
        parts[name] = _build_section(name, values)
    return RunConfig(**parts).validate()


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
