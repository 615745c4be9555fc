"""Refractive-index models for the LNOI stack.

Indices come from Sellmeier expansions

    n^2(lam) = A + sum_i B_i lam^2 / (lam^2 - C_i)

with the wavelength in micrometres. The default library lives in
``data/materials.toml`` and can be replaced by any file with the same layout
(see :func:`load_materials`).
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import OutOfTransparencyWindow

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "MaterialModel",
    "NonlinearCoefficients",
    "LN_NONLINEAR",
    "TRANSPARENCY_WINDOW",
    "refractive_index",
    "check_transparency",
    "load_materials",
    "default_library",
    "LN_E",
    "LN_O",
    "SILICA",
    "AIR",
    "VACUUM",
]

# LN transparency window in um, closed at both ends.
TRANSPARENCY_WINDOW = (0.35, 5.2)

_AXES = ("ordinary", "extraordinary", "isotropic")


@dataclass(frozen=True)
class MaterialModel:
    """A Sellmeier dispersion model.

    Parameters
    ----------
    name : str
        Identifier, e.g. ``"lithium_niobate_e"``.
    sellmeier_coefficients : tuple of float
        ``(A, B1, C1, B2, C2, ...)`` with ``C_i`` in um^2.
    valid_range : tuple of float
        Closed wavelength interval in um where the fit may be evaluated.
    axis : str
        ``"ordinary"``, ``"extraordinary"`` or ``"isotropic"``.
    """

    name: str
    sellmeier_coefficients: tuple
    valid_range: tuple
    axis: str = "isotropic"

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.sellmeier_coefficients)
        if len(coeffs) % 2 != 1:
            raise ValueError(f"{self.name}: expected A followed by (B, C) pairs, got {len(coeffs)} values")
        lo, hi = (float(v) for v in self.valid_range)
        if not 0 <= lo < hi:
            raise ValueError(f"{self.name}: bad valid_range {self.valid_range}")
        if self.axis not in _AXES:
            raise ValueError(f"{self.name}: axis must be one of {_AXES}")
        object.__setattr__(self, "sellmeier_coefficients", coeffs)
        object.__setattr__(self, "valid_range", (lo, hi))

    def index(self, wavelength):
        return refractive_index(self, wavelength)


@dataclass(frozen=True)
class NonlinearCoefficients:
    """Second-order nonlinear coefficients in pm/V."""

    d33: float
    d31: float


LN_NONLINEAR = NonlinearCoefficients(d33=-34.4, d31=-4.35)


def refractive_index(material: MaterialModel, wavelength):
    """Evaluate ``n(lam)`` for ``wavelength`` in um (scalar or array).

    Raises
    ------
    OutOfTransparencyWindow
        If any wavelength lies outside ``material.valid_range``.
    """
    lam = np.asarray(wavelength, dtype=float)
    lo, hi = material.valid_range
    if np.any(~((lam >= lo) & (lam <= hi))) or np.any(lam <= 0):
        raise OutOfTransparencyWindow(
            f"{material.name}: wavelength {wavelength} um outside valid range [{lo}, {hi}] um"
        )
    coeffs = material.sellmeier_coefficients
    lam2 = lam * lam
    n2 = np.full_like(lam2, coeffs[0])
    for b, c in zip(coeffs[1::2], coeffs[2::2]):
        n2 = n2 + b * lam2 / (lam2 - c)
    n = np.sqrt(n2)
    return float(n) if n.ndim == 0 else n


def check_transparency(wavelength: float) -> bool:
    """True iff ``wavelength`` (um) lies in the closed LN transparency window."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    lo, hi = TRANSPARENCY_WINDOW
    return lo <= wavelength <= hi


def load_materials(source) -> dict:
    """Read a material library from a TOML file path or TOML text.

    Each table is one material::

        [silica]
        coefficients = [1.0, 0.696, 0.00468, ...]
        valid_range = [0.21, 3.71]
        axis = "isotropic"
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        text = Path(source).read_text()
    else:
        text = str(source)
    data = tomllib.loads(text)
    library = {}
    for name, table in data.items():
        unknown = set(table) - {"coefficients", "valid_range", "axis"}
        if unknown:
            raise ValueError(f"material {name!r}: unknown keys {sorted(unknown)}")
        library[name] = MaterialModel(
            name=name,
            sellmeier_coefficients=tuple(table["coefficients"]),
            valid_range=tuple(table["valid_range"]),
            axis=table.get("axis", "isotropic"),
        )
    return library


def default_library() -> dict:
    text = resources.files("lnmpm").joinpath("data/materials.toml").read_text()
    return load_materials(text)


_LIB = default_library()
LN_E = _LIB["lithium_niobate_e"]
LN_O = _LIB["lithium_niobate_o"]
SILICA = _LIB["silica"]
AIR = _LIB["air"]
VACUUM = _LIB["vacuum"]
