"""Dual-layer rib waveguide cross-sections and their rasterization.

Coordinates follow the device picture: the horizontal axis is the in-plane
crystal z direction (TE polarisation), the vertical axis is the film normal.
The bottom of the LN film sits at ``y = 0`` with silica below and the
cladding above. Lengths on the grid are in um.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InvalidGeometry
from .materials import AIR, LN_E, SILICA, MaterialModel, refractive_index

__all__ = [
    "WaveguideGeometry",
    "CrossSectionGrid",
    "rasterize",
    "single_layer_variant",
    "DESIGN_POINT",
    "MAX_SPACING_NM",
    "DEFAULT_SPACING_NM",
]

DEFAULT_SPACING_NM = 10.0
MAX_SPACING_NM = 25.0
DEFAULT_PADDING_UM = 1.5


@dataclass(frozen=True)
class WaveguideGeometry:
    """Trapezoidal rib etched into a stack of LN layers.

    ``top_width`` is in um, every thickness and ``etch_depth`` in nm, the
    sidewall angle in degrees and the device ``length`` in mm. Layers are
    listed bottom to top; ``layer_orientations`` holds the sign of the crystal
    z axis of each layer.
    """

    top_width: float = 1.43
    etch_depth: float = 460.0
    film_thickness: float = 600.0
    layer_thicknesses: tuple = (300.0, 300.0)
    layer_orientations: tuple = (1, -1)
    sidewall_angle: float = 75.0
    substrate: MaterialModel = SILICA
    cladding: MaterialModel = AIR
    core: MaterialModel = LN_E
    length: float = 5.2

    def __post_init__(self):
        object.__setattr__(self, "layer_thicknesses", tuple(float(t) for t in self.layer_thicknesses))
        object.__setattr__(self, "layer_orientations", tuple(int(o) for o in self.layer_orientations))
        if len(self.layer_thicknesses) != len(self.layer_orientations) or not self.layer_thicknesses:
            raise InvalidGeometry("need one orientation per layer")
        if any(t <= 0 for t in self.layer_thicknesses):
            raise InvalidGeometry("layer thicknesses must be positive")
        if not math.isclose(sum(self.layer_thicknesses), self.film_thickness, rel_tol=0, abs_tol=1e-9):
            raise InvalidGeometry(
                f"layers sum to {sum(self.layer_thicknesses)} nm, film is {self.film_thickness} nm"
            )
        if not 0 < self.etch_depth <= self.film_thickness:
            raise InvalidGeometry(f"etch depth {self.etch_depth} nm not in (0, {self.film_thickness}]")
        if not self.top_width > 0:
            raise InvalidGeometry("top width must be positive")
        if not 0 < self.sidewall_angle <= 90:
            raise InvalidGeometry("sidewall angle must be in (0, 90] degrees")
        if any(o not in (1, -1) for o in self.layer_orientations):
            raise InvalidGeometry("layer orientations must be +1 or -1")
        if not self.length > 0:
            raise InvalidGeometry("length must be positive")

    @property
    def base_width(self) -> float:
        """Rib width at the bottom of the etch, in um."""
        return self.top_width + 2 * self.etch_depth * 1e-3 / math.tan(math.radians(self.sidewall_angle))

    @property
    def slab_thickness(self) -> float:
        """Unetched film left beside the rib, in nm."""
        return self.film_thickness - self.etch_depth

    def with_(self, **changes) -> "WaveguideGeometry":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "top_width": self.top_width,
            "etch_depth": self.etch_depth,
            "film_thickness": self.film_thickness,
            "layer_thicknesses": list(self.layer_thicknesses),
            "layer_orientations": list(self.layer_orientations),
            "sidewall_angle": self.sidewall_angle,
            "substrate": self.substrate.name,
            "cladding": self.cladding.name,
            "core": self.core.name,
            "length": self.length,
        }


DESIGN_POINT = WaveguideGeometry()


@dataclass(frozen=True, eq=False)
class CrossSectionGrid:
    """Uniform cell-centred raster of a cross-section.

    Arrays are indexed ``[ix, iy]`` (horizontal, vertical).
    """

    x: np.ndarray
    y: np.ndarray
    spacing: float  # nm
    wavelength: float  # um
    permittivity: np.ndarray
    d_nor: np.ndarray
    geometry: WaveguideGeometry | None = None
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.permittivity.shape

    @property
    def cell_area(self) -> float:
        """Area of one cell in um^2."""
        return (self.spacing * 1e-3) ** 2

    @property
    def ln_mask(self) -> np.ndarray:
        return self.d_nor != 0

    @property
    def cladding_index(self) -> float:
        """Largest index among non-LN cells (substrate or cladding)."""
        outside = self.permittivity[~self.ln_mask]
        return float(np.sqrt(outside.max())) if outside.size else 1.0

    def same_mesh(self, other: "CrossSectionGrid") -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
        )

    def to_csv(self, directory) -> list:
        """Write permittivity and d_Nor as CSV matrices (rows = vertical, top first)."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, arr in (("permittivity", self.permittivity), ("d_nor", self.d_nor)):
            path = directory / f"{name}.csv"
            write_matrix_csv(path, arr, self.x, self.y)
            paths.append(path)
        return paths


def write_matrix_csv(path, arr, x, y):
    """Matrix CSV: first row holds x, first column holds y, image orientation."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y\\x"] + [f"{v:.6f}" for v in x])
        for j in range(len(y) - 1, -1, -1):
            w.writerow([f"{y[j]:.6f}"] + [repr(float(v)) for v in arr[:, j]])


def single_layer_variant(geometry: WaveguideGeometry) -> WaveguideGeometry:
    """Same geometry with every layer oriented +1 (uniform nonlinearity)."""
    return replace(geometry, layer_orientations=(1,) * len(geometry.layer_orientations))


def _axis(n_cells: int, spacing: float, start: float) -> np.ndarray:
    return start + (np.arange(n_cells) + 0.5) * spacing


def rasterize(
    geometry: WaveguideGeometry,
    spacing: float = DEFAULT_SPACING_NM,
    wavelength: float = 1.53,
    padding: float = DEFAULT_PADDING_UM,
) -> CrossSectionGrid:
    """Sample the cross-section on a uniform grid of ``spacing`` nm.

    Each cell takes the material at its centre. The horizontal axis is
    symmetric about the rib centreline; vertical cell edges coincide with the
    film bottom. The padding (um) of cladding/substrate is applied on every
    side of the rib; the buried oxide fills the padding below the film.
    """
    if not 0 < spacing <= MAX_SPACING_NM:
        raise InvalidGeometry(f"spacing {spacing} nm outside (0, {MAX_SPACING_NM}] nm")
    if padding < DEFAULT_PADDING_UM:
        raise InvalidGeometry(f"padding must be at least {DEFAULT_PADDING_UM} um")
    n_core = refractive_index(geometry.core, wavelength)
    n_sub = refractive_index(geometry.substrate, wavelength)
    n_clad = refractive_index(geometry.cladding, wavelength)

    h = spacing * 1e-3
    t = geometry.film_thickness * 1e-3
    slab = geometry.slab_thickness * 1e-3

    half = geometry.base_width / 2 + padding
    nx = 2 * math.ceil(half / h)
    x = (np.arange(nx) - (nx - 1) / 2) * h
    n_below = math.ceil(padding / h)
    n_above = math.ceil((t + padding) / h)
    y = _axis(n_below + n_above, h, -n_below * h)

    X, Y = np.meshgrid(x, y, indexing="ij")
    cot = 1.0 / math.tan(math.radians(geometry.sidewall_angle))
    half_width = geometry.top_width / 2 + (t - Y) * cot
    in_slab = (Y >= 0) & (Y < slab)
    in_rib = (Y >= slab) & (Y < t) & (np.abs(X) <= half_width)
    ln = in_slab | in_rib

    eps = np.where(Y < 0, n_sub**2, n_clad**2)
    eps = np.where(ln, n_core**2, eps)

    d_nor = np.zeros(eps.shape, dtype=np.int8)
    bottom = 0.0
    for thick, sign in zip(geometry.layer_thicknesses, geometry.layer_orientations):
        top = bottom + thick * 1e-3
        d_nor[ln & (Y >= bottom) & (Y < top)] = sign
        bottom = top

    return CrossSectionGrid(
        x=x,
        y=y,
        spacing=float(spacing),
        wavelength=float(wavelength),
        permittivity=eps,
        d_nor=d_nor,
        geometry=geometry,
        meta={"padding": padding},
    )
