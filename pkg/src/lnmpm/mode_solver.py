"""Finite-difference eigenmodes of rasterized cross-sections.

The default formulation is the semivectorial quasi-TE equation for the
horizontal field component ``E`` (the component along crystal z):

    d/dx[ (1/eps) d/dx(eps E) ] + d2E/dy2 + k0^2 eps E = beta^2 E

discretised on the cell-centred grid with Stern's interface coefficients,
i.e. the neighbour weight ``2 eps_j / (eps_i + eps_j)`` along x. Dirichlet
walls close the padded domain. ``formulation="scalar"`` drops the
polarisation term and gives a symmetric operator.

Eigenpairs nearest ``n_eff_guess`` are found by ARPACK in shift-invert mode.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigs, splu

from .errors import ConvergenceFailure, ModeNotFound, NoGuidedMode
from .geometry import CrossSectionGrid

__all__ = [
    "Mode",
    "solve_modes",
    "find_mode",
    "classify_mode",
    "count_sign_changes",
    "effective_area",
    "overlap_loss_db",
    "fiber_coupling_loss",
    "gaussian_spot",
    "calibrate_spot_radius",
    "slab_index",
    "helmholtz_operator",
]

log = logging.getLogger(__name__)

TE_POLARIZATION_THRESHOLD = 0.7


@dataclass(frozen=True, eq=False)
class Mode:
    """A guided mode on a :class:`CrossSectionGrid`.

    ``field`` is real, normalised to unit power on the grid
    (``sum(field**2) * cell_area == 1``) and positive at its peak.
    """

    n_eff: float
    wavelength: float
    field: np.ndarray
    grid: CrossSectionGrid
    label: str
    effective_area: float
    polarization_fraction: float = 1.0
    residual: float = float("nan")
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def beta(self) -> float:
        """Propagation constant in rad/um."""
        return 2 * math.pi * self.n_eff / self.wavelength

    @property
    def peak_position(self) -> tuple:
        ix, iy = np.unravel_index(np.argmax(np.abs(self.field)), self.field.shape)
        return float(self.grid.x[ix]), float(self.grid.y[iy])


def _face_difference(n: int, h: float) -> sp.csr_matrix:
    """``(n + 1) x n`` difference onto cell faces, zero field beyond both walls."""
    return sp.diags([np.ones(n), -np.ones(n)], [0, -1], shape=(n + 1, n), format="csr") / h


def helmholtz_operator(grid: CrossSectionGrid, formulation: str = "semivectorial") -> sp.csr_matrix:
    """Operator ``A`` with ``A E = n_eff^2 E`` (lengths normalised by k0)."""
    eps = grid.permittivity
    nx, ny = eps.shape
    h = grid.spacing * 1e-3
    k0 = 2 * math.pi / grid.wavelength
    Gx = sp.kron(_face_difference(nx, h), sp.identity(ny), format="csr")
    Gy = sp.kron(sp.identity(nx), _face_difference(ny, h), format="csr")
    flat = eps.ravel()
    Lyy = -(Gy.T @ Gy)
    if formulation == "semivectorial":
        # eps on the x faces; the wall faces take the adjacent cell value
        half = np.empty((nx + 1, ny))
        half[1:-1] = 0.5 * (eps[:-1] + eps[1:])
        half[0] = eps[0]
        half[-1] = eps[-1]
        Lxx = -(Gx.T @ sp.diags(1.0 / half.ravel()) @ Gx @ sp.diags(flat))
    elif formulation == "scalar":
        Lxx = -(Gx.T @ Gx)
    else:
        raise ValueError(f"unknown formulation {formulation!r}")
    return ((Lxx + Lyy) / k0**2 + sp.diags(flat)).tocsr()


def count_sign_changes(values: np.ndarray, threshold: float = 0.05) -> int:
    """Sign changes along a 1-D cut, ignoring samples below ``threshold`` of the peak."""
    values = np.asarray(values, dtype=float)
    peak = np.abs(values).max()
    if peak == 0:
        return 0
    kept = values[np.abs(values) > threshold * peak]
    return int(np.count_nonzero(np.diff(np.sign(kept))))


def classify_mode(mode_or_field, polarization_fraction: float | None = None) -> str:
    """Label ``TEmn`` from node counts through the field maximum.

    ``m`` counts sign changes along the horizontal cut and ``n`` along the
    vertical cut. Fields whose polarisation fraction is below 0.7 or whose
    lobes cannot be separated come back as ``"other(m,n)"``.
    """
    if isinstance(mode_or_field, Mode):
        fld = mode_or_field.field
        if polarization_fraction is None:
            polarization_fraction = mode_or_field.polarization_fraction
    else:
        fld = np.asarray(mode_or_field)
    if polarization_fraction is None:
        polarization_fraction = 1.0
    ix, iy = np.unravel_index(np.argmax(np.abs(fld)), fld.shape)
    m = count_sign_changes(fld[:, iy])
    n = count_sign_changes(fld[ix, :])
    if polarization_fraction < TE_POLARIZATION_THRESHOLD or m > 9 or n > 9:
        return f"other({m},{n})"
    return f"TE{m}{n}"


def effective_area(mode_or_field, cell_area: float | None = None) -> float:
    """``(sum |E|^2 dA)^2 / sum |E|^4 dA`` in um^2."""
    if isinstance(mode_or_field, Mode):
        fld, cell_area = mode_or_field.field, mode_or_field.grid.cell_area
    else:
        fld = np.asarray(mode_or_field)
        if cell_area is None:
            raise ValueError("cell_area is required for a bare field array")
    p2 = np.abs(fld) ** 2
    return float((p2.sum() * cell_area) ** 2 / ((p2**2).sum() * cell_area))


def _normalise(vec: np.ndarray, shape, cell_area: float) -> np.ndarray:
    fld = np.real(vec).reshape(shape)
    fld = fld / math.sqrt((fld**2).sum() * cell_area)
    if fld.flat[np.argmax(np.abs(fld))] < 0:
        fld = -fld
    return fld


def solve_modes(
    grid: CrossSectionGrid,
    count: int = 4,
    n_eff_guess: float | None = None,
    formulation: str = "semivectorial",
    tol: float = 1e-12,
    extra: int = 4,
) -> list:
    """Guided modes nearest ``n_eff_guess``, sorted by decreasing index.

    ``n_eff_guess`` defaults to the largest index on the grid. Only modes
    with index between the cladding/substrate index and the maximum grid
    index are returned.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    n_max = float(np.sqrt(grid.permittivity.max()))
    n_clad = grid.cladding_index
    if n_eff_guess is None:
        n_eff_guess = n_max
    if not n_clad < n_eff_guess <= n_max:
        raise NoGuidedMode(f"guess {n_eff_guess} outside guided bracket ({n_clad:.4f}, {n_max:.4f}]")

    A = helmholtz_operator(grid, formulation)
    size = A.shape[0]
    k = min(count + extra, size - 2)
    sigma = n_eff_guess**2
    t0 = time.perf_counter()
    lu = splu((A - sigma * sp.identity(size, format="csr")).tocsc(), permc_spec="MMD_AT_PLUS_A")
    solves = [0]

    def shift_invert(v):
        solves[0] += 1
        return lu.solve(np.asarray(v, dtype=float))

    op = LinearOperator((size, size), matvec=shift_invert, dtype=float)
    try:
        vals, vecs = eigs(A, k=k, sigma=sigma, OPinv=op, v0=np.ones(size), tol=tol, maxiter=5000)
    except ArpackNoConvergence as exc:
        raise ConvergenceFailure(
            "ARPACK did not converge",
            {"converged": len(exc.eigenvalues), "requested": k, "solves": solves[0],
             "elapsed_s": time.perf_counter() - t0},
        ) from exc
    elapsed = time.perf_counter() - t0

    order = np.argsort(-vals.real)
    modes = []
    for i in order:
        lam = vals[i]
        vec = vecs[:, i]
        if abs(lam.imag) > 1e-9 * abs(lam.real) or lam.real <= 0:
            continue
        n_eff = math.sqrt(lam.real)
        if not n_clad < n_eff < n_max:
            continue
        vec = vec / np.linalg.norm(vec)
        residual = float(np.linalg.norm(A @ vec - lam * vec) / abs(lam))
        fld = _normalise(vec, grid.shape, grid.cell_area)
        label = classify_mode(fld)
        modes.append(
            Mode(
                n_eff=n_eff,
                wavelength=grid.wavelength,
                field=fld,
                grid=grid,
                label=label,
                effective_area=effective_area(fld, grid.cell_area),
                polarization_fraction=1.0,
                residual=residual,
                diagnostics={"elapsed_s": elapsed, "requested": k, "solves": solves[0], "formulation": formulation},
            )
        )
    if not modes:
        raise NoGuidedMode(
            f"no eigenvalue in the guided bracket ({n_clad:.4f}, {n_max:.4f}) at {grid.wavelength} um"
        )
    below = [m for m in modes if m.n_eff <= n_eff_guess]
    chosen = (below or modes)[:count]
    log.debug(
        "solved %d modes at %.4f um in %.2fs: %s",
        len(chosen), grid.wavelength, elapsed, [(m.label, round(m.n_eff, 5)) for m in chosen],
    )
    return chosen


def slab_index(grid: CrossSectionGrid, column: int = 0) -> float:
    """Fundamental index of the 1-D vertical stack in ``column`` (default: grid edge).

    This is the index of the unetched slab beside the rib; a rib mode below it
    leaks sideways into the slab.
    """
    eps = grid.permittivity[column]
    h = grid.spacing * 1e-3
    k0 = 2 * math.pi / grid.wavelength
    diag = eps - 2.0 / (h * k0) ** 2
    off = np.full(len(eps) - 1, 1.0 / (h * k0) ** 2)
    top = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(len(eps) - 1, len(eps) - 1))
    return float(math.sqrt(max(top[0], 0.0)))


def find_mode(
    grid: CrossSectionGrid,
    label: str,
    search: int = 8,
    formulation: str = "semivectorial",
    lateral_check: bool = True,
) -> Mode:
    """Highest-index guided mode carrying ``label``.

    With ``lateral_check`` the mode must also sit above the slab index, so a
    rib mode that leaks into the unetched slab is not accepted.
    """
    modes = solve_modes(grid, count=search, formulation=formulation)
    floor = slab_index(grid) if lateral_check else grid.cladding_index
    for mode in modes:
        if mode.label == label and mode.n_eff > floor:
            return mode
    found = [(m.label, round(m.n_eff, 5)) for m in modes]
    raise ModeNotFound(
        f"no guided {label} at {grid.wavelength} um (lateral floor {floor:.5f}); solved {found}"
    )


def gaussian_spot(grid: CrossSectionGrid, radius: float, center=(0.0, 0.0)) -> np.ndarray:
    """Gaussian field with 1/e^2 intensity radius ``radius`` (um)."""
    X, Y = np.meshgrid(grid.x - center[0], grid.y - center[1], indexing="ij")
    return np.exp(-(X**2 + Y**2) / radius**2)


def overlap_loss_db(field_a: np.ndarray, field_b: np.ndarray, cell_area: float) -> float:
    """Power coupling loss between two real fields, ``-10 log10 |<a|b>|^2``."""
    a = field_a / math.sqrt((np.abs(field_a) ** 2).sum() * cell_area)
    b = field_b / math.sqrt((np.abs(field_b) ** 2).sum() * cell_area)
    eta = abs((a * np.conj(b)).sum() * cell_area) ** 2
    return float(max(-10 * math.log10(eta), 0.0))


def fiber_coupling_loss(mode: Mode, spot_radius: float, center=None) -> float:
    """Butt-coupling loss (dB) from a Gaussian fibre spot into ``mode``.

    The spot is aligned on the mode's field maximum unless ``center`` is given.
    """
    if spot_radius <= 0:
        raise ValueError("spot radius must be positive")
    if center is None:
        center = mode.peak_position
    spot = gaussian_spot(mode.grid, spot_radius, center)
    return overlap_loss_db(mode.field, spot, mode.grid.cell_area)


def calibrate_spot_radius(mode: Mode, target_loss_db: float = 6.0, bracket=(0.3, 10.0)) -> float:
    """Spot radius (um) on the large-spot side at which the loss equals ``target_loss_db``."""
    best = _best_spot(mode, bracket)
    return brentq(lambda r: fiber_coupling_loss(mode, r) - target_loss_db, best, bracket[1], xtol=1e-6)


def _best_spot(mode, bracket):
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(
        lambda r: fiber_coupling_loss(mode, r), bounds=bracket, method="bounded", options={"xatol": 1e-4}
    )
    return float(res.x)
