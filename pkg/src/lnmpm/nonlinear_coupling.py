"""Modal overlap factor, efficiency scaling and SHG analysis.

The overlap factor weights the three-field integral by the sign profile of
the nonlinearity::

    zeta = sum(d E_s E_s E_p) / (|sum(|E_s|^2 E_s)|^(2/3) |sum(|E_p|^2 d E_p)|^(1/3))

with sums taken as cell-area quadrature over the grid, ``E_s`` the TE00 field
at the signal (fundamental) wavelength and ``E_p`` the TE01 field at the pump
(second-harmonic) wavelength.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import epsilon_0

from .errors import DegenerateDenominator, GridMismatch
from .materials import LN_NONLINEAR
from .mode_solver import Mode

__all__ = [
    "OverlapResult",
    "EfficiencyPrediction",
    "overlap_factor",
    "enhancement_ratio",
    "predict_relative_pgr",
    "predict_efficiency",
    "calibrated_pgr",
    "shg_normalized_efficiency_from_measurement",
    "shg_efficiency_table",
    "overlap_area",
    "predict_shg_efficiency",
    "propagation_loss",
    "REFERENCE_PGR_SLOPE",
    "SHG_DEFAULTS",
]

DENOMINATOR_FLOOR = 1e-12

# Measured on-chip pair generation slope at the design point, Hz per mW of pump.
REFERENCE_PGR_SLOPE = 41.77e9

# Transmissions and device length used in the SHG power analysis.
SHG_DEFAULTS = {"t_sh": 0.35, "t_fh": 0.30, "length_cm": 0.52}


@dataclass(frozen=True)
class OverlapResult:
    """Overlap factor with its quadrature intermediates.

    ``signal_cubic`` is ``sum(|E_s|^2 E_s) dA`` and ``pump_cubic`` is
    ``sum(|E_p|^2 d E_p) dA``; both in um^-1 for unit-power fields.
    """

    zeta: float
    numerator: float
    signal_cubic: float
    pump_cubic: float
    variant: str

    def recompute(self) -> float:
        return self.numerator / (abs(self.signal_cubic) ** (2 / 3) * abs(self.pump_cubic) ** (1 / 3))


def _variant(d_nor):
    signs = set(np.unique(d_nor[d_nor != 0]).tolist())
    if signs == {1} or signs == {-1}:
        return "single_layer"
    if signs == {-1, 1}:
        return "dual_layer"
    return "none"


def overlap_factor(signal_mode: Mode, pump_mode: Mode, d_nor: np.ndarray | None = None) -> OverlapResult:
    """Evaluate the overlap factor for a TE00 signal and TE01 pump on one mesh.

    ``d_nor`` defaults to the pump grid's nonlinearity profile; pass the
    profile of :func:`lnmpm.geometry.single_layer_variant` for the uniform
    comparison.

    Raises
    ------
    GridMismatch
        The two modes (or ``d_nor``) live on different meshes.
    DegenerateDenominator
        A denominator integral is below 1e-12; intermediates are attached.
    """
    if not signal_mode.grid.same_mesh(pump_mode.grid):
        raise GridMismatch("signal and pump modes are on different meshes")
    if d_nor is None:
        d_nor = pump_mode.grid.d_nor
    d_nor = np.asarray(d_nor, dtype=float)
    if d_nor.shape != pump_mode.field.shape:
        raise GridMismatch(f"d_nor shape {d_nor.shape} != field shape {pump_mode.field.shape}")
    dA = pump_mode.grid.cell_area
    es, ep = signal_mode.field, pump_mode.field
    numerator = float(np.sum(d_nor * np.conj(es) * np.conj(es) * ep) * dA)
    signal_cubic = float(np.sum(np.abs(es) ** 2 * es) * dA)
    pump_cubic = float(np.sum(np.abs(ep) ** 2 * d_nor * ep) * dA)
    variant = _variant(d_nor)
    if abs(signal_cubic) < DENOMINATOR_FLOOR or abs(pump_cubic) < DENOMINATOR_FLOOR:
        raise DegenerateDenominator(
            "overlap denominator vanishes",
            {"numerator": numerator, "signal_cubic": signal_cubic, "pump_cubic": pump_cubic},
        )
    zeta = numerator / (abs(signal_cubic) ** (2 / 3) * abs(pump_cubic) ** (1 / 3))
    return OverlapResult(zeta, numerator, signal_cubic, pump_cubic, variant)


def enhancement_ratio(zeta_dual: float, zeta_single: float) -> float:
    """Efficiency gain ``(zeta_dual / zeta_single)^2``."""
    if zeta_single == 0:
        raise ZeroDivisionError("single-layer overlap factor is zero")
    return (zeta_dual / zeta_single) ** 2


def _sinc2(x):
    return float(np.sinc(x / np.pi) ** 2)


def predict_relative_pgr(length_mm, pump_mw, d_eff, zeta, area_um2, delta_k=0.0) -> float:
    """``L^2 P d^2 zeta^2 / A sinc^2(dk L / 2)`` in mm^2 mW (pm/V)^2 / um^2.

    Only ratios of this number are meaningful; see :func:`calibrated_pgr`.
    """
    if area_um2 <= 0:
        raise ValueError("effective area must be positive")
    values = (length_mm, pump_mw, d_eff, zeta, area_um2, delta_k)
    if not all(math.isfinite(v) for v in values):
        raise ValueError("inputs must be finite")
    return length_mm**2 * pump_mw * d_eff**2 * zeta**2 / area_um2 * _sinc2(delta_k * length_mm * 1e3 / 2)


@dataclass(frozen=True)
class EfficiencyPrediction:
    relative_pgr: float
    normalized_shg_efficiency: float  # %/W/cm^2, NaN when not evaluated
    sinc2: float
    length_mm: float
    pump_mw: float
    d_eff: float
    zeta: float
    area_um2: float
    delta_k: float


def predict_efficiency(length_mm, pump_mw, zeta, area_um2, delta_k=0.0, d_eff=LN_NONLINEAR.d33,
                       shg_efficiency=float("nan")) -> EfficiencyPrediction:
    rel = predict_relative_pgr(length_mm, pump_mw, d_eff, zeta, area_um2, delta_k)
    return EfficiencyPrediction(rel, shg_efficiency, _sinc2(delta_k * length_mm * 1e3 / 2), length_mm,
                                pump_mw, d_eff, zeta, area_um2, delta_k)


def calibrated_pgr(prediction: EfficiencyPrediction, reference: EfficiencyPrediction,
                   reference_slope: float = REFERENCE_PGR_SLOPE) -> float:
    """Absolute PGR (Hz) by scaling against a reference device of known slope (Hz/mW)."""
    return reference_slope * reference.pump_mw * prediction.relative_pgr / reference.relative_pgr


def shg_normalized_efficiency_from_measurement(
    p_sh,
    p_fh,
    t_sh: float = SHG_DEFAULTS["t_sh"],
    t_fh: float = SHG_DEFAULTS["t_fh"],
    length_cm: float = SHG_DEFAULTS["length_cm"],
    fh_loss_db_per_cm: float | None = None,
):
    """Normalised SHG efficiency in %/W/cm^2 from measured powers in W.

    Computes ``(P_SH / T_SH) / (P_FH L / T_FH)^2``. With ``fh_loss_db_per_cm``
    the length is replaced by the loss-corrected effective length
    ``(1 - exp(-a L)) / a`` of the fundamental.
    """
    if not (0 < t_sh <= 1 and 0 < t_fh <= 1):
        raise ValueError("transmissions must lie in (0, 1]")
    if length_cm <= 0:
        raise ValueError("length must be positive")
    p_sh = np.asarray(p_sh, dtype=float)
    p_fh = np.asarray(p_fh, dtype=float)
    if np.any(p_sh < 0) or np.any(p_fh < 0):
        raise ValueError("powers must be non-negative")
    length = length_cm
    if fh_loss_db_per_cm:
        alpha = fh_loss_db_per_cm * math.log(10) / 10
        length = (1 - math.exp(-alpha * length_cm)) / alpha
    eta = 100.0 * (p_sh / t_sh) / (p_fh * length / t_fh) ** 2
    return float(eta) if eta.ndim == 0 else eta


def shg_efficiency_table(rows, **kwargs):
    """Convert ``(wavelength_nm, P_FH_W, P_SH_W)`` rows to ``(wavelength_nm, eta)``."""
    return [(lam, shg_normalized_efficiency_from_measurement(psh, pfh, **kwargs)) for lam, pfh, psh in rows]


def overlap_area(overlap: OverlapResult) -> float:
    """Area (um^2) that pairs with ``zeta`` in the coupled-mode efficiency.

    For unit-power fields ``zeta^2 / overlap_area`` equals the squared
    normalised three-field overlap, so ``overlap_area = (A_s^2 A_p)^(1/3)``
    with ``A_s = 1 / signal_cubic^2`` and ``A_p = 1 / pump_cubic^2``.
    """
    return (abs(overlap.signal_cubic) ** -4 * abs(overlap.pump_cubic) ** -2) ** (1 / 3)


def predict_shg_efficiency(signal_mode: Mode, pump_mode: Mode, zeta, wavelength: float | None = None,
                           d_eff: float = LN_NONLINEAR.d33) -> float:
    """Undepleted, phase-matched SHG efficiency in %/W/cm^2.

    Uses the plane-wave-normalised coupled-mode result

        eta = 8 pi^2 d_eff^2 zeta^2 / (eps0 c n_FH^2 n_SH lam_FH^2 A)

    with ``A`` from :func:`overlap_area`. ``zeta`` is an :class:`OverlapResult`
    (its own area is used) or a bare number, in which case the area is taken
    from the modes with the pump grid's ``d_nor``.
    """
    if not isinstance(zeta, OverlapResult):
        ref = overlap_factor(signal_mode, pump_mode)
        zeta_value, area = float(zeta), overlap_area(ref)
    else:
        zeta_value, area = zeta.zeta, overlap_area(zeta)
    lam = (wavelength if wavelength is not None else signal_mode.wavelength) * 1e-6
    d = d_eff * 1e-12
    eta_si = 8 * math.pi**2 * d**2 * zeta_value**2 / (
        epsilon_0 * SPEED_OF_LIGHT * signal_mode.n_eff**2 * pump_mode.n_eff * lam**2 * area * 1e-12
    )
    # W^-1 m^-2 -> %/W/cm^2
    return eta_si * 1e-4 * 100


def propagation_loss(alpha_ref: float, lambda_ref: float, wavelength: float) -> float:
    """Rayleigh-scattering loss scaled as ``alpha_ref (lambda_ref / lambda)^2`` (dB/cm)."""
    if wavelength <= 0 or lambda_ref <= 0:
        raise ValueError("wavelengths must be positive")
    return alpha_ref * (lambda_ref / wavelength) ** 2
