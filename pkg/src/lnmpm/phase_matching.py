"""Phase mismatch, modal phase-matching geometry search and sinc^2 tuning.

The design targets degenerate SPDC (or its reverse, SHG): the pump at
``lam_s / 2`` travels in TE01 and the signal/idler at ``lam_s`` in TE00. A
geometry is phase matched when both modes share the same effective index.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .cache import ResultCache
from .errors import (
    BracketError,
    EnergyConservationViolated,
    ModeNotFound,
    NoHigherOrderMode,
    NoSolutionInRange,
)
from .geometry import DEFAULT_SPACING_NM, DESIGN_POINT, WaveguideGeometry, rasterize
from .mode_solver import find_mode

__all__ = [
    "PhaseMatchResult",
    "phase_mismatch",
    "mode_index",
    "index_difference",
    "find_mpm_width",
    "mpm_pump_wavelength",
    "mpm_curve",
    "landscape_sweep",
    "tuning_curve",
    "SIGNAL_LABEL",
    "PUMP_LABEL",
]

log = logging.getLogger(__name__)

SIGNAL_LABEL = "TE00"
PUMP_LABEL = "TE01"

_DEFAULT_CACHE = ResultCache()


def _wavevector(wavelength, n_eff):
    return 2 * math.pi * n_eff / wavelength


def phase_mismatch(pump, signal, idler, rtol: float = 1e-9) -> float:
    """``k_s + k_i - k_p`` in rad/um for ``(wavelength_um, n_eff)`` tuples."""
    (lp, np_), (ls, ns), (li, ni) = pump, signal, idler
    if abs(1 / lp - 1 / ls - 1 / li) > rtol / lp:
        raise EnergyConservationViolated(
            f"1/{lp} != 1/{ls} + 1/{li} (relative error {abs(1 - lp / ls - lp / li):.3g})"
        )
    return _wavevector(ls, ns) + _wavevector(li, ni) - _wavevector(lp, np_)


@dataclass(frozen=True)
class PhaseMatchResult:
    delta_k: float
    pump: tuple
    signal: tuple
    idler: tuple
    geometry: WaveguideGeometry

    def recompute_delta_k(self) -> float:
        return phase_mismatch(self.pump, self.signal, self.idler)

    @property
    def index_mismatch(self) -> float:
        return self.pump[1] - self.signal[1]


def mode_index(
    geometry: WaveguideGeometry,
    wavelength: float,
    label: str,
    spacing: float = DEFAULT_SPACING_NM,
    cache: ResultCache | None = None,
) -> float:
    """Effective index of the ``label`` mode, memoised per (geometry, spacing, wavelength)."""
    cache = _DEFAULT_CACHE if cache is None else cache
    payload = {
        "geometry": geometry.as_dict(),
        "spacing": spacing,
        "wavelength": round(wavelength, 12),
        "label": label,
        "solver": "semivectorial-v1",
    }
    hit = cache.get(payload)
    if hit is None:
        try:
            mode = find_mode(rasterize(geometry, spacing, wavelength), label)
            hit = {"n_eff": mode.n_eff}
        except ModeNotFound as exc:
            hit = {"n_eff": None, "error": str(exc)}
        cache.put(payload, hit)
    if hit["n_eff"] is None:
        if label == PUMP_LABEL:
            raise NoHigherOrderMode(hit["error"])
        raise ModeNotFound(hit["error"])
    return hit["n_eff"]


def index_difference(geometry, signal_wavelength=1.53, spacing=DEFAULT_SPACING_NM, cache=None) -> float:
    """``n_eff(TE01, lam_s/2) - n_eff(TE00, lam_s)``; zero at modal phase matching."""
    n_p = mode_index(geometry, signal_wavelength / 2, PUMP_LABEL, spacing, cache)
    n_s = mode_index(geometry, signal_wavelength, SIGNAL_LABEL, spacing, cache)
    return n_p - n_s


def _degenerate_result(geometry, signal_wavelength, spacing, cache) -> PhaseMatchResult:
    lp = signal_wavelength / 2
    n_p = mode_index(geometry, lp, PUMP_LABEL, spacing, cache)
    n_s = mode_index(geometry, signal_wavelength, SIGNAL_LABEL, spacing, cache)
    pump, signal = (lp, n_p), (signal_wavelength, n_s)
    return PhaseMatchResult(phase_mismatch(pump, signal, signal), pump, signal, signal, geometry)


def _solve_root(func, lo, hi, xtol, ftol):
    """Bracketed root of a monotone, finely stepped function.

    Brent's method first, then bisection of the final bracket until
    ``|f| < ftol`` or the bracket is below ``xtol``. Returns the evaluated
    abscissa with the smallest ``|f|``.
    """
    seen = {}

    def f(v):
        if v not in seen:
            seen[v] = func(v)
        return seen[v]

    lo, hi = min(lo, hi), max(lo, hi)
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f = {f_lo:.3g}, {f_hi:.3g}")
    brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
    # below the raster scale f is piecewise constant: bisect until |f| is small
    a = max(v for v in seen if np.sign(seen[v]) == np.sign(f_lo))
    b = min(v for v in seen if np.sign(seen[v]) == np.sign(f_hi))
    while min(abs(seen[a]), abs(seen[b])) >= ftol and b - a > xtol / 100:
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(f_lo):
            a = mid
        else:
            b = mid
    return min(seen, key=lambda v: abs(seen[v]))


def find_mpm_width(
    h1: float,
    signal_wavelength: float = 1.53,
    bracket=(1.3, 1.6),
    geometry: WaveguideGeometry = DESIGN_POINT,
    spacing: float = DEFAULT_SPACING_NM,
    xtol: float = 1e-3,
    ftol: float = 1e-5,
    cache: ResultCache | None = None,
):
    """Top width (um) at which TE01 at ``lam_s/2`` and TE00 at ``lam_s`` are index matched.

    Raises
    ------
    NoHigherOrderMode
        TE01 is not guided at the bracket ends for this etch depth.
    BracketError
        The index difference does not change sign across ``bracket``.
    """
    base = geometry.with_(etch_depth=float(h1))

    def f(w):
        return index_difference(base.with_(top_width=float(w)), signal_wavelength, spacing, cache)

    w_star = _solve_root(f, float(bracket[0]), float(bracket[1]), xtol, ftol)
    result = _degenerate_result(base.with_(top_width=w_star), signal_wavelength, spacing, cache)
    log.info("MPM width for h1=%s nm: %.5f um, dk=%.3g rad/um", h1, w_star, result.delta_k)
    return w_star, result


def mpm_pump_wavelength(
    w: float,
    h1: float,
    search_range=(0.74, 0.80),
    geometry: WaveguideGeometry = DESIGN_POINT,
    spacing: float = DEFAULT_SPACING_NM,
    xtol: float = 1e-5,
    ftol: float = 1e-6,
    cache: ResultCache | None = None,
) -> float:
    """Pump wavelength (um) where TE01 at ``lam_p`` matches TE00 at ``2 lam_p``."""
    g = geometry.with_(top_width=float(w), etch_depth=float(h1))

    def f(lp):
        return index_difference(g, 2 * lp, spacing, cache)

    try:
        return _solve_root(f, float(search_range[0]), float(search_range[1]), xtol, ftol)
    except BracketError as exc:
        raise NoSolutionInRange(f"no MPM pump wavelength in {search_range} um: {exc}") from exc


def _parallel_map(func, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def mpm_curve(widths, h1, search_range=(0.70, 0.85), geometry=DESIGN_POINT, spacing=DEFAULT_SPACING_NM,
              cache=None, threads=1):
    """``(w, lam_p)`` pairs; ``lam_p`` is NaN where no solution exists in range."""

    def one(w):
        try:
            return float(w), mpm_pump_wavelength(w, h1, search_range, geometry, spacing, cache=cache)
        except (NoSolutionInRange, ModeNotFound):
            return float(w), float("nan")

    return _parallel_map(one, list(widths), threads)


def landscape_sweep(widths, etch_depths, signal_wavelength=1.53, geometry=DESIGN_POINT,
                    spacing=DEFAULT_SPACING_NM, cache=None, threads=1):
    """Rows ``(w, h1, n_TE00(lam_s), n_TE01(lam_s/2))``; NaN where a mode is absent."""
    points = [(float(w), float(h)) for h in etch_depths for w in widths]

    def one(point):
        w, h = point
        g = geometry.with_(top_width=w, etch_depth=h)
        row = [w, h]
        for lam, label in ((signal_wavelength, SIGNAL_LABEL), (signal_wavelength / 2, PUMP_LABEL)):
            try:
                row.append(mode_index(g, lam, label, spacing, cache))
            except ModeNotFound:
                row.append(float("nan"))
        return tuple(row)

    return _parallel_map(one, points, threads)


def tuning_curve(delta_k, length_mm: float):
    """``sinc^2(dk L / 2)`` for ``delta_k`` in rad/um and ``length_mm`` in mm."""
    if length_mm <= 0:
        raise ValueError("length must be positive")
    arg = np.asarray(delta_k, dtype=float) * length_mm * 1e3 / 2
    return np.sinc(arg / np.pi) ** 2
