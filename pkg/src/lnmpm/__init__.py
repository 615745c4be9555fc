"""Design and photon-statistics toolkit for modal phase-matched dual-layer LNOI waveguides.

Submodules
----------
materials           Sellmeier dispersion of LN and silica
geometry            rib cross-sections and their rasterisation
mode_solver         finite-difference eigenmodes, labels, fibre coupling
phase_matching      MPM width and pump wavelength search, sinc^2 tuning
nonlinear_coupling  overlap factor, PGR scaling, SHG efficiency
photon_stats        SPDC time-tag Monte Carlo and coincidence estimators
timetags            time-tag stream container and file formats
cli                 ``lnmpm`` command-line tool
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .materials import LN_E, LN_O, SILICA, MaterialModel, refractive_index
from .geometry import DESIGN_POINT, CrossSectionGrid, WaveguideGeometry, rasterize, single_layer_variant
from .mode_solver import Mode, classify_mode, fiber_coupling_loss, find_mode, solve_modes
from .phase_matching import find_mpm_width, mpm_pump_wavelength, phase_mismatch, tuning_curve
from .nonlinear_coupling import enhancement_ratio, overlap_factor, predict_shg_efficiency
from .photon_stats import SourceDetectionSpec, analyze, simulate_timetags
from .timetags import TimeTagStream, read_ttag, write_ttag
