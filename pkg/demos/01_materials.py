"""Material dispersion of the LNOI stack.

Prints the extraordinary and ordinary LN indices and the silica index over
the telecom and near-visible bands used by the design, and shows the
transparency-window guard.
"""
import numpy as np

from lnmpm.errors import OutOfTransparencyWindow
from lnmpm.materials import LN_E, LN_O, SILICA, refractive_index

wavelengths = np.array([0.70, 0.765, 0.80, 1.30, 1.53, 1.55, 1.60])
print(f"{'lam (um)':>9} {'n_e':>9} {'n_o':>9} {'SiO2':>9}")
for lam in wavelengths:
    print(f"{lam:9.3f} {refractive_index(LN_E, lam):9.5f} {refractive_index(LN_O, lam):9.5f} "
          f"{refractive_index(SILICA, lam):9.5f}")

# TE modes of x-cut film see n_e; the pump sits ~0.08 above the signal in index
dn = refractive_index(LN_E, 0.765) - refractive_index(LN_E, 1.53)
print(f"\nmaterial index gap n_e(765 nm) - n_e(1530 nm) = {dn:.4f}")

try:
    refractive_index(LN_E, 0.30)
except OutOfTransparencyWindow as exc:
    print(f"0.30 um rejected: {exc}")
