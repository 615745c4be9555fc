"""Modal phase matching between TE01 at 765 nm and TE00 at 1530 nm.

Finds the top width where the two effective indices cross for a 460 nm
etch, then the pump wavelength that phase matches a few nearby widths, and
the sinc^2 tuning of a 5.2 mm device. Uses a 20 nm grid to stay quick; the
locus moves by a few nm of width on the 10 nm grid.
"""
import numpy as np

from lnmpm.phase_matching import find_mpm_width, mpm_curve, tuning_curve

SPACING = 20.0

w_star, result = find_mpm_width(460.0, 1.53, spacing=SPACING)
print(f"MPM width at h1 = 460 nm: {w_star:.4f} um")
print(f"  n(TE01, 765 nm) = {result.pump[1]:.6f}, n(TE00, 1530 nm) = {result.signal[1]:.6f}")
print(f"  residual dk = {result.delta_k:.2e} rad/um")

print("\npump wavelength vs width")
for w, lp in mpm_curve([1.40, 1.45, 1.50, 1.55], 460.0, spacing=SPACING):
    print(f"  w = {w:.2f} um -> lam_p = {lp * 1e3:.2f} nm")

dk = np.linspace(-2e-3, 2e-3, 9)
print("\nsinc^2 tuning, L = 5.2 mm")
for k, t in zip(dk, tuning_curve(dk, 5.2)):
    print(f"  dk = {k:+.1e} rad/um  ->  {t:.3f}")
