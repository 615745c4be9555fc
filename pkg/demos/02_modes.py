"""Guided modes of the design-point dual-layer rib.

Solves the four lowest quasi-TE modes at the signal and pump wavelengths on
a 20 nm grid, labels them, and reports effective areas and butt-coupling
losses from a lensed fibre calibrated to 6 dB on TE00.
"""
from lnmpm.geometry import DESIGN_POINT, rasterize
from lnmpm.mode_solver import calibrate_spot_radius, effective_area, fiber_coupling_loss, slab_index, solve_modes

SPACING = 20.0  # nm; 10 nm is the production grid

for lam in (1.53, 0.765):
    grid = rasterize(DESIGN_POINT, SPACING, lam)
    print(f"\nlambda = {lam} um, grid {grid.shape}, slab index beside the rib {slab_index(grid):.5f}")
    for m in solve_modes(grid, count=4):
        print(f"  {m.label:6s} n_eff = {m.n_eff:.6f}  A_eff = {effective_area(m):.3f} um^2")

signal = next(m for m in solve_modes(rasterize(DESIGN_POINT, SPACING, 1.53), count=2) if m.label == "TE00")
pump = next(m for m in solve_modes(rasterize(DESIGN_POINT, SPACING, 0.765), count=4) if m.label == "TE01")
radius = calibrate_spot_radius(signal, 6.0)
print(f"\nfibre spot radius for 6 dB on TE00: {radius:.3f} um")
# the same lensed fibre at half the wavelength focuses to half the spot
print(f"TE01 at 765 nm through the scaled spot: {fiber_coupling_loss(pump, radius / 2):.1f} dB")
