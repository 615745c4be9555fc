"""Heralded single photons: g2_H(0) against pump power.

Signal photons herald idlers that are split onto two detectors. Both the
estimator with the factor 2 in its denominator and the usual form without
it are printed. For Poisson pairs the usual form sits near 2 R tau (a
little below it, since accidentals inflate the twofold counts); the
factor-2 form is half of that.
"""
from lnmpm.photon_stats import analyze, reference_link_budget, pump_to_pair_rate, simulate_timetags

print(f"{'P (uW)':>7} {'heralded (kHz)':>15} {'g2_H':>8} {'g2 usual':>9} {'2 R tau':>8}")
for k, p_uw in enumerate((0.25, 0.8, 1.97, 3.3)):
    R = pump_to_pair_rate(p_uw * 1e-3)
    spec = reference_link_budget(R, 2.0, layout="three_detector", seed=10 + k)
    rep = analyze(simulate_timetags(spec), span=1e5)
    g = rep.g2
    print(f"{p_uw:7.2f} {rep.heralded_rate / 1e3:15.1f} {g.g2:8.4f} {g.g2_conventional:9.4f} "
          f"{2 * R * spec.coincidence_window * 1e-12:8.4f}")
