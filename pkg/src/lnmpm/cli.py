"""Command-line front end: waveguide design, overlap, SHG and SPDC time-tag analysis.

Every command writes its CSV artifacts and a ``manifest.json`` (config,
config hash, seed, package versions, timings) into the output directory.
Failures exit nonzero and print a JSON error record on stderr:

    2  configuration error
    3  file input/output error
    4  domain error (no guided mode, no phase-matching solution, ...)
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
import time
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .cache import ResultCache
from .config import RunConfig, load_config
from .errors import ConfigError, IoError, LnmpmError
from .geometry import rasterize, single_layer_variant, write_matrix_csv
from .materials import LN_E, LN_O, SILICA, refractive_index
from .mode_solver import find_mode, solve_modes
from .nonlinear_coupling import (
    enhancement_ratio,
    overlap_area,
    overlap_factor,
    predict_shg_efficiency,
    shg_normalized_efficiency_from_measurement,
)
from .phase_matching import PUMP_LABEL, SIGNAL_LABEL, find_mpm_width, landscape_sweep, mpm_curve
from .photon_stats import LAYOUTS, analyze, simulate_timetags
from .timetags import read_csv, read_ttag, write_csv, write_ttag

log = logging.getLogger("lnmpm")

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DOMAIN = 4


def _write_rows(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


class Run:
    """Output directory, config and bookkeeping for one command."""

    def __init__(self, command: str, config: RunConfig, threads: int):
        self.command = command
        self.config = config
        self.threads = threads
        self.out = Path(config.io.out)
        self.artifacts = []
        self.timings = {}
        self.results = {}
        self.cache = ResultCache(config.io.cache_dir or None)

    @contextmanager
    def timed(self, name):
        t0 = time.perf_counter()
        yield
        self.timings[name] = round(time.perf_counter() - t0, 6)

    def table(self, name, header, rows):
        self.artifacts.append(_write_rows(self.out / name, header, rows).name)

    def manifest(self):
        data = {
            "command": self.command,
            "config": self.config.as_dict(),
            "config_hash": self.config.digest(),
            "seed": self.config.spdc.seed,
            "threads": self.threads,
            "versions": {
                "lnmpm": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "timings_s": self.timings,
            "artifacts": self.artifacts,
            "results": self.results,
        }
        path = self.out / "manifest.json"
        path.write_text(json.dumps(data, indent=2, sort_keys=True, default=list) + "\n")
        return path


def cmd_materials(run: Run, args):
    sw = run.config.sweep
    lam = np.linspace(max(sw.wavelength_min, 0.35), min(sw.wavelength_max, 5.2), sw.wavelength_count)
    rows = zip(lam, refractive_index(LN_E, lam), refractive_index(LN_O, lam), refractive_index(SILICA, lam))
    run.table("materials.csv", ["wavelength_um", "n_LN_e", "n_LN_o", "n_SiO2"], rows)


def cmd_modes(run: Run, args):
    cfg = run.config
    lam = args.wavelength or cfg.solver.mode_wavelength
    grid = rasterize(cfg.geometry.build(), cfg.solver.spacing, lam, cfg.solver.padding)
    with run.timed("solve"):
        modes = solve_modes(grid, cfg.solver.num_modes, formulation=cfg.solver.formulation, tol=cfg.solver.tol)
    rows = [(i, m.label, m.n_eff, m.effective_area, m.residual) for i, m in enumerate(modes)]
    run.table("modes.csv", ["index", "label", "n_eff", "effective_area_um2", "residual"], rows)
    run.results["modes"] = [{"label": m.label, "n_eff": m.n_eff} for m in modes]
    if args.fields:
        grid.to_csv(run.out)
        run.artifacts += ["permittivity.csv", "d_nor.csv"]
        for i, m in enumerate(modes):
            name = f"field_{i}_{m.label}.csv"
            write_matrix_csv(run.out / name, m.field, grid.x, grid.y)
            run.artifacts.append(name)
    for i, m in enumerate(modes):
        print(f"{i}  {m.label:10s} n_eff={m.n_eff:.6f}  A_eff={m.effective_area:.4f} um^2")


def cmd_pm_sweep(run: Run, args):
    cfg = run.config
    sw = cfg.sweep
    widths = np.linspace(sw.width_min, sw.width_max, sw.width_count)
    etches = np.linspace(sw.etch_min, sw.etch_max, sw.etch_count)
    with run.timed("sweep"):
        rows = landscape_sweep(widths, etches, cfg.solver.signal_wavelength, cfg.geometry.build(),
                               cfg.solver.spacing, run.cache, run.threads)
    run.table("pm_sweep.csv", ["top_width_um", "etch_depth_nm", "n_TE00_signal", "n_TE01_pump"], rows)
    if args.solve:
        with run.timed("mpm_width"):
            w_star, res = find_mpm_width(cfg.geometry.etch_depth, cfg.solver.signal_wavelength,
                                         (sw.width_min, sw.width_max), cfg.geometry.build(), cfg.solver.spacing,
                                         xtol=sw.width_xtol, cache=run.cache)
        run.results.update(mpm_width_um=w_star, delta_k_rad_per_um=res.delta_k)
        print(f"MPM width {w_star:.5f} um at h1={cfg.geometry.etch_depth} nm, dk={res.delta_k:.3g} rad/um")


def cmd_pm_curve(run: Run, args):
    cfg = run.config
    sw = cfg.sweep
    widths = np.linspace(sw.width_min, sw.width_max, sw.width_count)
    with run.timed("curve"):
        rows = mpm_curve(widths, cfg.geometry.etch_depth, (sw.pump_min, sw.pump_max), cfg.geometry.build(),
                         cfg.solver.spacing, run.cache, run.threads)
    run.table("pm_curve.csv", ["top_width_um", "pump_wavelength_um"], rows)


def _design_modes(run: Run):
    cfg = run.config
    geom = cfg.geometry.build()
    lam = cfg.solver.signal_wavelength
    with run.timed("mode_solves"):
        sig = find_mode(rasterize(geom, cfg.solver.spacing, lam, cfg.solver.padding), SIGNAL_LABEL,
                        formulation=cfg.solver.formulation)
        pump = find_mode(rasterize(geom, cfg.solver.spacing, lam / 2, cfg.solver.padding), PUMP_LABEL,
                         formulation=cfg.solver.formulation)
    return geom, sig, pump


def cmd_overlap(run: Run, args):
    cfg = run.config
    geom, sig, pump = _design_modes(run)
    single = rasterize(single_layer_variant(geom), cfg.solver.spacing, pump.wavelength, cfg.solver.padding)
    dual = overlap_factor(sig, pump)
    uniform = overlap_factor(sig, pump, single.d_nor)
    ratio = enhancement_ratio(dual.zeta, uniform.zeta)
    rows = [
        (r.variant, r.zeta, r.numerator, r.signal_cubic, r.pump_cubic, overlap_area(r)) for r in (dual, uniform)
    ]
    run.table("overlap.csv", ["variant", "zeta", "numerator", "signal_cubic", "pump_cubic", "overlap_area_um2"],
              rows)
    run.results.update(zeta_dual=dual.zeta, zeta_single=uniform.zeta, enhancement=ratio,
                       n_signal=sig.n_eff, n_pump=pump.n_eff)
    print(f"zeta dual-layer   {dual.zeta:.4f}")
    print(f"zeta single-layer {uniform.zeta:.4f}")
    print(f"enhancement       {ratio:.2f}")


def _read_power_table(path: Path):
    """Rows of (wavelength_nm, P_FH W, P_SH W) from a CSV with a header row."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise IoError(f"cannot parse {path}: {exc}") from exc
    if data.shape[1] != 3:
        raise IoError(f"{path}: expected 3 columns (wavelength_nm, P_FH_W, P_SH_W), got {data.shape[1]}")
    return data


def cmd_shg(run: Run, args):
    if args.table:
        data = _read_power_table(Path(args.table))
        eta = shg_normalized_efficiency_from_measurement(data[:, 2], data[:, 1], fh_loss_db_per_cm=args.fh_loss)
        run.table("shg_measured.csv", ["fh_wavelength_nm", "p_fh_w", "p_sh_w", "efficiency_pct_per_W_cm2"],
                  np.column_stack([data, eta]).tolist())
        k = int(np.argmax(eta))
        run.results.update(peak_measured_efficiency_pct_per_W_cm2=float(eta[k]), peak_fh_wavelength_nm=data[k, 0])
        print(f"measured peak {eta[k]:.1f} %/W/cm^2 at {data[k, 0]:g} nm")
    if args.skip_prediction:
        return
    geom, sig, pump = _design_modes(run)
    ov = overlap_factor(sig, pump)
    eta = predict_shg_efficiency(sig, pump, ov)
    run.table("shg.csv", ["fh_wavelength_nm", "zeta", "overlap_area_um2", "efficiency_pct_per_W_cm2"],
              [(sig.wavelength * 1e3, ov.zeta, overlap_area(ov), eta)])
    run.results.update(predicted_efficiency_pct_per_W_cm2=eta, zeta=ov.zeta)
    print(f"predicted {eta:.1f} %/W/cm^2 at {sig.wavelength * 1e3:g} nm")


def cmd_spdc_sim(run: Run, args):
    cfg = run.config.spdc
    spec = cfg.build()
    with run.timed("simulate"):
        stream = simulate_timetags(spec, threads=run.threads)
    name = "timetags.ttag" if cfg.format == "ttag" else "timetags.csv"
    (write_ttag if cfg.format == "ttag" else write_csv)(stream, run.out / name)
    run.artifacts.append(name)
    counts = stream.counts()
    run.table("singles.csv", ["channel", "counts", "rate_hz"],
              [(k, v, v / stream.duration) for k, v in counts.items()])
    run.results.update(events=len(stream), pair_rate_hz=spec.pair_rate, layout=spec.layout)
    print(f"{len(stream)} events over {stream.duration} s written to {run.out / name}")


def _load_stream(path: Path, layout: str, duration):
    labels = LAYOUTS[layout]
    try:
        if path.suffix == ".csv":
            if duration is None:
                raise ConfigError("--duration is required for CSV time-tag input")
            return read_csv(path, labels, duration)
        return read_ttag(path, labels)
    except ValueError as exc:
        if isinstance(exc, LnmpmError):
            raise
        raise IoError(f"cannot parse {path}: {exc}") from exc
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def cmd_analyze(run: Run, args):
    cfg = run.config.spdc
    stream = _load_stream(Path(args.input), args.layout or cfg.layout, args.duration)
    with run.timed("analyze"):
        report = analyze(stream, cfg.coincidence_window, cfg.histogram_bin, cfg.histogram_span)
    summary = report.as_dict()
    flat = []
    for key, value in summary.items():
        if isinstance(value, dict):
            flat += [(f"{key}.{k}", v) for k, v in value.items()]
        else:
            flat.append((key, value))
    run.table("report.csv", ["quantity", "value"], flat)
    h = report.histogram
    run.table("histogram.csv", ["delay_ps", "counts", "g2"], zip(h.delays.tolist(), h.counts.tolist(), h.g2))
    run.results.update(summary)
    for key, value in flat:
        print(f"{key:34s} {value}")


def _common(parser):
    parser.add_argument("--config", metavar="PATH", help="TOML run configuration")
    parser.add_argument("--seed", type=int, metavar="N", help="RNG seed for spdc-sim (integer)")
    parser.add_argument("--out", metavar="DIR", help="output directory (default: lnmpm-out)")
    parser.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads (count)")
    parser.add_argument("--spacing", type=float, metavar="NM", help="grid spacing in nm (<= 25)")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lnmpm", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"lnmpm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _common(p)
        p.set_defaults(func=func)
        return p

    add("materials", cmd_materials,
        "Tabulate LN (e, o) and silica indices over [sweep] wavelength_min..max (um).")
    p = add("modes", cmd_modes, "Solve guided modes of the configured cross-section.")
    p.add_argument("--wavelength", type=float, metavar="UM", help="free-space wavelength in um")
    p.add_argument("--fields", action="store_true", help="also write permittivity and field CSV matrices")
    p = add("pm-sweep", cmd_pm_sweep,
            "n_eff(TE00, lam_s) and n_eff(TE01, lam_s/2) over the width (um) x etch depth (nm) grid.")
    p.add_argument("--solve", action="store_true", help="also locate the MPM width (um) at the configured h1")
    add("pm-curve", cmd_pm_curve, "MPM pump wavelength (um) versus top width (um) at the configured etch depth.")
    add("overlap", cmd_overlap, "Dual- and single-layer overlap factors and their enhancement ratio.")
    p = add("shg", cmd_shg, "Predicted normalised SHG efficiency (%%/W/cm^2) and measured-table conversion.")
    p.add_argument("--table", metavar="CSV",
                   help="measured powers: header row then wavelength_nm, P_FH (W), P_SH (W) per line")
    p.add_argument("--fh-loss", type=float, metavar="DB_PER_CM",
                   help="FH propagation loss in dB/cm; replaces L by the effective length")
    p.add_argument("--skip-prediction", action="store_true", help="only convert --table, no mode solves")
    add("spdc-sim", cmd_spdc_sim, "Simulate a detector time-tag record (rates Hz, times ps, duration s).")
    p = add("analyze", cmd_analyze, "Singles, coincidences, PGR, CAR and heralded g2 from a time-tag file.")
    p.add_argument("input", metavar="FILE", help="time-tag file (.ttag binary or .csv)")
    p.add_argument("--layout", choices=sorted(LAYOUTS), help="detector layout (default: [spdc] layout)")
    p.add_argument("--duration", type=float, metavar="S", help="record duration in s (CSV input only)")
    return parser


def _error(code: int, exc: Exception, out: Path | None):
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    print(json.dumps(record), file=sys.stderr)
    if out is not None and out.is_dir():
        (out / "error.json").write_text(json.dumps(record, indent=2) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    out = None
    try:
        config = load_config(args.config)
        config = config.override("io", out=args.out)
        config = config.override("spdc", seed=args.seed)
        config = config.override("solver", spacing=args.spacing)
        config = replace(config).validate()
        out = Path(config.io.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoError(f"cannot create output directory {out}: {exc}") from exc
        run = Run(args.command, config, max(1, args.threads))
        with run.timed("total"):
            args.func(run, args)
        run.manifest()
    except ConfigError as exc:
        return _error(EXIT_CONFIG, exc, out)
    except (IoError, OSError) as exc:
        return _error(EXIT_IO, exc, out)
    except (LnmpmError, ValueError) as exc:
        return _error(EXIT_DOMAIN, exc, out)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
