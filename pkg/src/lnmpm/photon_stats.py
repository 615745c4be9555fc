"""Monte Carlo of the SPDC source plus detection chain, and the coincidence estimators.

Pairs are emitted as a homogeneous Poisson process. Each photon of a pair
is routed independently: through a 50:50 fibre splitter where the layout
has one, then detected with its channel efficiency. Every (photon 1
outcome, photon 2 outcome) combination of a Poisson process thinned this
way is itself an independent Poisson process, so the simulator draws the
detected categories directly instead of generating undetected pairs.

Layouts
-------
``direct``          signal -> ``s``, idler -> ``i``
``two_detector``    both photons -> one 50:50 splitter -> ``a`` / ``b``
``three_detector``  signal -> ``s``; idler -> 50:50 splitter -> ``i1`` / ``i2``
"""
from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import erf, erfinv

from .errors import InsufficientFarDelayStatistics, RegimeViolation, ZeroCoincidence, ZeroHeraldedCoincidence
from .nonlinear_coupling import REFERENCE_PGR_SLOPE
from .timetags import PS_PER_S, TimeTagStream

__all__ = [
    "LAYOUTS",
    "SourceDetectionSpec",
    "simulate_timetags",
    "expected_events",
    "Estimate",
    "CoincidenceHistogram",
    "HeraldedG2",
    "CoincidenceReport",
    "AnalyticStatistics",
    "pair_delays",
    "coincidence_histogram",
    "count_coincidences",
    "count_triples",
    "estimate_pgr",
    "compute_car",
    "heralded_g2",
    "analyze",
    "analytic_statistics",
    "pump_to_pair_rate",
    "reference_link_budget",
    "calibrate_jitter",
    "REFERENCE_WINDOW_PS",
    "REFERENCE_CHANNEL_EFFICIENCY",
    "REFERENCE_JITTER_PS",
    "REFERENCE_DARK_RATE",
]

REFERENCE_WINDOW_PS = 1000.0

LAYOUTS = {
    "direct": ("s", "i"),
    "two_detector": ("a", "b"),
    "three_detector": ("s", "i1", "i2"),
}

# The raw heralded rate (true plus accidental, 1 ns window) of 104.8 kHz at 1.97 uW
# on chip fixes eta_s * eta_i; split evenly.
_R_HSPS = REFERENCE_PGR_SLOPE * 1.97e-3
REFERENCE_CHANNEL_EFFICIENCY = math.sqrt(104.8e3 / (_R_HSPS * (1 + _R_HSPS * REFERENCE_WINDOW_PS / 1e12)))
# Per-detector Gaussian jitter reproducing CAR = 58298 at PGR = 61 kHz with 100 ps bins
# (see calibrate_jitter); not a reported detector figure.
REFERENCE_JITTER_PS = 32.86
# Assumed SNSPD dark count rate, Hz.
REFERENCE_DARK_RATE = 10.0


@dataclass(frozen=True)
class SourceDetectionSpec:
    """Source and detection-chain parameters.

    Rates are in Hz, durations in s, times (jitter, window, bin, dead time)
    in ps. Per-channel tuples follow ``LAYOUTS[layout]``; a scalar applies
    to every channel.
    """

    pair_rate: float
    duration: float
    layout: str = "two_detector"
    efficiencies: tuple | float = 1.0
    dark_rates: tuple | float = 0.0
    jitter_sigma: tuple | float = 0.0
    coincidence_window: float = REFERENCE_WINDOW_PS
    histogram_bin: float = 100.0
    dead_time: float = 0.0
    seed: int = 0
    block_duration: float = 1.0

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise ValueError(f"unknown layout {self.layout!r}; choose from {sorted(LAYOUTS)}")
        n = len(LAYOUTS[self.layout])
        for name in ("efficiencies", "dark_rates", "jitter_sigma"):
            value = getattr(self, name)
            if np.ndim(value) == 0:
                value = (value,) * n
            value = tuple(float(v) for v in value)
            if len(value) != n:
                raise ValueError(f"{name} needs {n} entries for layout {self.layout}")
            object.__setattr__(self, name, value)
        if self.pair_rate < 0 or any(d < 0 for d in self.dark_rates):
            raise ValueError("rates must be non-negative")
        if any(not 0 <= e <= 1 for e in self.efficiencies):
            raise ValueError("efficiencies must lie in [0, 1]")
        if any(j < 0 for j in self.jitter_sigma) or self.dead_time < 0:
            raise ValueError("jitter and dead time must be non-negative")
        if not self.coincidence_window >= self.histogram_bin > 0:
            raise ValueError("need coincidence_window >= histogram_bin > 0")
        if self.duration <= 0 or self.block_duration <= 0:
            raise ValueError("durations must be positive")

    @property
    def labels(self) -> tuple:
        return LAYOUTS[self.layout]

    def with_(self, **changes) -> "SourceDetectionSpec":
        data = asdict(self)
        data.update(changes)
        return SourceDetectionSpec(**data)


def _photon_routes(spec):
    """Detection outcomes ``(channel or None, probability)`` for each photon of a pair."""
    eff = spec.efficiencies
    if spec.layout == "direct":
        first = [(0, eff[0])]
        second = [(1, eff[1])]
    elif spec.layout == "two_detector":
        first = second = [(0, 0.5 * eff[0]), (1, 0.5 * eff[1])]
    else:
        first = [(0, eff[0])]
        second = [(1, 0.5 * eff[1]), (2, 0.5 * eff[2])]

    def with_loss(routes):
        return routes + [(None, 1.0 - sum(p for _, p in routes))]

    return with_loss(first), with_loss(second)


def _simulate_block(spec, start_ps, length_ps, seed_seq):
    rng = np.random.default_rng(seed_seq)
    first, second = _photon_routes(spec)
    rate_per_ps = spec.pair_rate / PS_PER_S
    times, chans = [], []
    for (c1, p1), (c2, p2) in itertools.product(first, second):
        if c1 is None and c2 is None:
            continue
        n = rng.poisson(rate_per_ps * length_ps * p1 * p2)
        emitted = start_ps + rng.random(n) * length_ps
        for c in (c1, c2):
            if c is None:
                continue
            times.append(emitted + rng.normal(0.0, 1.0, n) * spec.jitter_sigma[c])
            chans.append(np.full(n, c, dtype=np.uint8))
    for c, dark in enumerate(spec.dark_rates):
        n = rng.poisson(dark / PS_PER_S * length_ps)
        times.append(start_ps + rng.random(n) * length_ps)
        chans.append(np.full(n, c, dtype=np.uint8))
    return np.concatenate(times), np.concatenate(chans)


def _apply_dead_time(times, chans, dead_time, n_channels):
    keep = np.ones(times.size, dtype=bool)
    for c in range(n_channels):
        idx = np.flatnonzero(chans == c)
        last = -np.inf
        for j in idx:
            if times[j] - last < dead_time:
                keep[j] = False
            else:
                last = times[j]
    return times[keep], chans[keep]


# Whole-record cap; one event costs ~30 bytes while the stream is assembled.
MAX_EVENTS = 200_000_000


def expected_events(spec: SourceDetectionSpec) -> float:
    """Mean number of detection events in the record of ``spec``."""
    first, second = _photon_routes(spec)
    detected = sum(p for c, p in first if c is not None) + sum(p for c, p in second if c is not None)
    return (spec.pair_rate * detected + sum(spec.dark_rates)) * spec.duration


def simulate_timetags(spec: SourceDetectionSpec, threads: int = 1) -> TimeTagStream:
    """Synthesize the detector record for ``spec``.

    The run is cut into blocks of ``spec.block_duration`` with seeds spawned
    from ``spec.seed``, so the output depends only on ``spec`` and not on the
    number of threads.

    Raises
    ------
    ValueError
        If the record would hold more than ``MAX_EVENTS`` events on average.
    """
    n_expected = expected_events(spec)
    if n_expected > MAX_EVENTS:
        raise ValueError(f"about {n_expected:.3g} events expected, above the {MAX_EVENTS:.0e} limit; "
                         "shorten the duration or lower the rates")
    total_ps = spec.duration * PS_PER_S
    n_blocks = max(1, math.ceil(spec.duration / spec.block_duration - 1e-12))
    block_ps = total_ps / n_blocks
    seeds = np.random.SeedSequence(spec.seed).spawn(n_blocks)
    jobs = [(spec, k * block_ps, block_ps, seeds[k]) for k in range(n_blocks)]
    if threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: _simulate_block(*job), jobs))
    else:
        parts = [_simulate_block(*job) for job in jobs]
    times = np.concatenate([p[0] for p in parts])
    chans = np.concatenate([p[1] for p in parts])
    ts = np.rint(times).astype(np.int64)
    inside = (ts >= 0) & (ts < int(round(total_ps)))
    ts, chans = ts[inside], chans[inside]
    order = np.lexsort((chans, ts))
    ts, chans = ts[order], chans[order]
    if spec.dead_time > 0:
        ts, chans = _apply_dead_time(ts, chans, spec.dead_time, len(spec.labels))
    return TimeTagStream(channels=chans, timestamps=ts, duration=spec.duration, labels=spec.labels)


@dataclass(frozen=True)
class Estimate:
    value: float
    sigma: float

    def __iter__(self):
        return iter((self.value, self.sigma))


def pair_delays(ta: np.ndarray, tb: np.ndarray, reach: float) -> np.ndarray:
    """All ``tb - ta`` with ``|tb - ta| <= reach`` for sorted timestamp arrays.

    A sliding window over ``tb`` (located with ``searchsorted``) visits each
    ``ta`` once.
    """
    ta = np.asarray(ta)
    tb = np.asarray(tb)
    lo = np.searchsorted(tb, ta - reach, side="left")
    hi = np.searchsorted(tb, ta + reach, side="right")
    n = hi - lo
    total = int(n.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    owner = np.repeat(np.arange(ta.size), n)
    offset = np.arange(total) - np.repeat(np.cumsum(n) - n, n)
    return tb[lo[owner] + offset] - ta[owner]


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    delays: np.ndarray  # bin centres, ps
    counts: np.ndarray
    g2: np.ndarray
    bin: float
    span: float
    far_mean: float
    far_total: int
    far_bins: int


def coincidence_histogram(stream: TimeTagStream, ch_a, ch_b, bin: float = 100.0, span: float | None = None,
                          far_fraction: float = 0.8) -> CoincidenceHistogram:
    """Histogram of ``t_b - t_a`` over ``[-span, span]`` normalised by the far-delay mean.

    Bins are centred on multiples of ``bin``. Bins with ``|t| >= far_fraction *
    span`` estimate the accidental level ``C_si(inf)``. Fewer than 100 counts
    there triggers :class:`InsufficientFarDelayStatistics` (a warning; the
    histogram is still returned).
    """
    if span is None:
        span = 100 * bin
    half_bins = int(round(span / bin))
    if half_bins < 50:
        raise ValueError("span must cover at least 50 bins")
    span = half_bins * bin
    edges = (np.arange(-half_bins, half_bins + 2) - 0.5) * bin
    delays = pair_delays(stream.times(ch_a), stream.times(ch_b), (half_bins + 0.5) * bin)
    counts, _ = np.histogram(delays, bins=edges)
    centres = np.arange(-half_bins, half_bins + 1) * bin
    far = np.abs(centres) >= far_fraction * span
    far_total = int(counts[far].sum())
    far_mean = far_total / int(far.sum())
    if far_total < 100:
        warnings.warn(
            f"only {far_total} counts in the far-delay region; g2 normalisation is unreliable",
            InsufficientFarDelayStatistics,
            stacklevel=2,
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        g2 = counts / far_mean if far_mean > 0 else np.full(counts.shape, np.nan)
    return CoincidenceHistogram(centres, counts, g2, float(bin), float(span), far_mean, far_total, int(far.sum()))


def compute_car(histogram) -> Estimate:
    """``max(g2) - 1``; sigma from Poisson counts when a histogram object is given."""
    if isinstance(histogram, CoincidenceHistogram):
        if np.all(np.isnan(histogram.g2)):
            return Estimate(float("nan"), float("nan"))
        k = int(np.nanargmax(histogram.g2))
        peak = histogram.g2[k]
        n_peak = histogram.counts[k]
        rel = math.sqrt(1 / n_peak + 1 / histogram.far_total) if n_peak > 0 and histogram.far_total > 0 else math.inf
        return Estimate(float(peak - 1), float(peak * rel))
    g2 = np.asarray(histogram, dtype=float)
    if np.all(np.isnan(g2)):
        return Estimate(float("nan"), float("nan"))
    return Estimate(float(np.nanmax(g2) - 1), float("nan"))


def count_coincidences(stream: TimeTagStream, ch_a, ch_b, window: float = REFERENCE_WINDOW_PS,
                       delay: float = 0.0) -> int:
    """Number of (a, b) event pairs with ``|t_b - t_a - delay| <= window / 2``."""
    ta = stream.times(ch_a) + delay
    tb = stream.times(ch_b)
    lo = np.searchsorted(tb, ta - window / 2, side="left")
    hi = np.searchsorted(tb, ta + window / 2, side="right")
    return int((hi - lo).sum())


def count_triples(stream: TimeTagStream, herald, ch_1, ch_2, window: float = REFERENCE_WINDOW_PS) -> int:
    """Herald events with at least one event on each of ``ch_1`` and ``ch_2`` within the window."""
    th = stream.times(herald)
    hit = np.ones(th.size, dtype=bool)
    for ch in (ch_1, ch_2):
        t = stream.times(ch)
        lo = np.searchsorted(t, th - window / 2, side="left")
        hi = np.searchsorted(t, th + window / 2, side="right")
        hit &= hi > lo
    return int(hit.sum())


def estimate_pgr(c_s: float, c_i: float, c_si: float, duration: float = 1.0,
                 splitter_factor: float = 2.0) -> Estimate:
    """Pair generation rate ``C_s C_i / (2 C_si)`` from rates in Hz.

    ``splitter_factor`` is the 2 contributed by the 50:50 splitter that
    separates the photons; use 1 when signal and idler are routed
    deterministically. ``duration`` (s) converts rates to the raw counts
    used for the Poisson sigma.
    """
    if c_si <= 0:
        raise ZeroCoincidence("no coincidences; PGR is undefined")
    value = c_s * c_i / (splitter_factor * c_si)
    n = [c * duration for c in (c_s, c_i, c_si)]
    rel = math.sqrt(sum(1 / k for k in n)) if all(k > 0 for k in n) else math.inf
    return Estimate(value, value * rel)


@dataclass(frozen=True)
class HeraldedG2:
    g2: float
    sigma: float
    g2_conventional: float
    sigma_conventional: float
    heralded_rate: float


def heralded_g2(c_s: float, c_si1: float, c_si2: float, c_si1i2: float, duration: float = 1.0) -> HeraldedG2:
    """Heralded autocorrelation ``C_si1i2 C_s / (2 C_si1 C_si2)``.

    The usual form without the 2 is returned alongside as
    ``g2_conventional``; the raw heralded rate is ``C_si1 + C_si2``.
    """
    if c_si1 <= 0 or c_si2 <= 0:
        raise ZeroHeraldedCoincidence("a heralded coincidence rate is zero")
    conventional = c_si1i2 * c_s / (c_si1 * c_si2)
    counts = [c * duration for c in (c_si1i2, c_s, c_si1, c_si2)]
    rel = math.sqrt(sum(1 / k for k in counts if k > 0))
    if counts[0] == 0:
        # no triples: sigma from a single-count upper scale
        sigma_conv = c_s / (c_si1 * c_si2) / duration
    else:
        sigma_conv = conventional * rel
    return HeraldedG2(conventional / 2, sigma_conv / 2, conventional, sigma_conv, c_si1 + c_si2)


@dataclass(frozen=True, eq=False)
class CoincidenceReport:
    layout: str
    duration: float
    singles: dict
    coincidences: dict
    triples: float
    pgr: Estimate
    car: Estimate
    g2: HeraldedG2 | None
    heralded_rate: float
    histogram: CoincidenceHistogram = field(repr=False)

    def as_dict(self) -> dict:
        out = {
            "layout": self.layout,
            "duration_s": self.duration,
            "singles_hz": self.singles,
            "coincidences_hz": self.coincidences,
            "triples_hz": self.triples,
            "pgr_hz": self.pgr.value,
            "pgr_sigma_hz": self.pgr.sigma,
            "car": self.car.value,
            "car_sigma": self.car.sigma,
            "heralded_rate_hz": self.heralded_rate,
        }
        if self.g2 is not None:
            out.update(
                g2_heralded=self.g2.g2,
                g2_heralded_sigma=self.g2.sigma,
                g2_heralded_conventional=self.g2.g2_conventional,
                g2_heralded_conventional_sigma=self.g2.sigma_conventional,
            )
        return out


def _layout_of(labels):
    for name, chans in LAYOUTS.items():
        if tuple(labels) == chans:
            return name
    raise ValueError(f"labels {labels} match no known layout")


def analyze(stream: TimeTagStream, window: float = REFERENCE_WINDOW_PS, bin: float = 100.0,
            span: float = 1.0e6) -> CoincidenceReport:
    """Singles, coincidences, PGR, CAR and (three detectors) heralded g2 for a record.

    ``window``, ``bin`` and ``span`` are in ps. The CAR histogram is taken
    between the first two channels (``s`` and ``i1`` with three detectors).
    """
    layout = _layout_of(stream.labels)
    T = stream.duration
    singles = stream.rates()
    labels = stream.labels
    coinc = {}
    g2 = None
    triples = 0.0
    if layout == "three_detector":
        s, i1, i2 = labels
        coinc[f"{s}-{i1}"] = count_coincidences(stream, s, i1, window) / T
        coinc[f"{s}-{i2}"] = count_coincidences(stream, s, i2, window) / T
        triples = count_triples(stream, s, i1, i2, window) / T
        c_si = coinc[f"{s}-{i1}"] + coinc[f"{s}-{i2}"]
        pgr = estimate_pgr(singles[s], singles[i1] + singles[i2], c_si, T, splitter_factor=1.0)
        if coinc[f"{s}-{i1}"] > 0 and coinc[f"{s}-{i2}"] > 0:
            g2 = heralded_g2(singles[s], coinc[f"{s}-{i1}"], coinc[f"{s}-{i2}"], triples, T)
        heralded = c_si
        hist = coincidence_histogram(stream, s, i1, bin, span)
    else:
        a, b = labels
        coinc[f"{a}-{b}"] = count_coincidences(stream, a, b, window) / T
        factor = 2.0 if layout == "two_detector" else 1.0
        pgr = estimate_pgr(singles[a], singles[b], coinc[f"{a}-{b}"], T, splitter_factor=factor)
        heralded = coinc[f"{a}-{b}"]
        hist = coincidence_histogram(stream, a, b, bin, span)
    return CoincidenceReport(layout, T, singles, coinc, triples, pgr, compute_car(hist), g2, heralded, hist)


@dataclass(frozen=True)
class AnalyticStatistics:
    singles: dict
    true_coincidences: dict
    accidentals: dict
    car: float
    peak_bin_car: float
    pgr_estimate: float
    triples: float = float("nan")
    g2_heralded: float = float("nan")
    g2_heralded_conventional: float = float("nan")


def analytic_statistics(spec: SourceDetectionSpec) -> AnalyticStatistics:
    """Leading-order rates for ``R tau << 1``.

    Singles are detected pair photons plus darks; accidentals in a window
    ``tau`` are ``C_a C_b tau``; CAR is true over accidental coincidences.
    ``peak_bin_car`` is the same ratio for one histogram bin, with the
    fraction of true events that Gaussian jitter leaves in the central bin.

    Raises
    ------
    RegimeViolation
        If ``pair_rate * coincidence_window > 0.1``.
    """
    R = spec.pair_rate
    tau = spec.coincidence_window / PS_PER_S
    if R * tau > 0.1:
        raise RegimeViolation(f"R*tau = {R * tau:.3g} exceeds 0.1")
    eff, dark, labels = spec.efficiencies, spec.dark_rates, spec.labels
    bin_s = spec.histogram_bin / PS_PER_S

    def peak_fraction(ja, jb):
        sig = math.hypot(ja, jb)
        return 1.0 if sig == 0 else float(erf(spec.histogram_bin / 2 / (sig * math.sqrt(2))))

    if spec.layout == "three_detector":
        s, i1, i2 = labels
        S = {s: eff[0] * R + dark[0], i1: 0.5 * eff[1] * R + dark[1], i2: 0.5 * eff[2] * R + dark[2]}
        true = {f"{s}-{i1}": 0.5 * R * eff[0] * eff[1], f"{s}-{i2}": 0.5 * R * eff[0] * eff[2]}
        acc = {f"{s}-{i1}": S[s] * S[i1] * tau, f"{s}-{i2}": S[s] * S[i2] * tau}
        t1, t2 = true[f"{s}-{i1}"], true[f"{s}-{i2}"]
        triples = t1 * S[i2] * tau + t2 * S[i1] * tau + (S[s] - t1 - t2) * S[i1] * S[i2] * tau**2
        c1, c2 = t1 + acc[f"{s}-{i1}"], t2 + acc[f"{s}-{i2}"]
        g2c = triples * S[s] / (c1 * c2) if c1 > 0 and c2 > 0 else float("nan")
        key = f"{s}-{i1}"
        f = peak_fraction(spec.jitter_sigma[0], spec.jitter_sigma[1])
        car = t1 / acc[key] if acc[key] > 0 else math.inf
        car_bin = f * t1 / (S[s] * S[i1] * bin_s) if S[s] * S[i1] > 0 else math.inf
        pgr = S[s] * (S[i1] + S[i2]) / (c1 + c2) if c1 + c2 > 0 else float("nan")
        return AnalyticStatistics(S, true, acc, car, car_bin, pgr, triples, g2c / 2, g2c)

    a, b = labels
    if spec.layout == "two_detector":
        S = {a: eff[0] * R + dark[0], b: eff[1] * R + dark[1]}
        t = 0.5 * R * eff[0] * eff[1]
        factor = 2.0
    else:
        S = {a: eff[0] * R + dark[0], b: eff[1] * R + dark[1]}
        t = R * eff[0] * eff[1]
        factor = 1.0
    key = f"{a}-{b}"
    acc = S[a] * S[b] * tau
    f = peak_fraction(*spec.jitter_sigma)
    car = t / acc if acc > 0 else math.inf
    car_bin = f * t / (S[a] * S[b] * bin_s) if S[a] * S[b] > 0 else math.inf
    pgr = S[a] * S[b] / (factor * (t + acc)) if t + acc > 0 else float("nan")
    return AnalyticStatistics(S, {key: t}, {key: acc}, car, car_bin, pgr)


def pump_to_pair_rate(pump_mw: float, slope: float = REFERENCE_PGR_SLOPE) -> float:
    """On-chip pair rate (Hz) for ``pump_mw`` coupled into TE01."""
    return slope * pump_mw


def reference_link_budget(pair_rate: float, duration: float, layout: str = "two_detector", seed: int = 0,
                      **overrides) -> SourceDetectionSpec:
    """Detection chain calibrated to the reported heralded rates and CAR."""
    n = len(LAYOUTS[layout])
    params = dict(
        pair_rate=pair_rate,
        duration=duration,
        layout=layout,
        efficiencies=(REFERENCE_CHANNEL_EFFICIENCY,) * n,
        dark_rates=(REFERENCE_DARK_RATE,) * n,
        jitter_sigma=(REFERENCE_JITTER_PS,) * n,
        coincidence_window=REFERENCE_WINDOW_PS,
        histogram_bin=100.0,
        seed=seed,
    )
    params.update(overrides)
    return SourceDetectionSpec(**params)


def calibrate_jitter(target_car: float, pair_rate: float, efficiency: float = REFERENCE_CHANNEL_EFFICIENCY,
                     dark_rate: float = REFERENCE_DARK_RATE, histogram_bin: float = 100.0) -> float:
    """Per-detector jitter (ps) giving ``target_car`` in the two-detector histogram."""
    singles = efficiency * pair_rate + dark_rate
    true = 0.5 * pair_rate * efficiency**2
    fraction = target_car * singles**2 * histogram_bin / PS_PER_S / true
    if not 0 < fraction < 1:
        raise ValueError(f"target CAR needs a central-bin fraction of {fraction:.3g}, outside (0, 1)")
    combined = histogram_bin / 2 / (math.sqrt(2) * float(erfinv(fraction)))
    return combined / math.sqrt(2)
