"""Moteurs de simulation par point de ΔL : analytique (espérances) et Monte-Carlo.

Les fonctions de point sont pures (aucun contexte Flask) pour pouvoir tourner
dans des workers joblib ; l'ordre des résultats suit l'ordre des tâches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import norm

from app.analysis.coincidences import coincidences_in_window, effective_window, window_mask
from app.detection.apd import ApdConfig, apply_dead_time, dark_count_batch, detect_batch
from app.detection.tia import CorrelationHistogram, TagStreams, correlate, histogram_layout
from app.interferometer import (
    InterferometerConfig,
    mean_central_probability,
    pulse_averaged_intensity,
    route_pairs,
    route_single_photons,
)
from app.pipeline.scenario import ClassicalBeamConfig, HistogramConfig
from app.rng import stream_rng
from app.source.pulses import PulseTrainConfig, pulse_grid, pump_envelope
from app.source.spdc import SpdcConfig, mean_pairs_per_pulse, sample_pair_batch
from app.upconversion import UpconversionConfig, noise_batch, upconvert_batch

MONTE_CARLO = "monte-carlo"
ANALYTIC = "analytic"
# routage des photons : interféromètre replié, ou un photon de la paire par détecteur
INTERFEROMETER = "interferometer"
DIRECT = "direct"


@dataclass(frozen=True)
class PipelineConfig:
    train: PulseTrainConfig
    spdc: SpdcConfig
    upconversion: UpconversionConfig
    interferometer: InterferometerConfig
    detection: ApdConfig
    histogram: HistogramConfig
    classical: ClassicalBeamConfig
    mode: str = "quantum-pair"
    routing: str = INTERFEROMETER

    def at(self, offset: float) -> InterferometerConfig:
        return self.interferometer.at(self.interferometer.delta_L + offset)


@dataclass(frozen=True)
class PointTask:
    index: int
    offset: float  # nm, ajouté à delta_L
    pulses: int
    seed: int | None = None
    batch_pulses: int = 50_000
    keep_tags: bool = False


@dataclass
class PointResult:
    index: int
    offset: float
    pulses: int
    coincidences: float
    accidentals: float
    singles: tuple[float, float]
    histogram: CorrelationHistogram | None = None
    accidental_histogram: CorrelationHistogram | None = None
    tags: TagStreams | None = field(default=None, repr=False)

    @property
    def net(self) -> float:
        return float(self.coincidences) - float(self.accidentals)


# ------------------------------------------------------------------
# Monte-Carlo
# ------------------------------------------------------------------
def build_streams(detector: np.ndarray, times: np.ndarray, dead_time_ps: float) -> TagStreams:
    """Tri stable par détecteur puis temps mort."""
    out = []
    for d in (1, 2):
        t = np.sort(times[detector == d], kind="stable")
        out.append(t[apply_dead_time(t, dead_time_ps)])
    return TagStreams(out[0], out[1])


def simulate_tags(cfg: PipelineConfig, task: PointTask) -> TagStreams:
    train = cfg.train
    ifm = cfg.at(task.offset)
    period = train.period_ps
    det_parts = [np.zeros(0, dtype=np.int8)]
    time_parts = [np.zeros(0, dtype=np.int64)]

    for b, start in enumerate(range(0, task.pulses, task.batch_pulses)):
        n = min(task.batch_pulses, task.pulses - start)
        rng = stream_rng(task.seed, task.index, b)

        pairs = sample_pair_batch(start, n, cfg.spdc, train, rng)
        converted, broken = upconvert_batch(pairs, cfg.upconversion, train, rng)
        noise = noise_batch(start, n, cfg.upconversion, train, rng)

        pair_arrivals, _ = route_pairs(converted, ifm, train, rng)
        lone = np.concatenate([broken.emission_time(train), noise.emission_time(train)])
        lone_arrivals = route_single_photons(lone, ifm, rng)

        det, tags = detect_batch(np.concatenate([pair_arrivals.times, lone_arrivals.times]), cfg.detection, rng)
        dark_det, dark_tags = dark_count_batch(cfg.detection, start * period, (start + n) * period, rng)
        det_parts += [det, dark_det]
        time_parts += [tags, dark_tags]

    return build_streams(np.concatenate(det_parts), np.concatenate(time_parts), cfg.detection.dead_time_ps)


def simulate_source_tags(cfg: PipelineConfig, task: PointTask) -> TagStreams:
    """Paires SPDC détectées directement : signal sur le détecteur 1, idler sur le 2."""
    train = cfg.train
    period = train.period_ps
    det_parts = [np.zeros(0, dtype=np.int8)]
    time_parts = [np.zeros(0, dtype=np.int64)]

    for b, start in enumerate(range(0, task.pulses, task.batch_pulses)):
        n = min(task.batch_pulses, task.pulses - start)
        rng = stream_rng(task.seed, task.index, b)

        pairs = sample_pair_batch(start, n, cfg.spdc, train, rng)
        t = pairs.emission_time(train)
        routed = np.repeat(np.array([1, 2], dtype=np.int8), len(pairs))
        det, tags = detect_batch(np.concatenate([t, t]), cfg.detection, rng, detector=routed)
        dark_det, dark_tags = dark_count_batch(cfg.detection, start * period, (start + n) * period, rng)
        det_parts += [det, dark_det]
        time_parts += [tags, dark_tags]

    return build_streams(np.concatenate(det_parts), np.concatenate(time_parts), cfg.detection.dead_time_ps)


def simulate_point(cfg: PipelineConfig, task: PointTask) -> PointResult:
    if cfg.mode == "classical-beam":
        rng = stream_rng(task.seed, task.index, 0)
        mean = task.pulses * cfg.classical.mean_counts_per_pulse * pulse_averaged_intensity(
            cfg.interferometer.delta_L + task.offset, cfg.train, cfg.interferometer
        )
        counts = int(rng.poisson(mean))
        return PointResult(task.index, task.offset, task.pulses, counts, 0, (counts, 0))

    h = cfg.histogram
    streams = simulate_source_tags(cfg, task) if cfg.routing == DIRECT else simulate_tags(cfg, task)
    hist = correlate(streams, h.window_span, h.bin_width)
    acc = correlate(streams, h.window_span, h.bin_width, shift=cfg.train.period_ps)
    return PointResult(
        index=task.index,
        offset=task.offset,
        pulses=task.pulses,
        coincidences=coincidences_in_window(hist, h.half_window),
        accidentals=coincidences_in_window(acc, h.half_window),
        singles=streams.singles,
        histogram=hist,
        accidental_histogram=acc,
        tags=streams if task.keep_tags else None,
    )


# ------------------------------------------------------------------
# Analytique
# ------------------------------------------------------------------
def _gauss_mass(lo: np.ndarray, hi: np.ndarray, center: float, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return ((lo <= center) & (center < hi)).astype(float)
    return norm.cdf((hi - center) / sigma) - norm.cdf((lo - center) / sigma)


def density_overlap(train: PulseTrainConfig) -> float:
    """∫ρ² (1/ps), ρ = e²/∫e² : recouvrement de deux clics indépendants."""
    t = pulse_grid(train)
    e2 = np.asarray(pump_envelope(t, train), dtype=float) ** 2
    dt = t[1] - t[0]
    rho = e2 / (e2.sum() * dt)
    return float((rho**2).sum() * dt)


def window_fractions(cfg: PipelineConfig, ifm: InterferometerConfig | None = None) -> tuple[float, float, float]:
    """(F_central, F_side, largeur effective L en ps) de la fenêtre binée."""
    h = cfg.histogram
    ifm = ifm or cfg.interferometer
    origin, nbins = histogram_layout(h.window_span, h.bin_width)
    layout = CorrelationHistogram(h.bin_width, origin, np.zeros(nbins, dtype=np.int64))
    lo, hi = effective_window(layout, h.half_window)
    s = np.sqrt(2.0) * cfg.detection.jitter_sigma
    lo_a, hi_a = np.array([lo]), np.array([hi])
    f_c = float(_gauss_mass(lo_a, hi_a, 0.0, s)[0])
    dt = ifm.delay_ps
    f_s = 0.5 * float(_gauss_mass(lo_a, hi_a, dt, s)[0] + _gauss_mass(lo_a, hi_a, -dt, s)[0])
    return f_c, f_s, hi - lo


def unit_qe_signal_per_pulse(cfg: PipelineConfig, ifm: InterferometerConfig | None = None) -> float:
    """Coïncidences vraies par impulsion dans la fenêtre, moyennées sur une frange, à qe = 1."""
    ifm = ifm or cfg.interferometer
    f_c, f_s, _ = window_fractions(cfg, ifm)
    mu = mean_pairs_per_pulse(cfg.spdc, cfg.train)
    eta = cfg.upconversion.internal_efficiency
    q = ifm.arm_weight
    return mu * eta * eta * q * q * (f_c + f_s)


def expected_rates(cfg: PipelineConfig, offset: float) -> dict:
    """Espérances par impulsion au point ΔL = delta_L + offset."""
    ifm = cfg.at(offset)
    mu = mean_pairs_per_pulse(cfg.spdc, cfg.train)
    eta = cfg.upconversion.internal_efficiency
    qe = cfg.detection.quantum_efficiency
    q = ifm.arm_weight
    p_central = mean_central_probability(ifm.delta_L, cfg.train, ifm)

    clicks = qe * q * (2.0 * mu * eta + cfg.upconversion.noise_rate)  # par détecteur
    dark = cfg.detection.dark_rate * 1e-12  # par ps
    period = cfg.train.period_ps
    background_density = clicks**2 * density_overlap(cfg.train) + 2.0 * clicks * dark + dark**2 * period
    return {
        "central_weight": mu * eta**2 * qe**2 * 0.5 * p_central,
        "side_weight": mu * eta**2 * qe**2 * 0.5 * q * q,  # par pic latéral
        "background_density": background_density,  # coïncidences / ps / impulsion
        "singles": clicks + dark * period,
        "delay_ps": ifm.delay_ps,
    }


def expected_histogram(cfg: PipelineConfig, offset: float, pulses: int) -> tuple[CorrelationHistogram, CorrelationHistogram]:
    h = cfg.histogram
    rates = expected_rates(cfg, offset)
    origin, nbins = histogram_layout(h.window_span, h.bin_width)
    centers = origin + h.bin_width * (np.arange(nbins) + 0.5)
    lo, hi = centers - 0.5 * h.bin_width, centers + 0.5 * h.bin_width
    s = np.sqrt(2.0) * cfg.detection.jitter_sigma
    dt = rates["delay_ps"]

    peaks = rates["central_weight"] * _gauss_mass(lo, hi, 0.0, s)
    peaks = peaks + rates["side_weight"] * (_gauss_mass(lo, hi, dt, s) + _gauss_mass(lo, hi, -dt, s))
    background = np.full(nbins, rates["background_density"] * h.bin_width)
    return (
        CorrelationHistogram(h.bin_width, origin, pulses * (peaks + background)),
        CorrelationHistogram(h.bin_width, origin, pulses * background),
    )


def expected_source_point(cfg: PipelineConfig, task: PointTask) -> PointResult:
    """Espérances du routage direct : un seul pic en 0, fond des paires multiples et du noir."""
    h = cfg.histogram
    mu = mean_pairs_per_pulse(cfg.spdc, cfg.train)
    qe = cfg.detection.quantum_efficiency
    dark = cfg.detection.dark_rate * 1e-12
    period = cfg.train.period_ps
    clicks = mu * qe  # par détecteur
    density = clicks**2 * density_overlap(cfg.train) + 2.0 * clicks * dark + dark**2 * period

    origin, nbins = histogram_layout(h.window_span, h.bin_width)
    centers = origin + h.bin_width * (np.arange(nbins) + 0.5)
    s = np.sqrt(2.0) * cfg.detection.jitter_sigma
    peak = mu * qe * qe * _gauss_mass(centers - 0.5 * h.bin_width, centers + 0.5 * h.bin_width, 0.0, s)
    background = np.full(nbins, density * h.bin_width)
    hist = CorrelationHistogram(h.bin_width, origin, task.pulses * (peak + background))
    acc = CorrelationHistogram(h.bin_width, origin, task.pulses * background)
    mask = window_mask(hist, h.half_window)
    singles = task.pulses * (clicks + dark * period)
    return PointResult(
        index=task.index,
        offset=task.offset,
        pulses=task.pulses,
        coincidences=float(hist.counts[mask].sum()),
        accidentals=float(acc.counts[mask].sum()),
        singles=(singles, singles),
        histogram=hist,
        accidental_histogram=acc,
    )


def expected_point(cfg: PipelineConfig, task: PointTask) -> PointResult:
    if cfg.routing == DIRECT:
        return expected_source_point(cfg, task)
    if cfg.mode == "classical-beam":
        counts = task.pulses * cfg.classical.mean_counts_per_pulse * pulse_averaged_intensity(
            cfg.interferometer.delta_L + task.offset, cfg.train, cfg.interferometer
        )
        return PointResult(task.index, task.offset, task.pulses, counts, 0.0, (counts, 0.0))

    h = cfg.histogram
    hist, acc = expected_histogram(cfg, task.offset, task.pulses)
    mask = window_mask(hist, h.half_window)
    singles = task.pulses * expected_rates(cfg, task.offset)["singles"]
    return PointResult(
        index=task.index,
        offset=task.offset,
        pulses=task.pulses,
        coincidences=float(hist.counts[mask].sum()),
        accidentals=float(acc.counts[mask].sum()),
        singles=(singles, singles),
        histogram=hist,
        accidental_histogram=acc,
    )


# ------------------------------------------------------------------
# Exécution des points
# ------------------------------------------------------------------
def run_points(cfg: PipelineConfig, tasks: list[PointTask], engine: str, jobs: int = 1) -> list[PointResult]:
    worker = simulate_point if engine == MONTE_CARLO else expected_point
    if jobs <= 1 or len(tasks) <= 1:
        return [worker(cfg, t) for t in tasks]
    return Parallel(n_jobs=jobs)(delayed(worker)(cfg, t) for t in tasks)
