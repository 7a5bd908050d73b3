"""Up-conversion 1550 -> 516.7 nm avec la SH à 775 nm, et photons de bruit."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from app.errors import ConfigError
from app.model_core import FUNDAMENTAL_WAVELENGTH, SH_PUMP_WAVELENGTH, sum_frequency_wavelength
from app.source.pulses import PulseTrainConfig, pump_phase, sample_emission_times
from app.source.spdc import Origin, PairBatch, PairRecord, PhotonRecord

_WAVELENGTH_TOL = 1e-9


@dataclass(frozen=True)
class UpconversionConfig:
    internal_efficiency: float = 0.96
    noise_rate: float = 0.05  # photons de bruit / impulsion
    pump_wavelength: float = SH_PUMP_WAVELENGTH  # nm
    input_wavelength: float = FUNDAMENTAL_WAVELENGTH  # nm

    @property
    def output_wavelength(self) -> float:
        return sum_frequency_wavelength(self.input_wavelength, self.pump_wavelength)

    def violations(self) -> list[str]:
        errs = []
        if not 0.0 <= self.internal_efficiency <= 1.0:
            errs.append("upconversion.internal_efficiency doit être dans [0, 1]")
        if not self.noise_rate >= 0:
            errs.append("upconversion.noise_rate doit être >= 0")
        if not self.pump_wavelength > 0:
            errs.append("upconversion.pump_wavelength doit être > 0")
        if not self.input_wavelength > 0:
            errs.append("upconversion.input_wavelength doit être > 0")
        return errs


class ConversionKind(str, Enum):
    BOTH = "both"
    ONE = "one"
    NONE = "none"


@dataclass(frozen=True)
class UpconversionOutcome:
    kind: ConversionKind
    pair: PairRecord | None = None
    photon: PhotonRecord | None = None


@dataclass
class PhotonBatch:
    """Photons isolés (paires cassées, bruit), en colonnes."""

    pulse_index: np.ndarray  # int64
    t_in_pulse: np.ndarray  # ps
    phase: np.ndarray  # rad
    origin: Origin | np.ndarray  # origine commune, ou une valeur par photon

    def __len__(self) -> int:
        return int(self.pulse_index.size)

    def emission_time(self, train: PulseTrainConfig) -> np.ndarray:
        return self.pulse_index * train.period_ps + self.t_in_pulse

    def records(self, train: PulseTrainConfig, wavelength: float) -> list[PhotonRecord]:
        times = self.emission_time(train).tolist()
        return [
            PhotonRecord(t, wavelength, ph, o) for t, ph, o in zip(times, self.phase.tolist(), self.origins())
        ]

    def origins(self) -> list[Origin]:
        if isinstance(self.origin, Origin):
            return [self.origin] * len(self)
        return [Origin(o) for o in np.asarray(self.origin).tolist()]


def _check_input_wavelength(wavelength: float, cfg: UpconversionConfig):
    if abs(wavelength - cfg.input_wavelength) > _WAVELENGTH_TOL:
        raise ConfigError(
            f"paire à {wavelength} nm : l'étage de conversion attend {cfg.input_wavelength} nm"
        )


# ------------------------------------------------------------------
# Conversion des paires
# ------------------------------------------------------------------
def upconvert_batch(
    pairs: PairBatch, cfg: UpconversionConfig, train: PulseTrainConfig, rng: np.random.Generator
) -> tuple[PairBatch, PhotonBatch]:
    """Retourne (paires converties, photons isolés des paires cassées)."""
    _check_input_wavelength(pairs.wavelength, cfg)
    n = len(pairs)
    hits = rng.random((n, 2)) < cfg.internal_efficiency
    both = hits[:, 0] & hits[:, 1]
    one = hits[:, 0] ^ hits[:, 1]

    # chaque photon gagne la phase de la SH : 2·φ_p(t)
    sh_phase = 2.0 * np.asarray(pump_phase(pairs.t_in_pulse, train), dtype=float)
    converted = pairs.select(both, wavelength=cfg.output_wavelength, extra_phase=2.0 * sh_phase[both])

    broken = PhotonBatch(
        pulse_index=pairs.pulse_index[one],
        t_in_pulse=pairs.t_in_pulse[one],
        phase=pairs.sum_phase[one] / 2.0 + sh_phase[one],
        origin=np.where(hits[one, 0], Origin.SIGNAL.value, Origin.IDLER.value),
    )
    return converted, broken


def upconvert_pair(
    pair: PairRecord, cfg: UpconversionConfig, train: PulseTrainConfig, rng: np.random.Generator
) -> UpconversionOutcome:
    for photon in (pair.signal, pair.idler):
        _check_input_wavelength(photon.wavelength, cfg)
    hits = rng.random(2) < cfg.internal_efficiency
    sh_phase = 2.0 * pump_phase(pair.time_in_pulse(train), train)
    out_wl = cfg.output_wavelength

    if hits[0] and hits[1]:
        signal = replace(pair.signal, wavelength=out_wl, phase=pair.signal.phase + sh_phase)
        idler = replace(pair.idler, wavelength=out_wl, phase=pair.idler.phase + sh_phase)
        return UpconversionOutcome(
            ConversionKind.BOTH,
            pair=replace(pair, signal=signal, idler=idler, sum_phase=pair.sum_phase + 2.0 * sh_phase),
        )
    if hits[0] or hits[1]:
        src = pair.signal if hits[0] else pair.idler
        return UpconversionOutcome(
            ConversionKind.ONE, photon=replace(src, wavelength=out_wl, phase=src.phase + sh_phase)
        )
    return UpconversionOutcome(ConversionKind.NONE)


# ------------------------------------------------------------------
# Bruit d'up-conversion (incohérent, suit l'enveloppe)
# ------------------------------------------------------------------
def noise_batch(
    first_pulse: int, n_pulses: int, cfg: UpconversionConfig, train: PulseTrainConfig, rng: np.random.Generator
) -> PhotonBatch:
    if cfg.noise_rate > 0:
        counts = rng.poisson(cfg.noise_rate, int(n_pulses))
    else:
        counts = np.zeros(int(n_pulses), dtype=np.int64)
    pulse_index = np.repeat(np.arange(first_pulse, first_pulse + n_pulses, dtype=np.int64), counts)
    t = sample_emission_times(train, pulse_index.size, rng)
    phase = rng.uniform(0.0, 2.0 * math.pi, pulse_index.size)
    return PhotonBatch(pulse_index=pulse_index, t_in_pulse=t, phase=phase, origin=Origin.NOISE)


def sample_noise_photons(
    cfg: UpconversionConfig, pulse_index: int, train: PulseTrainConfig, rng: np.random.Generator
) -> list[PhotonRecord]:
    return noise_batch(pulse_index, 1, cfg, train, rng).records(train, cfg.output_wavelength)
