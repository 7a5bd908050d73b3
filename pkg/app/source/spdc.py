"""Génération SPDC : paires dégénérées à 1550 nm, Poisson par impulsion."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from app.model_core import FUNDAMENTAL_WAVELENGTH
from app.source.pulses import PulseTrainConfig, pump_phase, sample_emission_times


class Origin(str, Enum):
    SIGNAL = "signal"
    IDLER = "idler"
    NOISE = "noise"
    DARK = "dark"


@dataclass(frozen=True)
class SpdcConfig:
    pump_power: float = 9.0  # mW
    pair_yield: float = 4.0e4  # paires / (mW·s)
    signal_wavelength: float = FUNDAMENTAL_WAVELENGTH  # nm
    single_photon_coherence_time: float = 1.0  # ps (τ₁)

    def violations(self) -> list[str]:
        errs = []
        if not self.pair_yield > 0:
            errs.append("spdc.pair_yield doit être > 0")
        if not self.pump_power >= 0:
            errs.append("spdc.pump_power doit être >= 0")
        if not self.single_photon_coherence_time > 0:
            errs.append("spdc.single_photon_coherence_time doit être > 0")
        if not self.signal_wavelength > 0:
            errs.append("spdc.signal_wavelength doit être > 0")
        return errs


@dataclass(frozen=True)
class PhotonRecord:
    emission_time: float  # ps absolu
    wavelength: float  # nm
    phase: float  # rad
    origin: Origin


@dataclass(frozen=True)
class PairRecord:
    emission_time: float  # ps absolu
    pulse_index: int
    signal: PhotonRecord
    idler: PhotonRecord
    sum_phase: float  # rad
    sum_coherence_time: float  # ns (τ_coh ~ durée d'impulsion)
    t_in_pulse: float | None = None  # ps, décalage tiré ; recalculé s'il manque

    def time_in_pulse(self, train: PulseTrainConfig) -> float:
        if self.t_in_pulse is not None:
            return self.t_in_pulse
        return self.emission_time - self.pulse_index * train.period_ps


@dataclass
class PairBatch:
    """Paires d'un lot d'impulsions, en colonnes."""

    pulse_index: np.ndarray  # int64
    t_in_pulse: np.ndarray  # ps
    sum_phase: np.ndarray  # rad
    wavelength: float  # nm (les deux photons)

    def __len__(self) -> int:
        return int(self.pulse_index.size)

    def emission_time(self, train: PulseTrainConfig) -> np.ndarray:
        return self.pulse_index * train.period_ps + self.t_in_pulse

    def select(self, mask: np.ndarray, *, wavelength: float | None = None, extra_phase=None) -> "PairBatch":
        phase = self.sum_phase[mask]
        if extra_phase is not None:
            phase = phase + extra_phase
        return PairBatch(
            pulse_index=self.pulse_index[mask],
            t_in_pulse=self.t_in_pulse[mask],
            sum_phase=phase,
            wavelength=self.wavelength if wavelength is None else wavelength,
        )

    def records(self, train: PulseTrainConfig, coherence_time: float | None = None) -> list[PairRecord]:
        tau = train.pulse_duration if coherence_time is None else coherence_time
        out = []
        for k, t, ph in zip(self.pulse_index.tolist(), self.t_in_pulse.tolist(), self.sum_phase.tolist()):
            emission = k * train.period_ps + t
            out.append(
                PairRecord(
                    emission_time=emission,
                    pulse_index=k,
                    signal=PhotonRecord(emission, self.wavelength, ph / 2.0, Origin.SIGNAL),
                    idler=PhotonRecord(emission, self.wavelength, ph / 2.0, Origin.IDLER),
                    sum_phase=ph,
                    sum_coherence_time=tau,
                    t_in_pulse=t,
                )
            )
        return out

    @classmethod
    def from_records(cls, pairs: list[PairRecord], train: PulseTrainConfig) -> "PairBatch":
        if not pairs:
            return cls(np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0), FUNDAMENTAL_WAVELENGTH)
        return cls(
            pulse_index=np.array([p.pulse_index for p in pairs], dtype=np.int64),
            t_in_pulse=np.array([p.time_in_pulse(train) for p in pairs], dtype=float),
            sum_phase=np.array([p.sum_phase for p in pairs], dtype=float),
            wavelength=pairs[0].signal.wavelength,
        )


def mean_pairs_per_pulse(cfg: SpdcConfig, train: PulseTrainConfig) -> float:
    """μ = rendement · puissance / taux de répétition."""
    return cfg.pair_yield * cfg.pump_power / (train.repetition_rate * 1e6)


def sample_pair_batch(
    first_pulse: int, n_pulses: int, spdc: SpdcConfig, train: PulseTrainConfig, rng: np.random.Generator
) -> PairBatch:
    mu = mean_pairs_per_pulse(spdc, train)
    counts = rng.poisson(mu, int(n_pulses)) if mu > 0 else np.zeros(int(n_pulses), dtype=np.int64)
    pulse_index = np.repeat(np.arange(first_pulse, first_pulse + n_pulses, dtype=np.int64), counts)
    t = sample_emission_times(train, pulse_index.size, rng)
    return PairBatch(
        pulse_index=pulse_index,
        t_in_pulse=t,
        sum_phase=2.0 * np.asarray(pump_phase(t, train), dtype=float),
        wavelength=spdc.signal_wavelength,
    )


def sample_pairs(
    pulse_index: int, spdc: SpdcConfig, train: PulseTrainConfig, rng: np.random.Generator
) -> list[PairRecord]:
    return sample_pair_batch(pulse_index, 1, spdc, train, rng).records(train)
