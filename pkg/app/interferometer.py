"""Interféromètre de Franson replié (Michelson asymétrique).

Frange classique (m=3), distribution des issues à deux photons (m=6) et
routage Monte-Carlo des paires et photons isolés vers le port de sortie.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from app.errors import ConfigError
from app.model_core import (
    CLASSICAL_BEAM,
    FUNDAMENTAL_WAVELENGTH,
    PAIR_SUM,
    UPCONVERTED_WAVELENGTH,
    fringe_phase,
    time_delay,
)
from app.source.pulses import PulseTrainConfig, pulse_grid, pump_envelope, pump_phase_rate
from app.source.spdc import PairBatch, PairRecord, PhotonRecord

_WAVELENGTH_TOL = 1e-6


@dataclass(frozen=True)
class InterferometerConfig:
    delta_L: float = 36.0e6  # nm (différence de chemin optique totale)
    mode_overlap_visibility: float = 1.0
    splitting_ratio: float = 0.5
    two_photon_overlap_exponent: float = 2.0

    @property
    def delay_ps(self) -> float:
        return time_delay(self.delta_L)

    @property
    def arm_weight(self) -> float:
        """q = R·T : probabilité de sortie par bras (1/4 en 50/50)."""
        return self.splitting_ratio * (1.0 - self.splitting_ratio)

    @property
    def two_photon_visibility(self) -> float:
        return self.mode_overlap_visibility**self.two_photon_overlap_exponent

    def at(self, delta_L: float) -> "InterferometerConfig":
        return InterferometerConfig(
            delta_L=delta_L,
            mode_overlap_visibility=self.mode_overlap_visibility,
            splitting_ratio=self.splitting_ratio,
            two_photon_overlap_exponent=self.two_photon_overlap_exponent,
        )

    def violations(self) -> list[str]:
        errs = []
        if not np.isfinite(self.delta_L):
            errs.append("interferometer.delta_L doit être fini")
        if not 0.0 <= self.mode_overlap_visibility <= 1.0:
            errs.append("interferometer.mode_overlap_visibility doit être dans [0, 1]")
        if not 0.0 < self.splitting_ratio < 1.0:
            errs.append("interferometer.splitting_ratio doit être dans ]0, 1[")
        if not self.two_photon_overlap_exponent >= 0:
            errs.append("interferometer.two_photon_overlap_exponent doit être >= 0")
        return errs


class Outcome(IntEnum):
    CENTRAL = 0
    SIDE_PLUS = 1  # signal retardé de Δτ_L
    SIDE_MINUS = 2  # idler retardé de Δτ_L
    SINGLE_SIGNAL = 3
    SINGLE_IDLER = 4
    LOST = 5


@dataclass(frozen=True)
class PairOutcomeDistribution:
    p_central: float
    p_side_plus: float
    p_side_minus: float
    p_single_signal: float
    p_single_idler: float
    p_lost: float

    @property
    def p_undetected(self) -> float:
        """Tout ce qui ne donne pas deux photons en sortie."""
        return self.p_single_signal + self.p_single_idler + self.p_lost

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.p_central, self.p_side_plus, self.p_side_minus, self.p_single_signal, self.p_single_idler, self.p_lost]
        )


# ------------------------------------------------------------------
# Noyaux
# ------------------------------------------------------------------
def _edge_chirp(t_in_pulse, ifm: InterferometerConfig, train: PulseTrainConfig, multiplier: int):
    return multiplier * ifm.delay_ps * np.asarray(pump_phase_rate(t_in_pulse, train), dtype=float)


def classical_intensity(delta_L, t_in_pulse, train: PulseTrainConfig, ifm: InterferometerConfig):
    """I(t) = e²·[1 + V_mode·cos(θ₃ + 3·Δτ_L·φ̇_p)] (intensité relative, max 2)."""
    cfg = ifm.at(delta_L)
    e = np.asarray(pump_envelope(t_in_pulse, train), dtype=float)
    theta = fringe_phase(delta_L, FUNDAMENTAL_WAVELENGTH, CLASSICAL_BEAM)
    out = e**2 * (1.0 + cfg.mode_overlap_visibility * np.cos(theta + _edge_chirp(t_in_pulse, cfg, train, 3)))
    return float(out) if out.ndim == 0 else out


def central_probability(t_in_pulse, ifm: InterferometerConfig, train: PulseTrainConfig):
    q = ifm.arm_weight
    theta = fringe_phase(ifm.delta_L, FUNDAMENTAL_WAVELENGTH, PAIR_SUM)
    chirp = _edge_chirp(t_in_pulse, ifm, train, 6)
    return 2.0 * q * q * (1.0 + ifm.two_photon_visibility * np.cos(theta + chirp))


def _distribution_table(p_central: np.ndarray, ifm: InterferometerConfig) -> np.ndarray:
    """Colonnes dans l'ordre de Outcome ; marge par photon = 2q pour tout ΔL."""
    q = ifm.arm_weight
    p_central = np.asarray(p_central, dtype=float)
    side = np.full_like(p_central, q * q)
    single = 2.0 * q - p_central - 2.0 * side
    lost = 1.0 - p_central - 2.0 * side - 2.0 * single
    return np.stack([p_central, side, side, single, single, lost], axis=-1)


def _check_pair_wavelength(wavelength: float):
    if abs(wavelength - UPCONVERTED_WAVELENGTH) > _WAVELENGTH_TOL:
        raise ConfigError(
            f"paire à {wavelength} nm : l'interféromètre attend des photons convertis à {UPCONVERTED_WAVELENGTH:.4f} nm"
        )


def pair_outcome_distribution(
    pair: PairRecord, ifm: InterferometerConfig, train: PulseTrainConfig
) -> PairOutcomeDistribution:
    _check_pair_wavelength(pair.signal.wavelength)
    _check_pair_wavelength(pair.idler.wavelength)
    row = _distribution_table(central_probability(pair.time_in_pulse(train), ifm, train), ifm)
    return PairOutcomeDistribution(*(float(x) for x in row))


# ------------------------------------------------------------------
# Moyennes sur l'impulsion (poids e²)
# ------------------------------------------------------------------
def dephasing_mean(
    train: PulseTrainConfig, ifm: InterferometerConfig, multiplier: int, window: tuple[float, float] | None = None
) -> complex:
    """⟨exp(i·m·Δτ_L·φ̇_p(t))⟩ pondéré par e², éventuellement restreint à une fenêtre (ns)."""
    t = pulse_grid(train)
    w = np.asarray(pump_envelope(t, train), dtype=float) ** 2
    if window is not None:
        w = np.where((t >= window[0] * 1e3) & (t <= window[1] * 1e3), w, 0.0)
    total = w.sum()
    if total <= 0:
        return complex(1.0, 0.0)
    return complex(np.sum(w * np.exp(1j * _edge_chirp(t, ifm, train, multiplier))) / total)


def pulse_averaged_intensity(delta_L: float, train: PulseTrainConfig, ifm: InterferometerConfig, window=None) -> float:
    """Ī = ∫I / ∫e² (vaut 1 en moyenne sur une frange)."""
    d = dephasing_mean(train, ifm.at(delta_L), 3, window)
    theta = fringe_phase(delta_L, FUNDAMENTAL_WAVELENGTH, CLASSICAL_BEAM)
    return float(1.0 + ifm.mode_overlap_visibility * (np.exp(1j * theta) * d).real)


def mean_central_probability(delta_L: float, train: PulseTrainConfig, ifm: InterferometerConfig) -> float:
    """⟨p_central⟩ sur la densité d'émission des paires."""
    cfg = ifm.at(delta_L)
    d = dephasing_mean(train, cfg, 6)
    q = cfg.arm_weight
    theta = fringe_phase(delta_L, FUNDAMENTAL_WAVELENGTH, PAIR_SUM)
    return float(2.0 * q * q * (1.0 + cfg.two_photon_visibility * (np.exp(1j * theta) * d).real))


# ------------------------------------------------------------------
# Routage Monte-Carlo
# ------------------------------------------------------------------
@dataclass
class Arrivals:
    """Temps d'arrivée (ps absolus) au port de sortie."""

    times: np.ndarray

    def __len__(self) -> int:
        return int(self.times.size)


def sample_outcomes(p_table: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(p_table, axis=-1)
    u = rng.random(p_table.shape[0])[:, None]
    idx = (u >= cum).sum(axis=1)
    return np.minimum(idx, p_table.shape[1] - 1)


def route_pairs(
    pairs: PairBatch, ifm: InterferometerConfig, train: PulseTrainConfig, rng: np.random.Generator
) -> tuple[Arrivals, np.ndarray]:
    """Retourne (arrivées, issue de chaque paire)."""
    if len(pairs):
        _check_pair_wavelength(pairs.wavelength)
    table = _distribution_table(central_probability(pairs.t_in_pulse, ifm, train), ifm)
    outcome = sample_outcomes(table, rng) if len(pairs) else np.zeros(0, dtype=np.int64)
    # bras du photon isolé : court ou long, équiprobables
    long_arm = rng.random(len(pairs)) < 0.5

    t0 = pairs.emission_time(train)
    dt = ifm.delay_ps
    signal_t = np.where(outcome == Outcome.SIDE_PLUS, t0 + dt, t0)
    idler_t = np.where(outcome == Outcome.SIDE_MINUS, t0 + dt, t0)
    signal_t = np.where((outcome == Outcome.SINGLE_SIGNAL) & long_arm, t0 + dt, signal_t)
    idler_t = np.where((outcome == Outcome.SINGLE_IDLER) & long_arm, t0 + dt, idler_t)

    signal_out = np.isin(outcome, (Outcome.CENTRAL, Outcome.SIDE_PLUS, Outcome.SIDE_MINUS, Outcome.SINGLE_SIGNAL))
    idler_out = np.isin(outcome, (Outcome.CENTRAL, Outcome.SIDE_PLUS, Outcome.SIDE_MINUS, Outcome.SINGLE_IDLER))
    # ordre fixe : signaux puis idlers, par ordre de paire
    times = np.concatenate([signal_t[signal_out], idler_t[idler_out]])
    return Arrivals(times), outcome


def route_single_photons(
    emission_time: np.ndarray, ifm: InterferometerConfig, rng: np.random.Generator
) -> Arrivals:
    """Photons sans partenaire : sortie avec probabilité 2q, bras au hasard."""
    n = int(np.asarray(emission_time).size)
    u = rng.random(n)
    exits = u < 2.0 * ifm.arm_weight
    long_arm = u < ifm.arm_weight
    times = np.asarray(emission_time, dtype=float) + np.where(long_arm, ifm.delay_ps, 0.0)
    return Arrivals(times[exits])


def route_pair(
    pair: PairRecord, ifm: InterferometerConfig, train: PulseTrainConfig, rng: np.random.Generator
) -> list[tuple[PhotonRecord, float]]:
    dist = pair_outcome_distribution(pair, ifm, train)
    outcome = Outcome(int(sample_outcomes(dist.as_array()[None, :], rng)[0]))
    long_arm = rng.random() < 0.5
    t0 = pair.emission_time
    dt = ifm.delay_ps

    if outcome == Outcome.CENTRAL:
        return [(pair.signal, t0), (pair.idler, t0)]
    if outcome == Outcome.SIDE_PLUS:
        return [(pair.signal, t0 + dt), (pair.idler, t0)]
    if outcome == Outcome.SIDE_MINUS:
        return [(pair.signal, t0), (pair.idler, t0 + dt)]
    if outcome == Outcome.SINGLE_SIGNAL:
        return [(pair.signal, t0 + dt if long_arm else t0)]
    if outcome == Outcome.SINGLE_IDLER:
        return [(pair.idler, t0 + dt if long_arm else t0)]
    return []
