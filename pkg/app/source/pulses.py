"""Train d'impulsions pompe : enveloppe, phase de commutation, tirage des temps d'émission."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

ENVELOPE_SHAPES = ("raised-cosine-flattop", "gaussian")

# Pas de la différence centrée pour φ̇_p (ps)
PHASE_RATE_STEP = 0.5
# Pas de la grille de quadrature / tirage (ps)
GRID_STEP = 1.0

_FWHM_TO_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


@dataclass(frozen=True)
class PulseTrainConfig:
    repetition_rate: float = 4.0  # MHz
    pulse_duration: float = 7.5  # ns, FWHM
    envelope_shape: str = "raised-cosine-flattop"
    edge_swing_beta: float = 0.0  # rad
    pulse_count: int = 100_000
    edge_fraction: float = 0.2  # largeur des fronts / FWHM
    pulse_center: float = 5.0  # ns dans la période

    # --- unités dérivées (ps)
    @property
    def period_ps(self) -> float:
        return 1e6 / self.repetition_rate

    @property
    def fwhm_ps(self) -> float:
        return self.pulse_duration * 1e3

    @property
    def edge_width_ps(self) -> float:
        return self.edge_fraction * self.fwhm_ps

    @property
    def center_ps(self) -> float:
        return self.pulse_center * 1e3

    @property
    def sigma_ps(self) -> float:
        return self.fwhm_ps / _FWHM_TO_SIGMA

    def support(self) -> tuple[float, float]:
        """Intervalle (ps, dans la période) hors duquel l'enveloppe est nulle."""
        if self.envelope_shape == "gaussian":
            half = 3.0 * self.fwhm_ps
            return max(0.0, self.center_ps - half), min(self.period_ps, self.center_ps + half)
        half = 0.5 * (self.fwhm_ps + self.edge_width_ps)
        return self.center_ps - half, self.center_ps + half

    def violations(self) -> list[str]:
        errs: list[str] = []
        if not self.repetition_rate > 0:
            errs.append("pulse_train.repetition_rate doit être > 0")
        if not self.pulse_duration > 0:
            errs.append("pulse_train.pulse_duration doit être > 0")
        if self.repetition_rate > 0 and self.pulse_duration > 0 and not self.period_ps > self.fwhm_ps:
            errs.append("pulse_train : la période doit dépasser pulse_duration")
        if self.envelope_shape not in ENVELOPE_SHAPES:
            errs.append(f"pulse_train.envelope_shape inconnu '{self.envelope_shape}' {ENVELOPE_SHAPES}")
        if not self.edge_swing_beta >= 0:
            errs.append("pulse_train.edge_swing_beta doit être >= 0")
        if self.pulse_count < 0:
            errs.append("pulse_train.pulse_count doit être >= 0")
        if not 0 < self.edge_fraction < 1:
            errs.append("pulse_train.edge_fraction doit être dans ]0, 1[")
        if not errs and self.envelope_shape == "raised-cosine-flattop":
            lo, hi = self.support()
            if lo < 0 or hi > self.period_ps:
                errs.append("pulse_train : l'impulsion déborde de la période (pulse_center)")
        return errs


# ------------------------------------------------------------------
# Enveloppe et dérivée analytique
# ------------------------------------------------------------------
def _envelope_and_slope(t, cfg: PulseTrainConfig):
    t = np.asarray(t, dtype=float)
    x = t - cfg.center_ps
    if cfg.envelope_shape == "gaussian":
        s = cfg.sigma_ps
        e = np.exp(-0.5 * (x / s) ** 2)
        return e, -x / s**2 * e

    r = cfg.edge_width_ps
    half_flat = 0.5 * (cfg.fwhm_ps - r)
    d = np.abs(x)
    u = np.clip((d - half_flat) / r, 0.0, 1.0)
    e = 0.5 * (1.0 + np.cos(math.pi * u))
    on_edge = (d > half_flat) & (d < half_flat + r)
    slope = np.where(on_edge, -np.sign(x) * (math.pi / (2.0 * r)) * np.sin(math.pi * u), 0.0)
    return e, slope


def _max_slope(cfg: PulseTrainConfig) -> float:
    if cfg.envelope_shape == "gaussian":
        return math.exp(-0.5) / cfg.sigma_ps
    return math.pi / (2.0 * cfg.edge_width_ps)


def pump_envelope(t_in_pulse, cfg: PulseTrainConfig):
    e, _ = _envelope_and_slope(t_in_pulse, cfg)
    return float(e) if e.ndim == 0 else e


def pump_phase(t_in_pulse, cfg: PulseTrainConfig):
    """φ_p(t) = β·e'(t)/max|e'| : transitoire limité aux fronts."""
    _, slope = _envelope_and_slope(t_in_pulse, cfg)
    phi = cfg.edge_swing_beta * slope / _max_slope(cfg)
    return float(phi) if phi.ndim == 0 else phi


def pump_phase_rate(t_in_pulse, cfg: PulseTrainConfig):
    """φ̇_p (rad/ps) par différence centrée."""
    t = np.asarray(t_in_pulse, dtype=float)
    h = PHASE_RATE_STEP
    rate = (np.asarray(pump_phase(t + h, cfg)) - np.asarray(pump_phase(t - h, cfg))) / (2.0 * h)
    return float(rate) if rate.ndim == 0 else rate


def pulse_grid(cfg: PulseTrainConfig, step: float = GRID_STEP) -> np.ndarray:
    lo, hi = cfg.support()
    n = int(math.floor((hi - lo) / step)) + 1
    return lo + step * np.arange(n)


# ------------------------------------------------------------------
# Tirage des temps d'émission (densité ∝ e²)
# ------------------------------------------------------------------
@lru_cache(maxsize=32)
def _emission_table(cfg: PulseTrainConfig) -> tuple[np.ndarray, np.ndarray]:
    t = pulse_grid(cfg)
    w = pump_envelope(t, cfg) ** 2
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(t))])
    cdf /= cdf[-1]
    return t, cdf


def sample_emission_times(cfg: PulseTrainConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    """n temps (ps, dans la période) par inversion de la CDF de e²."""
    t, cdf = _emission_table(cfg)
    u = rng.random(int(n))
    return np.interp(u, cdf, t)
