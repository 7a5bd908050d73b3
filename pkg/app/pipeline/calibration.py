"""Calibration des paramètres libres : β, V_mode, exposant deux photons, qe.

1. β : rapport des visibilités par aire (impulsion entière / fenêtre) des
   profils A (frange brillante) et B (frange sombre).
2. V_mode : visibilité fenêtrée cible.
3. exposant k : V_mode**k · |D₆| = visibilité deux photons cible.
4. qe : taux de coïncidences moyen (sur une frange) dans la fenêtre = cible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from app.errors import CalibrationError
from app.interferometer import InterferometerConfig, _edge_chirp, dephasing_mean
from app.model_core import CLASSICAL_BEAM, FUNDAMENTAL_WAVELENGTH, fringe_phase
from app.source.pulses import PulseTrainConfig, pulse_grid, pump_envelope

BETA_SCAN_MAX = 20.0
BETA_SCAN_POINTS = 401


@dataclass(frozen=True)
class CalibrationResult:
    edge_swing_beta: float
    mode_overlap_visibility: float
    two_photon_overlap_exponent: float
    quantum_efficiency: float | None
    classical_full_visibility: float
    classical_window_visibility: float
    two_photon_visibility: float
    bright_offset: float  # nm, position A (offset par rapport à delta_L)
    dark_offset: float  # nm, position B

    def as_dict(self) -> dict:
        return {
            "edge_swing_beta": self.edge_swing_beta,
            "mode_overlap_visibility": self.mode_overlap_visibility,
            "two_photon_overlap_exponent": self.two_photon_overlap_exponent,
            "quantum_efficiency": self.quantum_efficiency,
            "classical_full_visibility": self.classical_full_visibility,
            "classical_window_visibility": self.classical_window_visibility,
            "two_photon_visibility": self.two_photon_visibility,
            "bright_offset_nm": self.bright_offset,
            "dark_offset_nm": self.dark_offset,
        }


def _unit_chirp_grid(train: PulseTrainConfig, ifm: InterferometerConfig, window):
    """(poids e² plein, poids fenêtré, chirp pour β=1 et m=1)."""
    t = pulse_grid(train)
    w = np.asarray(pump_envelope(t, train), dtype=float) ** 2
    ww = np.where((t >= window[0] * 1e3) & (t <= window[1] * 1e3), w, 0.0)
    if not ww.sum() > 0:
        raise CalibrationError(f"fenêtre {window[0]:g} à {window[1]:g} ns hors de l'impulsion")
    unit = replace(train, edge_swing_beta=1.0)
    chirp = _edge_chirp(t, ifm, unit, 1)
    return w / w.sum(), ww / ww.sum(), chirp


def _means(betas: np.ndarray, w, ww, chirp, multiplier: int) -> tuple[np.ndarray, np.ndarray]:
    phase = np.exp(1j * multiplier * np.outer(betas, chirp))
    return phase @ w, phase @ ww


def visibility_factors(full: np.ndarray, window: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Visibilités par aire (à V_mode = 1) : impulsion entière, fenêtre.

    A est placé au maximum de l'aire totale : θ_A = −arg D(full).
    """
    rot = np.exp(-1j * np.angle(full))
    return np.abs(full), np.real(window * rot)


def bright_dark_offsets(train: PulseTrainConfig, ifm: InterferometerConfig) -> tuple[float, float]:
    """Offsets (nm, dans [0, λ/3[) des positions A et B autour de ifm.delta_L."""
    d = dephasing_mean(train, ifm, 3)
    period = CLASSICAL_BEAM.period(FUNDAMENTAL_WAVELENGTH)
    theta0 = fringe_phase(ifm.delta_L, FUNDAMENTAL_WAVELENGTH, CLASSICAL_BEAM)
    target = -math.atan2(d.imag, d.real)
    bright = ((target - theta0) % (2.0 * math.pi)) / (2.0 * math.pi) * period
    return bright, bright + 0.5 * period


def solve_beta(train: PulseTrainConfig, ifm: InterferometerConfig, targets) -> float:
    window = (targets.window_start, targets.window_stop)
    w, ww, chirp = _unit_chirp_grid(train, ifm, window)
    wanted = targets.full_pulse_visibility / targets.window_visibility

    def ratio(beta):
        full, win = _means(np.atleast_1d(beta), w, ww, chirp, 3)
        f, v = visibility_factors(full, win)
        return f / v

    betas = np.linspace(0.0, BETA_SCAN_MAX, BETA_SCAN_POINTS)
    r = ratio(betas) - wanted
    if abs(r[0]) < 1e-12:
        return 0.0
    crossing = np.flatnonzero(np.sign(r[:-1]) != np.sign(r[1:]))
    if crossing.size == 0:
        raise CalibrationError(
            f"rapport de visibilités {wanted:.4f} inatteignable pour β dans [0, {BETA_SCAN_MAX}]"
        )
    i = int(crossing[0])
    return float(brentq(lambda b: float(ratio(b)[0] - wanted), betas[i], betas[i + 1], xtol=1e-12))


def calibrate(
    train: PulseTrainConfig,
    ifm: InterferometerConfig,
    targets,
    *,
    solve: frozenset = frozenset({"beta", "mode", "exponent"}),
    coincidence_per_qe2=None,
    logger=None,
) -> CalibrationResult:
    """Résout les paramètres demandés dans `solve` ; les autres sont repris des configs.

    coincidence_per_qe2 : callable(train, ifm) -> coïncidences/impulsion à qe = 1
    (fourni par le moteur analytique) ; nécessaire pour "qe".
    """
    window = (targets.window_start, targets.window_stop)
    beta = solve_beta(train, ifm, targets) if "beta" in solve else train.edge_swing_beta
    train = replace(train, edge_swing_beta=beta)

    w, ww, chirp = _unit_chirp_grid(train, ifm, window)
    full3, win3 = _means(np.array([beta]), w, ww, chirp, 3)
    f3, v3 = (float(x[0]) for x in visibility_factors(full3, win3))
    full6, _ = _means(np.array([beta]), w, ww, chirp, 6)
    d6 = float(abs(full6[0]))

    v_mode = ifm.mode_overlap_visibility
    if "mode" in solve:
        if v3 <= 0:
            raise CalibrationError("visibilité fenêtrée nulle : V_mode indéterminé")
        v_mode = targets.window_visibility / v3
        if v_mode > 1.0:
            if logger:
                logger.warning("calibration : V_mode %.4f > 1 ramené à 1", v_mode)
            v_mode = 1.0

    exponent = ifm.two_photon_overlap_exponent
    if "exponent" in solve:
        goal = targets.two_photon_visibility / d6 if d6 > 0 else float("inf")
        if v_mode >= 1.0 or goal >= 1.0:
            if logger:
                logger.warning("calibration : visibilité deux photons %.3f inatteignable, exposant 0", targets.two_photon_visibility)
            exponent = 0.0
        else:
            exponent = max(0.0, math.log(goal) / math.log(v_mode))

    ifm = replace(ifm, mode_overlap_visibility=v_mode, two_photon_overlap_exponent=exponent)

    qe = None
    if "qe" in solve:
        if coincidence_per_qe2 is None:
            raise CalibrationError("calibration de qe sans modèle de taux")
        per_pulse = coincidence_per_qe2(train, ifm)
        if per_pulse <= 0:
            raise CalibrationError("taux de coïncidences nul : qe indéterminé")
        qe = math.sqrt(targets.coincidence_rate / (train.repetition_rate * 1e6 * per_pulse))
        if qe > 1.0:
            raise CalibrationError(f"qe requis {qe:.3f} > 1 pour {targets.coincidence_rate:g} coups/s")

    bright, dark = bright_dark_offsets(train, ifm)
    return CalibrationResult(
        edge_swing_beta=beta,
        mode_overlap_visibility=v_mode,
        two_photon_overlap_exponent=exponent,
        quantum_efficiency=qe,
        classical_full_visibility=v_mode * f3,
        classical_window_visibility=v_mode * v3,
        two_photon_visibility=(v_mode**exponent) * d6,
        bright_offset=bright,
        dark_offset=dark,
    )
