"""Constantes physiques, conventions d'unités et noyaux analytiques.

Unités : longueurs en nm (réels), temps en ps (tags entiers), taux de
répétition en MHz, durées d'impulsion en ns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from app.errors import DomainError

# --- Constantes ---------------------------------------------------------------
SPEED_OF_LIGHT = 299_792_458.0  # m/s, valeur SI exacte

FUNDAMENTAL_WAVELENGTH = 1550.0  # nm
SH_PUMP_WAVELENGTH = 775.0  # nm

ALLOWED_HARMONICS = (1, 2, 3, 6)


@dataclass(frozen=True)
class PhaseModel:
    """Multiplicateur de phase m par rapport au champ 1550 nm."""

    harmonic_order: int

    def __post_init__(self):
        if self.harmonic_order not in ALLOWED_HARMONICS:
            raise DomainError(f"ordre harmonique {self.harmonic_order} non supporté {ALLOWED_HARMONICS}")

    def period(self, base_wavelength: float = FUNDAMENTAL_WAVELENGTH) -> float:
        return base_wavelength / self.harmonic_order


CLASSICAL_BEAM = PhaseModel(3)
PAIR_SUM = PhaseModel(6)


def _finite(value, label: str):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{label} non fini")
    return arr


def time_delay(delta_L):
    """ΔL (nm) -> Δτ (ps). Accepte scalaires ou tableaux."""
    arr = _finite(delta_L, "delta_L")
    # nm -> m (1e-9), s -> ps (1e12)
    out = arr * 1e3 / SPEED_OF_LIGHT
    return float(out) if out.ndim == 0 else out


def sum_frequency_wavelength(lambda_a: float, lambda_b: float) -> float:
    a = float(_finite(lambda_a, "lambda_a"))
    b = float(_finite(lambda_b, "lambda_b"))
    if a <= 0 or b <= 0:
        raise DomainError(f"longueur d'onde non positive ({a}, {b})")
    return 1.0 / (1.0 / a + 1.0 / b)


def fringe_phase(delta_L, base_wavelength: float, model: PhaseModel):
    """m·2π·ΔL/λ ; la période de franges associée est λ/m."""
    lam = float(_finite(base_wavelength, "base_wavelength"))
    if lam <= 0:
        raise DomainError(f"longueur d'onde non positive ({lam})")
    arr = _finite(delta_L, "delta_L")
    out = model.harmonic_order * 2.0 * math.pi * arr / lam
    return float(out) if out.ndim == 0 else out


UPCONVERTED_WAVELENGTH = sum_frequency_wavelength(FUNDAMENTAL_WAVELENGTH, SH_PUMP_WAVELENGTH)
