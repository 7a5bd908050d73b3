"""Scan de franges et ajustement sinusoïdal (périodogramme + raffinement)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from app.errors import ContractError, FitError

MAX_CANDIDATE_PERIOD = 2000.0  # nm
PERIOD_GRID_STEP = 1.0  # nm


@dataclass(frozen=True)
class FringeSample:
    delta_L: float  # nm (offset piezo)
    coincidences: float
    accidentals: float

    @property
    def net(self) -> float:
        return float(self.coincidences) - float(self.accidentals)


@dataclass
class FringeScan:
    samples: list[FringeSample]
    step: float
    mode: str = "quantum-pair"
    singles: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        x = self.delta_L
        if x.size > 1:
            d = np.diff(x)
            if np.any(d <= 0):
                raise ContractError("delta_L doit être strictement croissant")
            if not np.allclose(d, self.step, rtol=1e-6, atol=1e-6):
                raise ContractError("pas de scan non uniforme")

    @property
    def delta_L(self) -> np.ndarray:
        return np.array([s.delta_L for s in self.samples], dtype=float)

    @property
    def coincidences(self) -> np.ndarray:
        return np.array([s.coincidences for s in self.samples], dtype=float)

    @property
    def accidentals(self) -> np.ndarray:
        return np.array([s.accidentals for s in self.samples], dtype=float)

    @property
    def net(self) -> np.ndarray:
        return self.coincidences - self.accidentals


@dataclass(frozen=True)
class FringeFit:
    period: float  # nm
    visibility: float
    phase: float  # rad
    offset: float
    residual_rms: float
    amplitude: float


# ------------------------------------------------------------------
# Moindres carrés linéaires a + b·cos(kx) + c·sin(kx), vectorisés sur k
# ------------------------------------------------------------------
def _linear_fits(x: np.ndarray, y: np.ndarray, periods: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(coefficients (n,3), RSS (n,)) pour chaque période candidate."""
    k = 2.0 * math.pi / periods[:, None]
    c = np.cos(k * x[None, :])
    s = np.sin(k * x[None, :])
    n = x.size
    ata = np.empty((periods.size, 3, 3))
    ata[:, 0, 0] = n
    ata[:, 0, 1] = ata[:, 1, 0] = c.sum(axis=1)
    ata[:, 0, 2] = ata[:, 2, 0] = s.sum(axis=1)
    ata[:, 1, 1] = (c * c).sum(axis=1)
    ata[:, 2, 2] = (s * s).sum(axis=1)
    ata[:, 1, 2] = ata[:, 2, 1] = (c * s).sum(axis=1)
    aty = np.stack([np.full(periods.size, y.sum()), c @ y, s @ y], axis=1)
    # pinv : à la période de Nyquist la colonne sin est nulle
    beta = (np.linalg.pinv(ata) @ aty[..., None])[..., 0]
    model = beta[:, 0:1] + beta[:, 1:2] * c + beta[:, 2:3] * s
    rss = ((y[None, :] - model) ** 2).sum(axis=1)
    return beta, rss


def periodogram(x: np.ndarray, y: np.ndarray, periods: np.ndarray) -> np.ndarray:
    """RSS de l'ajustement linéaire pour chaque période."""
    _, rss = _linear_fits(np.asarray(x, float), np.asarray(y, float), np.asarray(periods, float))
    return rss


def fit_fringe(scan: FringeScan, *, use_net: bool = True, max_period: float = MAX_CANDIDATE_PERIOD) -> FringeFit:
    x = scan.delta_L
    y = scan.net if use_net else scan.coincidences
    if x.size < 4:
        raise FitError(f"scan trop court ({x.size} points)")
    if np.ptp(y) == 0:
        raise FitError(f"scan dégénéré : comptes constants ({y[0]:g}) sur {x.size} points")

    span = float(x[-1] - x[0])
    p_min = max(1.0, 2.0 * scan.step)
    p_max = min(max_period, span)
    if p_max < p_min:
        raise FitError(f"span {span:g} nm insuffisant pour le pas {scan.step:g} nm")

    candidates = np.arange(p_min, p_max + 0.5 * PERIOD_GRID_STEP, PERIOD_GRID_STEP)
    # x recentré : meilleur conditionnement, la phase est recalée après
    x0 = float(x[0])
    xc = x - x0
    rss = periodogram(xc, y, candidates)
    p0 = float(candidates[int(np.argmin(rss))])

    lo = max(p_min, p0 - PERIOD_GRID_STEP)
    hi = min(p_max, p0 + PERIOD_GRID_STEP)
    if hi > lo:
        res = minimize_scalar(
            lambda p: float(periodogram(xc, y, np.array([p]))[0]),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-7},
        )
        period = float(res.x)
    else:
        period = p0

    beta, rss_best = _linear_fits(xc, y, np.array([period]))
    a, b, c = (float(v) for v in beta[0])
    if a <= 0:
        raise FitError(f"offset non positif ({a:g}) : visibilité indéfinie")
    amplitude = math.hypot(b, c)
    # a + A·cos(2π(x−x0)/P + φ₀)  ->  phase rapportée à x = 0
    phase = math.atan2(-c, b) - 2.0 * math.pi * x0 / period
    phase = math.remainder(phase, 2.0 * math.pi)
    return FringeFit(
        period=period,
        visibility=min(1.0, amplitude / a),
        phase=phase,
        offset=a,
        residual_rms=math.sqrt(float(rss_best[0]) / x.size),
        amplitude=amplitude,
    )
