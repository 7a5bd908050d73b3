"""Recherche des pics d'un histogramme de corrélation."""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import find_peaks

from app.detection.tia import CorrelationHistogram
from app.errors import ContractError

MAD_TO_SIGMA = 1.4826


def noise_floor(counts: np.ndarray, k: float = 5.0) -> float:
    """médiane + k·max(MAD normalisée, √médiane) ; le terme poissonien évite un plancher nul."""
    counts = np.asarray(counts, dtype=float)
    median = float(np.median(counts))
    mad = float(np.median(np.abs(counts - median))) * MAD_TO_SIGMA
    return median + k * max(mad, math.sqrt(max(median, 1.0)))


def _refine(counts: np.ndarray, i: int) -> float:
    """Décalage (en bins) du sommet par parabole à 3 points, sur log si possible."""
    if i == 0 or i == counts.size - 1:
        return 0.0
    y0, y1, y2 = (float(v) for v in counts[i - 1 : i + 2])
    if y0 > 0 and y2 > 0 and y1 > 0:
        y0, y1, y2 = math.log(y0), math.log(y1), math.log(y2)
    denom = y0 - 2.0 * y1 + y2
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (y0 - y2) / denom, -0.5, 0.5))


def find_histogram_peaks(hist: CorrelationHistogram, expected_separation: float, k: float = 5.0) -> list[float]:
    counts = np.asarray(hist.counts, dtype=float)
    if counts.size == 0:
        raise ContractError("histogramme vide")
    floor = noise_floor(counts, k)
    distance = max(1, int(math.ceil(0.5 * expected_separation / hist.bin_width)))
    idx, _ = find_peaks(counts, height=np.nextafter(floor, np.inf), distance=distance)
    centers = hist.centers
    return sorted(float(centers[i] + _refine(counts, int(i)) * hist.bin_width) for i in idx)
