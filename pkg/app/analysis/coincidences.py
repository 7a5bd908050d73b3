"""Comptage dans la fenêtre de coïncidence et estimation des accidentelles."""

from __future__ import annotations

import numpy as np

from app.detection.tia import CorrelationHistogram, TagStreams, correlate, pair_differences
from app.errors import DomainError


def window_mask(hist: CorrelationHistogram, half_window: float) -> np.ndarray:
    """Bins dont le centre vérifie |centre| < half_window."""
    return np.abs(hist.centers) < half_window


def effective_window(hist: CorrelationHistogram, half_window: float) -> tuple[float, float]:
    """Bornes (ps) réellement couvertes par les bins retenus."""
    mask = window_mask(hist, half_window)
    if not mask.any():
        return 0.0, 0.0
    c = hist.centers[mask]
    return float(c.min() - 0.5 * hist.bin_width), float(c.max() + 0.5 * hist.bin_width)


def coincidences_in_window(source, half_window: float):
    """Événements avec |Δτ| < half_window.

    source : CorrelationHistogram (bins entiers retenus selon leur centre),
    TagStreams (énumération exacte des paires) ou tableau de Δτ.
    """
    if not half_window > 0:
        raise DomainError("half_window doit être > 0")
    if isinstance(source, CorrelationHistogram):
        total = source.counts[window_mask(source, half_window)].sum()
        return int(total) if np.issubdtype(source.counts.dtype, np.integer) else float(total)
    if isinstance(source, TagStreams):
        dtau = pair_differences(source, half_window)
    else:
        dtau = np.asarray(source)
    return int(np.count_nonzero(np.abs(dtau) < half_window))


def estimate_accidentals(
    tags: TagStreams,
    pulse_period: float,
    half_window: float,
    *,
    bin_width: float | None = None,
    offsets: tuple[int, ...] = (1,),
):
    """Coïncidences avec le détecteur 2 décalé d'une période (ns).

    offsets > (1,) moyenne plusieurs décalages (résultat réel).
    bin_width : comptage sur l'histogramme TIA plutôt que sur les paires exactes.
    """
    if not half_window > 0:
        raise DomainError("half_window doit être > 0")
    if not pulse_period > 0:
        raise DomainError("pulse_period doit être > 0")
    period_ps = pulse_period * 1e3
    counts = []
    for k in offsets:
        shift = k * period_ps
        if bin_width is None:
            dtau = pair_differences(tags, half_window, shift=shift)
            counts.append(int(np.count_nonzero(np.abs(dtau) < half_window)))
        else:
            hist = correlate(tags, half_window + bin_width, bin_width, shift=shift)
            counts.append(coincidences_in_window(hist, half_window))
    if len(counts) == 1:
        return counts[0]
    return float(np.mean(counts))


def subtract_accidentals(raw, accidental) -> float:
    """raw − accidental, conservé négatif s'il l'est."""
    if raw < 0 or accidental < 0:
        raise DomainError("comptes négatifs")
    return float(raw) - float(accidental)
