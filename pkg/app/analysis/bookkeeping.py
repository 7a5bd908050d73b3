"""Probabilité d'événement par impulsion et tableau de comparaison."""

from __future__ import annotations

from dataclasses import dataclass

from app.errors import DomainError


def event_probability(rate: float, repetition: float) -> float:
    """rate (coups/s) / repetition (MHz)."""
    if not repetition > 0:
        raise DomainError("repetition doit être > 0")
    if rate < 0:
        raise DomainError("rate doit être >= 0")
    return rate / (repetition * 1e6)


def format_probability(p: float | None) -> str:
    return "" if p is None else "%.1e" % p


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    interfering_photons: int
    fringe_period_nm: float
    rate: float | None  # coups/s
    repetition: float | None  # MHz ; None = pompage continu

    @property
    def event_probability(self) -> float | None:
        if self.rate is None or self.repetition is None:
            return None
        return event_probability(self.rate, self.repetition)


# Lignes de référence : expériences d'interférence multi-photons publiées
REFERENCE_ROWS = (
    ComparisonRow("2-photon, cw pump", 2, 448.6, 8.0, None),
    ComparisonRow("2-photon, 76 MHz", 2, 395.0, 4800.0, 76.0),
    ComparisonRow("4-photon, 77 MHz", 4, 195.0, 0.04, 77.0),
    ComparisonRow("4-photon, 76 MHz", 4, 197.5, 0.06, 76.0),
    ComparisonRow("5-photon, 80 MHz", 5, 161.6, 0.015, 80.0),
    ComparisonRow("up-converted pair, 4 MHz", 2, 258.3, 2000.0, 4.0),
)


def comparison_rows(simulated_rate: float | None = None, repetition: float = 4.0) -> list[ComparisonRow]:
    rows = list(REFERENCE_ROWS)
    if simulated_rate is not None:
        rows.append(ComparisonRow("simulated", 2, 1550.0 / 6.0, simulated_rate, repetition))
    return rows
