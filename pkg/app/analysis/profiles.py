"""Profils temporels après interférence et visibilité par aire d'impulsion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from app.errors import ContractError, DomainError


@dataclass
class PulseProfile:
    t_ns: np.ndarray
    intensity: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.t_ns = np.asarray(self.t_ns, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.t_ns.shape != self.intensity.shape or self.t_ns.size < 2:
            raise ContractError("profil : grilles t / intensité incohérentes")
        if np.any(np.diff(self.t_ns) <= 0):
            raise ContractError("profil : grille temporelle non croissante")

    def area(self, t0: float, t1: float, grid: np.ndarray | None = None) -> float:
        """∫ intensité sur [t0, t1] (ns) ; grid ajoute des points d'échantillonnage."""
        if not t0 < t1:
            raise DomainError(f"fenêtre vide [{t0}, {t1}]")
        if t0 < self.t_ns[0] or t1 > self.t_ns[-1]:
            raise ContractError(f"fenêtre [{t0}, {t1}] hors du profil [{self.t_ns[0]}, {self.t_ns[-1]}]")
        pts = self.t_ns if grid is None else np.union1d(self.t_ns, np.asarray(grid, dtype=float))
        pts = np.union1d(pts[(pts > t0) & (pts < t1)], [t0, t1])
        return float(trapezoid(np.interp(pts, self.t_ns, self.intensity), pts))


def visibility_from_profiles(profile_a: PulseProfile, profile_b: PulseProfile, t0: float, t1: float) -> float:
    """(∫A − ∫B)/(∫A + ∫B) sur [t0, t1] (ns), trapèzes sur l'union des grilles."""
    if not t0 < t1:
        raise DomainError(f"fenêtre vide [{t0}, {t1}]")
    lo = max(profile_a.t_ns[0], profile_b.t_ns[0])
    hi = min(profile_a.t_ns[-1], profile_b.t_ns[-1])
    if not lo < hi:
        raise ContractError("profils sans recouvrement temporel")
    if t0 < lo or t1 > hi:
        raise ContractError(f"fenêtre [{t0}, {t1}] hors du recouvrement [{lo}, {hi}]")

    grid = np.union1d(profile_a.t_ns, profile_b.t_ns)
    area_a = profile_a.area(t0, t1, grid)
    area_b = profile_b.area(t0, t1, grid)
    total = area_a + area_b
    if total <= 0:
        raise DomainError("aires nulles : visibilité indéfinie")
    return (area_a - area_b) / total
