"""APD : répartition 50/50 sur deux détecteurs, efficacité, gigue gaussienne,
temps mort et coups d'obscurité."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from app.errors import DomainError

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))  # 2.3548


@dataclass(frozen=True)
class ApdConfig:
    quantum_efficiency: float = 0.35
    jitter_fwhm: float = 50.0  # ps
    dead_time: float = 50.0  # ns
    dark_rate: float = 100.0  # coups/s par détecteur

    @property
    def jitter_sigma(self) -> float:
        return self.jitter_fwhm / FWHM_PER_SIGMA

    @property
    def dead_time_ps(self) -> float:
        return self.dead_time * 1e3

    def violations(self) -> list[str]:
        errs = []
        if not 0.0 <= self.quantum_efficiency <= 1.0:
            errs.append("detection.quantum_efficiency doit être dans [0, 1]")
        if not self.jitter_fwhm >= 0:
            errs.append("detection.jitter_fwhm doit être >= 0")
        if not self.dead_time >= 0:
            errs.append("detection.dead_time doit être >= 0")
        if not self.dark_rate >= 0:
            errs.append("detection.dark_rate doit être >= 0")
        return errs


@dataclass(frozen=True, order=True)
class TimeTag:
    time: int  # ps
    detector: int  # 1 | 2


@dataclass
class DetectorBank:
    """État du temps mort : dernier tag accepté par détecteur."""

    dead_time_ps: float
    last_accepted: dict[int, int] = field(default_factory=dict)

    def accept(self, detector: int, time: int) -> bool:
        last = self.last_accepted.get(detector)
        if last is not None and time - last < self.dead_time_ps:
            return False
        self.last_accepted[detector] = time
        return True


# ------------------------------------------------------------------
# Détection en lot
# ------------------------------------------------------------------
def detect_batch(
    arrival_times: np.ndarray, apd: ApdConfig, rng: np.random.Generator, detector: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """(détecteur, temps entier ps) des photons détectés, avant temps mort.

    Les tirages se font dans un ordre fixe (détecteur, survie, gigue) sur tout
    le tableau, pour que le résultat ne dépende que du flux aléatoire.
    detector impose le détecteur de chaque photon (routage direct, sans 50/50).
    """
    t = np.asarray(arrival_times, dtype=float)
    n = t.size
    if detector is None:
        detector = np.where(rng.random(n) < 0.5, 1, 2).astype(np.int8)
    else:
        detector = np.asarray(detector, dtype=np.int8)
        if detector.shape != t.shape:
            raise DomainError("detector : un détecteur par photon")
    survives = rng.random(n) < apd.quantum_efficiency
    jitter = rng.normal(0.0, apd.jitter_sigma, n) if apd.jitter_sigma > 0 else np.zeros(n)
    tags = np.rint(t + jitter).astype(np.int64)
    return detector[survives], tags[survives]


def apply_dead_time(times: np.ndarray, dead_time_ps: float) -> np.ndarray:
    """Masque des tags conservés (flux trié d'un détecteur). Le premier tag est toujours gardé.

    Temps mort non paralysable : un tag est gardé si le dernier tag gardé
    date d'au moins dead_time_ps. Seules les grappes (tags séparés de moins
    du temps mort) sont parcourues, par sauts searchsorted.
    """
    times = np.asarray(times, dtype=np.int64)
    keep = np.ones(times.size, dtype=bool)
    if dead_time_ps <= 0 or times.size < 2:
        return keep
    open_gap = np.diff(times) >= dead_time_ps
    if open_gap.all():
        return keep
    # chaque grappe commence par un tag gardé
    starts = np.flatnonzero(np.concatenate(([True], open_gap)))
    ends = np.append(starts[1:], times.size)
    multi = ends - starts > 1
    for s, e in zip(starts[multi].tolist(), ends[multi].tolist()):
        keep[s + 1:e] = False
        cluster = times[s:e]
        i = 0
        while True:
            i = int(np.searchsorted(cluster, cluster[i] + dead_time_ps, side="left"))
            if i >= cluster.size:
                break
            keep[s + i] = True
    return keep


def dark_count_batch(apd: ApdConfig, start: float, stop: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Processus de Poisson homogène par détecteur sur [start, stop[ (ps)."""
    span_s = (stop - start) * 1e-12
    det_parts, time_parts = [], []
    for det in (1, 2):
        n = rng.poisson(apd.dark_rate * span_s) if apd.dark_rate > 0 else 0
        times = np.floor(rng.uniform(start, stop, n)).astype(np.int64)
        det_parts.append(np.full(n, det, dtype=np.int8))
        time_parts.append(times)
    return np.concatenate(det_parts), np.concatenate(time_parts)


# ------------------------------------------------------------------
# API par enregistrement
# ------------------------------------------------------------------
def detect(arrival, apd: ApdConfig, rng: np.random.Generator, bank: DetectorBank | None = None) -> TimeTag | None:
    """arrival = (photon, temps ps)."""
    _, time = arrival
    detector, tags = detect_batch(np.array([float(time)]), apd, rng)
    if tags.size == 0:
        return None
    tag = TimeTag(time=int(tags[0]), detector=int(detector[0]))
    if bank is not None and not bank.accept(tag.detector, tag.time):
        return None
    return tag


def generate_dark_counts(apd: ApdConfig, span: float, rng: np.random.Generator, start: float = 0.0) -> list[TimeTag]:
    if not span > 0:
        raise DomainError(f"durée de fenêtre non positive ({span} ps)")
    detector, times = dark_count_batch(apd, start, start + span, rng)
    order = np.lexsort((detector, times))
    return [TimeTag(time=int(times[i]), detector=int(detector[i])) for i in order]
