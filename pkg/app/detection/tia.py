"""Analyseur d'intervalles de temps : flux de tags, histogramme Δτ = t₂ − t₁."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from app.detection.apd import TimeTag
from app.errors import ContractError, DomainError

TIA_BIN_WIDTH = 25.0  # ps


@dataclass
class TagStreams:
    detector1: np.ndarray  # int64, triés
    detector2: np.ndarray

    def __post_init__(self):
        self.detector1 = np.asarray(self.detector1, dtype=np.int64)
        self.detector2 = np.asarray(self.detector2, dtype=np.int64)

    @property
    def singles(self) -> tuple[int, int]:
        return int(self.detector1.size), int(self.detector2.size)

    def check_sorted(self):
        for label, arr in (("détecteur 1", self.detector1), ("détecteur 2", self.detector2)):
            if arr.size > 1 and np.any(np.diff(arr) < 0):
                raise ContractError(f"tags du {label} non triés")

    @classmethod
    def from_tags(cls, tags: list[TimeTag]) -> "TagStreams":
        d1 = [t.time for t in tags if t.detector == 1]
        d2 = [t.time for t in tags if t.detector == 2]
        return cls(np.array(d1, dtype=np.int64), np.array(d2, dtype=np.int64))

    def to_tags(self) -> list[TimeTag]:
        tags = [TimeTag(int(t), 1) for t in self.detector1] + [TimeTag(int(t), 2) for t in self.detector2]
        return sorted(tags)


@dataclass
class CorrelationHistogram:
    bin_width: float
    origin: float  # bord gauche du premier bin (ps)
    counts: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return self.origin + self.bin_width * (np.arange(self.counts.size) + 0.5)

    @property
    def total(self):
        return self.counts.sum()

    def __add__(self, other: "CorrelationHistogram") -> "CorrelationHistogram":
        if other.bin_width != self.bin_width or other.origin != self.origin or other.counts.size != self.counts.size:
            raise ContractError("histogrammes de binning différent")
        return CorrelationHistogram(self.bin_width, self.origin, self.counts + other.counts)


def histogram_layout(window_span: float, bin_width: float = TIA_BIN_WIDTH) -> tuple[float, int]:
    """(origine, nombre de bins) : bins centrés sur les multiples de bin_width."""
    if not bin_width > 0:
        raise DomainError("bin_width doit être > 0")
    if not window_span >= 0:
        raise DomainError("window_span doit être >= 0")
    half = int(math.ceil(window_span / bin_width))
    return -(half + 0.5) * bin_width, 2 * half + 1


def pair_differences(tags: TagStreams, window_span: float, shift: float = 0.0) -> np.ndarray:
    """Tous les Δτ = (t₂ − shift) − t₁ avec |Δτ| ≤ window_span, ordonnés par tag du détecteur 1."""
    tags.check_sorted()
    t1 = tags.detector1
    t2 = tags.detector2 - np.int64(round(shift))
    if t1.size == 0 or t2.size == 0:
        return np.zeros(0, dtype=np.int64)
    lo = np.searchsorted(t2, t1 - window_span, side="left")
    hi = np.searchsorted(t2, t1 + window_span, side="right")
    n = hi - lo
    total = int(n.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    starts = np.repeat(lo, n) + (np.arange(total) - np.repeat(np.cumsum(n) - n, n))
    return t2[starts] - np.repeat(t1, n)


def correlate(
    tags: TagStreams, window_span: float, bin_width: float = TIA_BIN_WIDTH, shift: float = 0.0
) -> CorrelationHistogram:
    origin, nbins = histogram_layout(window_span, bin_width)
    dtau = pair_differences(tags, window_span, shift)
    idx = np.floor((dtau - origin) / bin_width).astype(np.int64)
    counts = np.bincount(idx, minlength=nbins)[:nbins].astype(np.int64)
    return CorrelationHistogram(bin_width=bin_width, origin=origin, counts=counts)


# ------------------------------------------------------------------
# Dump texte des tags : "detector<TAB>time_ps"
# ------------------------------------------------------------------
def write_tag_dump(path, tags: TagStreams) -> Path:
    path = Path(path)
    det = np.concatenate([np.full(tags.detector1.size, 1), np.full(tags.detector2.size, 2)])
    times = np.concatenate([tags.detector1, tags.detector2])
    order = np.lexsort((det, times))
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for i in order:
            f.write(f"{det[i]}\t{times[i]}\n")
    return path


def read_tag_dump(path) -> TagStreams:
    d1, d2 = [], []
    with Path(path).open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                det_s, time_s = line.split("\t")
                det, t = int(det_s), int(time_s)
            except ValueError as e:
                raise ContractError(f"ligne {lineno} illisible : {line!r}") from e
            if det == 1:
                d1.append(t)
            elif det == 2:
                d2.append(t)
            else:
                raise ContractError(f"ligne {lineno} : détecteur {det} inconnu")
    return TagStreams(np.array(d1, dtype=np.int64), np.array(d2, dtype=np.int64))
