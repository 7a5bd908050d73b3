"""Écriture des artefacts : CSV, rapports texte, classeur Excel."""

from __future__ import annotations

import configparser
import csv
import hashlib
from pathlib import Path

import numpy as np
from openpyxl import Workbook

from app.analysis.bookkeeping import ComparisonRow, format_probability
from app.analysis.fringe import FringeFit, FringeScan
from app.analysis.profiles import PulseProfile
from app.detection.tia import CorrelationHistogram


def fmt(value) -> str:
    """Format stable : entiers sans décimale, réels en 12 chiffres significatifs."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return format(v, ".12g")


def _write_rows(path: Path, header: list[str], rows) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return path


def write_histogram_csv(path, hist: CorrelationHistogram) -> Path:
    return _write_rows(path, ["dtau_ps", "counts"], zip(hist.centers.tolist(), hist.counts.tolist()))


def write_fringe_csv(path, scan: FringeScan) -> Path:
    rows = ((s.delta_L, s.coincidences, s.accidentals, s.net) for s in scan.samples)
    return _write_rows(path, ["delta_L_nm", "coincidences", "accidentals", "net"], rows)


def write_profile_csv(path, profile: PulseProfile) -> Path:
    return _write_rows(path, ["t_ns", "intensity"], zip(profile.t_ns.tolist(), profile.intensity.tolist()))


def write_table_csv(path, rows: list[ComparisonRow]) -> Path:
    out = (
        (
            r.label,
            r.interfering_photons,
            r.fringe_period_nm,
            r.rate,
            "cw" if r.repetition is None else fmt(r.repetition),
            format_probability(r.event_probability),
        )
        for r in rows
    )
    return _write_rows(
        path,
        ["experiment", "interfering_photons", "fringe_period_nm", "event_rate", "repetition_mhz", "event_probability"],
        out,
    )


def _write_sections(path, sections: dict[str, dict]) -> Path:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for name, values in sections.items():
        parser[name] = {k: fmt(v) if not isinstance(v, str) else v for k, v in values.items()}
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        parser.write(f)
    return path


def fit_fields(fit: FringeFit) -> dict:
    return {
        "period_nm": fit.period,
        "visibility": fit.visibility,
        "phase_rad": fit.phase,
        "offset": fit.offset,
        "residual_rms": fit.residual_rms,
    }


def write_fit_report(path, fit: FringeFit) -> Path:
    return _write_sections(path, {"fit": fit_fields(fit)})


def write_summary(path, sections: dict[str, dict]) -> Path:
    return _write_sections(path, sections)


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


# ------------------------------------------------------------------
# Classeur Excel
# ------------------------------------------------------------------
def _safe_sheet_title(name: str, fallback: str = "Feuille") -> str:
    """Openpyxl: max 31 chars, no [ ] * ? / \\ etc."""
    if not name:
        name = fallback
    bad = set('[]:*?/\\')
    cleaned = "".join(c for c in name if c not in bad).strip()
    return cleaned[:31] if cleaned else fallback


def export_workbook(path, summary: dict[str, dict], csv_files: dict[str, Path]) -> Path:
    """Synthèse en première feuille, puis une feuille par CSV produit."""
    wb = Workbook()
    ws0 = wb.active
    ws0.title = "Synthese"
    for section, values in summary.items():
        ws0.append([section])
        for k, v in values.items():
            ws0.append([k, v if isinstance(v, (int, float, str)) or v is None else str(v)])
        ws0.append([])

    for title, csv_path in csv_files.items():
        ws = wb.create_sheet(_safe_sheet_title(title))
        with Path(csv_path).open("r", encoding="utf-8", newline="") as f:
            for i, row in enumerate(csv.reader(f)):
                if i == 0:
                    ws.append(row)
                    continue
                ws.append([_cell(v) for v in row])

    path = Path(path)
    wb.save(path)
    return path


def _cell(value: str):
    try:
        f = float(value)
    except ValueError:
        return value
    return int(f) if f.is_integer() and "." not in value and "e" not in value.lower() else f
