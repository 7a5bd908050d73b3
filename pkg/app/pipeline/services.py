"""Orchestration des tâches : calibration, exécution des points, artefacts, ledger."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from flask import current_app, has_app_context

from app.analysis.bookkeeping import ComparisonRow, comparison_rows, event_probability, format_probability
from app.analysis.fringe import FringeFit, FringeSample, FringeScan, fit_fringe
from app.analysis.peaks import find_histogram_peaks
from app.analysis.profiles import PulseProfile, visibility_from_profiles
from app.detection.tia import CorrelationHistogram, TagStreams, write_tag_dump
from app.errors import ConfigError, DomainError
from app.extensions import db
from app.interferometer import classical_intensity
from app.model_core import PAIR_SUM
from app.models import RunArtifact, SimulationRun
from app.pipeline import exports
from app.pipeline.calibration import CalibrationResult, calibrate
from app.pipeline.engine import (
    DIRECT,
    INTERFEROMETER,
    MONTE_CARLO,
    PipelineConfig,
    PointResult,
    PointTask,
    run_points,
    unit_qe_signal_per_pulse,
)
from app.pipeline.scenario import Scenario

# --- Correspondance champs "auto" -> inconnues de calibration --------------------
AUTO_TO_SOLVE = {
    ("pulse_train", "edge_swing_beta"): "beta",
    ("interferometer", "mode_overlap_visibility"): "mode",
    ("interferometer", "two_photon_overlap_exponent"): "exponent",
    ("detection", "quantum_efficiency"): "qe",
}


def _logger():
    return current_app.logger if has_app_context() else logging.getLogger("franson")


def _setting(key: str, default):
    return current_app.config.get(key, default) if has_app_context() else default


@dataclass
class ResolvedScenario:
    scenario: Scenario
    pipeline: PipelineConfig
    calibration: CalibrationResult


def resolve_scenario(scenario: Scenario) -> ResolvedScenario:
    """Résout les paramètres "auto" et construit la config du pipeline."""
    log = _logger()
    solve = frozenset(AUTO_TO_SOLVE[key] for key in scenario.auto)

    def per_pulse(train, ifm):
        cfg = PipelineConfig(
            train, scenario.spdc, scenario.upconversion, ifm, scenario.detection,
            scenario.histogram, scenario.classical, scenario.mode,
        )
        return unit_qe_signal_per_pulse(cfg, ifm)

    result = calibrate(
        scenario.train,
        scenario.interferometer,
        scenario.calibration,
        solve=solve,
        coincidence_per_qe2=per_pulse,
        logger=log,
    )
    if solve:
        log.info(
            "calibration : beta=%.6f V_mode=%.6f exposant=%.6f qe=%s",
            result.edge_swing_beta,
            result.mode_overlap_visibility,
            result.two_photon_overlap_exponent,
            "-" if result.quantum_efficiency is None else f"{result.quantum_efficiency:.6f}",
        )

    train = replace(scenario.train, edge_swing_beta=result.edge_swing_beta)
    ifm = replace(
        scenario.interferometer,
        mode_overlap_visibility=result.mode_overlap_visibility,
        two_photon_overlap_exponent=result.two_photon_overlap_exponent,
    )
    apd = scenario.detection
    if result.quantum_efficiency is not None:
        apd = replace(apd, quantum_efficiency=result.quantum_efficiency)

    if scenario.task != "spdc" and scenario.spdc.single_photon_coherence_time > 0.1 * abs(ifm.delay_ps):
        log.warning(
            "tau1=%.3g ps n'est pas << delta_tau_L=%.3g ps : interférence à un photon non modélisée",
            scenario.spdc.single_photon_coherence_time,
            ifm.delay_ps,
        )

    pipeline = PipelineConfig(
        train, scenario.spdc, scenario.upconversion, ifm, apd, scenario.histogram, scenario.classical, scenario.mode,
        routing=DIRECT if scenario.task == "spdc" else INTERFEROMETER,
    )
    resolved_scenario = scenario.replace(train=train, interferometer=ifm, detection=apd)
    return ResolvedScenario(resolved_scenario, pipeline, result)


def _require_seed(scenario: Scenario):
    if scenario.engine == MONTE_CARLO and scenario.seed is None:
        raise ConfigError("seed obligatoire pour le moteur monte-carlo")


def _batch_pulses() -> int:
    return int(_setting("BATCH_PULSES", 50_000))


# ------------------------------------------------------------------
# Histogramme (ΔL fixe, éventuellement moyenné sur une frange)
# ------------------------------------------------------------------
@dataclass
class HistogramReport:
    histogram: CorrelationHistogram
    accidental_histogram: CorrelationHistogram
    peaks: list[float]
    coincidences: float
    accidentals: float
    singles: tuple[float, float]
    pulses: int
    delay_ps: float
    tags: TagStreams | None = field(default=None, repr=False)

    @property
    def net(self) -> float:
        return float(self.coincidences) - float(self.accidentals)


def peak_area(report: HistogramReport, center: float, half_window: float) -> float:
    """Aire nette (accidentelles retirées) des bins à moins de half_window de center."""
    hist = report.histogram
    mask = np.abs(hist.centers - center) < half_window
    return float(hist.counts[mask].sum() - report.accidental_histogram.counts[mask].sum())


def simulate_histogram(resolved: ResolvedScenario, jobs: int = 1, keep_tags: bool = False) -> HistogramReport:
    scenario, cfg = resolved.scenario, resolved.pipeline
    _require_seed(scenario)
    steps = cfg.histogram.phase_average_steps
    pulses = scenario.train.pulse_count
    period6 = PAIR_SUM.period()
    budgets = [pulses // steps + (1 if k < pulses % steps else 0) for k in range(steps)]
    tasks = [
        PointTask(k, k * period6 / steps, budgets[k], scenario.seed, _batch_pulses(), keep_tags)
        for k in range(steps)
    ]
    results = run_points(cfg, tasks, scenario.engine, jobs)

    hist = results[0].histogram
    acc = results[0].accidental_histogram
    for r in results[1:]:
        hist = hist + r.histogram
        acc = acc + r.accidental_histogram

    tags = _merge_tags(results, cfg.train.period_ps) if keep_tags else None
    delay = cfg.interferometer.delay_ps
    return HistogramReport(
        histogram=hist,
        accidental_histogram=acc,
        peaks=find_histogram_peaks(hist, expected_separation=abs(delay)),
        coincidences=sum(r.coincidences for r in results),
        accidentals=sum(r.accidentals for r in results),
        singles=(sum(r.singles[0] for r in results), sum(r.singles[1] for r in results)),
        pulses=pulses,
        delay_ps=delay,
        tags=tags,
    )


def _merge_tags(results: list[PointResult], period_ps: float) -> TagStreams | None:
    """Concatène les flux des sous-points à la suite sur l'axe du temps."""
    if not any(r.tags is not None for r in results):
        return None
    d1, d2 = [], []
    first = 0
    for r in results:
        if r.tags is not None:
            shift = np.int64(round(first * period_ps))
            d1.append(r.tags.detector1 + shift)
            d2.append(r.tags.detector2 + shift)
        first += r.pulses
    return TagStreams(np.concatenate(d1), np.concatenate(d2))


# ------------------------------------------------------------------
# Scan de franges
# ------------------------------------------------------------------
@dataclass
class FringeReport:
    scan: FringeScan
    fit: FringeFit
    results: list[PointResult] = field(repr=False)


def scan_fringe(resolved: ResolvedScenario, jobs: int = 1) -> FringeReport:
    scenario, cfg = resolved.scenario, resolved.pipeline
    _require_seed(scenario)
    offsets = scenario.scan.offsets()
    tasks = [
        PointTask(i, off, scenario.train.pulse_count, scenario.seed, _batch_pulses())
        for i, off in enumerate(offsets)
    ]
    results = run_points(cfg, tasks, scenario.engine, jobs)
    scan = FringeScan(
        samples=[FringeSample(r.offset, r.coincidences, r.accidentals) for r in results],
        step=scenario.scan.step,
        mode=scenario.mode,
        singles=[r.singles for r in results],
    )
    return FringeReport(scan=scan, fit=fit_fringe(scan), results=results)


# ------------------------------------------------------------------
# Profils temporels A / B
# ------------------------------------------------------------------
@dataclass
class ProfileReport:
    profile_a: PulseProfile
    profile_b: PulseProfile
    full_visibility: float
    window_visibility: float
    bright_offset: float
    dark_offset: float


def pulse_profiles(resolved: ResolvedScenario) -> ProfileReport:
    scenario, cfg = resolved.scenario, resolved.pipeline
    p = scenario.profile
    n = int(round((p.t_stop - p.t_start) / p.t_step)) + 1
    t_ns = p.t_start + p.t_step * np.arange(n)
    ifm = cfg.interferometer
    profiles = []
    for label, offset in (("A", resolved.calibration.bright_offset), ("B", resolved.calibration.dark_offset)):
        delta_L = ifm.delta_L + offset
        profiles.append(PulseProfile(t_ns, classical_intensity(delta_L, t_ns * 1e3, cfg.train, ifm), label))
    a, b = profiles
    return ProfileReport(
        profile_a=a,
        profile_b=b,
        full_visibility=visibility_from_profiles(a, b, float(t_ns[0]), float(t_ns[-1])),
        window_visibility=visibility_from_profiles(a, b, p.window_start, p.window_stop),
        bright_offset=resolved.calibration.bright_offset,
        dark_offset=resolved.calibration.dark_offset,
    )


# ------------------------------------------------------------------
# Tableau de comparaison
# ------------------------------------------------------------------
def simulated_coincidence_rate(resolved: ResolvedScenario) -> float:
    """Taux (coups/s) de coïncidences vraies, moyenné sur une frange."""
    cfg = resolved.pipeline
    qe = cfg.detection.quantum_efficiency
    return cfg.train.repetition_rate * 1e6 * unit_qe_signal_per_pulse(cfg) * qe * qe


def report_table1(resolved: ResolvedScenario) -> list[ComparisonRow]:
    return comparison_rows(simulated_coincidence_rate(resolved), resolved.pipeline.train.repetition_rate)


# ------------------------------------------------------------------
# Caractérisation de la source (routage direct)
# ------------------------------------------------------------------
@dataclass
class SourceReport:
    histogram: CorrelationHistogram
    accidental_histogram: CorrelationHistogram
    singles: tuple[float, float]
    coincidences: float
    accidentals: float
    pulses: int
    repetition_rate: float  # MHz
    pump_power: float  # mW

    def rate(self, counts: float) -> float:
        """Coups par seconde de mesure."""
        return float(counts) * self.repetition_rate * 1e6 / max(self.pulses, 1)

    @property
    def net(self) -> float:
        return float(self.coincidences) - float(self.accidentals)

    @property
    def pair_rate(self) -> float:
        """Paires émises par seconde, S₁·S₂/C : les efficacités de chaque bras se simplifient."""
        c = self.rate(self.net)
        if c <= 0:
            raise DomainError("aucune coïncidence nette : taux de paires indéterminé")
        return self.rate(self.singles[0]) * self.rate(self.singles[1]) / c

    @property
    def pair_yield(self) -> float:
        """Paires / (mW·s)."""
        if not self.pump_power > 0:
            raise DomainError("puissance pompe nulle : rendement indéterminé")
        return self.pair_rate / self.pump_power


def characterize_source(resolved: ResolvedScenario) -> SourceReport:
    scenario, cfg = resolved.scenario, resolved.pipeline
    _require_seed(scenario)
    task = PointTask(0, 0.0, scenario.train.pulse_count, scenario.seed, _batch_pulses())
    r = run_points(cfg, [task], scenario.engine)[0]
    return SourceReport(
        histogram=r.histogram,
        accidental_histogram=r.accidental_histogram,
        singles=r.singles,
        coincidences=r.coincidences,
        accidentals=r.accidentals,
        pulses=r.pulses,
        repetition_rate=cfg.train.repetition_rate,
        pump_power=cfg.spdc.pump_power,
    )


# ------------------------------------------------------------------
# run_scenario : artefacts + résumé + ledger
# ------------------------------------------------------------------
@dataclass
class RunOutcome:
    output_dir: Path
    files: dict[str, Path]
    summary: dict[str, dict]
    run_id: int | None = None


def _scenario_section(scenario: Scenario) -> dict:
    return {
        "name": scenario.name,
        "task": scenario.task,
        "engine": scenario.engine,
        "mode": scenario.mode,
        "seed": "" if scenario.seed is None else str(scenario.seed),
        "pulses": scenario.train.pulse_count,
        "delta_L_nm": scenario.interferometer.delta_L,
    }


def _calibration_section(resolved: ResolvedScenario) -> dict:
    cfg = resolved.pipeline
    cal = resolved.calibration
    return {
        "edge_swing_beta": cfg.train.edge_swing_beta,
        "mode_overlap_visibility": cfg.interferometer.mode_overlap_visibility,
        "two_photon_overlap_exponent": cfg.interferometer.two_photon_overlap_exponent,
        "quantum_efficiency": cfg.detection.quantum_efficiency,
        "classical_full_visibility": cal.classical_full_visibility,
        "classical_window_visibility": cal.classical_window_visibility,
        "two_photon_visibility": cal.two_photon_visibility,
    }


def resolve_output_dir(scenario: Scenario, out=None) -> Path:
    if out:
        return Path(out)
    if scenario.output_dir:
        return Path(scenario.output_dir)
    return Path(_setting("DEFAULT_OUTPUT_DIR", "out")) / scenario.name


def run_scenario(scenario: Scenario, *, jobs: int | None = None, out=None, xlsx: bool = False, dump_tags: bool = False) -> RunOutcome:
    log = _logger()
    scenario.validate()
    jobs = int(jobs or scenario.jobs or _setting("DEFAULT_JOBS", 1))
    out_dir = resolve_output_dir(scenario, out)
    os.makedirs(out_dir, exist_ok=True)

    log.info("run %s : task=%s engine=%s mode=%s seed=%s jobs=%d", scenario.name, scenario.task, scenario.engine, scenario.mode, scenario.seed, jobs)
    resolved = resolve_scenario(scenario)
    rate_hz = resolved.pipeline.train.repetition_rate * 1e6

    files: dict[str, Path] = {}
    summary: dict[str, dict] = {
        "scenario": _scenario_section(scenario),
        "calibration": _calibration_section(resolved),
    }

    if scenario.task == "histogram":
        report = simulate_histogram(resolved, jobs, keep_tags=dump_tags)
        files["histogram"] = exports.write_histogram_csv(out_dir / "histogram.csv", report.histogram)
        files["accidentals"] = exports.write_histogram_csv(out_dir / "accidentals_histogram.csv", report.accidental_histogram)
        if dump_tags and report.tags is not None:
            files["tags"] = write_tag_dump(out_dir / "tags.txt", report.tags)
        # aires sur une demi-séparation : même couverture pour les trois pics
        hw = 0.5 * abs(report.delay_ps)
        side = peak_area(report, report.delay_ps, hw) + peak_area(report, -report.delay_ps, hw)
        net_rate = report.net * rate_hz / max(report.pulses, 1)
        summary["results"] = {
            "peaks_ps": ", ".join(f"{p:.2f}" for p in report.peaks),
            "peak_count": len(report.peaks),
            "coincidences": report.coincidences,
            "accidentals": report.accidentals,
            "net": report.net,
            "central_area": peak_area(report, 0.0, hw),
            "side_area": side,
            "singles_1": report.singles[0],
            "singles_2": report.singles[1],
            "coincidence_rate": net_rate,
            "event_probability": format_probability(event_probability(max(net_rate, 0.0), scenario.train.repetition_rate)),
        }

    elif scenario.task == "fringe":
        report = scan_fringe(resolved, jobs)
        files["fringe"] = exports.write_fringe_csv(out_dir / "fringe.csv", report.scan)
        files["fit"] = exports.write_fit_report(out_dir / "fit.txt", report.fit)
        mean_net = float(np.mean(report.scan.net))
        rate = mean_net * rate_hz / max(scenario.train.pulse_count, 1)
        results = {**exports.fit_fields(report.fit), "points": len(report.scan.samples)}
        if scenario.mode == "classical-beam":
            # un seul détecteur : des coups, pas des coïncidences
            results.update({"mean_counts": mean_net, "count_rate": rate})
        else:
            singles = np.array(report.scan.singles, dtype=float)
            results.update({
                "mean_net": mean_net,
                "mean_singles_1": float(singles[:, 0].mean()),
                "mean_singles_2": float(singles[:, 1].mean()),
                "coincidence_rate": rate,
            })
        summary["results"] = results

    elif scenario.task == "profile":
        report = pulse_profiles(resolved)
        files["profile_A"] = exports.write_profile_csv(out_dir / "profile_A.csv", report.profile_a)
        files["profile_B"] = exports.write_profile_csv(out_dir / "profile_B.csv", report.profile_b)
        summary["results"] = {
            "full_pulse_visibility": report.full_visibility,
            "window_visibility": report.window_visibility,
            "bright_offset_nm": report.bright_offset,
            "dark_offset_nm": report.dark_offset,
        }

    elif scenario.task == "spdc":
        report = characterize_source(resolved)
        files["histogram"] = exports.write_histogram_csv(out_dir / "histogram.csv", report.histogram)
        files["accidentals"] = exports.write_histogram_csv(out_dir / "accidentals_histogram.csv", report.accidental_histogram)
        summary["results"] = {
            "singles_1": report.singles[0],
            "singles_2": report.singles[1],
            "coincidences": report.coincidences,
            "accidentals": report.accidentals,
            "singles_rate_1": report.rate(report.singles[0]),
            "singles_rate_2": report.rate(report.singles[1]),
            "coincidence_rate": report.rate(report.net),
            "pair_rate": report.pair_rate,
            "pair_yield_per_mw": report.pair_yield,
        }

    else:  # table1
        rows = report_table1(resolved)
        files["table1"] = exports.write_table_csv(out_dir / "table1.csv", rows)
        simulated = rows[-1]
        summary["results"] = {
            "coincidence_rate": simulated.rate,
            "event_probability": format_probability(simulated.event_probability),
        }

    files["summary"] = exports.write_summary(out_dir / "summary.txt", summary)
    if xlsx:
        csvs = {k: p for k, p in files.items() if p.suffix == ".csv"}
        files["workbook"] = exports.export_workbook(out_dir / "report.xlsx", summary, csvs)

    for kind, path in files.items():
        log.info("artefact %s -> %s", kind, path)

    outcome = RunOutcome(out_dir, files, summary)
    outcome.run_id = record_run(scenario, jobs, outcome)
    return outcome


# ------------------------------------------------------------------
# Ledger
# ------------------------------------------------------------------
def record_run(scenario: Scenario, jobs: int, outcome: RunOutcome) -> int | None:
    """Enregistre le run ; un échec du ledger n'échoue jamais le run."""
    if not has_app_context() or not current_app.config.get("RECORD_RUNS", True):
        return None
    try:
        run = SimulationRun(
            name=scenario.name,
            task=scenario.task,
            engine=scenario.engine,
            mode=scenario.mode,
            seed=None if scenario.seed is None else str(scenario.seed),
            jobs=jobs,
            output_dir=str(outcome.output_dir),
            status="ok",
            summary_json=json.dumps(outcome.summary, ensure_ascii=False, default=str),
        )
        for kind, path in outcome.files.items():
            run.artifacts.append(
                RunArtifact(kind=kind, path=str(path), sha256=exports.sha256_of(path), size_bytes=Path(path).stat().st_size)
            )
        db.session.add(run)
        db.session.commit()
        return run.id
    except Exception:
        db.session.rollback()
        current_app.logger.exception("Impossible d'enregistrer le run %s dans le ledger", scenario.name)
        return None


def list_runs(limit: int = 20) -> list[SimulationRun]:
    return SimulationRun.query.order_by(SimulationRun.id.desc()).limit(limit).all()
