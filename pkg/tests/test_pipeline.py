from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest
from openpyxl import load_workbook
from scipy.stats import chi2, norm

from app.analysis import FringeSample, FringeScan, fit_fringe
from app.detection import ApdConfig
from app.errors import CalibrationError, DomainError, ScenarioValidationError
from app.extensions import db
from app.models import SimulationRun
from app.pipeline.calibration import solve_beta
from app.pipeline.engine import MONTE_CARLO, PointTask, expected_point, run_points, window_fractions
from app.pipeline.exports import sha256_of
from app.pipeline.scenario import PRESETS, HistogramConfig, ScanConfig, load_preset, parse_scenario
from app.pipeline.services import (
    characterize_source,
    list_runs,
    peak_area,
    pulse_profiles,
    resolve_scenario,
    run_scenario,
    scan_fringe,
    simulate_histogram,
)

P6 = 1550.0 / 6


def _small_fringe(pulses=20_000, scan=ScanConfig(0.0, 300.0, 6.0)):
    sc = load_preset("fig3a")
    return sc.replace(train=replace(sc.train, pulse_count=pulses), scan=scan)


# ---- scénarios ----
@pytest.mark.parametrize("name", PRESETS)
def test_presets_load(name):
    sc = load_preset(name)
    assert sc.name == name
    assert sc.violations() == []


def test_mixed_case_keys_are_kept():
    sc = parse_scenario("[scenario]\ntask = table1\nengine = analytic\n[interferometer]\ndelta_L = 30.0e6\n")
    assert sc.interferometer.delta_L == pytest.approx(30.0e6)
    with pytest.raises(ScenarioValidationError) as exc:
        parse_scenario("[scenario]\ntask = table1\nengine = analytic\n[interferometer]\ndelta_l = 30.0e6\n")
    assert any("delta_l" in v for v in exc.value.violations)


def test_empty_scenario_is_rejected():
    with pytest.raises(ScenarioValidationError) as exc:
        parse_scenario("")
    assert any("[scenario]" in v for v in exc.value.violations)


def test_all_violations_reported_together():
    text = "\n".join([
        "[scenario]",
        "task = fringe",
        "engine = mc",
        "[bogus]",
        "x = 1",
        "[spdc]",
        "pump_power = beaucoup",
        "colour = red",
        "[histogram]",
        "bin_width = auto",
    ])
    with pytest.raises(ScenarioValidationError) as exc:
        parse_scenario(text)
    joined = "\n".join(exc.value.violations)
    assert "[bogus]" in joined
    assert "spdc.pump_power" in joined
    assert "spdc.colour" in joined
    assert "histogram.bin_width" in joined
    assert "seed" in joined  # monte-carlo sans graine


def test_engine_alias_and_auto_fields():
    sc = parse_scenario("[scenario]\ntask = table1\nengine = analytic\n[detection]\nquantum_efficiency = auto\n")
    assert sc.engine == "analytic"
    assert ("detection", "quantum_efficiency") in sc.auto
    mc = parse_scenario("[scenario]\ntask = fringe\nengine = mc\nseed = 7\npulses = 1000\n")
    assert mc.engine == "monte-carlo"
    assert mc.train.pulse_count == 1000


# ---- calibration ----
def test_calibration_closure():
    resolved = resolve_scenario(load_preset("fig4"))
    cal = resolved.calibration
    assert cal.classical_full_visibility == pytest.approx(0.69, abs=1e-6)
    assert cal.classical_window_visibility == pytest.approx(0.82, abs=1e-6)
    assert cal.two_photon_visibility == pytest.approx(0.70, abs=1e-6)
    assert 0.0 < cal.mode_overlap_visibility <= 1.0
    assert cal.dark_offset - cal.bright_offset == pytest.approx(1550.0 / 6)

    report = pulse_profiles(resolved)
    assert report.full_visibility == pytest.approx(0.69, abs=0.02)
    assert report.window_visibility == pytest.approx(0.82, abs=0.02)


def test_window_outside_pulse_is_a_calibration_error():
    sc = load_preset("fig4")
    targets = replace(sc.calibration, window_start=9.6, window_stop=9.9)
    with pytest.raises(CalibrationError, match="hors de l'impulsion"):
        solve_beta(sc.train, sc.interferometer, targets)


def test_qe_calibration_hits_target_rate(tmp_path):
    outcome = run_scenario(load_preset("table1"), out=tmp_path)
    results = outcome.summary["results"]
    assert results["coincidence_rate"] == pytest.approx(2000.0, rel=1e-9)
    assert results["event_probability"] == "5.0e-04"
    lines = (tmp_path / "table1.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 + 7


# ---- moteur analytique ----
def test_analytic_two_photon_fringe():
    resolved = resolve_scenario(load_preset("fig3a").replace(engine="analytic"))
    report = scan_fringe(resolved)
    assert report.fit.period == pytest.approx(258.33, abs=1.0)
    assert report.fit.visibility == pytest.approx(0.70, abs=0.05)


def test_analytic_classical_fringe():
    resolved = resolve_scenario(load_preset("fig3b").replace(engine="analytic"))
    report = scan_fringe(resolved)
    assert report.fit.period == pytest.approx(516.67, abs=2.0)
    assert report.fit.visibility == pytest.approx(0.69, abs=0.03)


def test_window_leakage_matches_gaussian_tail():
    resolved = resolve_scenario(load_preset("fig2"))
    f_central, f_side, width = window_fractions(resolved.pipeline)
    assert width == pytest.approx(75.0)
    s = math.sqrt(2.0) * resolved.pipeline.detection.jitter_sigma
    dt = resolved.pipeline.interferometer.delay_ps
    tail = norm.cdf((37.5 - dt) / s) - norm.cdf((-37.5 - dt) / s)
    assert f_side == pytest.approx(tail, rel=1e-6)
    assert f_side < 0.005
    assert f_central == pytest.approx(norm.cdf(37.5 / s) - norm.cdf(-37.5 / s))


# ---- Monte-Carlo ----
@pytest.mark.slow
def test_histogram_has_three_balanced_peaks():
    resolved = resolve_scenario(load_preset("fig2"))
    report = simulate_histogram(resolved)
    assert len(report.peaks) == 3
    for found, expected in zip(report.peaks, (-120.0, 0.0, 120.0)):
        assert abs(found - expected) <= 12.5

    hw = 0.5 * abs(report.delay_ps)
    central = peak_area(report, 0.0, hw)
    sides = peak_area(report, report.delay_ps, hw) + peak_area(report, -report.delay_ps, hw)
    assert central == pytest.approx(sides, rel=0.10)


@pytest.mark.slow
def test_monte_carlo_agrees_with_analytic_engine():
    resolved = resolve_scenario(_small_fringe(pulses=200_000))
    cfg = resolved.pipeline
    for i, offset in enumerate((0.0, 0.5 * P6)):
        task = PointTask(i, offset, 200_000, resolved.scenario.seed, 50_000)
        mc = run_points(cfg, [task], MONTE_CARLO)[0]
        ref = expected_point(cfg, task)
        sigma = math.sqrt(mc.coincidences + mc.accidentals + 1.0)
        assert abs(mc.net - ref.net) < 4.0 * sigma + 0.03 * ref.net


@pytest.mark.slow
def test_singles_are_flat_across_fringe():
    resolved = resolve_scenario(_small_fringe(scan=ScanConfig(0.0, 252.0, 12.0)))
    report = scan_fringe(resolved)
    singles = np.array(report.scan.singles, dtype=float)
    for col in singles.T:
        mean = col.mean()
        stat = float(((col - mean) ** 2 / mean).sum())
        assert stat < chi2.isf(0.001, col.size - 1)


@pytest.mark.slow
def test_noise_only_stream_shows_no_fringe():
    sc = _small_fringe(pulses=10_000, scan=ScanConfig(0.0, 600.0, 6.0))
    sc = sc.replace(
        spdc=replace(sc.spdc, pump_power=0.0),
        upconversion=replace(sc.upconversion, noise_rate=10.0),
        detection=ApdConfig(quantum_efficiency=0.35),
        histogram=HistogramConfig(window_span=3100.0, bin_width=25.0, half_window=3000.0),
        auto=sc.auto - {("detection", "quantum_efficiency")},
    )
    resolved = resolve_scenario(sc)
    tasks = [PointTask(i, off, 10_000, sc.seed, 50_000) for i, off in enumerate(sc.scan.offsets())]
    results = run_points(resolved.pipeline, tasks, MONTE_CARLO)
    scan = FringeScan([FringeSample(r.offset, r.coincidences, r.accidentals) for r in results], step=6.0)
    assert scan.coincidences.mean() > 1000
    fit = fit_fringe(scan, use_net=False)
    assert fit.visibility < 0.05


@pytest.mark.slow
def test_monte_carlo_two_photon_fringe_preset():
    report = scan_fringe(resolve_scenario(load_preset("fig3a")))
    assert report.fit.period == pytest.approx(258.33, abs=1.0)
    assert report.fit.visibility == pytest.approx(0.69, abs=0.05)


@pytest.mark.slow
def test_monte_carlo_classical_fringe_preset():
    report = scan_fringe(resolve_scenario(load_preset("fig3b")))
    assert report.fit.period == pytest.approx(516.67, abs=2.0)
    assert report.fit.visibility == pytest.approx(0.69, abs=0.05)


def test_classical_summary_reports_counts(tmp_path):
    sc = load_preset("fig3b").replace(engine="analytic", scan=ScanConfig(0.0, 600.0, 6.0))
    results = run_scenario(sc, out=tmp_path).summary["results"]
    assert {"mean_counts", "count_rate"} <= set(results)
    assert not {"coincidence_rate", "mean_singles_1", "mean_singles_2"} & set(results)
    assert results["mean_counts"] > 0


@pytest.mark.slow
def test_outputs_identical_for_any_jobs(app_ctx, tmp_path):
    sc = _small_fringe()
    a = run_scenario(sc, jobs=1, out=tmp_path / "a")
    b = run_scenario(sc, jobs=2, out=tmp_path / "b")
    for name in ("fringe.csv", "fit.txt", "summary.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert a.summary == b.summary

    runs = list_runs()
    assert [r.id for r in runs] == [b.run_id, a.run_id]
    kinds = {art.kind for art in runs[0].artifacts}
    assert kinds == {"fringe", "fit", "summary"}


# ---- caractérisation de la source ----
def test_source_analytic_rates_match_measured_setup():
    report = characterize_source(resolve_scenario(load_preset("spdc").replace(engine="analytic")))
    # 3 mW : 12 600 coups simples et 1 320 coïncidences par seconde
    assert report.rate(report.singles[0]) == pytest.approx(12_600, rel=0.02)
    assert report.rate(report.singles[1]) == report.rate(report.singles[0])
    assert report.rate(report.net) == pytest.approx(1_320, rel=0.02)
    # les coups d'obscurité gonflent S₁·S₂ d'environ 1.6 %
    assert report.pair_yield == pytest.approx(4.0e4, rel=0.03)


@pytest.mark.slow
def test_source_monte_carlo_yield_estimate():
    sc = load_preset("spdc")
    report = characterize_source(resolve_scenario(sc))
    assert report.accidentals < 0.02 * report.coincidences
    assert report.pair_yield == pytest.approx(sc.spdc.pair_yield, rel=0.10)
    peak = report.histogram.counts[np.abs(report.histogram.centers) < 100].sum()
    assert peak > 0.95 * report.histogram.total


def test_source_without_net_coincidences_is_domain_error():
    sc = load_preset("spdc").replace(engine="analytic")
    sc = sc.replace(detection=replace(sc.detection, quantum_efficiency=0.0))
    report = characterize_source(resolve_scenario(sc))
    with pytest.raises(DomainError):
        _ = report.pair_yield


# ---- artefacts et ledger ----
def test_run_scenario_records_artifacts(app_ctx, tmp_path):
    outcome = run_scenario(load_preset("fig4"), out=tmp_path, xlsx=True)
    assert set(outcome.files) == {"profile_A", "profile_B", "summary", "workbook"}
    header = (tmp_path / "profile_A.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "t_ns,intensity"

    run = db.session.get(SimulationRun, outcome.run_id)
    assert run.task == "profile"
    assert run.summary["results"]["full_pulse_visibility"] == pytest.approx(0.69, abs=0.02)
    for art in run.artifacts:
        assert art.sha256 == sha256_of(art.path)

    wb = load_workbook(tmp_path / "report.xlsx")
    assert "Synthese" in wb.sheetnames
    assert len(wb.sheetnames) == 3


def test_invalid_scenario_writes_nothing(tmp_path):
    sc = load_preset("table1").replace(task="nope")
    with pytest.raises(ScenarioValidationError):
        run_scenario(sc, out=tmp_path / "out")
    assert not (tmp_path / "out").exists()


def test_ledger_can_be_disabled(app, tmp_path):
    app.config["RECORD_RUNS"] = False
    with app.app_context():
        outcome = run_scenario(load_preset("table1"), out=tmp_path)
        assert outcome.run_id is None
        assert SimulationRun.query.count() == 0
