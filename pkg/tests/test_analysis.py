from __future__ import annotations

import math

import numpy as np
import pytest

from app.analysis import (
    FringeSample,
    FringeScan,
    PulseProfile,
    coincidences_in_window,
    comparison_rows,
    estimate_accidentals,
    event_probability,
    find_histogram_peaks,
    fit_fringe,
    subtract_accidentals,
    visibility_from_profiles,
)
from app.analysis.bookkeeping import REFERENCE_ROWS, format_probability
from app.analysis.coincidences import effective_window
from app.detection import CorrelationHistogram, TagStreams, correlate
from app.detection.tia import histogram_layout
from app.errors import ContractError, DomainError, FitError


def _hist(fn, window_span=400.0, bin_width=25.0):
    origin, n = histogram_layout(window_span, bin_width)
    centers = origin + bin_width * (np.arange(n) + 0.5)
    return CorrelationHistogram(bin_width, origin, np.asarray(fn(centers), dtype=float))


def _scan(x, y, step):
    return FringeScan([FringeSample(float(a), float(b), 0.0) for a, b in zip(x, y)], step=step)


# ---- pics ----
def test_flat_histogram_has_no_peaks():
    hist = _hist(lambda c: np.full(c.size, 40.0))
    assert find_histogram_peaks(hist, 120.0) == []


def test_empty_histogram_is_contract_error():
    with pytest.raises(ContractError):
        find_histogram_peaks(CorrelationHistogram(25.0, 0.0, np.zeros(0)), 120.0)


@pytest.mark.parametrize("center", [-7.3, 0.0, 4.1, 11.0])
def test_gaussian_peak_recovered_within_one_ps(center):
    hist = _hist(lambda c: 1000.0 * np.exp(-((c - center) ** 2) / (2 * 30.0**2)))
    peaks = find_histogram_peaks(hist, 120.0)
    assert len(peaks) == 1
    assert peaks[0] == pytest.approx(center, abs=1.0)


def test_three_peaks_are_separated():
    def three(c):
        return sum(a * np.exp(-((c - m) ** 2) / (2 * 30.0**2)) for a, m in ((500, -120), (1000, 0), (500, 120))) + 3

    peaks = find_histogram_peaks(_hist(three), 120.0)
    assert len(peaks) == 3
    for found, expected in zip(peaks, (-120.0, 0.0, 120.0)):
        assert abs(found - expected) <= 12.5


# ---- fenêtre ----
def test_window_on_empty_histogram_is_zero():
    hist = correlate(TagStreams(np.array([], dtype=np.int64), np.array([], dtype=np.int64)), 400)
    assert coincidences_in_window(hist, 46.0) == 0


def test_wide_window_captures_everything():
    hist = _hist(lambda c: np.arange(c.size, dtype=float))
    assert coincidences_in_window(hist, 1e6) == pytest.approx(hist.total)


def test_window_keeps_bins_by_center():
    hist = _hist(lambda c: np.ones(c.size))
    assert coincidences_in_window(hist, 46.0) == 3
    assert effective_window(hist, 46.0) == (-37.5, 37.5)


def test_window_count_on_tags_matches_brute_force(rng):
    t1 = np.sort(rng.integers(0, 1_000_000, 300))
    t2 = np.sort(rng.integers(0, 1_000_000, 300))
    brute = sum(1 for a in t1 for b in t2 if abs(int(b) - int(a)) < 46)
    assert coincidences_in_window(TagStreams(t1, t2), 46.0) == brute
    assert coincidences_in_window(np.array([-46, -45, 0, 45, 46]), 46.0) == 3


def test_window_must_be_positive():
    with pytest.raises(DomainError):
        coincidences_in_window(np.zeros(3), 0.0)


# ---- accidentelles ----
def test_accidentals_of_empty_streams_are_zero():
    empty = TagStreams(np.array([], dtype=np.int64), np.array([], dtype=np.int64))
    assert estimate_accidentals(empty, 250.0, 46.0) == 0


def test_accidentals_unbiased_on_stationary_background():
    span = 10_000_000_000  # 10 ms
    diffs = []
    for seed in range(50):
        rng = np.random.default_rng(seed)
        n1, n2 = rng.poisson(100_000, 2)
        streams = TagStreams(np.sort(rng.integers(0, span, n1)), np.sort(rng.integers(0, span, n2)))
        direct = coincidences_in_window(streams, 46.0)
        estimate = estimate_accidentals(streams, 250.0, 46.0)
        diffs.append(direct - estimate)
    diffs = np.array(diffs, dtype=float)
    expected = 1e10 * 91 / span  # n1·n2·91/T
    sigma = math.sqrt(2 * expected / diffs.size)
    assert abs(diffs.mean()) < 3 * sigma


def test_accidentals_average_several_offsets(rng):
    span = 1_000_000_000
    streams = TagStreams(np.sort(rng.integers(0, span, 20_000)), np.sort(rng.integers(0, span, 20_000)))
    single = estimate_accidentals(streams, 250.0, 46.0)
    several = estimate_accidentals(streams, 250.0, 46.0, offsets=(1, 2, 3))
    binned = estimate_accidentals(streams, 250.0, 46.0, bin_width=25.0)
    assert isinstance(single, int)
    assert isinstance(several, float)
    assert binned >= 0


def test_accidentals_vanish_on_sparse_pairs(rng):
    pulses = 200_000
    occupied = np.flatnonzero(rng.random(pulses) < 0.01)
    t1 = occupied * 250_000 + rng.integers(500, 9_500, occupied.size) * 1_000
    t2 = t1 + rng.integers(-30, 31, occupied.size)
    streams = TagStreams(np.sort(t1).astype(np.int64), np.sort(t2).astype(np.int64))
    assert coincidences_in_window(streams, 46.0) == occupied.size
    assert estimate_accidentals(streams, 250.0, 46.0) <= 3


@pytest.mark.parametrize("raw, acc, expected", [(0, 0, 0.0), (100, 20, 80.0), (5, 9, -4.0)])
def test_subtract_accidentals(raw, acc, expected):
    assert subtract_accidentals(raw, acc) == expected


def test_subtract_rejects_negative_counts():
    with pytest.raises(DomainError):
        subtract_accidentals(-1, 0)


# ---- ajustement de franges ----
def test_fit_noiseless_fringe():
    x = np.arange(0.0, 1600.0 + 1e-9, 6.0)
    y = 1000.0 * (1 + 0.7 * np.cos(2 * np.pi * x / 258.33 + 0.4))
    fit = fit_fringe(_scan(x, y, 6.0))
    assert fit.period == pytest.approx(258.33, abs=0.01)
    assert fit.visibility == pytest.approx(0.7, abs=1e-4)
    assert fit.phase == pytest.approx(0.4, abs=1e-3)
    assert fit.offset == pytest.approx(1000.0, rel=1e-4)
    assert fit.residual_rms < 1e-2


@pytest.mark.parametrize("period", [100.0, 258.33, 516.67, 777.0, 1000.0])
def test_fit_recovers_period_over_range(period):
    x = np.arange(0.0, 3000.0 + 1e-9, 6.0)
    y = 50.0 + 20.0 * np.cos(2 * np.pi * x / period - 1.0)
    fit = fit_fringe(_scan(x, y, 6.0))
    assert fit.period == pytest.approx(period, abs=0.05)
    assert fit.visibility == pytest.approx(0.4, abs=1e-3)


def test_fit_phase_is_referenced_to_origin():
    x = 100.0 + np.arange(0.0, 1200.0, 6.0)
    y = 10.0 + 5.0 * np.cos(2 * np.pi * x / 258.33 + 1.2)
    fit = fit_fringe(_scan(x, y, 6.0))
    assert fit.phase == pytest.approx(1.2, abs=1e-3)


def test_fit_is_scale_equivariant(rng):
    x = np.arange(0.0, 1600.0, 6.0)
    y = rng.poisson(200 * (1 + 0.6 * np.cos(2 * np.pi * x / 258.33))).astype(float)
    a = fit_fringe(_scan(x, y, 6.0))
    b = fit_fringe(_scan(x, 7.0 * y, 6.0))
    assert b.period == pytest.approx(a.period, abs=1e-4)
    assert b.visibility == pytest.approx(a.visibility, abs=1e-6)
    assert b.phase == pytest.approx(a.phase, abs=1e-4)
    assert b.offset == pytest.approx(7.0 * a.offset, rel=1e-6)


def test_flat_scan_is_fit_error():
    x = np.arange(0.0, 600.0, 6.0)
    with pytest.raises(FitError):
        fit_fringe(_scan(x, np.full(x.size, 12.0), 6.0))


def test_short_scan_is_fit_error():
    with pytest.raises(FitError):
        fit_fringe(_scan([0.0, 6.0, 12.0], [1.0, 2.0, 3.0], 6.0))


def test_scan_must_be_uniform_and_increasing():
    with pytest.raises(ContractError):
        _scan([0.0, 6.0, 18.0], [1.0, 2.0, 3.0], 6.0)
    with pytest.raises(ContractError):
        _scan([6.0, 0.0], [1.0, 2.0], 6.0)


def test_subtracting_accidentals_raises_visibility(rng):
    x = np.arange(0.0, 1600.0 + 1e-9, 6.0)
    true = 200.0 * (1 + 0.7 * np.cos(2 * np.pi * x / 258.33))
    acc = rng.poisson(2000.0, x.size)
    raw = rng.poisson(true + 2000.0)
    scan = FringeScan([FringeSample(a, int(b), int(c)) for a, b, c in zip(x, raw, acc)], step=6.0)
    net = fit_fringe(scan)
    gross = fit_fringe(scan, use_net=False)
    assert gross.visibility < 0.15
    assert net.visibility >= gross.visibility
    assert net.visibility == pytest.approx(0.7, abs=0.15)


def test_net_counts_use_accidentals():
    scan = FringeScan([FringeSample(0.0, 10, 3), FringeSample(6.0, 4, 5)], step=6.0)
    assert scan.net.tolist() == [7.0, -1.0]


# ---- profils ----
def test_identical_profiles_have_zero_visibility():
    t = np.linspace(0.0, 10.0, 201)
    p = PulseProfile(t, np.sin(np.pi * t / 10.0) ** 2)
    assert visibility_from_profiles(p, p, 0.0, 10.0) == pytest.approx(0.0, abs=1e-12)


def test_flat_profiles_visibility():
    t = np.linspace(0.0, 10.0, 101)
    bright = PulseProfile(t, np.full(t.size, 1.7))
    dark = PulseProfile(np.linspace(0.0, 10.0, 37), np.full(37, 0.3))
    assert visibility_from_profiles(bright, dark, 2.5, 7.5) == pytest.approx(0.7, abs=1e-9)


def test_profile_window_errors():
    t = np.linspace(0.0, 10.0, 11)
    p = PulseProfile(t, np.ones(t.size))
    with pytest.raises(DomainError):
        visibility_from_profiles(p, p, 5.0, 5.0)
    with pytest.raises(ContractError):
        visibility_from_profiles(p, p, -1.0, 5.0)
    z = PulseProfile(t, np.zeros(t.size))
    with pytest.raises(DomainError):
        visibility_from_profiles(z, z, 1.0, 5.0)


def test_profile_area_is_restricted_to_window():
    t = np.linspace(0.0, 10.0, 11)
    p = PulseProfile(t, t)
    assert p.area(0.0, 10.0) == pytest.approx(50.0)
    assert p.area(2.5, 7.5) == pytest.approx(25.0)
    assert p.area(2.5, 7.5, np.linspace(0.0, 10.0, 41)) == pytest.approx(25.0)
    with pytest.raises(ContractError):
        p.area(-1.0, 5.0)


# ---- comptabilité ----
def test_event_probability_examples():
    assert event_probability(2000.0, 4.0) == pytest.approx(5e-4, rel=1e-12)
    assert format_probability(event_probability(4800.0, 76.0)) == "6.3e-05"
    assert event_probability(0.0, 4.0) == 0.0


def test_event_probability_rejects_bad_input():
    with pytest.raises(DomainError):
        event_probability(10.0, 0.0)
    with pytest.raises(DomainError):
        event_probability(-1.0, 4.0)


def test_comparison_rows_append_simulated_rate():
    rows = comparison_rows(simulated_rate=2000.0)
    assert rows[: len(REFERENCE_ROWS)] == list(REFERENCE_ROWS)
    assert rows[-1].label == "simulated"
    assert rows[-1].event_probability == pytest.approx(5e-4)
    assert REFERENCE_ROWS[0].event_probability is None
