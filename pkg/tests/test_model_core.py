from __future__ import annotations

import math

import pytest

from app.errors import DomainError
from app.model_core import (
    CLASSICAL_BEAM,
    PAIR_SUM,
    PhaseModel,
    UPCONVERTED_WAVELENGTH,
    fringe_phase,
    sum_frequency_wavelength,
    time_delay,
)


def test_time_delay_examples():
    assert time_delay(36.0e6) == pytest.approx(120.08, abs=0.01)
    assert time_delay(0.0) == 0.0
    assert time_delay(74.948e6) == pytest.approx(250.0, abs=0.01)
    assert time_delay(-36.0e6) == pytest.approx(-120.08, abs=0.01)


def test_time_delay_is_linear():
    a, b = 12_345_678.9, -3_210_987.6
    assert time_delay(a + b) == pytest.approx(time_delay(a) + time_delay(b), rel=1e-14, abs=1e-12)


@pytest.mark.parametrize("bad", [float("nan"), float("inf")])
def test_time_delay_rejects_non_finite(bad):
    with pytest.raises(DomainError):
        time_delay(bad)


def test_sum_frequency_wavelength():
    assert sum_frequency_wavelength(1550, 775) == pytest.approx(516.6667, abs=1e-4)
    assert sum_frequency_wavelength(800, 800) == pytest.approx(400.0)
    assert sum_frequency_wavelength(1550, 1550) == pytest.approx(775.0)
    assert sum_frequency_wavelength(1310, 980) == sum_frequency_wavelength(980, 1310)
    out = sum_frequency_wavelength(1550, 775)
    assert 1 / out == pytest.approx(1 / 1550 + 1 / 775, rel=1e-15)
    assert UPCONVERTED_WAVELENGTH == pytest.approx(516.6667, abs=1e-4)


@pytest.mark.parametrize("a,b", [(0, 775), (1550, -1)])
def test_sum_frequency_rejects_non_positive(a, b):
    with pytest.raises(DomainError):
        sum_frequency_wavelength(a, b)


def test_fringe_phase_examples():
    assert fringe_phase(258.3, 1550, PAIR_SUM) / (2 * math.pi) == pytest.approx(0.99987, abs=1e-5)
    assert fringe_phase(0.0, 1550, PAIR_SUM) == 0.0
    assert fringe_phase(516.6, 1550, CLASSICAL_BEAM) / (2 * math.pi) == pytest.approx(0.99987, abs=1e-4)
    with pytest.raises(DomainError):
        fringe_phase(1.0, 0.0, PAIR_SUM)


@pytest.mark.parametrize("model", [PhaseModel(1), PhaseModel(2), CLASSICAL_BEAM, PAIR_SUM])
@pytest.mark.parametrize("delta_L", [-800.0, 0.0, 123.4, 5000.0])
def test_fringe_phase_period(model, delta_L):
    period = model.period(1550.0)
    diff = fringe_phase(delta_L + period, 1550.0, model) - fringe_phase(delta_L, 1550.0, model)
    assert diff == pytest.approx(2 * math.pi, rel=1e-9)


def test_phase_model_rejects_unsupported_order():
    with pytest.raises(DomainError):
        PhaseModel(4)
