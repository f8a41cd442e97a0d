"""Exhaustion forecasting against an independent least-squares oracle."""

import random

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from adaptdom.adaptation import forecast_exhaustion
from adaptdom.errors import InsufficientSamples


def numpy_crossing(samples, critical):
    """Independent oracle: fit with numpy.polyfit, solve for the crossing."""
    ts = np.array([t for t, _ in samples], dtype=float)
    vs = np.array([v for _, v in samples], dtype=float)
    slope, intercept = np.polyfit(ts, vs, 1)
    if slope == 0.0:
        return None
    return (critical - intercept) / slope


def test_exact_linear_extrapolation():
    assert forecast_exhaustion([(0, 100), (10, 90)], 0) == pytest.approx(100.0)


def test_zero_slope_never_exhausts():
    assert forecast_exhaustion([(0, 50), (10, 50)], 0) is None


def test_slope_pointing_away():
    # Level rising while the critical value sits below: no crossing ahead.
    assert forecast_exhaustion([(0, 50), (10, 60)], 0) is None


def test_rising_toward_ceiling():
    assert forecast_exhaustion([(0, 10), (10, 20)], 100) == pytest.approx(90.0)


def test_insufficient_samples():
    with pytest.raises(InsufficientSamples):
        forecast_exhaustion([], 0)
    with pytest.raises(InsufficientSamples):
        forecast_exhaustion([(5, 50)], 0)
    with pytest.raises(InsufficientSamples):
        forecast_exhaustion([(5, 50), (5, 40)], 0)


@pytest.mark.parametrize("seed", range(20))
def test_noisy_samples_match_closed_form_oracle(seed):
    rng = random.Random(seed)
    slope = -rng.uniform(0.1, 5.0)
    intercept = rng.uniform(500, 2000)
    samples = []
    for i in range(rng.randrange(3, 40)):
        t = i * rng.uniform(1.0, 10.0)
        noise = rng.gauss(0, 5.0)
        samples.append((t, slope * t + intercept + noise))
    got = forecast_exhaustion(samples, 0.0)
    want = numpy_crossing(samples, 0.0)
    assert got is not None and want is not None
    assert got == pytest.approx(want, rel=1e-9)


@given(
    st.floats(min_value=-100, max_value=-0.01),
    st.floats(min_value=10, max_value=10_000),
    st.integers(min_value=2, max_value=30),
    st.floats(min_value=0.5, max_value=20),
)
def test_exact_linear_data_recovers_algebraic_crossing(slope, intercept, n, step):
    samples = [(i * step, slope * (i * step) + intercept) for i in range(n)]
    # The exhaustion question only makes sense while the level is still
    # above critical; past it the forecaster reports no crossing ahead.
    assume(samples[-1][1] > 0.0)
    expected = (0.0 - intercept) / slope
    got = forecast_exhaustion(samples, 0.0)
    assert got == pytest.approx(expected, rel=1e-9)
