import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ifdetect.monitor as monitor
from ifdetect.errors import DimensionMismatch
from ifdetect.monitor import AlarmSequence, MovingChart, extract_alarms, t2_series
from ifdetect.stat_core import ChartConfig, GaussianModel, hotelling_t2


def test_warm_up_then_statistic(example_model, rng):
    chart = MovingChart(example_model, ChartConfig(0.01, 4))
    x = rng.normal(size=(6, 2))
    out = [chart.step(v) for v in x]
    assert out[:3] == [None, None, None]
    t2, _ = out[3]
    assert t2 == pytest.approx(hotelling_t2(example_model, x[:4].mean(axis=0)), rel=1e-12)
    t2, _ = out[5]
    assert t2 == pytest.approx(hotelling_t2(example_model, x[2:6].mean(axis=0)), rel=1e-12)


def test_online_matches_batch(example_model, rng):
    x = rng.normal(size=(500, 2)) * 2 + np.array([6.0, 4.0])
    for w in (1, 7, 10):
        chart = MovingChart(example_model, ChartConfig(0.01, w))
        online = [r[0] for r in (chart.step(v) for v in x) if r is not None]
        np.testing.assert_allclose(online, t2_series(example_model, x, w), rtol=1e-10, atol=1e-12)


def test_tie_is_not_an_alarm():
    m = GaussianModel.from_moments([0.0], [[1.0]], 100)
    chart = MovingChart(m, ChartConfig(0.01, 1), limit=4.0)
    assert chart.step([2.0]) == (4.0, False)
    t2, alarm = chart.step([2.0000001])
    assert alarm and t2 > 4.0


def test_dimension_checked(example_model):
    chart = MovingChart(example_model, ChartConfig(0.01, 2))
    with pytest.raises(DimensionMismatch):
        chart.step([1.0, 2.0, 3.0])
    with pytest.raises(DimensionMismatch):
        t2_series(example_model, np.ones((5, 3)), 2)


def test_short_stream_gives_empty_series(example_model):
    assert t2_series(example_model, np.ones((3, 2)), 5).size == 0


def test_compensated_sum_survives_large_offsets(monkeypatch):
    # values of wildly different magnitude cancel exactly in the running sum
    monkeypatch.setattr(monitor, "RESYNC_PERIOD", 1 << 30)
    m = GaussianModel.from_moments([0.0], [[1.0]], 100)
    chart = MovingChart(m, ChartConfig(0.01, 3))
    seq = [1e16, 1.0, -1e16, 1.0, 1.0, 1.0, 1.0]
    for v in seq:
        chart.step([v])
    assert chart.window_sum()[0] == pytest.approx(3.0, abs=1e-9)


def test_resync_keeps_sum_exact(monkeypatch, rng):
    monkeypatch.setattr(monitor, "RESYNC_PERIOD", 64)
    m = GaussianModel.from_moments([0.0, 0.0], np.eye(2), 100)
    chart = MovingChart(m, ChartConfig(0.01, 5))
    x = rng.normal(size=(1000, 2)) * 1e3
    for v in x:
        chart.step(v)
    np.testing.assert_allclose(chart.window_sum(), x[-5:].sum(axis=0), rtol=1e-12)


def test_extract_alarms_examples():
    assert extract_alarms([False, False, True, True, True, False, False]) == [(3, 6)]
    assert extract_alarms([True, False, True]) == [(1, 2), (3, None)]
    assert extract_alarms([], first_index=7) == []
    assert extract_alarms([False, True], first_index=7).alarms == [(8, None)]
    assert extract_alarms([True, True]).is_open


@settings(max_examples=200, deadline=None)
@given(st.lists(st.booleans(), max_size=200))
def test_extract_alarms_round_trip(flags):
    seq = extract_alarms(flags)
    rebuilt = [False] * len(flags)
    for on, off in seq:
        for k in range(on, (off if off is not None else len(flags) + 1)):
            rebuilt[k - 1] = True
    assert rebuilt == flags
    seq.validate()


def test_alarm_sequence_validation():
    with pytest.raises(ValueError):
        AlarmSequence([(5, 3)])
    with pytest.raises(ValueError):
        AlarmSequence([(1, 4), (4, 6)])
    with pytest.raises(ValueError):
        AlarmSequence([(1, None), (5, 6)])
    assert AlarmSequence([(1, 3), (5, None)]).to_list() == [[1, 3], [5, None]]
