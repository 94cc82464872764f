from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evgridsim.domain import EvModel
from evgridsim.errors import ConfigError
from evgridsim.population import (
    AdoptionCurve,
    DayPattern,
    Dist,
    DrivingPatternSpec,
    adopt_evs,
    sample_daily_trip,
    sample_trip_table,
)
from evgridsim.synthetic import _commuter_driving

from conftest import fixed_driving


def test_degenerate_trip():
    trip = sample_daily_trip(fixed_driving(7.5, 17.0, 40.0), np.random.default_rng(0), date(2021, 3, 1))
    assert (trip.departure_time.hour, trip.departure_time.minute) == (7, 30)
    assert (trip.arrival_time.hour, trip.arrival_time.minute) == (17, 0)
    assert trip.distance_km == 40.0


def test_zero_km_trip_allowed():
    trip = sample_daily_trip(fixed_driving(7.5, 17.0, 0.0), np.random.default_rng(0), date(2021, 3, 1))
    assert trip.distance_km == 0.0


def test_trip_table_deterministic_and_valid():
    spec = _commuter_driving()
    a = sample_trip_table(spec, np.random.default_rng(4), date(2021, 1, 1), 30, 20)
    b = sample_trip_table(spec, np.random.default_rng(4), date(2021, 1, 1), 30, 20)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
    dep, arr, dist = a
    assert dep.shape == (30, 20)
    assert np.all(arr > dep) and np.all(arr < 1440) and np.all(dep >= 0)
    assert np.all(arr >= -(-dep // 60) * 60)
    assert np.all((dist >= 0) & (dist <= 150))


def test_weekend_pattern_used():
    spec = DrivingPatternSpec(weekday=fixed_driving(7, 17, 40).weekday, weekend=fixed_driving(10, 15, 5).weekday)
    dep, _, dist = sample_trip_table(spec, np.random.default_rng(0), date(2021, 3, 6), 3, 2)  # Sat, Sun, Mon
    assert dep[:, 0].tolist() == [600, 600, 420]
    assert dist[:, 1].tolist() == [5.0, 5.0, 40.0]


def test_unsatisfiable_bounds():
    with pytest.raises(ConfigError):
        Dist("uniform", low=3.0, high=1.0)
    with pytest.raises(ConfigError):
        DayPattern(Dist("fixed", value=18.0), Dist("fixed", value=9.0), Dist("fixed", value=1.0))
    with pytest.raises(ConfigError):
        Dist("normal", mean=100.0, sd=0.001, low=0.0, high=1.0).sample(np.random.default_rng(0), 10)
    with pytest.raises(ConfigError):
        Dist("gamma")


def test_empirical_trips():
    table = np.array([[7.0, 17.0, 30.0], [8.0, 16.0, 12.0], [9.0, 8.0, 5.0]])  # last row invalid
    spec = DrivingPatternSpec(weekday=fixed_driving(7, 17, 1).weekday, trips=table)
    dep, arr, dist = sample_trip_table(spec, np.random.default_rng(1), date(2021, 1, 1), 10, 5)
    assert set(dist.ravel().tolist()) <= {30.0, 12.0}


class FakeState:
    def __init__(self, n, models):
        self.has_ev = np.zeros(n, dtype=bool)
        self.ev_models = models
        self.added = []

    def add_ev(self, i, m):
        self.has_ev[i] = True
        self.added.append((i, m))


MODELS = [EvModel("A", 40, 0.15, 3.7), EvModel("B", 60, 0.15, 11.0)]


def test_adoption_follows_curve():
    curve = AdoptionCurve(((2021, 1), (2021, 6)), (2, 5), {"A": 1.0, "B": 0.0})
    state = FakeState(10, MODELS)
    rng = np.random.default_rng(0)
    assert len(adopt_evs(curve, (2021, 1), state, rng)) == 2
    assert len(adopt_evs(curve, (2021, 3), state, rng)) == 0
    assert len(adopt_evs(curve, (2021, 6), state, rng)) == 3
    assert state.has_ev.sum() == 5
    assert all(m == 0 for _, m in state.added)


def test_adoption_zero_curve_and_overflow():
    state = FakeState(4, MODELS)
    assert len(adopt_evs(AdoptionCurve(((2021, 1),), (0,)), (2021, 1), state, np.random.default_rng(0))) == 0
    with pytest.raises(ConfigError):
        adopt_evs(AdoptionCurve(((2021, 1),), (5,)), (2021, 1), state, np.random.default_rng(0))
    with pytest.raises(ConfigError):
        AdoptionCurve(((2021, 1), (2021, 2)), (3, 2))
    with pytest.raises(ConfigError):
        AdoptionCurve(((2021, 1),), (1,), {"Unknown": 1.0}).weights(["A"])


def test_adoption_deterministic():
    curve = AdoptionCurve(((2021, 1),), (6,))
    a, b = FakeState(20, MODELS), FakeState(20, MODELS)
    adopt_evs(curve, (2021, 1), a, np.random.default_rng(9))
    adopt_evs(curve, (2021, 1), b, np.random.default_rng(9))
    assert a.added == b.added


@settings(max_examples=50)
@given(st.floats(0, 20), st.floats(0.1, 6), st.floats(0, 23), st.floats(0.1, 6), st.integers(0, 2**32 - 1))
def test_sampled_trips_always_valid(dep_mean, dep_sd, arr_mean, arr_sd, seed):
    pattern = DayPattern(
        Dist("normal", mean=dep_mean, sd=dep_sd, low=0.0, high=20.0),
        Dist("normal", mean=arr_mean, sd=arr_sd, low=2.0, high=23.9),
        Dist("lognormal", median=30.0, sigma=0.5, low=0.0, high=200.0),
    )
    try:
        dep, arr, dist = sample_trip_table(DrivingPatternSpec(pattern), np.random.default_rng(seed), date(2021, 1, 1), 3, 4)
    except ConfigError:
        return
    assert np.all((arr > dep) & (arr >= -(-dep // 60) * 60) & (arr < 1440) & (dist >= 0))
