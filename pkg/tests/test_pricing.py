from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from evgridsim.errors import ConfigError, DataError
from evgridsim.pricing import (
    HOUR,
    EmissionSeries,
    PriceBook,
    Season,
    SpotPriceSeries,
    TariffPeriod,
    TariffSchedule,
    build_price_book,
    ceil_to_hour,
    flat_tariff,
    floor_to_hour,
    horizon_bounds,
    price_horizon,
    tariff_rate_at,
    tm3_default,
    total_price_at,
)

T0 = datetime(2021, 6, 1)


def test_tm3_lookup():
    tm3 = tm3_default()
    night = tm3.seasons[0].periods[0].rate
    assert tariff_rate_at(tm3, T0 + 3 * HOUR) == night
    day = [p for p in tm3.seasons[0].periods if p.from_hour == 6][0].rate
    assert tariff_rate_at(tm3, T0 + 6 * HOUR) == day


def test_tm3_ordering_both_seasons():
    tm3 = tm3_default()
    for t in (datetime(2021, 1, 15), datetime(2021, 7, 15)):
        rates = tm3.rates(t, 24)
        assert np.all(rates[:6] == rates.min())
        second = np.unique(rates)[1]
        assert np.flatnonzero(rates == second).tolist() == [21, 22, 23]
        assert rates[17:21].min() == rates.max()


def test_season_boundaries():
    tm3 = tm3_default()
    assert tariff_rate_at(tm3, datetime(2021, 3, 31, 18)) != tariff_rate_at(tm3, datetime(2021, 4, 1, 18))
    assert tariff_rate_at(tm3, datetime(2024, 2, 29, 18)) == tariff_rate_at(tm3, datetime(2024, 2, 28, 18))


def test_missing_hours_rejected():
    with pytest.raises(ConfigError, match="22"):
        Season("01-01", "12-31", (TariffPeriod(0, 22, 0.1),))


def test_overlap_rejected():
    with pytest.raises(ConfigError):
        Season("01-01", "12-31", (TariffPeriod(0, 12, 0.1), TariffPeriod(10, 24, 0.2)))


def test_uncovered_days_rejected():
    winter_only = TariffSchedule((Season("10-01", "03-31", (TariffPeriod(0, 24, 0.1),)),))
    with pytest.raises(ConfigError):
        winter_only.validate_coverage()


def test_total_price_components():
    spot = SpotPriceSeries(T0, np.array([0.5, -0.1]))
    flat = flat_tariff(0.3)
    assert total_price_at(spot, flat, 0.2, T0).total == pytest.approx(1.0)
    assert total_price_at(spot, flat, 0.2, T0 + HOUR).total == pytest.approx(0.4)
    with pytest.raises(DataError):
        total_price_at(spot, flat, 0.2, T0 + 2 * HOUR)


def test_emissions_non_negative():
    with pytest.raises(DataError):
        EmissionSeries(T0, np.array([1.0, -2.0]))


@pytest.mark.parametrize(
    "plug,depart,first,n",
    [
        (T0 + timedelta(hours=17, minutes=30), T0 + timedelta(days=1, hours=7), T0 + 18 * HOUR, 13),
        (T0 + 18 * HOUR, T0 + 19 * HOUR, T0 + 18 * HOUR, 1),
        (T0 + timedelta(hours=18, minutes=10), T0 + timedelta(hours=18, minutes=50), None, 0),
    ],
)
def test_horizon_whole_hours(plug, depart, first, n):
    got_first, got_n = horizon_bounds(plug, depart)
    assert got_n == n
    if n:
        assert got_first == first


def test_horizon_partial_hours():
    first, n = horizon_bounds(T0 + timedelta(hours=18, minutes=10), T0 + timedelta(hours=18, minutes=50), True)
    assert (first, n) == (T0 + 18 * HOUR, 1)


def test_price_horizon_enumeration():
    spot = SpotPriceSeries(T0, np.arange(48, dtype=float) / 100)
    plug, depart = T0 + timedelta(hours=17, minutes=30), T0 + timedelta(days=1, hours=7)
    got = price_horizon(spot, flat_tariff(0.1), 1.0, plug, depart)
    # oracle: enumerate every whole hour inside [plug, depart)
    expected, h = [], ceil_to_hour(plug)
    while h + HOUR <= depart:
        expected.append((h, spot.at(h) + 0.1 + 1.0))
        h += HOUR
    assert [g[0] for g in got] == [e[0] for e in expected]
    assert np.allclose([g[1] for g in got], [e[1] for e in expected])


def test_price_book():
    spot = SpotPriceSeries(T0, np.full(48, 0.4))
    book = build_price_book(T0, 24, spot, tm3_default(), 1.0)
    assert isinstance(book, PriceBook)
    assert book.n_hours == 24
    assert np.allclose(book.total, 0.4 + tm3_default().rates(T0, 24) + 1.0)
    with pytest.raises(DataError):
        build_price_book(T0, 72, spot, tm3_default(), 1.0)


@given(st.integers(0, 10_000), st.integers(1, 5_000))
def test_horizon_inside_window(plug_min, span):
    plug = T0 + timedelta(minutes=plug_min)
    depart = plug + timedelta(minutes=span)
    first, n = horizon_bounds(plug, depart)
    if n:
        assert first >= plug and first + n * HOUR <= depart
        assert first - HOUR < plug or first == plug
    assert floor_to_hour(plug) <= plug <= ceil_to_hour(plug)
    wide_first, wide_n = horizon_bounds(plug, depart, True)
    assert wide_first <= plug and wide_first + wide_n * HOUR >= depart
    assert wide_n >= n


@given(st.lists(st.integers(1, 23), min_size=1, max_size=5, unique=True), st.data())
def test_any_partition_covers_every_hour(cuts, data):
    bounds = [0] + sorted(cuts) + [24]
    periods = tuple(TariffPeriod(a, b, data.draw(st.floats(0, 2))) for a, b in zip(bounds, bounds[1:]))
    schedule = TariffSchedule((Season("01-01", "12-31", periods),))
    rates = schedule.rates(T0, 24)
    for p in periods:
        assert np.all(rates[p.from_hour : p.to_hour] == p.rate)
