from datetime import datetime, timedelta
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evgridsim.domain import BatteryState, ChargePointSpec, EvModel, EvUserPreferences
from evgridsim.pricing import HOUR, PriceBook, SpotPriceSeries, flat_tariff, price_horizon, tm3_default
from evgridsim.strategies import (
    ActionKind,
    ChargeRequest,
    ChargingServiceProvider,
    Strategy,
    effective_target_soc,
    execute_hour,
    rtp_schedule,
    schedule_for,
    tou_schedule,
    traditional_schedule,
)

T0 = datetime(2021, 6, 1)
EV = EvModel("Test EV", 100.0, 0.15, 11.0)
BOX = ChargePointSpec(10.0, 0.84)  # 8.4 kWh per hour into the battery


def soc_needing(hours: int) -> float:
    """Start SoC for which exactly ``hours`` charging hours reach 100 %."""
    return 1.0 - (hours * 8.4 - 1.0) / 100.0 if hours else 1.0


def request(hours_needed=2, plug=T0, depart=T0 + 24 * HOUR, prefs=None, km=0.0, model=EV, charger=BOX):
    return ChargeRequest(plug, depart, BatteryState(soc_needing(hours_needed)), model, charger, prefs or EvUserPreferences(), km)


def horizon_of(prices):
    return [(T0 + k * HOUR, float(p)) for k, p in enumerate(prices)]


def brute_force(prices, k):
    """Cheapest k-subset; the earliest one among equal totals."""
    best = None
    for combo in combinations(range(len(prices)), k):
        cost = sum(prices[i] for i in combo)
        if best is None or cost < best[0]:
            best = (cost, combo)
    return best


def test_rtp_examples():
    sched = rtp_schedule(request(2), horizon_of([5, 1, 3, 2]))
    assert sched.slots == (T0 + HOUR, T0 + 3 * HOUR)
    assert rtp_schedule(request(0), horizon_of([5, 1, 3, 2])).slots == ()
    assert rtp_schedule(request(1), horizon_of([2, 1, 1])).slots == (T0 + HOUR,)


def test_rtp_matches_brute_force_oracle():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(1, 11))
        k = int(rng.integers(0, 6))
        prices = rng.integers(0, 5, n) / 4
        sched = rtp_schedule(request(k), horizon_of(prices))
        want = brute_force(list(prices), min(k, n))
        assert [int((s - T0) / HOUR) for s in sched.slots] == list(want[1])


def test_empty_horizon_gives_empty_schedule():
    assert rtp_schedule(request(3), []).slots == ()


@pytest.mark.parametrize(
    "prefs,km,expected",
    [
        (EvUserPreferences(min_soc_floor=0.2, distance_optimization=True), 60.0, 0.425),
        (EvUserPreferences(min_soc_floor=0.2, distance_optimization=True), 0.0, 0.20),
        (EvUserPreferences(soc_cap=0.8), 0.0, 0.80),
        (EvUserPreferences(), 0.0, 1.0),
        (EvUserPreferences(min_soc_floor=0.2, distance_optimization=True), 1000.0, 1.0),
        (EvUserPreferences(soc_cap=0.8, min_soc_floor=0.2, distance_optimization=True), 1000.0, 0.8),
    ],
)
def test_effective_target(prefs, km, expected):
    leaf = EvModel("Leaf", 40.0, 0.15, 3.7)
    req = ChargeRequest(T0, T0 + HOUR, BatteryState(0.1), leaf, BOX, prefs, km)
    assert effective_target_soc(req) == pytest.approx(expected)


def tou_request(hours, plug=T0 + 18 * HOUR, depart=T0 + 31 * HOUR):
    return request(hours, plug, depart)


def test_tou_clusters_at_midnight():
    sched = tou_schedule(tou_request(3), tm3_default())
    assert sched.slots == tuple(T0 + (24 + k) * HOUR for k in range(3))


def test_tou_spills_to_nine_pm():
    sched = tou_schedule(tou_request(7), tm3_default())
    assert sched.slots == (T0 + 21 * HOUR,) + tuple(T0 + (24 + k) * HOUR for k in range(6))


def test_tou_leaf_needing_seven_hours():
    leaf = EvModel("Leaf", 40.0, 0.15, 3.7)
    req = ChargeRequest(T0 + 18 * HOUR, T0 + 31 * HOUR, BatteryState(0.5), leaf, ChargePointSpec(3.7))
    sched = tou_schedule(req, tm3_default())
    assert len(sched.slots) == 7
    assert T0 + 21 * HOUR in sched.slots
    assert tou_schedule(tou_request(0), tm3_default()).slots == ()


def test_tou_ignores_spot_prices():
    spot = SpotPriceSeries(T0, np.linspace(5.0, 0.0, 48))
    sched = schedule_for("tou", tou_request(2), spot, tm3_default(), 1.0)
    assert sched.slots == (T0 + 24 * HOUR, T0 + 25 * HOUR)


def test_traditional_continuous():
    leaf = EvModel("Leaf", 40.0, 0.15, 3.7)
    charger = ChargePointSpec(10.0, 0.84)
    # 3.2 charge-hours of battery energy
    soc = 1.0 - 3.2 * 8.4 / 40.0
    req = ChargeRequest(T0 + timedelta(hours=17, minutes=30), T0 + 31 * HOUR, BatteryState(soc), leaf, charger)
    sched = traditional_schedule(req)
    assert sched.is_continuous
    assert sched.continuous_from == T0 + timedelta(hours=17, minutes=30)
    assert abs(sched.continuous_until - (T0 + timedelta(hours=20, minutes=42))) < timedelta(seconds=1)
    assert sched.slots == tuple(T0 + h * HOUR for h in (17, 18, 19, 20))


def test_traditional_departure_truncation_and_zero():
    req = request(4, T0 + 22 * HOUR, T0 + timedelta(hours=23, minutes=30))
    sched = traditional_schedule(req)
    assert sched.continuous_until == T0 + timedelta(hours=23, minutes=30)
    assert traditional_schedule(request(0)).slots == ()


def test_execute_hour_rules():
    req = request(2, T0 + timedelta(hours=18, minutes=10), T0 + 24 * HOUR)
    sched = rtp_schedule(req, horizon_of([9] * 19 + [1, 9, 1, 9, 9]))
    battery = req.battery
    assert execute_hour(req, sched, T0 + 19 * HOUR, battery).kind is ActionKind.SCHEDULED
    assert execute_hour(req, sched, T0 + 20 * HOUR, battery).kind is ActionKind.IDLE
    assert execute_hour(req, sched, T0 + 22 * HOUR, battery).kind is ActionKind.FALLBACK
    assert execute_hour(req, sched, T0 + 22 * HOUR, battery, fallback=False).kind is ActionKind.IDLE
    assert execute_hour(req, sched, T0 + 22 * HOUR, BatteryState(1.0)).kind is ActionKind.IDLE
    head = execute_hour(req, sched, T0 + 18 * HOUR, battery)
    assert head.kind is ActionKind.IDLE and head.duration_h == pytest.approx(50 / 60)
    with pytest.raises(ValueError):
        execute_hour(req, sched, T0 + 2 * HOUR, battery)


def test_provider_matches_datetime_scheduler():
    rng = np.random.default_rng(11)
    spot = SpotPriceSeries(T0, rng.uniform(-0.2, 1.5, 96))
    book = PriceBook(T0, spot.values[:72].copy(), tm3_default().rates(T0, 72), 1.0)
    provider = ChargingServiceProvider(Strategy.RTP, book)
    for _ in range(50):
        plug = int(rng.integers(0, 1500))
        dep = plug + int(rng.integers(30, 1500))
        k = int(rng.integers(0, 7))
        req = request(k, T0 + timedelta(minutes=plug), T0 + timedelta(minutes=dep))
        hours = provider.slot_hours(plug, dep, k)
        want = rtp_schedule(req, price_horizon(spot, tm3_default(), 1.0, req.plug_in, req.departure))
        assert [T0 + int(h) * HOUR for h in hours] == list(want.slots)


@settings(max_examples=200)
@given(st.lists(st.integers(0, 8), min_size=0, max_size=10), st.integers(0, 6))
def test_rtp_optimal_and_earliest(prices, k):
    prices = [p / 2 for p in prices]
    sched = rtp_schedule(request(k), horizon_of(prices))
    got = [int((s - T0) / HOUR) for s in sched.slots]
    assert got == sorted(got)
    assert len(got) == min(k, len(prices))
    assert tuple(got) == brute_force(prices, len(got))[1]


@given(st.integers(0, 7), st.integers(18, 23), st.integers(0, 59))
def test_tou_prefers_cheapest_period(k, plug_h, plug_m):
    plug = T0 + timedelta(hours=plug_h, minutes=plug_m)
    sched = tou_schedule(request(k, plug, T0 + 31 * HOUR), tm3_default())
    rates = [tm3_default().rates(s, 1)[0] for s in sched.slots]
    others = [tm3_default().rates(h, 1)[0] for h in (T0 + n * HOUR for n in range(plug_h + 1, 31)) if h not in sched.slots]
    if rates and others:
        assert max(rates) <= min(others)
