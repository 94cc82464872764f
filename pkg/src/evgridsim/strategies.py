"""Decentralized charging strategies: Traditional, Real-Time Pricing and Time-of-Use.

Schedules are computed once at plug-in; execution is checked every hour
with a cost-blind fallback once the scheduled hours have passed.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np

from . import kernels
from .domain import (
    BatteryState,
    ChargePointSpec,
    EvModel,
    EvUserPreferences,
    required_charging_hours,
    required_energy,
)
from .pricing import HOUR, TariffSchedule, floor_to_hour, horizon_bounds


class Strategy(str, enum.Enum):
    TRADITIONAL = "traditional"
    RTP = "rtp"
    TOU = "tou"


@dataclass(frozen=True)
class ChargeRequest:
    plug_in: datetime
    departure: datetime
    battery: BatteryState
    model: EvModel
    charger: ChargePointSpec
    prefs: EvUserPreferences = field(default_factory=EvUserPreferences)
    next_trip_distance_km: float = 0.0

    def __post_init__(self):
        if not self.plug_in < self.departure:
            raise ValueError("plug_in must precede departure")
        if self.next_trip_distance_km < 0:
            raise ValueError("next_trip_distance_km must be >= 0")


@dataclass(frozen=True)
class ChargingSchedule:
    """Hours in which the charging box should charge.

    For Traditional charging, ``continuous_from``/``continuous_until`` give
    the uninterrupted charging interval and ``slots`` the clock hours it
    touches (the first one possibly partial).
    """

    slots: tuple[datetime, ...]
    target_soc: float
    strategy: Strategy
    continuous_from: datetime | None = None
    continuous_until: datetime | None = None

    @property
    def is_continuous(self) -> bool:
        return self.continuous_from is not None


class ActionKind(str, enum.Enum):
    SCHEDULED = "scheduled-charge"
    FALLBACK = "fallback-charge"
    IDLE = "idle"


@dataclass(frozen=True)
class ChargingAction:
    kind: ActionKind
    duration_h: float


def effective_target_soc(request: ChargeRequest) -> float:
    prefs = request.prefs
    target = prefs.desired_soc
    if prefs.distance_optimization:
        floor = prefs.min_soc_floor
        trip_soc = request.next_trip_distance_km * request.model.consumption_kwh_per_km / request.model.battery_capacity_kwh
        target = min(max(trip_soc + floor, floor), 1.0)
    if prefs.soc_cap is not None:
        target = min(target, prefs.soc_cap)
    if prefs.min_soc_floor is not None:
        target = max(target, prefs.min_soc_floor)
    return target


def _charge_hours_needed(request: ChargeRequest, target: float) -> int:
    return required_charging_hours(required_energy(request.model, request.battery, target), request.charger)


def _take_slots(request, target, strategy, hours, prices) -> ChargingSchedule:
    k = _charge_hours_needed(request, target)
    picked = kernels.select_cheapest(prices, k)
    return ChargingSchedule(slots=tuple(hours[i] for i in picked), target_soc=target, strategy=strategy)


def rtp_schedule(request: ChargeRequest, horizon: list[tuple[datetime, float]]) -> ChargingSchedule:
    """Pick the required number of cheapest hours from the priced horizon.

    ``horizon`` is the output of :func:`evgridsim.pricing.price_horizon`.
    Equal prices go to the earlier hour.
    """
    target = effective_target_soc(request)
    hours = [h for h, _ in horizon]
    prices = np.fromiter((p for _, p in horizon), dtype=np.float64, count=len(horizon))
    return _take_slots(request, target, Strategy.RTP, hours, prices)


def tou_schedule(request: ChargeRequest, schedule_source: TariffSchedule, use_partial_hours: bool = False) -> ChargingSchedule:
    """Rank the at-home hours by tariff rate, then by time, and take the earliest-cheapest.

    Spot prices play no part; the tariff periods alone decide.
    """
    target = effective_target_soc(request)
    first, n = horizon_bounds(request.plug_in, request.departure, use_partial_hours)
    hours = [first + k * HOUR for k in range(n)]
    rates = schedule_source.rates(first, n) if n else np.empty(0)
    return _take_slots(request, target, Strategy.TOU, hours, rates)


def traditional_schedule(request: ChargeRequest) -> ChargingSchedule:
    """Charge from plug-in without interruption until the target or departure."""
    target = effective_target_soc(request)
    need = required_energy(request.model, request.battery, target)
    if need == 0:
        return ChargingSchedule(slots=(), target_soc=target, strategy=Strategy.TRADITIONAL)
    charge_h = need / request.charger.battery_side_kw
    until = min(request.plug_in + timedelta(hours=charge_h), request.departure)
    slots = []
    h = floor_to_hour(request.plug_in)
    while h < until:
        slots.append(h)
        h += HOUR
    return ChargingSchedule(
        slots=tuple(slots),
        target_soc=target,
        strategy=Strategy.TRADITIONAL,
        continuous_from=request.plug_in,
        continuous_until=until,
    )


def schedule_for(strategy: Strategy | str, request: ChargeRequest, spot, tariff: TariffSchedule, addons: float,
                 use_partial_hours: bool = False) -> ChargingSchedule:
    from .pricing import price_horizon

    strategy = Strategy(strategy)
    if strategy is Strategy.TRADITIONAL:
        return traditional_schedule(request)
    if strategy is Strategy.TOU:
        return tou_schedule(request, tariff, use_partial_hours)
    horizon = price_horizon(spot, tariff, addons, request.plug_in, request.departure, use_partial_hours)
    return rtp_schedule(request, horizon)


def execute_hour(
    request: ChargeRequest,
    schedule: ChargingSchedule,
    now: datetime,
    battery: BatteryState,
    fallback: bool = True,
) -> ChargingAction:
    """Decide what the charging box does during the clock hour starting at ``now``."""
    start = max(now, request.plug_in)
    end = min(now + HOUR, request.departure)
    if end <= start:
        raise ValueError(f"EV is not at home during hour {now.isoformat()}")
    duration = (end - start) / HOUR
    if battery.soc >= schedule.target_soc:
        return ChargingAction(ActionKind.IDLE, duration)
    if schedule.is_continuous or now in schedule.slots:
        return ChargingAction(ActionKind.SCHEDULED, duration)
    if any(s > now for s in schedule.slots):
        return ChargingAction(ActionKind.IDLE, duration)
    if fallback:
        return ChargingAction(ActionKind.FALLBACK, duration)
    return ChargingAction(ActionKind.IDLE, duration)


class ChargingServiceProvider:
    """Single place that answers every charging box's schedule request.

    Works on hour indices into a :class:`~evgridsim.pricing.PriceBook` so the
    engine can call it for hundreds of thousands of plug-ins per run.
    """

    def __init__(self, strategy: Strategy | str, price_book, use_partial_hours: bool = False):
        self.strategy = Strategy(strategy)
        self.price_book = price_book
        self.use_partial_hours = use_partial_hours
        self._ranking = price_book.tariff if self.strategy is Strategy.TOU else price_book.total
        self.requests = 0

    def horizon(self, plug_min: int, dep_min: int) -> tuple[int, int]:
        """First hour index and length of the schedulable window (minutes since start)."""
        if self.use_partial_hours:
            first, last = plug_min // 60, -(-dep_min // 60)
        else:
            first, last = -(-plug_min // 60), dep_min // 60
        last = min(last, self.price_book.n_hours)
        return first, max(0, last - first)

    def slot_hours(self, plug_min: int, dep_min: int, k: int) -> np.ndarray:
        """Hour indices of the schedule for a scheduled strategy (sorted)."""
        self.requests += 1
        first, n = self.horizon(plug_min, dep_min)
        if n == 0 or k == 0:
            return np.empty(0, dtype=np.int64)
        return kernels.select_cheapest(self._ranking[first : first + n], k) + first

    def replan(self, *args, **kwargs):
        """Re-planning hook; a no-op because day-ahead prices are known for the whole window."""
        return None
