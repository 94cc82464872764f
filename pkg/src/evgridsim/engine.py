"""Hourly multi-agent simulation of home EV charging on one feeder transformer.

Agents follow the ecosystem roles: households (EV users and electricity
consumers) own at most one EV and one charging box; every charging box
asks a single :class:`~evgridsim.strategies.ChargingServiceProvider` for its
schedule; the DSO publishes the tariff and watches the transformer.

Within each simulated hour the sub-steps run in a fixed order: adoption
(first hour of a month), departures, arrivals with schedule requests,
charging, base load, aggregation, overload check, billing, clock advance.

A departure at 07:40 is processed at the 08:00 step, so the EV can still
charge from 07:00 to 07:40 when its strategy says so.
"""
from __future__ import annotations

import enum
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

import numpy as np

from . import kernels
from .config import InputBundle, ScenarioConfig
from .domain import (
    BatteryState,
    ChargePointSpec,
    EvModel,
    EvUserPreferences,
    required_charging_hours,
    required_energy,
)
from .errors import DataError, InvariantError
from .population import adopt_evs, sample_trip_table
from .pricing import HOUR, PriceBook, build_price_book
from .strategies import (
    ChargeRequest,
    ChargingSchedule,
    ChargingServiceProvider,
    Strategy,
    effective_target_soc,
    traditional_schedule,
)

MINUTES_PER_DAY = 1440


class MessageKind(str, enum.Enum):
    SCHEDULE_REQUEST = "schedule-request"
    SCHEDULE_RESPONSE = "schedule-response"
    METER_READING = "meter-reading"
    TARIFF_PUBLICATION = "tariff-publication"


@dataclass(frozen=True)
class AgentMessage:
    kind: MessageKind
    sender: str
    receiver: str
    payload: object = None
    timestamp: datetime | None = None


@dataclass
class Household:
    """Snapshot of one household's state."""

    id: int
    base_load_profile: np.ndarray
    ev: tuple[EvModel, BatteryState, EvUserPreferences, ChargePointSpec] | None
    billing_accumulator: float


@dataclass(frozen=True)
class OverloadEvent:
    timestamp: datetime
    aggregate_load_kw: float
    capacity_kw: float
    ev_count: int

    def __post_init__(self):
        if not self.aggregate_load_kw > self.capacity_kw:
            raise InvariantError("overload event with load not above capacity")


@dataclass(frozen=True)
class DepartureEvent:
    timestamp: datetime
    household: int
    energy_kwh: float
    demand_kwh: float
    soc_before: float
    soc_after: float
    target_soc: float
    depleted: bool


def detect_overload(load_kw: float, capacity_kw: float, timestamp: datetime | None = None, ev_count: int = 0) -> OverloadEvent | None:
    """An event iff ``load_kw`` strictly exceeds ``capacity_kw``."""
    if not capacity_kw > 0:
        raise ValueError("capacity_kw must be > 0")
    if load_kw > capacity_kw:
        return OverloadEvent(timestamp, float(load_kw), float(capacity_kw), int(ev_count))
    return None


@dataclass
class SimulationResult:
    """Everything a completed run produced.

    Hourly arrays are indexed by hours since ``start``; loads are kW, which
    equal kWh per hour. ``ev_kwh`` and ``base_load`` are the per-household
    ledgers, kept only when the scenario asks for them.
    """

    name: str
    strategy: str
    start: datetime
    n_hours: int
    capacity_kw: float
    load_kw: np.ndarray
    base_kw: np.ndarray
    ev_kw: np.ndarray
    owner_base_kw: np.ndarray
    ev_count: np.ndarray
    plugged_count: np.ndarray
    prices: PriceBook
    daily_peak_kw: np.ndarray
    bills: np.ndarray
    overloads: list[OverloadEvent]
    dissatisfaction: list[DepartureEvent]
    messages: dict
    ev_ledger: dict
    departures: list[DepartureEvent] = field(default_factory=list)
    schedules: list = field(default_factory=list)
    message_log: list = field(default_factory=list)
    ev_kwh: np.ndarray | None = None
    base_load: np.ndarray | None = None
    actions: np.ndarray | None = None
    n_departures: int = 0
    config_hash: str = ""
    seed: int = 0
    reporting: object = None

    def timestamp(self, h: int) -> datetime:
        return self.start + h * HOUR

    @property
    def n_households(self) -> int:
        return len(self.bills)


class Simulation:
    """Mutable state of one run; call :meth:`step_hour` until :attr:`done`."""

    def __init__(self, config: ScenarioConfig, bundle: InputBundle):
        bundle.validate(config)
        self.config = config
        self.bundle = bundle
        self.start = config.start
        self.n_hours = config.n_hours
        self.n_days = config.n_days
        self.clock = 0
        n = self.n = config.households
        self.capacity_kw = config.transformer_capacity_kw
        self.strategy = config.strategy.kind
        self.fallback = config.strategy.fallback
        self.prices = build_price_book(
            self.start, self.n_hours, bundle.spot, config.tariff, config.addons_dkk_per_kwh, bundle.emissions
        )
        self.provider = ChargingServiceProvider(self.strategy, self.prices, config.strategy.use_partial_hours)
        self.prefs = EvUserPreferences(
            desired_soc=config.strategy.desired_soc,
            soc_cap=config.strategy.soc_cap,
            min_soc_floor=config.strategy.min_soc_floor,
            distance_optimization=config.strategy.distance_optimization,
        )
        self.ev_models = list(bundle.ev_models)
        adoption_seq, trip_seq = np.random.SeedSequence(config.seed).spawn(2)
        self.rng = np.random.default_rng(adoption_seq)

        dep, arr, dist = sample_trip_table(bundle.driving, np.random.default_rng(trip_seq), config.sim_start, self.n_days + 1, n)
        day0 = (np.arange(self.n_days + 1, dtype=np.int64) * MINUTES_PER_DAY)[:, None]
        self.dep_abs = dep + day0
        self.arr_abs = arr + day0
        self.trip_km = dist
        self._dep_events = self._index_events(-(-self.dep_abs // 60))
        self._arr_events = self._index_events(self.arr_abs // 60)
        self._month_starts = self._month_start_hours()

        self.has_ev = np.zeros(n, dtype=bool)
        self.model_idx = np.full(n, -1, dtype=np.int64)
        self.capacity = np.ones(n)
        self.consumption = np.zeros(n)
        self.power = np.zeros(n)
        self.eff = np.ones(n)
        self.soc = np.zeros(n)
        self.target = np.zeros(n)
        self.at_home = np.ones(n, dtype=bool)
        self.mode = np.full(n, kernels.INACTIVE, dtype=np.int8)
        self.home_start = np.zeros(n, dtype=np.int64)
        self.home_end = np.zeros(n, dtype=np.int64)
        self.trip_day = np.zeros(n, dtype=np.int64)  # day of the pending departure (home) or trip (away)
        self.slots = np.zeros((n, 48), dtype=np.int64)
        self.nslots = np.zeros(n, dtype=np.int64)
        self.cursor = np.zeros(n, dtype=np.int64)
        self._models: list[EvModel | None] = [None] * n
        self._chargers: list[ChargePointSpec | None] = [None] * n

        self.soc_initial = np.zeros(n)
        self.gain_total = np.zeros(n)
        self.trip_total = np.zeros(n)
        self.bills = np.zeros(n)
        self.daily_peak = np.zeros((self.n_days, n))
        self.base_load = bundle.base_load
        self.base_kw = np.zeros(self.n_hours)
        self.ev_kw = np.zeros(self.n_hours)
        self.load_kw = np.zeros(self.n_hours)
        self.owner_base_kw = np.zeros(self.n_hours)
        self.ev_count = np.zeros(self.n_hours, dtype=np.int64)
        self.plugged_count = np.zeros(self.n_hours, dtype=np.int64)
        self.ev_kwh = np.zeros((self.n_hours, n)) if config.keep_ledgers else None
        self.actions = np.zeros((self.n_hours, n), dtype=np.int8) if config.trace.actions else None
        self._row = np.zeros(n)
        self._gain = np.zeros(n)
        self._act = np.zeros(n, dtype=np.int8)

        self.overloads: list[OverloadEvent] = []
        self.dissatisfaction: list[DepartureEvent] = []
        self.departures: list[DepartureEvent] = []
        self.n_departures = 0
        self.schedules: list = []
        self.messages = Counter({k.value: 0 for k in MessageKind})
        self.messages["plug-in"] = 0
        self.message_log: list[AgentMessage] = []

    # ------------------------------------------------------------ setup helpers

    def _index_events(self, hours: np.ndarray):
        flat = hours.ravel()
        order = np.argsort(flat, kind="stable")
        bounds = np.searchsorted(flat[order], np.arange(self.n_hours + 1))
        return order, bounds

    def _events_at(self, events, h: int):
        order, bounds = events
        for k in order[bounds[h] : bounds[h + 1]].tolist():
            yield divmod(k, self.n)

    def _month_start_hours(self) -> dict:
        out = {0: (self.config.sim_start.year, self.config.sim_start.month)}
        d = self.config.sim_start
        for k in range(self.n_days):
            day = d + timedelta(days=k)
            if day.day == 1:
                out[k * 24] = (day.year, day.month)
        return out

    @property
    def done(self) -> bool:
        return self.clock >= self.n_hours

    def now(self) -> datetime:
        return self.start + self.clock * HOUR

    def _dt(self, minutes: int) -> datetime:
        return self.start + timedelta(minutes=int(minutes))

    def _send(self, kind: MessageKind, sender: str, receiver: str, payload=None, count: int = 1):
        self.messages[kind.value] += count
        if self.config.trace.messages:
            self.message_log.append(AgentMessage(kind, sender, receiver, payload, self.now()))

    # ------------------------------------------------------------ agent actions

    def add_ev(self, i: int, model_index: int) -> None:
        """Give household ``i`` an EV of catalog model ``model_index``, at home and plugged in."""
        model = self.ev_models[model_index]
        box = self.config.charger
        charger = ChargePointSpec(min(box.power_kw, model.max_charge_power_kw), box.efficiency)
        self.has_ev[i] = True
        self.model_idx[i] = model_index
        self._models[i] = model
        self._chargers[i] = charger
        self.capacity[i] = model.battery_capacity_kwh
        self.consumption[i] = model.consumption_kwh_per_km
        self.power[i] = charger.power_kw
        self.eff[i] = charger.efficiency
        self.soc[i] = self.soc_initial[i] = self.config.initial_soc
        self.at_home[i] = True
        now_min = self.clock * 60
        d = self.clock // 24
        if self.dep_abs[d, i] <= now_min:
            d += 1
        self.trip_day[i] = d
        self._plug(i, now_min, int(self.dep_abs[d, i]), float(self.trip_km[d, i]))

    def _plug(self, i: int, plug_min: int, dep_min: int, next_km: float) -> None:
        model, charger = self._models[i], self._chargers[i]
        request = ChargeRequest(
            plug_in=self._dt(plug_min),
            departure=self._dt(dep_min),
            battery=BatteryState(float(self.soc[i])),
            model=model,
            charger=charger,
            prefs=self.prefs,
            next_trip_distance_km=next_km,
        )
        target = effective_target_soc(request)
        self.home_start[i] = plug_min
        self.home_end[i] = dep_min
        self.target[i] = target
        if self.config.plug_in_policy == "when_needed" and request.battery.soc >= target:
            self.mode[i] = kernels.INACTIVE
            return
        self.messages["plug-in"] += 1
        self._send(MessageKind.SCHEDULE_REQUEST, f"ChargingBox-{i}", "ChargingServiceProvider", request)
        if self.strategy is Strategy.TRADITIONAL:
            self.mode[i] = kernels.CONTINUOUS
            self.nslots[i] = 0
            schedule = traditional_schedule(request) if self.config.trace.schedules else None
        else:
            k = required_charging_hours(required_energy(model, request.battery, target), charger)
            hours = self.provider.slot_hours(plug_min, dep_min, k)
            if len(hours) > self.slots.shape[1]:
                grown = np.zeros((self.n, 2 * len(hours)), dtype=np.int64)
                grown[:, : self.slots.shape[1]] = self.slots
                self.slots = grown
            self.slots[i, : len(hours)] = hours
            self.nslots[i] = len(hours)
            self.cursor[i] = 0
            self.mode[i] = kernels.SCHEDULED
            schedule = None
            if self.config.trace.schedules:
                schedule = ChargingSchedule(
                    slots=tuple(self.start + int(h) * HOUR for h in hours), target_soc=target, strategy=self.strategy
                )
        self._send(MessageKind.SCHEDULE_RESPONSE, "ChargingServiceProvider", f"ChargingBox-{i}", schedule)
        if schedule is not None:
            self.schedules.append((i, request, schedule))

    def _depart(self, i: int, d: int) -> None:
        cap, soc = self.capacity[i], float(self.soc[i])
        energy = cap * soc
        demand = float(self.trip_km[d, i]) * self.consumption[i]
        depleted = demand > energy
        after = 0.0 if depleted else max(0.0, soc - demand / cap)
        self.trip_total[i] += min(demand, energy)
        self.soc[i] = after
        self.mode[i] = kernels.INACTIVE
        self.at_home[i] = False
        self.n_departures += 1
        rule = self.config.reporting.dissatisfaction_rule
        unhappy = depleted if rule == "energy_shortfall" else soc < self.target[i] - 1e-9
        if unhappy or self.config.trace.departures:
            event = DepartureEvent(self._dt(self.dep_abs[d, i]), i, energy, demand, soc, after, float(self.target[i]), depleted)
            if unhappy:
                self.dissatisfaction.append(event)
            if self.config.trace.departures:
                self.departures.append(event)

    def _arrive(self, i: int, d: int) -> None:
        self.at_home[i] = True
        self.trip_day[i] = d + 1
        self._plug(i, int(self.arr_abs[d, i]), int(self.dep_abs[d + 1, i]), float(self.trip_km[d + 1, i]))

    # ------------------------------------------------------------------ stepping

    def step_hour(self) -> None:
        if self.done:
            raise InvariantError("simulation already finished")
        h = self.clock
        day = h // 24
        if h in self._month_starts:
            adopt_evs(self.bundle.adoption, self._month_starts[h], self, self.rng)
        if h % 24 == 0:
            self._send(MessageKind.TARIFF_PUBLICATION, "DSO", "ElectricitySupplier")

        # (1) departures
        for d, i in self._events_at(self._dep_events, h):
            if self.has_ev[i] and self.at_home[i] and self.trip_day[i] == d:
                self._depart(i, d)
        # (2) arrivals
        for d, i in self._events_at(self._arr_events, h):
            if self.has_ev[i] and not self.at_home[i] and self.trip_day[i] == d:
                self._arrive(i, d)

        # (3) charging
        ev_row = self.ev_kwh[h] if self.ev_kwh is not None else self._row
        kernels.charge_hour(
            h, self.home_start, self.home_end, self.soc, self.capacity, self.power, self.eff, self.target,
            self.mode, self.slots, self.nslots, self.cursor, self.fallback, ev_row, self._gain, self._act,
        )
        self.gain_total += self._gain
        if self.actions is not None:
            self.actions[h] = self._act

        # (4)-(5) base load and aggregation
        base_row = self.base_load[h]
        load_row = base_row + ev_row
        total = float(load_row.sum())
        self.base_kw[h] = base_row.sum()
        self.ev_kw[h] = ev_row.sum()
        self.owner_base_kw[h] = base_row[self.has_ev].sum()
        self.load_kw[h] = total
        n_ev = int(self.has_ev.sum())
        self.ev_count[h] = n_ev
        self.plugged_count[h] = int(np.count_nonzero(self.mode != kernels.INACTIVE))
        self._send(MessageKind.METER_READING, "DomesticConsumer", "DSO", count=self.n)

        # (6) overload
        event = detect_overload(total, self.capacity_kw, self.now(), n_ev)
        if event is not None:
            self.overloads.append(event)

        # (7) billing
        self.bills += load_row * self.prices.total[h]
        np.maximum(self.daily_peak[day], load_row, out=self.daily_peak[day])

        if self.soc.min() < 0.0 or self.soc.max() > 1.0:
            raise InvariantError(f"SoC left [0, 1] at hour {h}")
        # (8)
        self.clock += 1

    def household(self, i: int) -> Household:
        ev = None
        if self.has_ev[i]:
            ev = (self._models[i], BatteryState(float(self.soc[i])), self.prefs, self._chargers[i])
        return Household(i, self.base_load[:, i], ev, float(self.bills[i]))

    def result(self) -> SimulationResult:
        m = self.messages
        if not m["plug-in"] == m[MessageKind.SCHEDULE_REQUEST.value] == m[MessageKind.SCHEDULE_RESPONSE.value]:
            raise InvariantError("schedule requests, responses and plug-ins do not match")
        names = [self.ev_models[k].name if k >= 0 else "" for k in self.model_idx]
        return SimulationResult(
            name=self.config.name,
            strategy=self.config.strategy.label,
            start=self.start,
            n_hours=self.clock,
            capacity_kw=self.capacity_kw,
            load_kw=self.load_kw,
            base_kw=self.base_kw,
            ev_kw=self.ev_kw,
            owner_base_kw=self.owner_base_kw,
            ev_count=self.ev_count,
            plugged_count=self.plugged_count,
            prices=self.prices,
            daily_peak_kw=self.daily_peak,
            bills=self.bills,
            overloads=self.overloads,
            dissatisfaction=self.dissatisfaction,
            messages=dict(self.messages),
            ev_ledger={
                "has_ev": self.has_ev.copy(),
                "model": names,
                "capacity_kwh": np.where(self.has_ev, self.capacity, 0.0),
                "soc_initial": self.soc_initial.copy(),
                "soc_final": self.soc.copy(),
                "battery_gain_kwh": self.gain_total.copy(),
                "trip_kwh": self.trip_total.copy(),
            },
            departures=self.departures,
            schedules=self.schedules,
            message_log=self.message_log,
            ev_kwh=self.ev_kwh,
            base_load=self.base_load if self.config.keep_ledgers else None,
            actions=self.actions,
            n_departures=self.n_departures,
            config_hash=self.config.config_hash(),
            seed=self.config.seed,
            reporting=self.config.reporting,
        )


def aggregate_load(result: SimulationResult, hour: int) -> float:
    """Recompute the feeder load of ``hour`` from the per-household ledgers."""
    if result.ev_kwh is None or result.base_load is None:
        raise ValueError("aggregate_load needs a run with keep_ledgers enabled")
    return float((result.base_load[hour] + result.ev_kwh[hour]).sum())


def step_hour(state: Simulation) -> Simulation:
    state.step_hour()
    return state


def run(config: ScenarioConfig, bundle: InputBundle | None = None) -> SimulationResult:
    """Simulate the whole horizon and return the result."""
    if bundle is None:
        from .inputs import load_inputs

        bundle = load_inputs(config)
    sim = Simulation(config, bundle)
    while not sim.done:
        sim.step_hour()
    return sim.result()


def _run_one(args):
    config, bundle = args
    return run(config, bundle)


def run_many(configs: list[ScenarioConfig], bundles: list[InputBundle | None] | None = None, max_workers: int | None = None) -> list[SimulationResult]:
    """Run independent scenarios, in parallel when ``max_workers`` > 1; results keep input order."""
    bundles = bundles or [None] * len(configs)
    jobs = list(zip(configs, bundles))
    if not max_workers or max_workers <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(_run_one, jobs))
