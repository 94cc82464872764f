"""Spot prices, time-of-use tariff schedules and the total consumer price."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

import numpy as np

from .errors import ConfigError, DataError

HOUR = timedelta(hours=1)


def floor_to_hour(t: datetime) -> datetime:
    return t.replace(minute=0, second=0, microsecond=0)


def ceil_to_hour(t: datetime) -> datetime:
    f = floor_to_hour(t)
    return f if f == t else f + HOUR


@dataclass(frozen=True)
class HourlySeries:
    """Contiguous hourly values starting at a whole hour."""

    start: datetime
    values: np.ndarray

    kind = "series"

    def __post_init__(self):
        if self.start != floor_to_hour(self.start):
            raise DataError(f"{self.kind} must start on a whole hour, got {self.start}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise DataError(f"{self.kind} values must be one-dimensional")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.values)

    @property
    def end(self) -> datetime:
        """Exclusive end of coverage."""
        return self.start + len(self.values) * HOUR

    def index_of(self, t: datetime) -> int:
        idx = int((floor_to_hour(t) - self.start) // HOUR)
        if idx < 0 or idx >= len(self.values):
            raise DataError(f"{self.kind} has no value for {t.isoformat()} (covers {self.start} to {self.end})")
        return idx

    def at(self, t: datetime) -> float:
        return float(self.values[self.index_of(t)])

    def window(self, start: datetime, n_hours: int) -> np.ndarray:
        """Values for ``n_hours`` hours from ``start``; raises if not covered."""
        i = self.index_of(start)
        if i + n_hours > len(self.values):
            raise DataError(f"{self.kind} ends at {self.end}, horizon needs {start + n_hours * HOUR}")
        return self.values[i : i + n_hours]


class SpotPriceSeries(HourlySeries):
    """Hourly day-ahead spot prices in DKK/kWh; negative prices are allowed."""

    kind = "spot price series"

    @property
    def hourly_prices(self) -> np.ndarray:
        return self.values


class EmissionSeries(HourlySeries):
    kind = "emission series"

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.values < 0):
            raise DataError("emission intensities must be >= 0")

    @property
    def hourly_gco2_per_kwh(self) -> np.ndarray:
        return self.values


@dataclass(frozen=True)
class TariffPeriod:
    from_hour: int
    to_hour: int
    rate: float

    def __post_init__(self):
        if not 0 <= self.from_hour < self.to_hour <= 24:
            raise ConfigError(f"tariff period [{self.from_hour}, {self.to_hour}) is not a valid hour interval")
        if self.rate < 0:
            raise ConfigError(f"tariff rate must be >= 0, got {self.rate}")


def _parse_month_day(text: str) -> tuple[int, int]:
    try:
        month, day = (int(part) for part in text.split("-"))
        date(2000, month, day)
    except ValueError as exc:
        raise ConfigError(f"season bound {text!r} is not MM-DD") from exc
    return month, day


def _day_of_leap_year(month: int, day: int) -> int:
    return (date(2000, month, day) - date(2000, 1, 1)).days


@dataclass(frozen=True)
class Season:
    """A recurring calendar range (inclusive ``MM-DD`` bounds, may wrap the new year)."""

    start: str
    end: str
    periods: tuple[TariffPeriod, ...]
    name: str = ""

    def __post_init__(self):
        _parse_month_day(self.start)
        _parse_month_day(self.end)
        periods = tuple(sorted(self.periods, key=lambda p: p.from_hour))
        object.__setattr__(self, "periods", periods)
        hour = 0
        for p in periods:
            if p.from_hour != hour:
                kind = "gap" if p.from_hour > hour else "overlap"
                raise ConfigError(f"season {self.name or self.start}: {kind} in daily periods at hour {hour}")
            hour = p.to_hour
        if hour != 24:
            raise ConfigError(f"season {self.name or self.start}: daily periods leave hours {hour}-24 uncovered")

    def days(self) -> list[int]:
        """Days of a leap year (0..365) this season covers."""
        a = _day_of_leap_year(*_parse_month_day(self.start))
        b = _day_of_leap_year(*_parse_month_day(self.end))
        if a <= b:
            return list(range(a, b + 1))
        return list(range(a, 366)) + list(range(0, b + 1))

    def hourly_rates(self) -> np.ndarray:
        rates = np.empty(24)
        for p in self.periods:
            rates[p.from_hour : p.to_hour] = p.rate
        return rates


@dataclass(frozen=True)
class TariffSchedule:
    seasons: tuple[Season, ...]
    label: str = ""
    _table: np.ndarray = field(init=False, repr=False, compare=False)
    _covered: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.seasons:
            raise ConfigError(f"tariff schedule {self.label!r} has no seasons")
        table = np.full((366, 24), np.nan)
        covered = np.zeros(366, dtype=bool)
        for season in self.seasons:
            for d in season.days():
                if covered[d]:
                    raise ConfigError(f"tariff {self.label!r}: seasons overlap on {_describe_day(d)}")
                covered[d] = True
                table[d] = season.hourly_rates()
        object.__setattr__(self, "_table", table)
        object.__setattr__(self, "_covered", covered)

    def uncovered_days(self) -> list[str]:
        return [_describe_day(d) for d in np.flatnonzero(~self._covered)]

    def validate_coverage(self) -> None:
        missing = self.uncovered_days()
        if missing:
            raise ConfigError(f"tariff {self.label!r}: no season covers {', '.join(missing[:5])}")

    def rates(self, start: datetime, n_hours: int) -> np.ndarray:
        """Tariff rate for each of ``n_hours`` consecutive hours from ``start``."""
        start = floor_to_hour(start)
        day0 = datetime(start.year, start.month, start.day)
        n_days = (start.hour + n_hours + 23) // 24
        doy = np.fromiter(
            (_day_of_leap_year((day0 + timedelta(days=k)).month, (day0 + timedelta(days=k)).day) for k in range(n_days)),
            dtype=np.int64,
            count=n_days,
        )
        bad = ~self._covered[doy]
        if bad.any():
            first = day0 + timedelta(days=int(np.argmax(bad)))
            raise ConfigError(f"tariff {self.label!r}: no season covers {first.date().isoformat()}")
        flat = self._table[doy].ravel()
        return flat[start.hour : start.hour + n_hours].copy()

    def period_rank(self, t: datetime) -> int:
        """0 for the cheapest period of t's day, counting distinct rates upward."""
        rates = self.rates(datetime(t.year, t.month, t.day), 24)
        return int(np.searchsorted(np.unique(rates), rates[t.hour]))


def _describe_day(d: int) -> str:
    day = date(2000, 1, 1) + timedelta(days=int(d))
    return f"{day.month:02d}-{day.day:02d}"


def tariff_rate_at(schedule: TariffSchedule, t: datetime) -> float:
    return float(schedule.rates(t, 1)[0])


def tm3_default() -> TariffSchedule:
    """Four-period preset in the style of the Danish Tariff Model 3.0.

    The rates (DKK/kWh) are placeholders; only their ordering is meaningful:
    night [00,06) is cheapest, late evening [21,24) second, day [06,17)
    third and the [17,21) peak most expensive, in both seasons.
    """
    def periods(night, late, day, peak):
        return (
            TariffPeriod(0, 6, night),
            TariffPeriod(6, 17, day),
            TariffPeriod(17, 21, peak),
            TariffPeriod(21, 24, late),
        )

    return TariffSchedule(
        seasons=(
            Season("04-01", "09-30", periods(0.15, 0.21, 0.23, 0.60), name="summer"),
            Season("10-01", "03-31", periods(0.15, 0.40, 0.45, 1.35), name="winter"),
        ),
        label="tm3_default",
    )


def flat_tariff(rate: float = 0.0, label: str = "flat") -> TariffSchedule:
    return TariffSchedule(seasons=(Season("01-01", "12-31", (TariffPeriod(0, 24, rate),)),), label=label)


TARIFF_PRESETS = {"tm3_default": tm3_default, "flat": flat_tariff}


@dataclass(frozen=True)
class PriceComponents:
    spot: float
    tariff: float
    fixed_addons: float

    @property
    def total(self) -> float:
        return self.spot + self.tariff + self.fixed_addons


def total_price_at(spot: SpotPriceSeries, schedule: TariffSchedule, addons: float, t: datetime) -> PriceComponents:
    return PriceComponents(spot=spot.at(t), tariff=tariff_rate_at(schedule, t), fixed_addons=addons)


def horizon_bounds(plug_in: datetime, departure: datetime, use_partial_hours: bool = False) -> tuple[datetime, int]:
    """First hour and hour count of the schedulable window.

    By default only whole hours fully inside [plug_in, departure) count; with
    ``use_partial_hours`` the arrival and departure hours are included too.
    """
    if use_partial_hours:
        first, last = floor_to_hour(plug_in), ceil_to_hour(departure)
    else:
        first, last = ceil_to_hour(plug_in), floor_to_hour(departure)
    return first, max(0, int((last - first) // HOUR))


def price_horizon(
    spot: SpotPriceSeries,
    schedule: TariffSchedule,
    addons: float,
    plug_in: datetime,
    departure: datetime,
    use_partial_hours: bool = False,
) -> list[tuple[datetime, float]]:
    """(hour, total DKK/kWh) for every schedulable hour while the EV is home."""
    if not plug_in < departure:
        raise ValueError("plug_in must precede departure")
    first, n = horizon_bounds(plug_in, departure, use_partial_hours)
    if n == 0:
        return []
    total = spot.window(first, n) + schedule.rates(first, n) + addons
    return [(first + k * HOUR, float(total[k])) for k in range(n)]


@dataclass(frozen=True)
class PriceBook:
    """All price and emission inputs aligned to the simulated hours."""

    start: datetime
    spot: np.ndarray
    tariff: np.ndarray
    addons: float
    emissions: np.ndarray | None = None
    total: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.spot + self.tariff + self.addons)

    @property
    def n_hours(self) -> int:
        return len(self.spot)

    def components(self, h: int) -> PriceComponents:
        return PriceComponents(float(self.spot[h]), float(self.tariff[h]), self.addons)


def build_price_book(
    start: datetime,
    n_hours: int,
    spot: SpotPriceSeries,
    schedule: TariffSchedule,
    addons: float,
    emissions: EmissionSeries | None = None,
) -> PriceBook:
    return PriceBook(
        start=start,
        spot=spot.window(start, n_hours).copy(),
        tariff=schedule.rates(start, n_hours),
        addons=float(addons),
        emissions=None if emissions is None else emissions.window(start, n_hours).copy(),
    )
