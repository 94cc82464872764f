"""EV adoption and daily driving patterns."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, timedelta

import numpy as np

from .domain import Trip
from .errors import ConfigError

MAX_RESAMPLE_ROUNDS = 200


@dataclass(frozen=True)
class Dist:
    """A one-dimensional sampling distribution.

    kinds: ``fixed`` (value), ``uniform`` (low, high), ``normal`` (mean, sd,
    optional low/high truncation), ``lognormal`` (median, sigma, optional
    low/high) and ``empirical`` (values, drawn with replacement).
    """

    kind: str
    value: float | None = None
    mean: float | None = None
    sd: float | None = None
    median: float | None = None
    sigma: float | None = None
    low: float | None = None
    high: float | None = None
    values: tuple[float, ...] = ()

    def __post_init__(self):
        need = {
            "fixed": ("value",),
            "uniform": ("low", "high"),
            "normal": ("mean", "sd"),
            "lognormal": ("median", "sigma"),
            "empirical": (),
        }
        if self.kind not in need:
            raise ConfigError(f"unknown distribution kind {self.kind!r}")
        for attr in need[self.kind]:
            if getattr(self, attr) is None:
                raise ConfigError(f"{self.kind} distribution needs {attr!r}")
        if self.kind == "empirical" and not self.values:
            raise ConfigError("empirical distribution needs a non-empty 'values' list")
        if self.low is not None and self.high is not None and self.low > self.high:
            raise ConfigError(f"distribution bounds inverted: low {self.low} > high {self.high}")
        if self.kind in ("normal", "lognormal") and (self.sd or self.sigma or 0) < 0:
            raise ConfigError("distribution spread must be >= 0")

    @classmethod
    def from_dict(cls, raw: dict) -> "Dist":
        raw = dict(raw)
        if "values" in raw:
            raw["values"] = tuple(float(v) for v in raw["values"])
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(f"bad distribution {raw}: {exc}") from exc

    def support(self) -> tuple[float, float]:
        if self.kind == "fixed":
            return self.value, self.value
        if self.kind == "empirical":
            return min(self.values), max(self.values)
        lo = self.low if self.low is not None else -np.inf
        hi = self.high if self.high is not None else np.inf
        if self.kind == "lognormal":
            lo = max(lo, 0.0)
        return lo, hi

    def _draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "fixed":
            return np.full(n, float(self.value))
        if self.kind == "uniform":
            return rng.uniform(self.low, self.high, n)
        if self.kind == "normal":
            return rng.normal(self.mean, self.sd, n)
        if self.kind == "lognormal":
            return self.median * np.exp(rng.normal(0.0, self.sigma, n))
        return np.asarray(self.values)[rng.integers(0, len(self.values), n)]

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        out = self._draw(rng, n)
        lo, hi = self.support()
        for _ in range(MAX_RESAMPLE_ROUNDS):
            bad = (out < lo) | (out > hi)
            if not bad.any():
                return out
            out[bad] = self._draw(rng, int(bad.sum()))
        raise ConfigError(f"cannot sample {self.kind} distribution within [{lo}, {hi}]")


@dataclass(frozen=True)
class DayPattern:
    departure: Dist  # hour of day
    arrival: Dist  # hour of day
    distance: Dist  # km

    def __post_init__(self):
        dep_lo, _ = self.departure.support()
        _, arr_hi = self.arrival.support()
        _, d_hi = self.distance.support()
        if dep_lo >= 24 or arr_hi <= 0 or dep_lo >= arr_hi:
            raise ConfigError("driving pattern: departure can never precede arrival within one day")
        if d_hi < 0:
            raise ConfigError("driving pattern: distance distribution has no mass at >= 0 km")


@dataclass(frozen=True)
class DrivingPatternSpec:
    """Distributions of the single daily away-from-home trip.

    Times are hours of the day; they are rounded to whole minutes. A trip is
    valid when departure < arrival, both fall inside the day, and arrival is
    not earlier than the first whole hour after departure (the engine's
    hourly bookkeeping relies on the latter). ``trips`` optionally holds an
    empirical joint table (departure_h, arrival_h, distance_km) that is
    bootstrapped instead of the marginals.
    """

    weekday: DayPattern
    weekend: DayPattern | None = None
    trips: np.ndarray | None = field(default=None, compare=False)

    def pattern_for(self, day: date) -> DayPattern:
        if self.weekend is not None and day.weekday() >= 5:
            return self.weekend
        return self.weekday


def _valid(dep: np.ndarray, arr: np.ndarray, dist: np.ndarray) -> np.ndarray:
    return (dep >= 0) & (arr < 1440) & (arr > dep) & (arr >= -(-dep // 60) * 60) & (dist >= 0)


def _sample_pattern(pattern: DayPattern, rng: np.random.Generator, n: int):
    def draw(k):
        dep = np.rint(pattern.departure.sample(rng, k) * 60).astype(np.int64)
        arr = np.rint(pattern.arrival.sample(rng, k) * 60).astype(np.int64)
        dist = pattern.distance.sample(rng, k)
        return dep, arr, dist

    dep, arr, dist = draw(n)
    for _ in range(MAX_RESAMPLE_ROUNDS):
        bad = ~_valid(dep, arr, dist)
        if not bad.any():
            return dep, arr, dist
        dep[bad], arr[bad], dist[bad] = draw(int(bad.sum()))
    raise ConfigError("driving pattern: could not sample a trip with departure before arrival")


def _sample_empirical(trips: np.ndarray, rng: np.random.Generator, n: int):
    dep = np.rint(trips[:, 0] * 60).astype(np.int64)
    arr = np.rint(trips[:, 1] * 60).astype(np.int64)
    dist = trips[:, 2].astype(np.float64)
    ok = _valid(dep, arr, dist)
    if not ok.any():
        raise ConfigError("driving pattern: empirical trip table has no valid rows")
    rows = np.flatnonzero(ok)[rng.integers(0, int(ok.sum()), n)]
    return dep[rows], arr[rows], dist[rows]


def sample_trip_table(spec: DrivingPatternSpec, rng: np.random.Generator, start: date, n_days: int, n_households: int):
    """Trips for every (day, household): departure/arrival minutes of day and km.

    Returns three (n_days, n_households) arrays.
    """
    dep = np.empty((n_days, n_households), dtype=np.int64)
    arr = np.empty_like(dep)
    dist = np.empty((n_days, n_households), dtype=np.float64)
    days = [start + timedelta(days=k) for k in range(n_days)]
    if spec.trips is not None:
        d, a, km = _sample_empirical(spec.trips, rng, n_days * n_households)
        return d.reshape(dep.shape), a.reshape(dep.shape), km.reshape(dep.shape)
    groups = {}
    for k, day in enumerate(days):
        groups.setdefault(id(spec.pattern_for(day)), (spec.pattern_for(day), []))[1].append(k)
    for pattern, rows in groups.values():
        d, a, km = _sample_pattern(pattern, rng, len(rows) * n_households)
        dep[rows] = d.reshape(len(rows), n_households)
        arr[rows] = a.reshape(len(rows), n_households)
        dist[rows] = km.reshape(len(rows), n_households)
    return dep, arr, dist


def sample_daily_trip(spec: DrivingPatternSpec, rng: np.random.Generator, day: date) -> Trip:
    if spec.trips is not None:
        dep, arr, dist = _sample_empirical(spec.trips, rng, 1)
    else:
        dep, arr, dist = _sample_pattern(spec.pattern_for(day), rng, 1)
    midnight = datetime(day.year, day.month, day.day)
    return Trip(
        departure_time=midnight + timedelta(minutes=int(dep[0])),
        arrival_time=midnight + timedelta(minutes=int(arr[0])),
        distance_km=float(dist[0]),
    )


@dataclass(frozen=True)
class AdoptionCurve:
    """Cumulative EV counts by month plus the market share of each EV model."""

    months: tuple[tuple[int, int], ...]
    cumulative: tuple[int, ...]
    model_mix: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.months) != len(self.cumulative):
            raise ConfigError("adoption curve: months and counts differ in length")
        if list(self.months) != sorted(set(self.months)):
            raise ConfigError("adoption curve: months must be strictly increasing")
        counts = np.asarray(self.cumulative, dtype=np.int64)
        if len(counts) and (counts.min() < 0 or np.any(np.diff(counts) < 0)):
            raise ConfigError("adoption curve: cumulative counts must be non-negative and non-decreasing")
        if any(w < 0 for w in self.model_mix.values()) or (self.model_mix and sum(self.model_mix.values()) <= 0):
            raise ConfigError("adoption curve: model mix weights must be >= 0 with a positive sum")

    def target_for(self, year: int, month: int) -> int:
        target = 0
        for ym, count in zip(self.months, self.cumulative):
            if ym > (year, month):
                break
            target = count
        return target

    @property
    def final_count(self) -> int:
        return int(self.cumulative[-1]) if self.cumulative else 0

    def check_households(self, households: int) -> None:
        if self.final_count > households:
            raise ConfigError(f"adoption curve reaches {self.final_count} EVs but there are only {households} households")

    def weights(self, names: list[str]) -> np.ndarray:
        """Normalised model probabilities aligned to ``names``."""
        if not self.model_mix:
            return np.full(len(names), 1.0 / len(names))
        unknown = set(self.model_mix) - set(names)
        if unknown:
            raise ConfigError(f"adoption model mix names unknown EV models: {sorted(unknown)}")
        w = np.array([float(self.model_mix.get(n, 0.0)) for n in names])
        return w / w.sum()


def adopt_evs(curve: AdoptionCurve, month: tuple[int, int], state, rng: np.random.Generator):
    """Bring the number of EV owners up to the curve's target for ``month``.

    New owners are drawn uniformly without replacement among households
    without an EV; their models follow the curve's market shares. ``state``
    must expose ``has_ev`` and ``add_ev(household, model_index)`` plus
    ``ev_models``. Returns the indices of the new owners.
    """
    target = curve.target_for(*month)
    n = len(state.has_ev)
    if target > n:
        raise ConfigError(f"adoption target {target} in {month[0]}-{month[1]:02d} exceeds {n} households")
    current = int(state.has_ev.sum())
    if target <= current:
        return np.empty(0, dtype=np.int64)
    free = np.flatnonzero(~state.has_ev)
    owners = np.sort(rng.choice(free, size=target - current, replace=False))
    p = curve.weights([m.name for m in state.ev_models])
    models = rng.choice(len(p), size=len(owners), p=p)
    for i, m in zip(owners, models):
        state.add_ev(int(i), int(m))
    return owners
