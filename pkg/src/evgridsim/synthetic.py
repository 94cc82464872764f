"""Synthetic input generator standing in for proprietary metering and market data.

The ``feeder126`` preset reproduces the case's shape: 126 households, a
four-period tariff, and S-curve EV adoption that reaches 85 EVs (about 67 %
penetration) in October 2031.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields, replace
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .config import InputBundle, parse_day_pattern
from .domain import load_ev_catalog
from .errors import ConfigError
from .ingest import tile_years
from .population import AdoptionCurve, DayPattern, Dist, DrivingPatternSpec
from .pricing import EmissionSeries, SpotPriceSeries

# relative hourly shapes, hour 0..23
RESIDENTIAL_SHAPE = (
    0.55, 0.45, 0.40, 0.38, 0.38, 0.42, 0.65, 0.95, 1.05, 0.90, 0.85, 0.85,
    0.90, 0.85, 0.85, 0.95, 1.20, 1.65, 1.85, 1.75, 1.55, 1.35, 1.05, 0.75,
)
SPOT_SHAPE = (
    0.82, 0.78, 0.75, 0.74, 0.75, 0.80, 0.92, 1.08, 1.15, 1.12, 1.06, 1.02,
    0.99, 0.97, 0.97, 1.00, 1.07, 1.18, 1.22, 1.16, 1.07, 1.00, 0.93, 0.87,
)
EMISSION_SHAPE = (
    0.85, 0.82, 0.80, 0.80, 0.82, 0.88, 0.98, 1.06, 1.08, 1.04, 1.00, 0.97,
    0.95, 0.95, 0.97, 1.02, 1.10, 1.18, 1.20, 1.15, 1.08, 1.02, 0.95, 0.90,
)


@dataclass(frozen=True)
class BaseLoadSpec:
    annual_kwh_mean: float = 4000.0
    household_sigma: float = 0.30
    noise_sigma: float = 0.40
    winter_amplitude: float = 0.25
    max_shift_h: int = 1
    shape: tuple[float, ...] = RESIDENTIAL_SHAPE


@dataclass(frozen=True)
class PriceSpec:
    mean_dkk_per_kwh: float = 0.25
    seasonal_amplitude: float = 0.15
    daily_sd: float = 0.25
    daily_rho: float = 0.8
    hourly_sd: float = 0.04
    source_start_year: int = 2015
    source_years: int = 4
    shape: tuple[float, ...] = SPOT_SHAPE


@dataclass(frozen=True)
class EmissionSpec:
    mean_gco2_per_kwh: float = 150.0
    seasonal_amplitude: float = 0.20
    daily_sd: float = 0.15
    shape: tuple[float, ...] = EMISSION_SHAPE


@dataclass(frozen=True)
class AdoptionSpec:
    """Logistic adoption through two anchor points, capped at ``saturation``."""

    start_count: int = 3
    anchor_month: str = "2031-10"
    anchor_count: int = 85
    saturation: float = 110.0
    model_mix: dict = field(
        default_factory=lambda: {
            "Nissan Leaf": 0.25, "Tesla Model 3": 0.25, "VW ID.3": 0.20, "Renault Zoe": 0.15, "Kia e-Niro": 0.15,
        }
    )


def _commuter_driving() -> DrivingPatternSpec:
    return DrivingPatternSpec(
        weekday=DayPattern(
            departure=Dist("normal", mean=7.5, sd=1.0, low=5.0, high=10.0),
            arrival=Dist("normal", mean=16.75, sd=1.5, low=13.0, high=21.0),
            distance=Dist("lognormal", median=35.0, sigma=0.6, low=0.0, high=150.0),
        ),
        weekend=DayPattern(
            departure=Dist("normal", mean=10.0, sd=1.5, low=7.0, high=14.0),
            arrival=Dist("normal", mean=16.0, sd=2.0, low=12.0, high=22.0),
            distance=Dist("lognormal", median=25.0, sigma=0.8, low=0.0, high=150.0),
        ),
    )


@dataclass(frozen=True)
class SyntheticSpec:
    households: int = 126
    start: date = date(2020, 1, 1)
    end: date = date(2032, 12, 31)
    base_load: BaseLoadSpec = field(default_factory=BaseLoadSpec)
    prices: PriceSpec = field(default_factory=PriceSpec)
    emissions: EmissionSpec | None = field(default_factory=EmissionSpec)
    adoption: AdoptionSpec = field(default_factory=AdoptionSpec)
    driving: DrivingPatternSpec = field(default_factory=_commuter_driving)
    ev_catalog: Path | None = None

    def __post_init__(self):
        if self.households <= 0:
            raise ConfigError("synthetic spec: households must be > 0")
        if self.end < self.start:
            raise ConfigError("synthetic spec: end precedes start")
        if self.adoption.anchor_count > self.households or self.adoption.start_count > self.households:
            raise ConfigError(
                f"synthetic spec: adoption reaches {self.adoption.anchor_count} EVs but there are only {self.households} households"
            )

    @property
    def n_hours(self) -> int:
        return ((self.end - self.start).days + 1) * 24


PRESETS = {"feeder126": SyntheticSpec}


def _months(start: date, end: date) -> list[tuple[int, int]]:
    out, y, m = [], start.year, start.month
    while (y, m) <= (end.year, end.month):
        out.append((y, m))
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return out


def adoption_curve(spec: AdoptionSpec, households: int, start: date, end: date) -> AdoptionCurve:
    """Monthly logistic S-curve passing through ``start_count`` at ``start`` and the anchor."""
    months = _months(start, end)
    ay, am = (int(p) for p in spec.anchor_month.split("-"))
    k = spec.saturation
    c0, c1 = max(spec.start_count, 0.5), spec.anchor_count
    if not 0 < c0 < c1 < k:
        raise ConfigError("adoption spec needs 0 < start_count < anchor_count < saturation")
    t1 = (ay - start.year) * 12 + (am - start.month)
    if t1 <= 0:
        raise ConfigError("adoption anchor month must come after the start")
    l0, l1 = math.log(c0 / (k - c0)), math.log(c1 / (k - c1))
    rate = (l1 - l0) / t1
    mid = -l0 / rate
    t = np.arange(len(months), dtype=np.float64)
    counts = np.rint(k / (1.0 + np.exp(-rate * (t - mid)))).astype(np.int64)
    if 0 <= t1 < len(counts):
        counts[t1] = spec.anchor_count
    counts = np.minimum(np.maximum.accumulate(counts), households)
    if spec.start_count == 0:
        counts[0] = 0
        counts = np.maximum.accumulate(counts)
    return AdoptionCurve(tuple(months), tuple(int(c) for c in counts), dict(spec.model_mix))


def _seasonal(days: np.ndarray, amplitude: float) -> np.ndarray:
    """1 + amplitude, peaking mid-January."""
    return 1.0 + amplitude * np.cos(2.0 * np.pi * (days - 15.0) / 365.25)


def _day_of_year(start: date, n_days: int) -> np.ndarray:
    first = start.timetuple().tm_yday - 1
    out = np.empty(n_days)
    d = start
    for k in range(n_days):
        out[k] = d.timetuple().tm_yday - 1
        d += timedelta(days=1)
    return out


def synthetic_base_load(spec: BaseLoadSpec, households: int, start: date, n_days: int, rng: np.random.Generator) -> np.ndarray:
    shape = np.asarray(spec.shape, dtype=np.float64)
    shape = shape / shape.mean()
    shifts = rng.integers(-spec.max_shift_h, spec.max_shift_h + 1, households)
    profiles = np.stack([np.roll(shape, s) for s in shifts], axis=1)  # (24, N)
    scale = spec.annual_kwh_mean / 8760.0 * np.exp(rng.normal(0.0, spec.household_sigma, households) - spec.household_sigma**2 / 2)
    season = _seasonal(_day_of_year(start, n_days), spec.winter_amplitude)
    noise = np.exp(rng.normal(0.0, spec.noise_sigma, (n_days * 24, households)) - spec.noise_sigma**2 / 2)
    load = np.tile(profiles, (n_days, 1)) * np.repeat(season, 24)[:, None] * scale[None, :] * noise
    return np.ascontiguousarray(load)


def _ar1(rng: np.random.Generator, n: int, sd: float, rho: float) -> np.ndarray:
    eps = rng.normal(0.0, sd * math.sqrt(1 - rho**2), n)
    out = np.empty(n)
    acc = rng.normal(0.0, sd)
    for k in range(n):
        acc = rho * acc + eps[k]
        out[k] = acc
    return out


def synthetic_spot(spec: PriceSpec, start: date, n_hours: int, rng: np.random.Generator) -> SpotPriceSeries:
    """Generate ``source_years`` calendar years of prices and tile them over the horizon."""
    src_start = date(spec.source_start_year, 1, 1)
    src_days = (date(spec.source_start_year + spec.source_years, 1, 1) - src_start).days
    shape = np.asarray(spec.shape) / np.mean(spec.shape)
    level = _seasonal(_day_of_year(src_start, src_days), spec.seasonal_amplitude) * np.exp(_ar1(rng, src_days, spec.daily_sd, spec.daily_rho))
    hourly = np.repeat(level, 24) * np.tile(shape, src_days) + rng.normal(0.0, spec.hourly_sd, src_days * 24)
    source = spec.mean_dkk_per_kwh * hourly
    begin = datetime(start.year, start.month, start.day)
    return SpotPriceSeries(begin, tile_years(source, datetime(src_start.year, 1, 1), begin, n_hours))


def synthetic_emissions(spec: EmissionSpec, start: date, n_days: int, rng: np.random.Generator) -> EmissionSeries:
    shape = np.asarray(spec.shape) / np.mean(spec.shape)
    level = _seasonal(_day_of_year(start, n_days), spec.seasonal_amplitude) * np.exp(rng.normal(0.0, spec.daily_sd, n_days))
    values = np.maximum(spec.mean_gco2_per_kwh * np.repeat(level, 24) * np.tile(shape, n_days), 0.0)
    return EmissionSeries(datetime(start.year, start.month, start.day), values)


def generate_synthetic(spec: SyntheticSpec | str = "feeder126", seed: int = 0) -> InputBundle:
    """Build a complete, horizon-covering input bundle; deterministic in ``seed``."""
    if isinstance(spec, str):
        if spec not in PRESETS:
            raise ConfigError(f"unknown synthetic preset {spec!r} (known: {sorted(PRESETS)})")
        spec = PRESETS[spec]()
    n_days = (spec.end - spec.start).days + 1
    base_rng, price_rng, em_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))
    return InputBundle(
        base_load=synthetic_base_load(spec.base_load, spec.households, spec.start, n_days, base_rng),
        spot=synthetic_spot(spec.prices, spec.start, n_days * 24, price_rng),
        emissions=None if spec.emissions is None else synthetic_emissions(spec.emissions, spec.start, n_days, em_rng),
        ev_models=load_ev_catalog(spec.ev_catalog),
        adoption=adoption_curve(spec.adoption, spec.households, spec.start, spec.end),
        driving=spec.driving,
    )


_SECTIONS = {"base_load": BaseLoadSpec, "prices": PriceSpec, "emissions": EmissionSpec, "adoption": AdoptionSpec}


def synthetic_spec_from_dict(raw: dict, base_dir: Path | str = ".") -> SyntheticSpec:
    raw = dict(raw)
    preset = raw.pop("preset", "feeder126")
    if preset not in PRESETS:
        raise ConfigError(f"unknown synthetic preset {preset!r}")
    spec = PRESETS[preset]()
    updates = {}
    for key, value in raw.items():
        if key in ("households",):
            updates[key] = int(value)
        elif key in ("start", "end"):
            updates[key] = value if isinstance(value, date) else date.fromisoformat(str(value))
        elif key == "ev_catalog":
            p = Path(value)
            updates[key] = p if p.is_absolute() else Path(base_dir) / p
        elif key == "no_emissions":
            if value:
                updates["emissions"] = None
        elif key in _SECTIONS:
            cls = _SECTIONS[key]
            known = {f.name for f in fields(cls)}
            bad = set(value) - known
            if bad:
                raise ConfigError(f"unknown key {key}.{sorted(bad)[0]}")
            value = {k: tuple(v) if isinstance(v, list) else v for k, v in value.items()}
            updates[key] = replace(getattr(spec, key) or cls(), **value)
        elif key == "driving":
            if "weekday" not in value:
                raise ConfigError("driving.weekday is required")
            updates[key] = DrivingPatternSpec(
                weekday=parse_day_pattern(value["weekday"], "driving.weekday"),
                weekend=parse_day_pattern(value["weekend"], "driving.weekend") if "weekend" in value else None,
            )
        else:
            raise ConfigError(f"unknown key {key!r} in synthetic spec")
    return replace(spec, **updates)


def load_synthetic_spec(path: str | Path) -> SyntheticSpec:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read synthetic spec {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return synthetic_spec_from_dict(raw, base_dir=path.parent)
