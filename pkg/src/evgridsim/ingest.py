"""CSV ingestion with gap/duplicate/spacing checks, and the matching writers."""
from __future__ import annotations

import calendar
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np
import pandas as pd

from .domain import CATALOG_COLUMNS, EvModel
from .errors import DataError
from .population import AdoptionCurve
from .pricing import HOUR, EmissionSeries, HourlySeries, SpotPriceSeries

SERIES_KINDS = {
    "spot_prices": ("dkk_per_kwh", SpotPriceSeries),
    "emissions": ("gco2_per_kwh", EmissionSeries),
}
BASE_LOAD_COLUMNS = ("timestamp", "household_id", "kwh")
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M"


def _read_csv(path: Path, columns: tuple[str, ...]) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError as exc:
        raise DataError(f"{path}: file not found") from exc
    except pd.errors.EmptyDataError as exc:
        raise DataError(f"{path}: file is empty") from exc
    if tuple(df.columns) != columns:
        raise DataError(f"{path}: header must be {','.join(columns)}, got {','.join(map(str, df.columns))}")
    if df.empty:
        raise DataError(f"{path}: no data rows")
    return df


def _bad_lines(mask) -> str:
    lines = (np.flatnonzero(np.asarray(mask)) + 2).tolist()
    shown = ", ".join(map(str, lines[:5]))
    return shown + (f" (+{len(lines) - 5} more)" if len(lines) > 5 else "")


def _parse_timestamps(path: Path, raw: pd.Series) -> pd.DatetimeIndex:
    ts = pd.to_datetime(raw, format="ISO8601", errors="coerce")
    if ts.isna().any():
        raise DataError(f"{path}: unparsable timestamp on line(s) {_bad_lines(ts.isna())}")
    if getattr(ts.dt, "tz", None) is not None:
        ts = ts.dt.tz_localize(None)
    off_hour = (ts.dt.minute != 0) | (ts.dt.second != 0)
    if off_hour.any():
        raise DataError(f"{path}: non-hourly timestamp on line(s) {_bad_lines(off_hour)}")
    return pd.DatetimeIndex(ts)


def _parse_numbers(path: Path, raw: pd.Series, what: str) -> np.ndarray:
    values = pd.to_numeric(raw, errors="coerce")
    bad = values.isna() | ~np.isfinite(values)
    if bad.any():
        raise DataError(f"{path}: unparsable {what} on line(s) {_bad_lines(bad)}")
    # numpy's string conversion round-trips repr() output exactly; pandas' fast parser may not
    return np.asarray(raw.str.strip().to_numpy(), dtype=np.float64)


def _check_hourly(path: Path, ts: pd.DatetimeIndex, label: str = "") -> None:
    where = f" ({label})" if label else ""
    dup = ts.duplicated()
    if dup.any():
        raise DataError(f"{path}{where}: duplicate timestamp on line(s) {_bad_lines(dup)}")
    step = np.diff(ts.asi8) // 10**9
    if np.any(step <= 0):
        k = int(np.argmax(step <= 0))
        raise DataError(f"{path}{where}: timestamps out of order at {ts[k + 1]}")
    if np.any(step != 3600):
        k = int(np.argmax(step != 3600))
        missing = ts[k] + pd.Timedelta(hours=1)
        raise DataError(f"{path}{where}: gap in hourly series, missing {missing.isoformat()}")


def tile_years(values: np.ndarray, source_start: datetime, start: datetime, n_hours: int) -> np.ndarray:
    """Lay whole calendar years of ``values`` over a target horizon.

    Target year ``y`` reads source year ``years[(y - start.year) % len(years)]``
    at the same month/day/hour; 29 February falls back to the 28th when the
    source year has none. Works along axis 0 of 1-D or 2-D arrays.
    """
    if source_start != datetime(source_start.year, 1, 1):
        raise DataError(f"repeat_years needs whole calendar years; source starts {source_start}")
    years, pos = [], 0
    y = source_start.year
    while pos < len(values):
        n = (366 if calendar.isleap(y) else 365) * 24
        if pos + n > len(values):
            raise DataError(f"repeat_years needs whole calendar years; {y} is incomplete")
        years.append((y, pos))
        pos += n
        y += 1
    target = pd.date_range(start, periods=n_hours, freq="h")
    ty = target.year.to_numpy()
    src = np.asarray(years)
    pick = src[(ty - start.year) % len(years)]
    src_year, src_off = pick[:, 0], pick[:, 1]
    month, day, hour = target.month.to_numpy(), target.day.to_numpy(), target.hour.to_numpy()
    leap = np.array([calendar.isleap(int(v)) for v in src_year], dtype=bool)
    day = np.where((month == 2) & (day == 29) & ~leap, 28, day)
    doy = pd.to_datetime(dict(year=src_year, month=month, day=day)).dt.dayofyear.to_numpy() - 1
    return values[src_off + doy * 24 + hour]


def ingest_timeseries(
    path: str | Path,
    kind: str,
    start: datetime | None = None,
    n_hours: int | None = None,
    repeat_years: bool = False,
) -> HourlySeries:
    """Read ``spot_prices`` or ``emissions`` CSV into a checked hourly series.

    With ``start``/``n_hours`` the result is aligned to that horizon, tiling
    whole source years when ``repeat_years`` is set.
    """
    if kind not in SERIES_KINDS:
        raise ValueError(f"unknown series kind {kind!r}")
    column, cls = SERIES_KINDS[kind]
    path = Path(path)
    df = _read_csv(path, ("timestamp", column))
    ts = _parse_timestamps(path, df["timestamp"])
    values = _parse_numbers(path, df[column], column)
    _check_hourly(path, ts)
    src_start = ts[0].to_pydatetime()
    if start is None:
        return cls(src_start, values)
    if repeat_years:
        return cls(start, tile_years(values, src_start, start, n_hours))
    series = cls(src_start, values)
    try:
        return cls(start, series.window(start, n_hours).copy())
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc


def ingest_base_load(
    path: str | Path, start: datetime, n_hours: int, households: int, repeat_years: bool = False
) -> np.ndarray:
    """Long-format ``timestamp,household_id,kwh`` CSV to an (hours, households) array.

    Household ids are sorted and mapped to columns 0..households-1.
    """
    path = Path(path)
    df = _read_csv(path, BASE_LOAD_COLUMNS)
    ts = _parse_timestamps(path, df["timestamp"])
    kwh = _parse_numbers(path, df["kwh"], "kwh")
    if np.any(kwh < 0):
        raise DataError(f"{path}: negative kwh on line(s) {_bad_lines(kwh < 0)}")
    ids = df["household_id"].to_numpy()
    uniq = sorted(set(ids), key=lambda v: (len(v), v))
    if len(uniq) != households:
        raise DataError(f"{path}: found {len(uniq)} households, scenario needs {households}")
    codes = pd.Categorical(ids, categories=uniq).codes
    order = np.argsort(codes, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(np.bincount(codes, minlength=len(uniq)))])
    stamps = ts.asi8[order]
    values = kwh[order]
    src_start = None
    columns = []
    for k, hid in enumerate(uniq):
        idx = pd.DatetimeIndex(stamps[bounds[k] : bounds[k + 1]])
        _check_hourly(path, idx, label=f"household {hid}")
        if src_start is None:
            src_start, src_len = idx[0], len(idx)
        elif idx[0] != src_start or len(idx) != src_len:
            raise DataError(f"{path}: household {hid} covers a different period than household {uniq[0]}")
        columns.append(values[bounds[k] : bounds[k + 1]])
    matrix = np.column_stack(columns)
    src_start = src_start.to_pydatetime()
    if repeat_years:
        return np.ascontiguousarray(tile_years(matrix, src_start, start, n_hours))
    offset = int((start - src_start) // HOUR)
    if offset < 0 or offset + n_hours > len(matrix):
        end = src_start + len(matrix) * HOUR
        raise DataError(f"{path}: base load covers {src_start} to {end}, horizon needs {start} to {start + n_hours * HOUR}")
    return np.ascontiguousarray(matrix[offset : offset + n_hours])


def ingest_adoption(path: str | Path, model_mix: dict | None = None) -> AdoptionCurve:
    path = Path(path)
    df = _read_csv(path, ("month", "cumulative_evs"))
    months = []
    for k, text in enumerate(df["month"]):
        try:
            y, m = (int(p) for p in text.split("-"))
            datetime(y, m, 1)
        except ValueError as exc:
            raise DataError(f"{path}:{k + 2}: month {text!r} is not YYYY-MM") from exc
        months.append((y, m))
    counts = _parse_numbers(path, df["cumulative_evs"], "cumulative_evs")
    if np.any(counts != np.round(counts)):
        raise DataError(f"{path}: cumulative_evs must be integers")
    return AdoptionCurve(tuple(months), tuple(int(c) for c in counts), dict(model_mix or {}))


def _hour_of_day(path: Path, raw: pd.Series, what: str) -> np.ndarray:
    out = np.empty(len(raw))
    for k, text in enumerate(raw):
        try:
            hh, mm = text.split(":")
            out[k] = int(hh) + int(mm) / 60
        except ValueError as exc:
            raise DataError(f"{path}:{k + 2}: {what} {text!r} is not HH:MM") from exc
    return out


def ingest_trips(path: str | Path) -> np.ndarray:
    """Empirical trip table ``departure,arrival,distance_km`` (HH:MM, HH:MM, km)."""
    path = Path(path)
    df = _read_csv(path, ("departure", "arrival", "distance_km"))
    return np.column_stack(
        [
            _hour_of_day(path, df["departure"], "departure"),
            _hour_of_day(path, df["arrival"], "arrival"),
            _parse_numbers(path, df["distance_km"], "distance_km"),
        ]
    )


# ------------------------------------------------------------------ writers


def _timestamps(start: datetime, n: int) -> list[str]:
    return pd.date_range(start, periods=n, freq="h").strftime(TIMESTAMP_FORMAT).tolist()


def write_series_csv(series: HourlySeries, path: str | Path, kind: str) -> None:
    column, _ = SERIES_KINDS[kind]
    stamps = _timestamps(series.start, len(series))
    with open(path, "w") as fh:
        fh.write(f"timestamp,{column}\n")
        fh.writelines(f"{t},{v!r}\n" for t, v in zip(stamps, series.values.tolist()))


def write_base_load_csv(matrix: np.ndarray, start: datetime, path: str | Path) -> None:
    n_hours, n = matrix.shape
    stamps = np.repeat(np.asarray(_timestamps(start, n_hours), dtype=object), n)
    ids = np.tile(np.arange(n), n_hours)
    df = pd.DataFrame({"timestamp": stamps, "household_id": ids, "kwh": matrix.ravel()})
    df.to_csv(path, index=False, float_format=None, lineterminator="\n")


def write_adoption_csv(curve: AdoptionCurve, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write("month,cumulative_evs\n")
        fh.writelines(f"{y:04d}-{m:02d},{c}\n" for (y, m), c in zip(curve.months, curve.cumulative))


def write_catalog_csv(models: list[EvModel], path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(CATALOG_COLUMNS) + "\n")
        for m in models:
            fh.write(f"{m.name},{m.battery_capacity_kwh!r},{m.consumption_kwh_per_km!r},{m.max_charge_power_kw!r}\n")
