"""KPIs of a completed run and baseline-versus-variant percent differences."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from datetime import datetime, timedelta

import numpy as np

from .pricing import HOUR

YEAR = timedelta(days=365)
DECIMALS = 4


@dataclass(frozen=True)
class KpiReport:
    first_overload: datetime | None
    overloads_following_year: int | None
    avg_charging_cost_dkk_per_kwh: float | None
    avg_electricity_bill_dkk: float | None
    avg_co2_kg: float | None
    dissatisfaction_events: int
    load_factor: float | None
    coincidence_factor: float | None
    dso_revenue_dkk: float | None
    evs_at_first_overload: int | None
    sim_start: datetime | None = None
    window_start: datetime | None = None
    window_end: datetime | None = None
    strategy: str = ""

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, datetime):
                v = v.isoformat(timespec="minutes")
            elif isinstance(v, float):
                v = round(v, DECIMALS)
            out[f.name] = v
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, raw: dict) -> "KpiReport":
        names = {f.name for f in fields(cls)}
        unknown = set(raw) - names
        if unknown:
            raise ValueError(f"unknown KPI keys: {sorted(unknown)}")
        kw = dict(raw)
        for key in ("first_overload", "sim_start", "window_start", "window_end"):
            if kw.get(key) is not None:
                kw[key] = datetime.fromisoformat(kw[key])
        return cls(**kw)


@dataclass(frozen=True)
class ComparisonRow:
    kpi: str
    baseline: float | None
    variant: float | None
    percent_diff: float | None


COMPARED_KPIS = (
    "first_overload",
    "overloads_following_year",
    "avg_charging_cost_dkk_per_kwh",
    "avg_electricity_bill_dkk",
    "avg_co2_kg",
    "dissatisfaction_events",
    "load_factor",
    "coincidence_factor",
    "dso_revenue_dkk",
    "evs_at_first_overload",
)


def percent_diff(baseline: float | None, variant: float | None) -> float | None:
    """(variant - baseline) / baseline * 100; None when undefined."""
    if baseline is None or variant is None or baseline == 0:
        return None
    return (variant - baseline) / baseline * 100.0


def first_overload(result) -> datetime | None:
    if not result.overloads:
        return None
    return min(e.timestamp for e in result.overloads)


def overloads_in_following_year(result) -> int | None:
    """Overload hours in the 365 days after the first one (that hour excluded)."""
    t0 = first_overload(result)
    if t0 is None:
        return None
    return sum(1 for e in result.overloads if t0 < e.timestamp <= t0 + YEAR)


def load_factor(load, window: tuple[int, int] | None = None) -> float | None:
    """Mean over peak of ``load`` within the hour-index window [start, stop)."""
    load = np.asarray(load, dtype=np.float64)
    if window is not None:
        load = load[window[0] : window[1]]
    if load.size == 0:
        return None
    peak = load.max()
    if not peak > 0:
        return None
    return float(load.mean() / peak)


def coincidence_factor(result, day: int | datetime) -> float | None:
    """Aggregate peak of ``day`` over the sum of each household's own peak that day."""
    if isinstance(day, datetime):
        day = (day - result.start) // timedelta(days=1)
    day = int(day)
    denominator = float(result.daily_peak_kw[day].sum())
    if not denominator > 0:
        return None
    return float(result.load_kw[day * 24 : day * 24 + 24].max()) / denominator


def reporting_window(result, reporting=None) -> tuple[int, int]:
    """Hour-index window [start, stop) for annual KPIs.

    Explicit bounds from the reporting config win; otherwise the 365 days
    after the first overload hour; without overloads the final 365 days.
    """
    n = result.n_hours
    reporting = reporting if reporting is not None else result.reporting
    if reporting is not None and (reporting.window_start is not None or reporting.window_end is not None):
        a = 0 if reporting.window_start is None else int((reporting.window_start - result.start) // HOUR)
        b = n if reporting.window_end is None else int((reporting.window_end - result.start) // HOUR)
        a, b = max(0, a), min(n, b)
        if a >= b:
            raise ValueError("reporting window is empty or outside the simulated horizon")
        return a, b
    t0 = first_overload(result)
    if t0 is None:
        return max(0, n - 8760), n
    h0 = int((t0 - result.start) // HOUR)
    return h0 + 1, min(n, h0 + 1 + 8760)


def billing_breakdown(result, window: tuple[int, int] | None = None) -> dict:
    """Billed DKK split into DSO tariff, spot and fixed add-ons over the window."""
    a, b = window if window is not None else (0, result.n_hours)
    load = result.load_kw[a:b]
    p = result.prices
    dso = float(np.dot(load, p.tariff[a:b]))
    spot = float(np.dot(load, p.spot[a:b]))
    addons = float(load.sum() * p.addons)
    total = float(np.dot(load, p.total[a:b]))
    return {"dso_tariff": dso, "spot": spot, "addons": addons, "total": total}


def kpi_report(result, prices=None, emissions=None, reporting=None) -> KpiReport:
    """Compute the KPI row set of one run.

    ``prices`` (a PriceBook) and ``emissions`` (hourly gCO2/kWh) default to
    the ones the run used. Pass ``emissions=False`` to report CO2 as absent.
    """
    prices = prices if prices is not None else result.prices
    if emissions is None:
        emissions = prices.emissions
    elif emissions is False:
        emissions = None
    reporting = reporting if reporting is not None else result.reporting
    a, b = reporting_window(result, reporting)

    ev_energy = float(result.ev_kw.sum())
    cost = float(np.dot(result.ev_kw, prices.total)) / ev_energy if ev_energy > 0 else None

    scope = getattr(reporting, "bill_scope", "all")
    spend = result.load_kw[a:b] if scope == "all" else result.owner_base_kw[a:b] + result.ev_kw[a:b]
    payers = result.n_households if scope == "all" else int(result.ev_count[b - 1])
    bill = float(np.dot(spend, prices.total[a:b])) / payers if payers > 0 else None

    co2 = None
    if emissions is not None:
        ev_years = float(result.ev_count[a:b].mean())
        if ev_years > 0:
            co2 = float(np.dot(result.ev_kw[a:b], np.asarray(emissions)[a:b])) / 1000.0 / ev_years

    t0 = first_overload(result)
    cf = None
    evs = None
    if t0 is not None:
        h0 = int((t0 - result.start) // HOUR)
        cf = coincidence_factor(result, h0 // 24)
        evs = int(result.ev_count[h0])

    return KpiReport(
        first_overload=t0,
        overloads_following_year=overloads_in_following_year(result),
        avg_charging_cost_dkk_per_kwh=cost,
        avg_electricity_bill_dkk=bill,
        avg_co2_kg=co2,
        dissatisfaction_events=len(result.dissatisfaction),
        load_factor=load_factor(result.load_kw, (a, b)),
        coincidence_factor=cf,
        dso_revenue_dkk=float(np.dot(result.load_kw[a:b], prices.tariff[a:b])),
        evs_at_first_overload=evs,
        sim_start=result.start,
        window_start=result.start + a * HOUR,
        window_end=result.start + b * HOUR,
        strategy=result.strategy,
    )


def _days_from_start(report: KpiReport) -> float | None:
    if report.first_overload is None or report.sim_start is None:
        return None
    return (report.first_overload - report.sim_start) / timedelta(days=1)


def compare(baseline: KpiReport, variant: KpiReport) -> list[ComparisonRow]:
    """Percent difference of every KPI, variant against baseline.

    The first-overload date is compared as days elapsed since the start of
    the simulation, which only approximates how dates were compared in the
    published tables.
    """
    rows = []
    for name in COMPARED_KPIS:
        if name == "first_overload":
            b, v = _days_from_start(baseline), _days_from_start(variant)
        else:
            b, v = getattr(baseline, name), getattr(variant, name)
        rows.append(ComparisonRow(name, b, v, percent_diff(b, v)))
    return rows


def format_comparison(rows: list[ComparisonRow]) -> str:
    """Aligned plain-text table."""
    def cell(x):
        if x is None:
            return "-"
        return f"{x:.4f}" if isinstance(x, float) else str(x)

    body = [(r.kpi, cell(r.baseline), cell(r.variant), "-" if r.percent_diff is None else f"{r.percent_diff:+.2f}%") for r in rows]
    head = ("kpi", "baseline", "variant", "% diff")
    widths = [max(len(x[k]) for x in body + [head]) for k in range(4)]
    lines = ["  ".join(h.ljust(w) if k == 0 else h.rjust(w) for k, (h, w) in enumerate(zip(row, widths))) for row in [head] + body]
    return "\n".join(lines) + "\n"


def comparison_csv(rows: list[ComparisonRow]) -> str:
    def cell(x):
        if x is None:
            return ""
        return f"{x:.4f}" if isinstance(x, float) else str(x)

    out = ["kpi,baseline,variant,percent_diff"]
    out += [f"{r.kpi},{cell(r.baseline)},{cell(r.variant)},{cell(r.percent_diff)}" for r in rows]
    return "\n".join(out) + "\n"
