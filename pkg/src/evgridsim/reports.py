"""Result bundle on disk: KPIs, hourly series, events, comparison and manifest.

Files are staged in a temporary directory next to the target and moved in
only once all of them were written.
"""
from __future__ import annotations

import json
import os
import shutil
import tempfile
from dataclasses import dataclass
from datetime import datetime, timedelta
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np
import pandas as pd

from .config import ReportingConfig
from .engine import DepartureEvent, OverloadEvent, SimulationResult
from .errors import DataError
from .ingest import TIMESTAMP_FORMAT
from .metrics import KpiReport, compare, comparison_csv, format_comparison
from .pricing import HOUR, PriceBook

LEDGER = "ledger.npz"


@dataclass(frozen=True)
class ReportBundle:
    out_dir: Path
    files: tuple[str, ...]

    def path(self, name: str) -> Path:
        return self.out_dir / name


def code_version() -> str:
    try:
        return version("evgridsim")
    except PackageNotFoundError:
        return "unknown"


def timeseries_csv(result: SimulationResult) -> str:
    stamps = pd.date_range(result.start, periods=result.n_hours, freq="h").strftime(TIMESTAMP_FORMAT)
    ev_col = f"ev_{result.strategy}_kw"
    lines = [f"timestamp,load_kw,base_kw,{ev_col},ev_count,plugged_evs,total_price_dkk_per_kwh"]
    lines += [
        f"{t},{a:.3f},{b:.3f},{e:.3f},{n},{p},{c:.4f}"
        for t, a, b, e, n, p, c in zip(
            stamps,
            result.load_kw.tolist(),
            result.base_kw.tolist(),
            result.ev_kw.tolist(),
            result.ev_count.tolist(),
            result.plugged_count.tolist(),
            result.prices.total.tolist(),
        )
    ]
    return "\n".join(lines) + "\n"


def events_csv(result: SimulationResult) -> str:
    fmt = "%Y-%m-%dT%H:%M"
    lines = ["kind,timestamp,household_id,value,reference,ev_count"]
    for e in result.overloads:
        lines.append(f"overload,{e.timestamp.strftime(fmt)},,{e.aggregate_load_kw:.3f},{e.capacity_kw:.3f},{e.ev_count}")
    for e in result.dissatisfaction:
        lines.append(f"dissatisfaction,{e.timestamp.strftime(fmt)},{e.household},{e.energy_kwh:.3f},{e.demand_kwh:.3f},")
    return "\n".join(lines) + "\n"


def _ledger_arrays(result: SimulationResult) -> dict:
    p = result.prices
    dis = result.dissatisfaction
    return {
        "start": np.array(result.start.isoformat()),
        "name": np.array(result.name),
        "strategy": np.array(result.strategy),
        "capacity_kw": np.array(result.capacity_kw),
        "load_kw": result.load_kw,
        "base_kw": result.base_kw,
        "ev_kw": result.ev_kw,
        "owner_base_kw": result.owner_base_kw,
        "ev_count": result.ev_count,
        "plugged_count": result.plugged_count,
        "spot": p.spot,
        "tariff": p.tariff,
        "addons": np.array(p.addons),
        "emissions": p.emissions if p.emissions is not None else np.empty(0),
        "has_emissions": np.array(p.emissions is not None),
        "daily_peak_kw": result.daily_peak_kw,
        "bills": result.bills,
        "overload_hour": np.array([int((e.timestamp - result.start) // HOUR) for e in result.overloads], dtype=np.int64),
        "overload_load": np.array([e.aggregate_load_kw for e in result.overloads]),
        "overload_evs": np.array([e.ev_count for e in result.overloads], dtype=np.int64),
        "dis_minute": np.array([int((e.timestamp - result.start) // timedelta(minutes=1)) for e in dis], dtype=np.int64),
        "dis_household": np.array([e.household for e in dis], dtype=np.int64),
        "dis_values": np.array([[e.energy_kwh, e.demand_kwh, e.soc_before, e.soc_after, e.target_soc, e.depleted] for e in dis]).reshape(-1, 6),
        "reporting": np.array(json.dumps(_reporting_dict(result.reporting))),
        "messages": np.array(json.dumps(result.messages, sort_keys=True)),
    }


def _reporting_dict(reporting) -> dict:
    if reporting is None:
        return {}
    return {
        "window_start": None if reporting.window_start is None else reporting.window_start.isoformat(),
        "window_end": None if reporting.window_end is None else reporting.window_end.isoformat(),
        "bill_scope": reporting.bill_scope,
        "dissatisfaction_rule": reporting.dissatisfaction_rule,
    }


def load_result(result_dir: str | Path) -> SimulationResult:
    """Rebuild the KPI-relevant parts of a stored run."""
    path = Path(result_dir) / LEDGER
    try:
        z = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read stored run {path}: {exc}") from exc
    start = datetime.fromisoformat(str(z["start"]))
    cap = float(z["capacity_kw"])
    prices = PriceBook(
        start=start,
        spot=z["spot"],
        tariff=z["tariff"],
        addons=float(z["addons"]),
        emissions=z["emissions"] if bool(z["has_emissions"]) else None,
    )
    overloads = [
        OverloadEvent(start + int(h) * HOUR, float(load), cap, int(n))
        for h, load, n in zip(z["overload_hour"], z["overload_load"], z["overload_evs"])
    ]
    dis = [
        DepartureEvent(start + timedelta(minutes=int(m)), int(i), v[0], v[1], v[2], v[3], v[4], bool(v[5]))
        for m, i, v in zip(z["dis_minute"], z["dis_household"], z["dis_values"])
    ]
    rep = json.loads(str(z["reporting"]))
    reporting = ReportingConfig(
        window_start=None if rep.get("window_start") is None else datetime.fromisoformat(rep["window_start"]),
        window_end=None if rep.get("window_end") is None else datetime.fromisoformat(rep["window_end"]),
        bill_scope=rep.get("bill_scope", "all"),
        dissatisfaction_rule=rep.get("dissatisfaction_rule", "energy_shortfall"),
    )
    return SimulationResult(
        name=str(z["name"]),
        strategy=str(z["strategy"]),
        start=start,
        n_hours=len(z["load_kw"]),
        capacity_kw=cap,
        load_kw=z["load_kw"],
        base_kw=z["base_kw"],
        ev_kw=z["ev_kw"],
        owner_base_kw=z["owner_base_kw"],
        ev_count=z["ev_count"],
        plugged_count=z["plugged_count"],
        prices=prices,
        daily_peak_kw=z["daily_peak_kw"],
        bills=z["bills"],
        overloads=overloads,
        dissatisfaction=dis,
        messages=json.loads(str(z["messages"])),
        ev_ledger={},
        reporting=reporting,
    )


def read_kpis(path: str | Path) -> KpiReport:
    try:
        raw = json.loads(Path(path).read_text())
        return KpiReport.from_dict(raw)
    except (OSError, ValueError, TypeError) as exc:
        raise DataError(f"cannot read KPI report {path}: {exc}") from exc


def roundtrip(report: KpiReport) -> KpiReport:
    """The report exactly as it reads back from ``kpis.json``."""
    return KpiReport.from_dict(json.loads(report.to_json()))


def write_reports(
    result: SimulationResult,
    kpis: KpiReport,
    out_dir: str | Path,
    baseline: KpiReport | None = None,
    config=None,
) -> ReportBundle:
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out_dir))
    except OSError as exc:
        raise DataError(f"cannot write to {out_dir}: {exc}") from exc
    files = {
        "kpis.json": kpis.to_json(),
        "timeseries.csv": timeseries_csv(result),
        "events.csv": events_csv(result),
    }
    if baseline is not None:
        rows = compare(baseline, roundtrip(kpis))
        files["compare.csv"] = comparison_csv(rows)
        files["compare.txt"] = format_comparison(rows)
    manifest = {
        "config_hash": result.config_hash,
        "seed": result.seed,
        "code_version": code_version(),
        "strategy": result.strategy,
        "name": result.name,
        "hours": result.n_hours,
        "files": sorted([*files, LEDGER] + (["config.json"] if config is not None else [])),
    }
    files["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    if config is not None:
        files["config.json"] = json.dumps(config.as_dict(), indent=2, sort_keys=True) + "\n"
    try:
        for name, text in files.items():
            (staging / name).write_text(text)
        np.savez_compressed(staging / LEDGER, **_ledger_arrays(result))
        names = sorted([*files, LEDGER])
        for name in names:
            os.replace(staging / name, out_dir / name)
    except OSError as exc:
        raise DataError(f"cannot write reports to {out_dir}: {exc}") from exc
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return ReportBundle(out_dir, tuple(names))
