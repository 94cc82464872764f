"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal
invariant violation.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import kernels
from .errors import ConfigError, DataError, EvGridSimError, InvariantError

log = logging.getLogger("evgridsim")


def _simulate(args) -> int:
    from .config import load_scenario
    from .engine import run
    from .metrics import kpi_report
    from .reports import read_kpis, write_reports

    config = load_scenario(args.scenario)
    baseline = read_kpis(args.baseline) if args.baseline else None
    log.info("running %s (%s, %d households, %d hours, %s kernels)",
             config.name, config.strategy.label, config.households, config.n_hours, kernels.BACKEND)
    result = run(config)
    kpis = kpi_report(result)
    bundle = write_reports(result, kpis, args.out, baseline=baseline, config=config)
    first = kpis.first_overload.isoformat(timespec="minutes") if kpis.first_overload else "none"
    print(f"{config.name}: first overload {first}, {len(result.overloads)} overload hours; wrote {len(bundle.files)} files to {bundle.out_dir}")
    if baseline is not None:
        print(bundle.path("compare.txt").read_text(), end="")
    return 0


def _compare(args) -> int:
    from .metrics import compare, comparison_csv, format_comparison
    from .reports import read_kpis

    rows = compare(read_kpis(args.baseline), read_kpis(args.variant))
    out = Path(args.out)
    text = format_comparison(rows) if out.suffix == ".txt" else comparison_csv(rows)
    try:
        out.write_text(text)
    except OSError as exc:
        raise DataError(f"cannot write {out}: {exc}") from exc
    print(format_comparison(rows), end="")
    return 0


SCENARIO_TEMPLATE = """\
name = "generated"

[simulation]
sim_start = "{start}"
sim_end = "{end}"
households = {households}
transformer_capacity_kw = 400.0
seed = {seed}

[strategy]
kind = "traditional"

[tariff]
preset = "tm3_default"

[inputs]
spot_prices = "spot_prices.csv"
emissions = "emissions.csv"
base_load = "base_load.csv"
ev_catalog = "ev_catalog.csv"
adoption = "adoption.csv"
"""


def _dist_toml(dist) -> str:
    parts = [f'kind = "{dist.kind}"']
    for key in ("value", "mean", "sd", "median", "sigma", "low", "high"):
        v = getattr(dist, key)
        if v is not None:
            parts.append(f"{key} = {float(v)!r}")
    if dist.values:
        parts.append(f"values = [{', '.join(repr(float(v)) for v in dist.values)}]")
    return "{ " + ", ".join(parts) + " }"


def _driving_toml(driving) -> str:
    out = []
    for name in ("weekday", "weekend"):
        pattern = getattr(driving, name)
        if pattern is None:
            continue
        out.append(f"\n[driving.{name}]")
        out += [f"{key} = {_dist_toml(getattr(pattern, key))}" for key in ("departure", "arrival", "distance")]
    return "\n".join(out) + "\n"


def _generate(args) -> int:
    from .ingest import write_adoption_csv, write_base_load_csv, write_catalog_csv, write_series_csv
    from .synthetic import PRESETS, generate_synthetic, load_synthetic_spec

    spec = PRESETS[args.spec]() if args.spec in PRESETS else load_synthetic_spec(args.spec)
    bundle = generate_synthetic(spec, seed=args.seed)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        start = bundle.spot.start
        write_base_load_csv(bundle.base_load, start, out / "base_load.csv")
        write_series_csv(bundle.spot, out / "spot_prices.csv", "spot_prices")
        if bundle.emissions is not None:
            write_series_csv(bundle.emissions, out / "emissions.csv", "emissions")
        write_catalog_csv(bundle.ev_models, out / "ev_catalog.csv")
        write_adoption_csv(bundle.adoption, out / "adoption.csv")
        text = SCENARIO_TEMPLATE.format(start=spec.start, end=spec.end, households=spec.households, seed=args.seed)
        if bundle.emissions is None:
            text = text.replace('emissions = "emissions.csv"\n', "")
        if bundle.driving.trips is not None:
            trips = bundle.driving.trips
            with open(out / "trips.csv", "w") as fh:
                fh.write("departure,arrival,distance_km\n")
                for dep, arr, km in trips.tolist():
                    fh.write(f"{int(dep):02d}:{round(dep % 1 * 60):02d},{int(arr):02d}:{round(arr % 1 * 60):02d},{km!r}\n")
            text += 'trips_csv = "trips.csv"\n'
        text += _driving_toml(bundle.driving)
        mix = ", ".join(f'"{k}" = {v}' for k, v in bundle.adoption.model_mix.items())
        if mix:
            text += f"\n[adoption]\nmodel_mix = {{ {mix} }}\n"
        (out / "scenario.toml").write_text(text)
    except OSError as exc:
        raise DataError(f"cannot write generated data to {out}: {exc}") from exc
    print(f"wrote synthetic inputs for {spec.households} households, {spec.n_hours} hours to {out}")
    return 0


def _kpis(args) -> int:
    from .metrics import kpi_report
    from .reports import load_result

    report = kpi_report(load_result(args.result))
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evgridsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write its report bundle")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--baseline", help="kpis.json of a baseline run to compare against")
    p.set_defaults(func=_simulate)

    p = sub.add_parser("compare", help="percent differences between two KPI reports")
    p.add_argument("--baseline", required=True)
    p.add_argument("--variant", required=True)
    p.add_argument("--out", required=True, help="CSV output (aligned text when the name ends in .txt)")
    p.set_defaults(func=_compare)

    p = sub.add_parser("generate-data", help="write a synthetic input bundle as CSV files")
    p.add_argument("--spec", required=True, help="synthetic spec TOML or a preset name (feeder126)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_generate)

    p = sub.add_parser("kpis", help="recompute KPIs from a stored run directory")
    p.add_argument("--result", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_kpis)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DataError, InvariantError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except EvGridSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
