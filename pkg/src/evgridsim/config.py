"""Scenario configuration (TOML) and the validated in-memory input bundle."""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .domain import DEFAULT_EFFICIENCY, EvModel
from .errors import ConfigError, DataError
from .population import AdoptionCurve, DayPattern, Dist, DrivingPatternSpec
from .pricing import TARIFF_PRESETS, EmissionSeries, Season, SpotPriceSeries, TariffPeriod, TariffSchedule
from .strategies import Strategy

PLUG_IN_POLICIES = ("every_arrival", "when_needed")
BILL_SCOPES = ("all", "ev_owners")
DISSATISFACTION_RULES = ("energy_shortfall", "below_target")


@dataclass(frozen=True)
class StrategyConfig:
    kind: Strategy = Strategy.TRADITIONAL
    desired_soc: float = 1.0
    soc_cap: float | None = None
    min_soc_floor: float | None = None
    distance_optimization: bool = False
    use_partial_hours: bool = False
    fallback: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", Strategy(self.kind))
        if self.soc_cap is not None and self.min_soc_floor is not None and self.soc_cap < self.min_soc_floor:
            raise ConfigError("strategy.soc_cap must be >= strategy.min_soc_floor")

    @property
    def label(self) -> str:
        parts = [self.kind.value]
        if self.soc_cap is not None:
            parts.append(f"cap{round(self.soc_cap * 100)}")
        if self.distance_optimization:
            parts.append(f"distopt{round((self.min_soc_floor or 0) * 100)}")
        return "-".join(parts)


@dataclass(frozen=True)
class ChargerConfig:
    power_kw: float = 11.0
    efficiency: float = DEFAULT_EFFICIENCY


@dataclass(frozen=True)
class InputsConfig:
    synthetic: str | None = "feeder126"
    synthetic_spec: Path | None = None
    spot_prices: Path | None = None
    emissions: Path | None = None
    base_load: Path | None = None
    ev_catalog: Path | None = None
    adoption: Path | None = None
    trips_csv: Path | None = None
    repeat_years: bool = False


@dataclass(frozen=True)
class ReportingConfig:
    window_start: datetime | None = None
    window_end: datetime | None = None
    bill_scope: str = "all"
    dissatisfaction_rule: str = "energy_shortfall"


@dataclass(frozen=True)
class TraceConfig:
    schedules: bool = False
    actions: bool = False
    messages: bool = False
    departures: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    sim_start: date
    sim_end: date
    households: int
    transformer_capacity_kw: float
    seed: int = 0
    plug_in_policy: str = "every_arrival"
    initial_soc: float = 0.5
    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    charger: ChargerConfig = field(default_factory=ChargerConfig)
    tariff: TariffSchedule = field(default_factory=TARIFF_PRESETS["tm3_default"])
    addons_dkk_per_kwh: float = 1.0
    inputs: InputsConfig = field(default_factory=InputsConfig)
    model_mix: dict | None = None
    driving: DrivingPatternSpec | None = None
    reporting: ReportingConfig = field(default_factory=ReportingConfig)
    trace: TraceConfig = field(default_factory=TraceConfig)
    keep_ledgers: bool = True
    name: str = "scenario"

    def __post_init__(self):
        if self.sim_end < self.sim_start:
            raise ConfigError("simulation.sim_end precedes simulation.sim_start")
        if self.households <= 0:
            raise ConfigError("simulation.households must be > 0")
        if not self.transformer_capacity_kw > 0:
            raise ConfigError("simulation.transformer_capacity_kw must be > 0")
        if self.plug_in_policy not in PLUG_IN_POLICIES:
            raise ConfigError(f"simulation.plug_in_policy must be one of {PLUG_IN_POLICIES}")
        if not 0.0 <= self.initial_soc <= 1.0:
            raise ConfigError("simulation.initial_soc must lie in [0, 1]")
        if self.reporting.bill_scope not in BILL_SCOPES:
            raise ConfigError(f"reporting.bill_scope must be one of {BILL_SCOPES}")
        if self.reporting.dissatisfaction_rule not in DISSATISFACTION_RULES:
            raise ConfigError(f"reporting.dissatisfaction_rule must be one of {DISSATISFACTION_RULES}")
        self.tariff.validate_coverage()

    @property
    def start(self) -> datetime:
        return datetime(self.sim_start.year, self.sim_start.month, self.sim_start.day)

    @property
    def n_days(self) -> int:
        return (self.sim_end - self.sim_start).days + 1

    @property
    def n_hours(self) -> int:
        return 24 * self.n_days

    def as_dict(self) -> dict:
        """JSON-safe, fully materialised view (used for hashing and manifests)."""
        def conv(obj):
            if isinstance(obj, (date, datetime, Path)):
                return str(obj)
            if isinstance(obj, Strategy):
                return obj.value
            if isinstance(obj, np.ndarray):
                return obj.tolist()
            if isinstance(obj, dict):
                return {k: conv(v) for k, v in sorted(obj.items())}
            if isinstance(obj, (list, tuple)):
                return [conv(v) for v in obj]
            return obj

        out = {}
        for key in self.__dataclass_fields__:
            value = getattr(self, key)
            if key == "tariff":
                value = {
                    "label": value.label,
                    "seasons": [
                        {"name": s.name, "start": s.start, "end": s.end,
                         "periods": [[p.from_hour, p.to_hour, p.rate] for p in s.periods]}
                        for s in value.seasons
                    ],
                }
            elif hasattr(value, "__dataclass_fields__"):
                value = asdict(value)
            out[key] = conv(value)
        return out

    def config_hash(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class InputBundle:
    """Everything a run consumes, aligned to the simulation horizon."""

    base_load: np.ndarray  # (hours, households) kWh per hour
    spot: SpotPriceSeries
    emissions: EmissionSeries | None
    ev_models: list[EvModel]
    adoption: AdoptionCurve
    driving: DrivingPatternSpec

    def validate(self, config: ScenarioConfig) -> None:
        n_hours, n = config.n_hours, config.households
        if self.base_load.shape != (n_hours, n):
            raise DataError(f"base load has shape {self.base_load.shape}, horizon needs ({n_hours}, {n})")
        if not np.all(np.isfinite(self.base_load)) or np.any(self.base_load < 0):
            raise DataError("base load contains negative or non-finite values")
        for series in (self.spot, self.emissions):
            if series is None:
                continue
            if series.start > config.start or series.end < config.start + timedelta(hours=n_hours):
                raise DataError(f"{series.kind} covers {series.start} to {series.end}, horizon needs {config.start} to {config.start + timedelta(hours=n_hours)}")
            if not np.all(np.isfinite(series.values)):
                raise DataError(f"{series.kind} contains non-finite values")
        if not self.ev_models:
            raise DataError("EV catalog is empty")
        self.adoption.check_households(n)
        self.adoption.weights([m.name for m in self.ev_models])


# ---------------------------------------------------------------- TOML loading

_SCHEMA = {
    "name": str,
    "simulation": {
        "sim_start": "date", "sim_end": "date", "households": int, "transformer_capacity_kw": float,
        "seed": int, "plug_in_policy": str, "initial_soc": float, "keep_ledgers": bool,
    },
    "strategy": {
        "kind": str, "desired_soc": float, "soc_cap": float, "min_soc_floor": float,
        "distance_optimization": bool, "use_partial_hours": bool, "fallback": bool,
    },
    "charger": {"power_kw": float, "efficiency": float},
    "tariff": {"preset": str, "label": str, "addons_dkk_per_kwh": float, "seasons": list},
    "inputs": {
        "synthetic": str, "synthetic_spec": "path", "spot_prices": "path", "emissions": "path",
        "base_load": "path", "ev_catalog": "path", "adoption": "path", "trips_csv": "path", "repeat_years": bool,
    },
    "adoption": {"model_mix": dict},
    "driving": {"weekday": dict, "weekend": dict},
    "reporting": {"window_start": "datetime", "window_end": "datetime", "bill_scope": str, "dissatisfaction_rule": str},
    "trace": {"schedules": bool, "actions": bool, "messages": bool, "departures": bool},
}
_REQUIRED = [
    ("simulation", "sim_start"), ("simulation", "sim_end"), ("simulation", "households"),
    ("simulation", "transformer_capacity_kw"), ("strategy", "kind"),
]


def _coerce(value, kind, keypath: str, base_dir: Path):
    try:
        if kind == "date":
            if isinstance(value, datetime):
                return value.date()
            if isinstance(value, date):
                return value
            return date.fromisoformat(str(value))
        if kind == "datetime":
            if isinstance(value, datetime):
                return value
            if isinstance(value, date):
                return datetime(value.year, value.month, value.day)
            return datetime.fromisoformat(str(value))
        if kind == "path":
            p = Path(value)
            return p if p.is_absolute() else (base_dir / p)
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError
            return value
        if not isinstance(value, kind):
            raise TypeError
        return value
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{keypath}: expected {getattr(kind, '__name__', kind)}, got {value!r}") from exc


def _check_keys(raw: dict, base_dir: Path) -> dict:
    out: dict = {}
    for section, body in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown key {section!r}")
        spec = _SCHEMA[section]
        if not isinstance(spec, dict):
            out[section] = _coerce(body, spec, section, base_dir)
            continue
        if not isinstance(body, dict):
            raise ConfigError(f"{section}: expected a table")
        out[section] = {}
        for key, value in body.items():
            if key not in spec:
                raise ConfigError(f"unknown key {section}.{key}")
            out[section][key] = _coerce(value, spec[key], f"{section}.{key}", base_dir)
    missing = [f"{s}.{k}" for s, k in _REQUIRED if k not in out.get(s, {})]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    return out


def parse_tariff(section: dict) -> tuple[TariffSchedule, float]:
    addons = float(section.get("addons_dkk_per_kwh", 1.0))
    if "seasons" in section:
        if "preset" in section:
            raise ConfigError("tariff: give either 'preset' or inline 'seasons', not both")
        seasons = []
        for k, s in enumerate(section["seasons"]):
            extra = set(s) - {"name", "start", "end", "periods"}
            if extra:
                raise ConfigError(f"unknown key tariff.seasons[{k}].{sorted(extra)[0]}")
            try:
                periods = tuple(TariffPeriod(int(a), int(b), float(r)) for a, b, r in s["periods"])
                seasons.append(Season(str(s["start"]), str(s["end"]), periods, name=str(s.get("name", ""))))
            except KeyError as exc:
                raise ConfigError(f"tariff.seasons[{k}] is missing {exc.args[0]!r}") from exc
        return TariffSchedule(tuple(seasons), label=section.get("label", "custom")), addons
    preset = section.get("preset", "tm3_default")
    if preset not in TARIFF_PRESETS:
        raise ConfigError(f"tariff.preset: unknown preset {preset!r} (known: {sorted(TARIFF_PRESETS)})")
    return TARIFF_PRESETS[preset](), addons


def parse_day_pattern(raw: dict, keypath: str) -> DayPattern:
    extra = set(raw) - {"departure", "arrival", "distance"}
    if extra:
        raise ConfigError(f"unknown key {keypath}.{sorted(extra)[0]}")
    try:
        return DayPattern(**{k: Dist.from_dict(raw[k]) for k in ("departure", "arrival", "distance")})
    except KeyError as exc:
        raise ConfigError(f"{keypath} is missing {exc.args[0]!r}") from exc


def scenario_from_dict(raw: dict, base_dir: Path | str = ".") -> ScenarioConfig:
    """Validate a parsed TOML document and materialise every default."""
    base_dir = Path(base_dir)
    cfg = _check_keys(raw, base_dir)
    sim = cfg["simulation"]
    tariff, addons = parse_tariff(cfg.get("tariff", {}))
    driving = None
    if "driving" in cfg:
        d = cfg["driving"]
        if "weekday" not in d:
            raise ConfigError("driving.weekday is required when [driving] is given")
        driving = DrivingPatternSpec(
            weekday=parse_day_pattern(d["weekday"], "driving.weekday"),
            weekend=parse_day_pattern(d["weekend"], "driving.weekend") if "weekend" in d else None,
        )
    mix = cfg.get("adoption", {}).get("model_mix")
    inputs = InputsConfig(**cfg.get("inputs", {}))
    if "inputs" in cfg and "synthetic" not in cfg["inputs"]:
        files = ("spot_prices", "base_load")
        if all(getattr(inputs, f) is not None for f in files):
            inputs = InputsConfig(**{**cfg["inputs"], "synthetic": None})
    for key in ("synthetic_spec", "spot_prices", "emissions", "base_load", "ev_catalog", "adoption", "trips_csv"):
        p = getattr(inputs, key)
        if p is not None and not p.exists():
            raise ConfigError(f"inputs.{key}: file {p} does not exist")
    if inputs.synthetic is None and (inputs.spot_prices is None or inputs.base_load is None):
        raise ConfigError("inputs: without a synthetic preset both inputs.spot_prices and inputs.base_load are required")
    try:
        return ScenarioConfig(
            sim_start=sim["sim_start"],
            sim_end=sim["sim_end"],
            households=sim["households"],
            transformer_capacity_kw=sim["transformer_capacity_kw"],
            seed=sim.get("seed", 0),
            plug_in_policy=sim.get("plug_in_policy", "every_arrival"),
            initial_soc=sim.get("initial_soc", 0.5),
            keep_ledgers=sim.get("keep_ledgers", True),
            strategy=StrategyConfig(**cfg["strategy"]),
            charger=ChargerConfig(**cfg.get("charger", {})),
            tariff=tariff,
            addons_dkk_per_kwh=addons,
            inputs=inputs,
            model_mix=mix,
            driving=driving,
            reporting=ReportingConfig(**cfg.get("reporting", {})),
            trace=TraceConfig(**cfg.get("trace", {})),
            name=cfg.get("name", "scenario"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return scenario_from_dict(raw, base_dir=path.parent)
