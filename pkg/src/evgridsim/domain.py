"""Physical EV and battery model.

Everything here is a pure function over small frozen dataclasses. The
charging-box convention throughout the package: the meter sees the
charger's nominal power, the battery receives ``power * efficiency``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .errors import ConfigError, DataError

DEFAULT_EFFICIENCY = 0.84
CATALOG_COLUMNS = ("name", "battery_capacity_kwh", "consumption_kwh_per_km", "max_charge_power_kw")


@dataclass(frozen=True)
class EvModel:
    name: str
    battery_capacity_kwh: float
    consumption_kwh_per_km: float
    max_charge_power_kw: float

    def __post_init__(self):
        for attr in ("battery_capacity_kwh", "consumption_kwh_per_km", "max_charge_power_kw"):
            if not getattr(self, attr) > 0:
                raise ConfigError(f"EvModel {self.name!r}: {attr} must be > 0")


@dataclass(frozen=True)
class BatteryState:
    soc: float
    depleted_flag: bool = False

    def __post_init__(self):
        if not 0.0 <= self.soc <= 1.0:
            raise ValueError(f"soc must lie in [0, 1], got {self.soc}")


@dataclass(frozen=True)
class EvUserPreferences:
    """Charging preferences of one EV user.

    ``desired_soc`` is the SoC the strategies aim for. ``soc_cap`` and
    ``min_soc_floor`` switch on the "Max SoC" and distance-optimisation
    variants respectively.
    """

    desired_soc: float = 1.0
    soc_cap: float | None = None
    min_soc_floor: float | None = None
    distance_optimization: bool = False

    def __post_init__(self):
        if not 0.0 < self.desired_soc <= 1.0:
            raise ConfigError(f"desired_soc must lie in (0, 1], got {self.desired_soc}")
        if self.soc_cap is not None and not 0.0 < self.soc_cap <= 1.0:
            raise ConfigError(f"soc_cap must lie in (0, 1], got {self.soc_cap}")
        if self.min_soc_floor is not None:
            if not 0.0 <= self.min_soc_floor < self.desired_soc:
                raise ConfigError("min_soc_floor must satisfy 0 <= floor < desired_soc")
        if self.distance_optimization and self.min_soc_floor is None:
            raise ConfigError("distance_optimization requires min_soc_floor")


@dataclass(frozen=True)
class Trip:
    departure_time: object  # datetime
    arrival_time: object
    distance_km: float

    def __post_init__(self):
        if not self.departure_time < self.arrival_time:
            raise ValueError("trip departure must precede arrival")
        if self.distance_km < 0:
            raise ValueError("trip distance must be >= 0")


@dataclass(frozen=True)
class ChargePointSpec:
    power_kw: float
    efficiency: float = DEFAULT_EFFICIENCY

    def __post_init__(self):
        if not self.power_kw > 0:
            raise ConfigError(f"charger power_kw must be > 0, got {self.power_kw}")
        if not 0.0 < self.efficiency <= 1.0:
            raise ConfigError(f"charger efficiency must lie in (0, 1], got {self.efficiency}")

    @property
    def battery_side_kw(self) -> float:
        return self.power_kw * self.efficiency


def battery_energy(model: EvModel, state: BatteryState) -> float:
    """Energy currently stored in the battery, kWh."""
    return model.battery_capacity_kwh * state.soc


def required_energy(model: EvModel, state: BatteryState, target_soc: float) -> float:
    """Battery-side energy needed to lift the SoC to ``target_soc``; never negative."""
    if not 0.0 <= target_soc <= 1.0:
        raise ValueError(f"target_soc must lie in [0, 1], got {target_soc}")
    return max(0.0, model.battery_capacity_kwh * target_soc - battery_energy(model, state))


def required_charging_hours(energy_req: float, charger: ChargePointSpec) -> int:
    """Whole charging hours needed to deliver ``energy_req`` kWh to the battery."""
    if energy_req < 0:
        raise ValueError("energy_req must be >= 0")
    if energy_req == 0:
        return 0
    return math.ceil(energy_req / (charger.power_kw * charger.efficiency))


def apply_charge(
    model: EvModel,
    state: BatteryState,
    charger: ChargePointSpec,
    duration_h: float,
    target_soc: float = 1.0,
) -> tuple[BatteryState, float]:
    """Charge for ``duration_h`` hours, stopping once ``target_soc`` is reached.

    Returns the new state and the metered (grid-side) energy in kWh.
    """
    if duration_h < 0:
        raise ValueError("duration_h must be >= 0")
    cap = model.battery_capacity_kwh
    room = cap * (target_soc - state.soc)
    if duration_h == 0 or room <= 0:
        return state, 0.0
    gain = charger.power_kw * charger.efficiency * duration_h
    if gain >= room:
        return replace(state, soc=target_soc), room / charger.efficiency
    return replace(state, soc=state.soc + gain / cap), gain / charger.efficiency


def apply_trip(model: EvModel, state: BatteryState, trip: Trip) -> BatteryState:
    demand = trip.distance_km * model.consumption_kwh_per_km
    available = battery_energy(model, state)
    if demand > available:
        return BatteryState(soc=0.0, depleted_flag=True)
    return BatteryState(soc=max(0.0, state.soc - demand / model.battery_capacity_kwh))


def load_ev_catalog(path: str | Path | None = None) -> list[EvModel]:
    """Read an EV model catalog CSV; the bundled default when ``path`` is None."""
    if path is None:
        text = resources.files("evgridsim.data").joinpath("ev_catalog.csv").read_text()
        source = "<bundled ev_catalog.csv>"
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise DataError(f"cannot read EV catalog {path}: {exc}") from exc
        source = str(path)
    reader = csv.DictReader(text.splitlines())
    if tuple(reader.fieldnames or ()) != CATALOG_COLUMNS:
        raise DataError(f"{source}: header must be {','.join(CATALOG_COLUMNS)}")
    models = []
    for lineno, row in enumerate(reader, start=2):
        try:
            models.append(
                EvModel(
                    name=row["name"],
                    battery_capacity_kwh=float(row["battery_capacity_kwh"]),
                    consumption_kwh_per_km=float(row["consumption_kwh_per_km"]),
                    max_charge_power_kw=float(row["max_charge_power_kw"]),
                )
            )
        except (TypeError, ValueError, ConfigError) as exc:
            raise DataError(f"{source}:{lineno}: {exc}") from exc
    if not models:
        raise DataError(f"{source}: catalog is empty")
    return models
