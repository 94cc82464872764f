from datetime import date

import numpy as np
import pytest

from evgridsim.config import InputBundle, ScenarioConfig, StrategyConfig
from evgridsim.domain import EvModel
from evgridsim.population import AdoptionCurve, DayPattern, Dist, DrivingPatternSpec
from evgridsim.pricing import EmissionSeries, SpotPriceSeries

ACCEPTANCE_LINES: list[str] = []


def fixed_driving(dep_h: float, arr_h: float, km: float) -> DrivingPatternSpec:
    return DrivingPatternSpec(weekday=DayPattern(Dist("fixed", value=dep_h), Dist("fixed", value=arr_h), Dist("fixed", value=km)))


def make_bundle(
    config: ScenarioConfig,
    base_kw: float = 0.5,
    spot: float = 0.3,
    gco2: float = 100.0,
    models=None,
    evs: int | None = None,
    driving: DrivingPatternSpec | None = None,
) -> InputBundle:
    """Flat inputs; every household gets an EV at the start unless ``evs`` says otherwise."""
    n, hours = config.households, config.n_hours + 48
    models = models or [EvModel("Test EV", 40.0, 0.15, 11.0)]
    count = n if evs is None else evs
    return InputBundle(
        base_load=np.full((config.n_hours, n), float(base_kw)),
        spot=SpotPriceSeries(config.start, np.full(hours, float(spot))),
        emissions=EmissionSeries(config.start, np.full(hours, float(gco2))),
        ev_models=list(models),
        adoption=AdoptionCurve(((config.sim_start.year, config.sim_start.month),), (count,)),
        driving=driving or fixed_driving(7.5, 17.0, 40.0),
    )


def make_config(days: int = 2, households: int = 3, capacity: float = 1000.0, **kw) -> ScenarioConfig:
    start = kw.pop("sim_start", date(2021, 3, 1))
    strategy = kw.pop("strategy", StrategyConfig())
    return ScenarioConfig(
        sim_start=start,
        sim_end=date.fromordinal(start.toordinal() + days - 1),
        households=households,
        transformer_capacity_kw=capacity,
        strategy=strategy,
        **kw,
    )


@pytest.fixture
def report_acceptance():
    """Record and print one pass/fail line for an acceptance criterion, then assert."""
    def report(number: int, title: str, ok: bool, detail: str = ""):
        line = f"acceptance {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
