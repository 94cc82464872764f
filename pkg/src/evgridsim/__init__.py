"""Multi-agent simulation of decentralized EV home-charging strategies on a distribution feeder."""
from .config import InputBundle, ScenarioConfig, StrategyConfig, load_scenario
from .engine import SimulationResult, run
from .errors import ConfigError, DataError, InvariantError
from .kernels import BACKEND
from .metrics import KpiReport, compare, kpi_report

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "DataError",
    "InputBundle",
    "InvariantError",
    "KpiReport",
    "ScenarioConfig",
    "StrategyConfig",
    "SimulationResult",
    "compare",
    "kpi_report",
    "load_scenario",
    "run",
]
