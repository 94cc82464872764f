"""Assemble the :class:`InputBundle` a scenario asks for."""
from __future__ import annotations

from dataclasses import replace

from .config import InputBundle, ScenarioConfig
from .domain import load_ev_catalog
from .errors import ConfigError
from .ingest import ingest_adoption, ingest_base_load, ingest_timeseries, ingest_trips
from .population import DrivingPatternSpec
from .synthetic import PRESETS, generate_synthetic, load_synthetic_spec


def load_inputs(config: ScenarioConfig) -> InputBundle:
    """Synthetic preset (if any) first, then every file given in ``[inputs]`` overrides its part.

    ``[driving]`` and ``[adoption]`` sections of the scenario override the
    corresponding synthetic defaults as well.
    """
    inp = config.inputs
    start, n_hours, n = config.start, config.n_hours, config.households
    bundle = None
    if inp.synthetic_spec is not None or inp.synthetic is not None:
        spec = load_synthetic_spec(inp.synthetic_spec) if inp.synthetic_spec else PRESETS[inp.synthetic]()
        spec = replace(spec, households=n, start=config.sim_start, end=config.sim_end)
        bundle = generate_synthetic(spec, seed=config.seed)

    base = (
        ingest_base_load(inp.base_load, start, n_hours, n, inp.repeat_years)
        if inp.base_load is not None
        else bundle.base_load
    )
    spot = (
        ingest_timeseries(inp.spot_prices, "spot_prices", start, n_hours, inp.repeat_years)
        if inp.spot_prices is not None
        else bundle.spot
    )
    if inp.emissions is not None:
        emissions = ingest_timeseries(inp.emissions, "emissions", start, n_hours, inp.repeat_years)
    else:
        emissions = bundle.emissions if bundle is not None else None
    models = load_ev_catalog(inp.ev_catalog) if inp.ev_catalog is not None else (
        bundle.ev_models if bundle is not None else load_ev_catalog()
    )
    mix = config.model_mix
    if inp.adoption is not None:
        adoption = ingest_adoption(inp.adoption, mix if mix is not None else (bundle.adoption.model_mix if bundle else {}))
    elif bundle is not None:
        adoption = bundle.adoption if mix is None else replace(bundle.adoption, model_mix=dict(mix))
    else:
        raise ConfigError("inputs.adoption is required without a synthetic preset")
    driving = config.driving or (bundle.driving if bundle is not None else None)
    if inp.trips_csv is not None:
        table = ingest_trips(inp.trips_csv)
        driving = DrivingPatternSpec(weekday=driving.weekday if driving else None, trips=table)
    if driving is None:
        raise ConfigError("a [driving] section or inputs.trips_csv is required without a synthetic preset")
    out = InputBundle(base_load=base, spot=spot, emissions=emissions, ev_models=models, adoption=adoption, driving=driving)
    out.validate(config)
    return out
