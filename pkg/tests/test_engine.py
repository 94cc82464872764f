from dataclasses import replace

import numpy as np
import pytest

from evgridsim import kernels
from evgridsim.config import StrategyConfig, TraceConfig
from evgridsim.domain import EvModel
from evgridsim.engine import Simulation, aggregate_load, detect_overload, run, run_many
from evgridsim.errors import DataError, InvariantError
from evgridsim.pricing import flat_tariff

from conftest import fixed_driving, make_bundle, make_config

LEAF = EvModel("Leaf", 40.0, 0.17, 3.7)


def test_no_ev_single_day():
    cfg = make_config(days=1, households=1)
    res = run(cfg, make_bundle(cfg, base_kw=0.7, evs=0))
    assert len(res.load_kw) == 24
    assert np.all(res.load_kw == 0.7)
    assert res.overloads == [] and res.ev_kw.sum() == 0


def test_no_ev_load_equals_base():
    cfg = make_config(days=3, households=5)
    bundle = make_bundle(cfg, evs=0)
    bundle.base_load = np.random.default_rng(0).uniform(0, 3, bundle.base_load.shape)
    res = run(cfg, bundle)
    assert np.array_equal(res.load_kw, bundle.base_load.sum(axis=1))


def test_one_ev_on_flat_base():
    cfg = make_config(days=1, households=126, initial_soc=0.0)
    bundle = make_bundle(cfg, base_kw=1.0, models=[LEAF], evs=1)
    res = run(cfg, bundle)
    assert res.load_kw[0] == pytest.approx(129.7)


@pytest.mark.parametrize("kind,fallback,hour7", [("traditional", True, 3.7 * 40 / 60), ("rtp", True, 3.7 * 40 / 60), ("rtp", False, 0.0)])
def test_departure_inside_hour(kind, fallback, hour7):
    # empty battery, departs 07:40: hours 0..6 are whole, 07:00-07:40 is partial
    cfg = make_config(days=1, households=1, initial_soc=0.0, strategy=StrategyConfig(kind, fallback=fallback))
    res = run(cfg, make_bundle(cfg, models=[LEAF], driving=fixed_driving(7 + 40 / 60, 17.0, 10.0)))
    assert res.ev_kwh[:7, 0] == pytest.approx([3.7] * 7)
    assert res.ev_kwh[7, 0] == pytest.approx(hour7)
    assert np.all(res.ev_kwh[8:17, 0] == 0.0)


def test_detect_overload_strict():
    assert detect_overload(400.0, 400.0) is None
    assert detect_overload(400.1, 400.0) is not None
    with pytest.raises(ValueError):
        detect_overload(1.0, 0.0)


def test_consecutive_overloads_counted_per_hour():
    cfg = make_config(days=1, households=2, capacity=3.0)
    bundle = make_bundle(cfg, base_kw=1.0, evs=0)
    bundle.base_load[10:13] = 2.0
    res = run(cfg, bundle)
    assert [int((e.timestamp - res.start).total_seconds() // 3600) for e in res.overloads] == [10, 11, 12]


def test_huge_capacity_no_overload():
    cfg = make_config(days=7, households=20, capacity=1e9)
    assert run(cfg, make_bundle(cfg)).overloads == []


def test_determinism_and_ledgers():
    cfg = make_config(days=5, households=8, seed=3, strategy=StrategyConfig("rtp"))
    bundle = make_bundle(cfg, driving=fixed_driving(7.0, 17.5, 60.0))
    bundle.spot = replace(bundle.spot, values=np.random.default_rng(1).uniform(0, 1, len(bundle.spot)))
    a, b = run(cfg, bundle), run(cfg, bundle)
    assert np.array_equal(a.load_kw, b.load_kw) and np.array_equal(a.bills, b.bills)
    for h in range(cfg.n_hours):
        assert aggregate_load(a, h) == a.load_kw[h]


def test_messages_balance():
    cfg = make_config(days=4, households=6, strategy=StrategyConfig("tou"), trace=TraceConfig(schedules=True, messages=True))
    res = run(cfg, make_bundle(cfg))
    m = res.messages
    assert m["plug-in"] == m["schedule-request"] == m["schedule-response"] > 0
    assert m["meter-reading"] == 6 * cfg.n_hours
    assert len(res.schedules) == m["plug-in"]
    assert res.message_log


def test_when_needed_policy_skips_full_evs():
    cfg = make_config(days=3, households=4, initial_soc=1.0, plug_in_policy="when_needed",
                      strategy=StrategyConfig("rtp", soc_cap=0.8))
    res = run(cfg, make_bundle(cfg, driving=fixed_driving(7.0, 17.0, 0.0)))
    assert res.messages["plug-in"] == 0


def test_dissatisfaction_hand_trace():
    # 10 kWh battery at 50 %, capped so it never charges, trip needs 9 kWh
    small = EvModel("Small", 10.0, 0.1, 3.7)
    cfg = make_config(days=1, households=1, initial_soc=0.5, strategy=StrategyConfig("traditional", soc_cap=0.5))
    res = run(cfg, make_bundle(cfg, models=[small], driving=fixed_driving(0.5, 17.0, 90.0)))
    assert len(res.dissatisfaction) == 1
    event = res.dissatisfaction[0]
    assert event.energy_kwh == pytest.approx(5.0) and event.demand_kwh == pytest.approx(9.0)


def test_soc_cap_respected_in_engine():
    cfg = make_config(days=10, households=10, strategy=StrategyConfig("rtp", soc_cap=0.8), trace=TraceConfig(actions=True))
    sim = Simulation(cfg, make_bundle(cfg, driving=fixed_driving(7.0, 17.0, 80.0)))
    while not sim.done:
        sim.step_hour()
        assert sim.soc[sim.has_ev].max() <= 0.8 + 1e-12
    res = sim.result()
    assert res.actions.shape == (cfg.n_hours, 10)
    assert set(np.unique(res.actions)) <= {kernels.ACT_AWAY, kernels.ACT_IDLE, kernels.ACT_SCHEDULED, kernels.ACT_FALLBACK}
    with pytest.raises(InvariantError):
        sim.step_hour()


def test_input_coverage_checked():
    cfg = make_config(days=2, households=2)
    bundle = make_bundle(cfg)
    bundle.base_load = bundle.base_load[:-1]
    with pytest.raises(DataError):
        run(cfg, bundle)
    bundle = make_bundle(cfg)
    bundle.spot = replace(bundle.spot, values=bundle.spot.values[:30])
    with pytest.raises(DataError):
        run(cfg, bundle)


def test_bills_and_flat_price():
    cfg = make_config(days=2, households=3, tariff=flat_tariff(0.0), addons_dkk_per_kwh=0.0)
    res = run(cfg, make_bundle(cfg, spot=1.2))
    load = res.base_load + res.ev_kwh
    assert np.allclose(res.bills, load.sum(axis=0) * 1.2, rtol=0, atol=1e-9)


def test_run_many_matches_run():
    cfgs = [make_config(days=2, households=3, seed=s, strategy=StrategyConfig(k)) for s, k in ((1, "rtp"), (2, "tou"))]
    bundles = [make_bundle(c) for c in cfgs]
    many = run_many(cfgs, bundles, max_workers=1)
    for c, b, r in zip(cfgs, bundles, many):
        assert np.array_equal(run(c, b).load_kw, r.load_kw)
