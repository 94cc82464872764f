"""Compare the compiled and numpy kernel backends.

Usage: python benchmarks/bench_kernels.py [--households 126] [--repeat 5] [--full-run]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from evgridsim import kernels

FULL_RUN = """
import json, time
from datetime import date
from evgridsim import kernels
from evgridsim.config import ScenarioConfig, StrategyConfig
from evgridsim.engine import run
from evgridsim.synthetic import generate_synthetic
bundle = generate_synthetic("feeder126", seed=1)
cfg = ScenarioConfig(date(2020, 1, 1), date(2032, 12, 31), 126, 300.0, seed=1, strategy=StrategyConfig("rtp"), keep_ledgers=False)
t = time.perf_counter()
res = run(cfg, bundle)
print(json.dumps({"backend": kernels.BACKEND, "seconds": time.perf_counter() - t, "checksum": float(res.load_kw.sum())}))
"""


def state(n, rng):
    home_start = rng.integers(0, 600, n)
    nslots = rng.integers(0, 10, n)
    slots = np.zeros((n, 48), dtype=np.int64)
    for i in range(n):
        slots[i, : nslots[i]] = np.sort(rng.choice(24, nslots[i], replace=False))
    return [
        home_start.astype(np.int64), (home_start + rng.integers(60, 1200, n)).astype(np.int64),
        rng.uniform(0, 1, n), rng.uniform(40, 80, n), np.full(n, 11.0), np.full(n, 0.84), np.ones(n),
        rng.choice([0, 1], n).astype(np.int8), slots, nslots.astype(np.int64), np.zeros(n, dtype=np.int64),
    ]


def bench_charge_hour(mod, n, repeat):
    best = np.inf
    for r in range(repeat):
        rng = np.random.default_rng(r)
        hs, he, soc, cap, p, eff, tgt, mode, slots, ns, cur = state(n, rng)
        kwh, gain, act = np.zeros(n), np.zeros(n), np.zeros(n, dtype=np.int8)
        t = time.perf_counter()
        for h in range(24):
            mod.charge_hour(h, hs, he, soc, cap, p, eff, tgt, mode, slots, ns, cur, True, kwh, gain, act)
        best = min(best, (time.perf_counter() - t) / 24)
    return best


def bench_select(mod, repeat, calls=20_000):
    rng = np.random.default_rng(0)
    windows = [rng.uniform(0, 2, int(rng.integers(6, 16))) for _ in range(calls)]
    ks = rng.integers(0, 8, calls)
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        for w, k in zip(windows, ks):
            mod.select_cheapest(w, k)
        best = min(best, (time.perf_counter() - t) / calls)
    return best


def full_run(pure: bool) -> dict:
    env = dict(os.environ, EVGRIDSIM_PURE="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", FULL_RUN], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--households", type=int, default=126)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--full-run", action="store_true", help="also time a complete 2020-2032 simulation per backend")
    args = parser.parse_args()

    backends = ["python"]
    try:
        kernels.get_backend("cython")
        backends.append("cython")
    except ImportError:
        print("compiled extension not built; timing the numpy backend only")

    print(f"{'kernel':<28}" + "".join(f"{b:>14}" for b in backends))
    rows = {
        f"charge_hour ({args.households} hh)": [bench_charge_hour(kernels.get_backend(b), args.households, args.repeat) for b in backends],
        "select_cheapest": [bench_select(kernels.get_backend(b), args.repeat) for b in backends],
    }
    for name, times in rows.items():
        print(f"{name:<28}" + "".join(f"{t * 1e6:>12.2f}us" for t in times))
    if args.full_run:
        runs = [full_run(pure=(b == "python")) for b in backends]
        print(f"{'full run (113,976 h)':<28}" + "".join(f"{r['seconds']:>13.2f}s" for r in runs))
        if len(runs) == 2:
            print("load series checksum identical:", runs[0]["checksum"] == runs[1]["checksum"])


if __name__ == "__main__":
    main()
