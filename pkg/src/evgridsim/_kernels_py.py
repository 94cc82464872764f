"""Pure-Python (numpy) implementations of the hot kernels.

These are the reference semantics; ``_kernels.pyx`` mirrors them loop by
loop and must produce bit-identical results.
"""
import numpy as np

# mode codes
INACTIVE = -1
CONTINUOUS = 0
SCHEDULED = 1

# action codes
ACT_AWAY = 0
ACT_IDLE = 1
ACT_SCHEDULED = 2
ACT_FALLBACK = 3


def select_cheapest(prices, k):
    """Indices of the ``k`` lowest prices, ties to the earlier index, returned ascending."""
    prices = np.asarray(prices, dtype=np.float64)
    k = min(int(k), len(prices))
    if k <= 0:
        return np.empty(0, dtype=np.int64)
    picked = np.argsort(prices, kind="stable")[:k]
    return np.sort(picked).astype(np.int64)


def charge_hour(h, home_start, home_end, soc, capacity, power, eff, target, mode,
                slots, nslots, cursor, fallback, out_kwh, out_gain, out_action):
    """Execute charging hour ``h`` for every household in place.

    Times are minutes since simulation start; ``slots`` are hour indices.
    Writes metered kWh, battery-side gain and the action code per household
    and updates ``soc`` and ``cursor``.
    """
    out_kwh[:] = 0.0
    out_gain[:] = 0.0
    out_action[:] = ACT_AWAY

    t0 = h * 60
    s = np.maximum(home_start, t0)
    e = np.minimum(home_end, t0 + 60)
    home = (mode != INACTIVE) & (e > s)
    if not home.any():
        return
    out_action[home] = ACT_IDLE

    sched = home & (mode == SCHEDULED)
    if sched.any():
        rows = np.flatnonzero(sched)
        while True:
            c = cursor[rows]
            live = c < nslots[rows]
            behind = np.zeros(len(rows), dtype=bool)
            behind[live] = slots[rows[live], c[live]] < h
            if not behind.any():
                break
            cursor[rows[behind]] += 1
        c = cursor[rows]
        live = c < nslots[rows]
        now = np.zeros(len(rows), dtype=bool)
        now[live] = slots[rows[live], c[live]] == h
        wants = np.where(now, ACT_SCHEDULED, np.where(live, ACT_IDLE, ACT_FALLBACK if fallback else ACT_IDLE))
    charging = home & (soc < target)
    act = np.zeros(len(soc), dtype=np.int8)
    act[home] = ACT_SCHEDULED
    if sched.any():
        act[rows] = wants
    charging &= act >= ACT_SCHEDULED
    if not charging.any():
        return

    idx = np.flatnonzero(charging)
    d = (e[idx] - s[idx]) / 60.0
    cap = capacity[idx]
    room = cap * (target[idx] - soc[idx])
    gain = power[idx] * eff[idx] * d
    full = gain >= room
    new_soc = np.where(full, target[idx], soc[idx] + gain / cap)
    gain = np.where(full, room, gain)
    soc[idx] = new_soc
    out_gain[idx] = gain
    out_kwh[idx] = gain / eff[idx]
    out_action[idx] = act[idx]
