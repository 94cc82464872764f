# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF INACTIVE = -1
DEF SCHEDULED = 1
DEF ACT_AWAY = 0
DEF ACT_IDLE = 1
DEF ACT_SCHEDULED = 2
DEF ACT_FALLBACK = 3


def select_cheapest(prices, k):
    cdef double[::1] p = np.ascontiguousarray(prices, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t kk = min(int(k), n)
    if kk <= 0:
        return np.empty(0, dtype=np.int64)
    out = np.empty(kk, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    taken_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] taken = taken_arr
    cdef Py_ssize_t j, i, best
    for j in range(kk):
        best = -1
        for i in range(n):
            if not taken[i] and (best < 0 or p[i] < p[best]):
                best = i
        taken[best] = 1
    j = 0
    for i in range(n):
        if taken[i]:
            o[j] = i
            j += 1
    return out


def charge_hour(cnp.int64_t h,
                const cnp.int64_t[::1] home_start,
                const cnp.int64_t[::1] home_end,
                double[::1] soc,
                const double[::1] capacity,
                const double[::1] power,
                const double[::1] eff,
                const double[::1] target,
                const cnp.int8_t[::1] mode,
                const cnp.int64_t[:, ::1] slots,
                const cnp.int64_t[::1] nslots,
                cnp.int64_t[::1] cursor,
                bint fallback,
                double[::1] out_kwh,
                double[::1] out_gain,
                cnp.int8_t[::1] out_action):
    cdef Py_ssize_t n = soc.shape[0], i
    cdef cnp.int64_t t0 = h * 60, s, e, c
    cdef cnp.int8_t act
    cdef double d, room, gain
    for i in range(n):
        out_kwh[i] = 0.0
        out_gain[i] = 0.0
        out_action[i] = ACT_AWAY
        if mode[i] == INACTIVE:
            continue
        s = home_start[i] if home_start[i] > t0 else t0
        e = home_end[i] if home_end[i] < t0 + 60 else t0 + 60
        if e <= s:
            continue
        act = ACT_SCHEDULED
        if mode[i] == SCHEDULED:
            c = cursor[i]
            while c < nslots[i] and slots[i, c] < h:
                c += 1
            cursor[i] = c
            if c < nslots[i]:
                act = ACT_SCHEDULED if slots[i, c] == h else ACT_IDLE
            else:
                act = ACT_FALLBACK if fallback else ACT_IDLE
        if act == ACT_IDLE or not soc[i] < target[i]:
            out_action[i] = ACT_IDLE
            continue
        d = (e - s) / 60.0
        room = capacity[i] * (target[i] - soc[i])
        gain = power[i] * eff[i] * d
        if gain >= room:
            soc[i] = target[i]
            gain = room
        else:
            soc[i] = soc[i] + gain / capacity[i]
        out_gain[i] = gain
        out_kwh[i] = gain / eff[i]
        out_action[i] = act
