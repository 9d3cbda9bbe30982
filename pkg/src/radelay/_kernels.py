"""Compiled slot-loop kernels for the network simulator.

Three kernels share one structure per slot: arrivals, queue sampling,
transmit draws for eligible nodes, outcome resolution, departure handling.
They differ only in how channel availability is tracked:

- Aloha: a global reservation horizon (connection-free never reserves).
- CSMA: a global on-air horizon; a node may transmit in slot t only if
  nothing was on air during slot t-1.
- Sensing-based two/four-step access: per-node mute counters driven by the
  durations a listener actually observes, the way the real procedure is
  specified; this must reproduce CSMA availability exactly.

Randomness is one splitmix64 stream per node: one arrival draw per node per
slot, one transmit draw per eligible node per slot. Equal seeds therefore
give bit-identical runs, and kernels that induce identical eligibility sets
consume identical draws.

Statistics layout returned by every kernel:
- ints: arrivals, departures, final_queue, departures_window, requests,
  successes, accessible_slots, sojourn_count, sojourn_overflow
- floats: qlen_sum (after arrivals, before departures; post-warmup),
  sojourn_sum
- deciles: per-decile queue-length sums over the full run
- dec_req, dec_succ: per-decile request and success counts over the full
  run, for batch-means standard errors of the success ratio
"""

import numpy as np
from numba import njit

_MIX_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX_M1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_M2 = np.uint64(0x94D049BB133111EB)
_U53 = 1.0 / 9007199254740992.0

SOJOURN_CAP = 2048  # per-node ring of arrival slots; power of two

N_INT = 9
N_FLT = 2
(
    I_ARRIVALS,
    I_DEPARTURES,
    I_FINAL_QUEUE,
    I_DEPARTURES_WINDOW,
    I_REQUESTS,
    I_SUCCESSES,
    I_ACCESSIBLE,
    I_SOJOURN_COUNT,
    I_SOJOURN_OVERFLOW,
) = range(N_INT)
F_QLEN_SUM, F_SOJOURN_SUM = 0, 1


@njit(inline="always")
def _u01(state, i):
    s = state[i] + _MIX_GAMMA
    state[i] = s
    z = (s ^ (s >> 30)) * _MIX_M1
    z = (z ^ (z >> 27)) * _MIX_M2
    z = z ^ (z >> 31)
    return (z >> 11) * _U53


@njit(cache=True)
def run_kernel(
    mode,
    n,
    slots,
    warmup,
    lam,
    q0,
    qtable,
    tau_t,
    tau_f,
    success_gap,
    fail_gap,
    seeds,
    init_backlog,
):
    """One full simulation run.

    mode: 0 Aloha (tau_f ignored; connection-free is tau_t == 1),
          1 CSMA (global sensing gate),
          2 sensing-based procedure (per-node mute counters; success_gap and
            fail_gap are the observed mute lengths in slots, event end plus
            the one re-sensing slot).
    Durations are integer slot counts.  init_backlog pre-fills every queue
    with that many packets born at slot 0, for drift tests against the
    saturated state; they are not counted as arrivals.
    Returns (ints, floats, deciles, dec_req, dec_succ).
    """
    cutoff = len(qtable) - 1
    queue = np.full(n, init_backlog, dtype=np.int64)
    stage = np.zeros(n, dtype=np.int64)
    state = seeds.copy()
    ring = np.zeros((n, SOJOURN_CAP), dtype=np.int64)
    arr_seq = np.full(n, init_backlog, dtype=np.int64)
    dep_seq = np.zeros(n, dtype=np.int64)
    tx_idx = np.zeros(n, dtype=np.int64)
    mute_until = np.full(n, -1, dtype=np.int64)

    ints = np.zeros(N_INT, dtype=np.int64)
    flts = np.zeros(N_FLT, dtype=np.float64)
    deciles = np.zeros(10, dtype=np.float64)
    dec_req = np.zeros(10, dtype=np.int64)
    dec_succ = np.zeros(10, dtype=np.int64)
    decile_len = max(slots // 10, 1)

    reserved_until = np.int64(-1)  # Aloha: last reserved slot
    busy_until = np.int64(-2)  # CSMA: last on-air slot
    gate_until = np.int64(-1)  # mode 2: reporting twin of the CSMA gate
    owner = np.int64(-1)
    depart_at = np.int64(-1)
    total_queue = np.int64(n) * init_backlog

    for t in range(slots):
        for i in range(n):
            if _u01(state, i) < lam:
                queue[i] += 1
                ring[i, arr_seq[i] & (SOJOURN_CAP - 1)] = t
                arr_seq[i] += 1
                ints[I_ARRIVALS] += 1
                total_queue += 1

        if t >= warmup:
            flts[F_QLEN_SUM] += total_queue
        d = t // decile_len
        if d > 9:
            d = 9
        deciles[d] += total_queue

        if mode == 0:
            accessible = t > reserved_until
        elif mode == 1:
            accessible = (t - busy_until) >= 2
        else:
            accessible = t > gate_until
        if accessible and t >= warmup:
            ints[I_ACCESSIBLE] += 1

        tx_count = 0
        if accessible:
            if mode == 2:
                for i in range(n):
                    if queue[i] > 0 and t > mute_until[i]:
                        if _u01(state, i) < q0 * qtable[stage[i]]:
                            tx_idx[tx_count] = i
                            tx_count += 1
            else:
                for i in range(n):
                    if queue[i] > 0:
                        if _u01(state, i) < q0 * qtable[stage[i]]:
                            tx_idx[tx_count] = i
                            tx_count += 1

        if tx_count > 0:
            dec_req[d] += tx_count
            if t >= warmup:
                ints[I_REQUESTS] += tx_count
            if tx_count == 1:
                dec_succ[d] += 1
                if t >= warmup:
                    ints[I_SUCCESSES] += 1
                owner = tx_idx[0]
                depart_at = t + tau_t - 1
                if mode == 0:
                    reserved_until = t + tau_t - 1
                elif mode == 1:
                    busy_until = t + tau_t - 1
                else:
                    gate_until = t + success_gap
                    for i in range(n):
                        mute_until[i] = t + success_gap
            else:
                for j in range(tx_count):
                    i = tx_idx[j]
                    if stage[i] < cutoff:
                        stage[i] += 1
                if mode == 1:
                    busy_until = t + tau_f - 1
                elif mode == 2:
                    gate_until = t + fail_gap
                    for i in range(n):
                        mute_until[i] = t + fail_gap

        if owner >= 0 and t == depart_at:
            i = owner
            queue[i] -= 1
            total_queue -= 1
            stage[i] = 0
            ints[I_DEPARTURES] += 1
            if t >= warmup:
                ints[I_DEPARTURES_WINDOW] += 1
                if arr_seq[i] - dep_seq[i] <= SOJOURN_CAP:
                    born = ring[i, dep_seq[i] & (SOJOURN_CAP - 1)]
                    flts[F_SOJOURN_SUM] += t - born + 1
                    ints[I_SOJOURN_COUNT] += 1
                else:
                    ints[I_SOJOURN_OVERFLOW] += 1
            dep_seq[i] += 1
            owner = np.int64(-1)

    final_q = np.int64(0)
    for i in range(n):
        final_q += queue[i]
    ints[I_FINAL_QUEUE] = final_q
    return ints, flts, deciles, dec_req, dec_succ
