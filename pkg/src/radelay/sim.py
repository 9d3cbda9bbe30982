"""Slot-level simulation of the multi-queue random access network.

The engine reproduces the slotted dynamics directly: Bernoulli arrivals
into per-node infinite buffers, head-of-line packets transmitting with the
staged probability q0*Q(k) whenever the channel is available to them, one
transmitter succeeding and holding the channel for tau_t slots, two or more
colliding and advancing their backoff stages.  Per-node state is kept in
packed arrays (queue length, backoff stage, channel horizons) rather than
one object per node; the compiled kernels in ``_kernels`` run the loop.

Conventions that shift estimates by O(1) slot and therefore matter:
arrivals happen at slot start and may be served in the same slot; a
packet's queueing delay counts from its arrival slot to the final slot of
its successful transmission, inclusive.

Randomness is one counter-based stream per node, derived from a single
seed, so reports are bit-identical for equal seed and config and per-node
randomness does not depend on n.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._kernels import (
    F_QLEN_SUM,
    F_SOJOURN_SUM,
    I_ACCESSIBLE,
    I_ARRIVALS,
    I_DEPARTURES,
    I_DEPARTURES_WINDOW,
    I_FINAL_QUEUE,
    I_REQUESTS,
    I_SOJOURN_COUNT,
    I_SOJOURN_OVERFLOW,
    I_SUCCESSES,
    run_kernel,
)
from .model import (
    Family,
    Scenario,
    ValidationError,
    derive_slot,
    holding_times,
    packet_rate,
)
from .presets_registry import load_preset, scheme_from_preset

_SATURATION_GROWTH = 10.0
_SATURATION_FLOOR = 1.0  # mean total backlog below this is noise, not growth


@dataclass(frozen=True)
class SimReport:
    """Estimates of the analytical quantities from one simulation run.

    Attributes
    ----------
    mean_queue_len : float
        Time-averaged number of packets in one node's buffer (sampled after
        arrivals, before departures).
    delay_little_slots : float
        Mean queueing delay in slots via Little's law: mean queue length
        divided by the per-node packet input rate.
    delay_sojourn_slots : float
        Mean queueing delay in slots measured directly per packet, arrival
        slot to final transmission slot inclusive.
    throughput_pkts_per_slot : float
        Network packet departures per slot after warmup.
    p_hat : float
        Fraction of requests made on an accessible channel that succeeded.
    alpha_hat : float
        Fraction of post-warmup slots in which the channel was accessible.
    saturated_flag : bool
        True when the total backlog keeps growing through the run: the mean
        over the last tenth exceeds ten times the mean over the first tenth
        and is above an absolute floor.
    """

    mean_queue_len: float
    delay_little_slots: float
    delay_sojourn_slots: float
    throughput_pkts_per_slot: float
    p_hat: float
    alpha_hat: float
    saturated_flag: bool


class RaSdtVariant(enum.Enum):
    """The four small-data-transmission access procedures."""

    SENSING_FREE_2STEP = "sensing_free_2step"
    SENSING_FREE_4STEP = "sensing_free_4step"
    SENSING_BASED_2STEP = "sensing_based_2step"
    SENSING_BASED_4STEP = "sensing_based_4step"


def _integer_slots(value: float, label: str, slot_ms: float) -> int:
    rounded = round(value)
    if abs(value - rounded) > 1e-9 * max(1.0, abs(value)):
        raise ValidationError(
            f"{label} = {value:g} slots is not an integer; the simulator "
            f"needs whole-slot durations. Pick a slot length that divides "
            f"the message durations evenly (current slot_ms = {slot_ms:g})."
        )
    return int(rounded)


def _node_seeds(n: int, seed: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)


def _saturated(deciles: np.ndarray, slots: int) -> bool:
    if slots < 10:
        return False
    decile_len = slots // 10
    first = deciles[0] / decile_len
    last = deciles[9] / (slots - 9 * decile_len)
    return bool(last > _SATURATION_GROWTH * max(first, 0.0) and last > _SATURATION_FLOOR)


def _run_params(scenario: Scenario, slots: int, warmup: int):
    if warmup < 0 or slots <= warmup:
        raise ValidationError("need slots > warmup >= 0")
    lam = packet_rate(scenario)
    if lam > 1.0:
        raise ValidationError(
            f"per-node packet rate {lam:g} exceeds one packet per slot; "
            f"Bernoulli arrivals cannot carry this load"
        )
    hold = holding_times(scenario.scheme)
    tau_t = _integer_slots(hold.tau_t, "tau_t", scenario.scheme.slot_ms)
    tau_f = _integer_slots(hold.tau_f, "tau_f", scenario.scheme.slot_ms)
    if tau_t < 1:
        raise ValidationError("tau_t must be at least one slot")
    qtable = np.array(scenario.backoff.table(), dtype=np.float64)
    return lam, tau_t, tau_f, qtable


def _assemble(raw, lam: float, n: int, slots: int, warmup: int) -> SimReport:
    ints, flts, deciles, _dec_req, _dec_succ = raw
    window = slots - warmup
    mean_queue = flts[F_QLEN_SUM] / (window * n)
    little = mean_queue / lam if lam > 0 else 0.0
    sojourn = (
        flts[F_SOJOURN_SUM] / ints[I_SOJOURN_COUNT] if ints[I_SOJOURN_COUNT] > 0 else 0.0
    )
    p_hat = ints[I_SUCCESSES] / ints[I_REQUESTS] if ints[I_REQUESTS] > 0 else 0.0
    return SimReport(
        mean_queue_len=float(mean_queue),
        delay_little_slots=float(little),
        delay_sojourn_slots=float(sojourn),
        throughput_pkts_per_slot=float(ints[I_DEPARTURES_WINDOW] / window),
        p_hat=float(p_hat),
        alpha_hat=float(ints[I_ACCESSIBLE] / window),
        saturated_flag=_saturated(deciles, slots),
    )


def _simulate_detail(
    scenario: Scenario,
    slots: int = 10_000_000,
    warmup: int = 100_000,
    seed: int = 0,
    *,
    mode: int | None = None,
    success_gap: int = 0,
    fail_gap: int = 0,
    initial_backlog: int = 0,
):
    """Run one simulation and return (report, raw counters dict).

    The counters expose exact conservation quantities and per-decile
    request/success counts for batch-means standard errors; tests use them.
    """
    lam, tau_t, tau_f, qtable = _run_params(scenario, slots, warmup)
    if initial_backlog < 0:
        raise ValidationError("initial_backlog must be >= 0")
    if mode is None:
        mode = 0 if scenario.scheme.family is Family.ALOHA else 1
    raw = run_kernel(
        mode,
        scenario.n,
        slots,
        warmup,
        lam,
        scenario.q0,
        qtable,
        tau_t,
        tau_f,
        success_gap,
        fail_gap,
        _node_seeds(scenario.n, seed),
        initial_backlog,
    )
    ints, flts, deciles, dec_req, dec_succ = raw
    report = _assemble(raw, lam, scenario.n, slots, warmup)
    counters = {
        "arrivals": int(ints[I_ARRIVALS]),
        "departures": int(ints[I_DEPARTURES]),
        "final_queue": int(ints[I_FINAL_QUEUE]),
        "departures_window": int(ints[I_DEPARTURES_WINDOW]),
        "requests": int(ints[I_REQUESTS]),
        "successes": int(ints[I_SUCCESSES]),
        "accessible": int(ints[I_ACCESSIBLE]),
        "sojourn_count": int(ints[I_SOJOURN_COUNT]),
        "sojourn_overflow": int(ints[I_SOJOURN_OVERFLOW]),
        "qlen_sum": float(flts[F_QLEN_SUM]),
        "sojourn_sum": float(flts[F_SOJOURN_SUM]),
        "queue_deciles": deciles.copy(),
        "request_deciles": dec_req.copy(),
        "success_deciles": dec_succ.copy(),
        "p_hat_batch_se": _batch_se(dec_req, dec_succ, slots, warmup),
        "lam": lam,
        "initial_backlog": initial_backlog,
    }
    return report, counters


def _batch_se(dec_req: np.ndarray, dec_succ: np.ndarray, slots: int, warmup: int):
    """Standard error of p_hat from per-decile batch means.

    Only deciles that start after the warmup count as batches; requests
    within a run are autocorrelated, so this is the honest uncertainty of
    the success ratio (the binomial formula understates it).
    """
    decile_len = max(slots // 10, 1)
    ratios = [
        dec_succ[d] / dec_req[d]
        for d in range(10)
        if d * decile_len >= warmup and dec_req[d] > 0
    ]
    if len(ratios) < 3:
        return None
    ratios = np.array(ratios)
    return float(ratios.std(ddof=1) / math.sqrt(len(ratios)))


def simulate(
    scenario: Scenario,
    slots: int = 10_000_000,
    warmup: int = 100_000,
    seed: int = 0,
    *,
    initial_backlog: int = 0,
) -> SimReport:
    """Simulate the network and estimate every analytical quantity.

    Parameters
    ----------
    scenario : Scenario
        Population, scheme, backoff, transmission probability and load.
    slots : int
        Total simulated slots, warmup included.
    warmup : int
        Leading slots excluded from all estimates.
    seed : int
        Master seed; equal seed and config give a bit-identical report.
    initial_backlog : int
        Packets pre-filled into every queue at slot 0.  The default empty
        start estimates steady-state quantities; a backlogged start turns
        the saturation flag into a drift test against the saturated state,
        which is the meaningful boundary check because an empty-start run
        near the stability boundary can dwell in the stable basin far
        longer than any feasible run length.

    Raises
    ------
    ValidationError
        If tau_t or tau_f is not a whole number of slots, the per-node
        packet rate exceeds 1, or slots <= warmup.
    """
    report, _counters = _simulate_detail(
        scenario, slots, warmup, seed, initial_backlog=initial_backlog
    )
    return report


_VARIANT_MODE = {
    RaSdtVariant.SENSING_FREE_2STEP: 0,
    RaSdtVariant.SENSING_FREE_4STEP: 0,
    RaSdtVariant.SENSING_BASED_2STEP: 2,
    RaSdtVariant.SENSING_BASED_4STEP: 2,
}


def _check_variant_scheme(variant: RaSdtVariant, scenario: Scenario) -> None:
    want = derive_slot(scheme_from_preset(load_preset(variant.value)))
    got = scenario.scheme
    same = (
        got.family is want.family
        and got.connection is want.connection
        and math.isclose(got.payload_ms, want.payload_ms)
        and math.isclose(got.overhead_success_ms, want.overhead_success_ms)
        and math.isclose(got.overhead_fail_ms, want.overhead_fail_ms)
        and math.isclose(got.slot_ms, want.slot_ms)
    )
    if not same:
        raise ValidationError(
            f"scenario scheme does not match {variant.value}; build the "
            f"scenario with scenario_from_preset({variant.value!r})"
        )


def simulate_ra_sdt(
    variant: RaSdtVariant,
    scenario: Scenario,
    slots: int = 10_000_000,
    warmup: int = 100_000,
    seed: int = 0,
) -> SimReport:
    """Simulate one small-data-transmission procedure.

    Sensing-free variants are the corresponding Aloha schemes and delegate
    to `simulate`.  Sensing-based variants run the listen-and-mute
    procedure literally: every node senses the contention occasion, and on
    a busy occasion mutes for the duration a listener observes.  The
    two-step procedure cannot tell success from collision on the air, so it
    always mutes for the full exchange; the four-step procedure mutes for
    the grant-plus-payload duration when the acknowledgment appears and for
    the short preamble duration otherwise.  The resulting availability
    pattern coincides with the carrier-sensing channel model, so reports
    are bit-identical to `simulate` on the same scenario and seed.
    """
    _check_variant_scheme(variant, scenario)
    mode = _VARIANT_MODE[variant]
    if mode == 0:
        return simulate(scenario, slots, warmup, seed)
    scheme = scenario.scheme
    sigma = scheme.slot_ms
    if variant is RaSdtVariant.SENSING_BASED_2STEP:
        # one observed duration: payload plus its overhead, success or not
        mute_ms = scheme.payload_ms + scheme.overhead_success_ms
        success_gap = _integer_slots(mute_ms / sigma, "success mute", sigma)
        fail_gap = success_gap
    else:
        success_gap = _integer_slots(
            (scheme.payload_ms + scheme.overhead_success_ms) / sigma, "success mute", sigma
        )
        fail_gap = _integer_slots(scheme.overhead_fail_ms / sigma, "failure mute", sigma)
    report, _counters = _simulate_detail(
        scenario, slots, warmup, seed, mode=2, success_gap=success_gap, fail_gap=fail_gap
    )
    return report
