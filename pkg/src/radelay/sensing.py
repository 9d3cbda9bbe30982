"""Sensing-time bounds: how slow may carrier sensing be before it stops
paying off against sensing-free access.

The throughput-optimal bound has closed forms. The delay-optimal bound
compares the delay-minimized CSMA against the delay-minimized Aloha at the
same aggregate bit rate and the same protocol overheads, searching over the
sensing time sigma_C.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .delay import SaturatedError, optimal_q0
from .model import (
    AccessScheme,
    Connection,
    Family,
    Scenario,
    ValidationError,
    derive_slot,
)

__all__ = [
    "SensingBoundResult",
    "AlohaSaturatedError",
    "throughput_optimal_bound",
    "delay_optimal_bound",
    "rate_grid",
]

_SIGMA_FLOOR_MS = 1e-4
_SIGMA_TOL_MS = 1e-4


class AlohaSaturatedError(ValueError):
    """Aloha is saturated at every q0 for this bit rate: the delay-optimal
    bound is undefined (throughput is the only meaningful comparison)."""

    def __init__(self, lambda_tilde):
        self.lambda_tilde = lambda_tilde
        super().__init__(
            f"Aloha minimum delay is infinite at lambda_tilde={lambda_tilde:.6g}"
        )


@dataclass(frozen=True)
class SensingBoundResult:
    """Both sensing bounds at one aggregate bit rate.

    sigma_star_throughput_ms is rate-independent; sigma_star_delay_ms is
    the largest sensing time at which delay-optimized CSMA still matches
    delay-optimized Aloha at lambda_tilde. monotone records whether the
    CSMA minimum delay was monotone in sigma_C on the pre-scan (the search
    falls back to a grid scan when it is not); at_ceiling means CSMA still
    won at the largest sensible sensing time, L + delta_f, and the bound
    was cut there.
    """

    sigma_star_throughput_ms: float
    sigma_star_delay_ms: float
    lambda_tilde: float
    monotone: bool = True
    at_ceiling: bool = False


def throughput_optimal_bound(connection, payload_ms, delta_s_ms, delta_f_ms):
    """Closed-form largest sensing time preserving the Aloha maximum
    throughput, in ms."""
    e = math.e
    if connection is Connection.BASED:
        return (math.exp(1.0 / e) - 1.0) * delta_f_ms
    core = e * payload_ms + delta_f_ms + (e - 1.0) * delta_s_ms
    exponent = (1.0 - e) * (payload_ms + delta_s_ms) / core
    return math.exp(exponent) * core - payload_ms - delta_f_ms


def _aloha_scheme(connection, payload_ms, delta_s_ms, delta_f_ms):
    return derive_slot(
        AccessScheme(Family.ALOHA, connection, payload_ms, delta_s_ms, delta_f_ms)
    )


def _csma_scheme(connection, payload_ms, delta_s_ms, delta_f_ms, sigma_ms):
    with warnings.catch_warnings():
        # Candidate sensing times up to the ceiling are deliberate here.
        warnings.simplefilter("ignore")
        return derive_slot(
            AccessScheme(
                Family.CSMA,
                connection,
                payload_ms,
                delta_s_ms,
                delta_f_ms,
                slot_ms=sigma_ms,
            )
        )


def _scenario(scheme, n, backoff, lambda_tilde, encoding_rate):
    return Scenario(
        n=n,
        scheme=scheme,
        backoff=backoff,
        q0=0.5,  # placeholder; optimal_q0 ignores it
        bit_rate_per_node=lambda_tilde / n,
        encoding_rate=encoding_rate,
    )


def _min_delay_ms(scenario, epsilon):
    """Delay at the optimal q0, +inf when saturated for every q0."""
    try:
        opt = optimal_q0(scenario, epsilon=epsilon, monotonicity_grid=0)
    except SaturatedError:
        return math.inf
    return opt.delay.t_ms if opt.delay.finite else math.inf


def delay_optimal_bound(
    connection,
    n,
    backoff,
    lambda_tilde,
    *,
    payload_ms,
    delta_s_ms,
    delta_f_ms,
    encoding_rate,
    epsilon=1e-6,
    tol_ms=_SIGMA_TOL_MS,
    prescan=9,
):
    """Largest sensing time at which CSMA still beats Aloha on minimum delay.

    Both protocols run the same payload, overheads, backoff, and aggregate
    bit rate lambda_tilde; only the CSMA sensing time varies. The search
    bisects over sigma_C in (1e-4 ms, payload + delta_f], after a coarse
    monotonicity pre-scan of the CSMA minimum delay; a non-monotone
    pre-scan falls back to a fine grid scan plus local refinement and the
    result is flagged.

    Raises AlohaSaturatedError when Aloha's minimum delay is infinite at
    lambda_tilde.
    """
    if lambda_tilde <= 0.0:
        raise ValidationError(f"lambda_tilde must be > 0, got {lambda_tilde}")
    aloha = _aloha_scheme(connection, payload_ms, delta_s_ms, delta_f_ms)
    t_aloha = _min_delay_ms(
        _scenario(aloha, n, backoff, lambda_tilde, encoding_rate), epsilon
    )
    if not math.isfinite(t_aloha):
        raise AlohaSaturatedError(lambda_tilde)

    sigma_star_tp = throughput_optimal_bound(
        connection, payload_ms, delta_s_ms, delta_f_ms
    )
    ceiling = payload_ms + delta_f_ms

    def t_csma(sigma):
        scheme = _csma_scheme(connection, payload_ms, delta_s_ms, delta_f_ms, sigma)
        return _min_delay_ms(
            _scenario(scheme, n, backoff, lambda_tilde, encoding_rate), epsilon
        )

    def wins(sigma):
        return t_csma(sigma) <= t_aloha

    def result(sigma, monotone=True, at_ceiling=False):
        return SensingBoundResult(
            sigma_star_throughput_ms=sigma_star_tp,
            sigma_star_delay_ms=float(sigma),
            lambda_tilde=lambda_tilde,
            monotone=monotone,
            at_ceiling=at_ceiling,
        )

    grid = np.linspace(_SIGMA_FLOOR_MS, ceiling, prescan)
    vals = [t_csma(s) for s in grid]
    finite = [v for v in vals if math.isfinite(v)]
    monotone = all(b >= a * (1.0 - 1e-9) for a, b in zip(finite, finite[1:]))

    if monotone:
        if not wins(_SIGMA_FLOOR_MS):
            return result(0.0)
        if wins(ceiling):
            return result(ceiling, at_ceiling=True)
        lo, hi = _SIGMA_FLOOR_MS, ceiling
        # Tighten with the pre-scan before bisecting.
        for s, v in zip(grid, vals):
            if v <= t_aloha:
                lo = max(lo, s)
            elif s < hi:
                hi = min(hi, s)
        while hi - lo > tol_ms:
            mid = 0.5 * (lo + hi)
            if wins(mid):
                lo = mid
            else:
                hi = mid
        return result(lo)

    # Non-monotone: scan finely for the largest winning sigma, refine there.
    fine = np.linspace(_SIGMA_FLOOR_MS, ceiling, 200)
    winning = [s for s in fine if wins(s)]
    if not winning:
        return result(0.0, monotone=False)
    lo = winning[-1]
    if lo >= fine[-1]:
        return result(ceiling, monotone=False, at_ceiling=True)
    hi = fine[np.searchsorted(fine, lo) + 1]
    while hi - lo > tol_ms:
        mid = 0.5 * (lo + hi)
        if wins(mid):
            lo = mid
        else:
            hi = mid
    return result(lo, monotone=False)


def rate_grid(
    connection,
    *,
    payload_ms,
    delta_s_ms,
    delta_f_ms,
    encoding_rate,
    points=40,
    start=1e-4,
):
    """Log-spaced aggregate bit rates from start up to just below the Aloha
    maximum, for sensing-bound-versus-rate curves."""
    from .fixedpoint import max_bit_throughput
    from .model import holding_times

    aloha = _aloha_scheme(connection, payload_ms, delta_s_ms, delta_f_ms)
    top = max_bit_throughput(aloha, holding_times(aloha), encoding_rate)
    return np.geomspace(start, top * (1.0 - 1e-3), points)
