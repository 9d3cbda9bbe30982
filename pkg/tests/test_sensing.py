"""Sensing-time bounds: throughput-optimal closed forms and delay-optimal search."""

import math

import numpy as np
import pytest

from radelay.fixedpoint import max_bit_throughput
from radelay.model import (
    AccessScheme,
    BackoffPolicy,
    Connection,
    Family,
    ValidationError,
    derive_slot,
    holding_times,
)
from radelay.sensing import (
    AlohaSaturatedError,
    delay_optimal_bound,
    rate_grid,
    throughput_optimal_bound,
)

# small-data-transmission timing: payload 0.5 ms, grant-free overhead 5.5 ms,
# grant-based overheads 7.5 / 2.0 ms, encoding rate 0.3066
SDT = dict(payload_ms=0.5, encoding_rate=0.3066)
SDT_FREE = dict(delta_s_ms=5.5, delta_f_ms=5.5, **SDT)
SDT_BASED = dict(delta_s_ms=7.5, delta_f_ms=2.0, **SDT)


def bit_ceiling(connection, payload_ms, delta_s_ms, delta_f_ms, encoding_rate, sigma=None):
    """Aggregate bit-rate ceiling of a scheme (Aloha when sigma is None)."""
    if sigma is None:
        scheme = derive_slot(
            AccessScheme(Family.ALOHA, connection, payload_ms, delta_s_ms, delta_f_ms)
        )
    else:
        scheme = AccessScheme(
            Family.CSMA, connection, payload_ms, delta_s_ms, delta_f_ms, slot_ms=sigma
        )
    return max_bit_throughput(scheme, holding_times(scheme), encoding_rate)


def test_throughput_bound_known_values():
    got_free = throughput_optimal_bound(Connection.FREE, 0.5, 5.5, 5.5)
    got_based = throughput_optimal_bound(Connection.BASED, 0.5, 7.5, 2.0)
    assert got_free == pytest.approx(2.6680, abs=5e-4)
    assert got_based == pytest.approx(0.8893, abs=5e-4)


def test_throughput_bound_is_the_crossover_point():
    # below the bound sensing lifts the bit-rate ceiling above the
    # sensing-free ceiling; above the bound it no longer does
    for conn, kw in [(Connection.FREE, SDT_FREE), (Connection.BASED, SDT_BASED)]:
        sigma_star = throughput_optimal_bound(
            conn, kw["payload_ms"], kw["delta_s_ms"], kw["delta_f_ms"]
        )
        ceil_free = bit_ceiling(conn, kw["payload_ms"], kw["delta_s_ms"],
                                kw["delta_f_ms"], kw["encoding_rate"])
        below = bit_ceiling(conn, kw["payload_ms"], kw["delta_s_ms"],
                            kw["delta_f_ms"], kw["encoding_rate"],
                            sigma=sigma_star * 0.98)
        above = bit_ceiling(conn, kw["payload_ms"], kw["delta_s_ms"],
                            kw["delta_f_ms"], kw["encoding_rate"],
                            sigma=sigma_star * 1.02)
        assert below > ceil_free
        assert above < ceil_free


def test_ceilings_coincide_at_the_bound():
    for conn, kw in [(Connection.FREE, SDT_FREE), (Connection.BASED, SDT_BASED)]:
        sigma_star = throughput_optimal_bound(
            conn, kw["payload_ms"], kw["delta_s_ms"], kw["delta_f_ms"]
        )
        ceil_free = bit_ceiling(conn, kw["payload_ms"], kw["delta_s_ms"],
                                kw["delta_f_ms"], kw["encoding_rate"])
        at_bound = bit_ceiling(conn, kw["payload_ms"], kw["delta_s_ms"],
                               kw["delta_f_ms"], kw["encoding_rate"],
                               sigma=sigma_star)
        assert at_bound == pytest.approx(ceil_free, rel=1e-6)


def test_rate_grid_spans_feasible_band():
    grid = rate_grid(Connection.FREE, points=12, **SDT_FREE)
    assert len(grid) == 12
    assert all(b > a for a, b in zip(grid, grid[1:]))
    top = bit_ceiling(Connection.FREE, SDT_FREE["payload_ms"], 5.5, 5.5, 0.3066)
    assert grid[0] > 0.0
    assert grid[-1] < top


def test_delay_bound_exceeds_throughput_bound_at_sdt_settings():
    # delay-optimized sensing stays beneficial beyond the throughput
    # crossover for the small-data timing at n=500
    grid = rate_grid(Connection.FREE, points=5, start=1e-3, **SDT_FREE)
    for lt in grid:
        bound = delay_optimal_bound(
            Connection.FREE, 500, BackoffPolicy.constant(), float(lt), **SDT_FREE
        )
        assert bound.sigma_star_delay_ms >= bound.sigma_star_throughput_ms


def test_delay_bound_defining_property():
    # CSMA wins just inside the bound and loses just outside (monotone case)
    from radelay.delay import optimal_q0
    from radelay.model import Scenario

    n, lam_tilde = 50, 0.05
    kw = dict(payload_ms=2.0, delta_s_ms=1.0, delta_f_ms=1.0, encoding_rate=1.0)
    bound = delay_optimal_bound(
        Connection.FREE, n, BackoffPolicy.constant(), lam_tilde, **kw
    )
    assert bound.monotone

    def min_delay_ms(scheme):
        sc = Scenario(
            n=n, scheme=scheme, backoff=BackoffPolicy.constant(), q0=0.5,
            bit_rate_per_node=lam_tilde / n, encoding_rate=1.0,
        )
        opt = optimal_q0(sc, monotonicity_grid=0)
        return opt.delay.t_ms

    aloha = derive_slot(AccessScheme(Family.ALOHA, Connection.FREE, 2.0, 1.0, 1.0))
    t_aloha = min_delay_ms(aloha)
    sig = bound.sigma_star_delay_ms
    inside = AccessScheme(Family.CSMA, Connection.FREE, 2.0, 1.0, 1.0, slot_ms=sig - 0.01)
    outside = AccessScheme(Family.CSMA, Connection.FREE, 2.0, 1.0, 1.0, slot_ms=sig + 0.01)
    assert min_delay_ms(inside) <= t_aloha
    assert min_delay_ms(outside) >= t_aloha


def test_connection_free_bound_exceeds_connection_based():
    # failed transmissions cost more without a connection phase, so sensing
    # helps more there (timing: payload 2 ms, overheads 1 / 3 / 1.5 ms)
    lam_tilde = 0.1
    free = delay_optimal_bound(
        Connection.FREE, 50, BackoffPolicy.constant(), lam_tilde,
        payload_ms=2.0, delta_s_ms=1.0, delta_f_ms=1.0, encoding_rate=1.0,
    )
    based = delay_optimal_bound(
        Connection.BASED, 50, BackoffPolicy.constant(), lam_tilde,
        payload_ms=2.0, delta_s_ms=3.0, delta_f_ms=1.5, encoding_rate=1.0,
    )
    assert free.sigma_star_delay_ms > based.sigma_star_delay_ms


def test_delay_bound_grows_with_node_count():
    bounds = [
        delay_optimal_bound(
            Connection.FREE, n, BackoffPolicy.constant(), 0.1,
            payload_ms=2.0, delta_s_ms=1.0, delta_f_ms=1.0, encoding_rate=1.0,
        ).sigma_star_delay_ms
        for n in (20, 50, 100)
    ]
    assert bounds[0] <= bounds[1] <= bounds[2]


def test_backoff_lowers_delay_bound():
    kw = dict(payload_ms=2.0, delta_s_ms=1.0, delta_f_ms=1.0, encoding_rate=1.0)
    cb = delay_optimal_bound(Connection.FREE, 50, BackoffPolicy.constant(), 0.1, **kw)
    beb = delay_optimal_bound(
        Connection.FREE, 50, BackoffPolicy.binary_exponential(2), 0.1, **kw
    )
    assert beb.sigma_star_delay_ms <= cb.sigma_star_delay_ms


def test_saturated_reference_rejected():
    top = bit_ceiling(Connection.FREE, 2.0, 1.0, 1.0, 1.0)
    with pytest.raises(AlohaSaturatedError):
        delay_optimal_bound(
            Connection.FREE, 50, BackoffPolicy.constant(), top * 1.01,
            payload_ms=2.0, delta_s_ms=1.0, delta_f_ms=1.0, encoding_rate=1.0,
        )
    with pytest.raises(ValidationError):
        delay_optimal_bound(
            Connection.FREE, 50, BackoffPolicy.constant(), 0.0,
            payload_ms=2.0, delta_s_ms=1.0, delta_f_ms=1.0, encoding_rate=1.0,
        )


def test_bound_result_flags():
    bound = delay_optimal_bound(
        Connection.FREE, 50, BackoffPolicy.constant(), 0.05,
        payload_ms=2.0, delta_s_ms=1.0, delta_f_ms=1.0, encoding_rate=1.0,
    )
    assert isinstance(bound.monotone, bool)
    assert isinstance(bound.at_ceiling, bool)
    assert bound.lambda_tilde == 0.05
    if bound.at_ceiling:
        assert bound.sigma_star_delay_ms == pytest.approx(3.0)
    else:
        assert 0.0 < bound.sigma_star_delay_ms <= 3.0
