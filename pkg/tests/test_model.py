"""Domain types: validation tiers, slot derivation, holding times, backoff."""

import math

import pytest

from radelay.model import (
    AccessScheme,
    BackoffKind,
    BackoffPolicy,
    Connection,
    Family,
    ModelWarning,
    Scenario,
    ValidationError,
    derive_slot,
    holding_times,
    packet_rate,
)
from radelay.presets_registry import load_preset, scheme_from_preset


def aloha_free(payload=1.0, overhead=0.0):
    return derive_slot(
        AccessScheme(Family.ALOHA, Connection.FREE, payload, overhead, overhead)
    )


def test_slot_derivation_sensing_free():
    # connection-free: the slot is one full packet, payload plus overhead
    s = aloha_free(0.5, 5.5)
    assert s.slot_ms == 6.0
    assert holding_times(s).tau_t == 1.0
    assert holding_times(s).tau_f == 0.0

    # connection-based: the slot is one request
    s = derive_slot(AccessScheme(Family.ALOHA, Connection.BASED, 0.5, 7.5, 2.0))
    assert s.slot_ms == 2.0
    assert holding_times(s).tau_t == 4.0


def test_slot_is_input_for_sensing_based():
    with pytest.raises(ValidationError, match="sensing time"):
        derive_slot(AccessScheme(Family.CSMA, Connection.FREE, 0.5, 5.5, 5.5))
    s = AccessScheme(Family.CSMA, Connection.FREE, 0.5, 5.5, 5.5, slot_ms=0.5)
    assert holding_times(s).tau_t == 12.0
    assert holding_times(s).tau_f == 12.0
    s = AccessScheme(Family.CSMA, Connection.BASED, 0.5, 7.5, 2.0, slot_ms=0.5)
    assert holding_times(s).tau_t == 16.0
    assert holding_times(s).tau_f == 4.0


def test_preset_slot_counts():
    expected = {
        "sensing_free_2step": (6.0, 1.0, 0.0),
        "sensing_free_4step": (2.0, 4.0, 0.0),
        "sensing_based_2step": (0.5, 12.0, 12.0),
        "sensing_based_4step": (0.5, 16.0, 4.0),
    }
    for name, (slot, tau_t, tau_f) in expected.items():
        scheme = derive_slot(scheme_from_preset(load_preset(name)))
        hold = holding_times(scheme)
        assert scheme.slot_ms == slot
        assert hold.tau_t == tau_t
        assert hold.tau_f == tau_f


def test_scheme_validation():
    with pytest.raises(ValidationError, match="payload_ms"):
        AccessScheme(Family.ALOHA, Connection.FREE, 0.0, 0.0, 0.0)
    with pytest.raises(ValidationError, match="overhead"):
        AccessScheme(Family.ALOHA, Connection.FREE, 1.0, -1.0, -1.0)
    # connection-free sensing-free access cannot distinguish success and
    # failure durations: the slot is the whole packet either way
    with pytest.raises(ValidationError, match="equal success and fail"):
        AccessScheme(Family.ALOHA, Connection.FREE, 1.0, 2.0, 1.0)
    with pytest.raises(ValidationError, match="request slot"):
        AccessScheme(Family.ALOHA, Connection.BASED, 1.0, 2.0, 0.0)
    with pytest.raises(ValidationError, match="slot_ms must equal"):
        AccessScheme(Family.ALOHA, Connection.FREE, 1.0, 0.0, 0.0, slot_ms=2.0)
    with pytest.raises(ValidationError, match="slot_ms must be > 0"):
        AccessScheme(Family.CSMA, Connection.FREE, 1.0, 0.0, 0.0, slot_ms=0.0)


def test_sensing_longer_than_failure_warns():
    with pytest.warns(ModelWarning, match="sensing"):
        AccessScheme(Family.CSMA, Connection.FREE, 1.0, 0.0, 0.0, slot_ms=1.5)


def test_holding_times_requires_slot():
    bare = AccessScheme(Family.CSMA, Connection.FREE, 1.0, 0.0, 0.0)
    with pytest.raises(ValidationError, match="derive_slot"):
        holding_times(bare)


def test_backoff_policies():
    cb = BackoffPolicy.constant(3)
    assert cb.kind is BackoffKind.CONSTANT
    assert [cb.q(k) for k in range(5)] == [1.0] * 5

    beb = BackoffPolicy.binary_exponential(4)
    assert beb.cutoff == 4
    assert beb.q(0) == 1.0
    assert beb.q(3) == 0.125
    # arguments past the cutoff clamp to the cutoff phase
    assert beb.q(9) == beb.q(4) == 2.0**-4

    custom = BackoffPolicy.custom((1.0, 0.5, 0.25))
    assert custom.cutoff == 2
    assert custom.q(1) == 0.5
    assert custom.table() == (1.0, 0.5, 0.25)


def test_backoff_validation():
    with pytest.raises(ValidationError):
        BackoffPolicy.binary_exponential(-1)
    with pytest.raises(ValidationError):
        BackoffPolicy.custom(())
    with pytest.raises(ValidationError):
        BackoffPolicy.custom((0.5, 0.25))  # Q(0) must be 1
    with pytest.raises(ValidationError):
        BackoffPolicy.custom((1.0, 0.0))


def test_scenario_validation():
    scheme = aloha_free()
    cb = BackoffPolicy.constant()
    with pytest.raises(ValidationError, match="n must be >= 2"):
        Scenario(n=1, scheme=scheme, backoff=cb, q0=0.1, bit_rate_per_node=0.01, encoding_rate=1.0)
    with pytest.raises(ValidationError, match="q0"):
        Scenario(n=2, scheme=scheme, backoff=cb, q0=0.0, bit_rate_per_node=0.01, encoding_rate=1.0)
    with pytest.raises(ValidationError, match="q0"):
        Scenario(n=2, scheme=scheme, backoff=cb, q0=1.5, bit_rate_per_node=0.01, encoding_rate=1.0)
    with pytest.raises(ValidationError, match="bit_rate"):
        Scenario(n=2, scheme=scheme, backoff=cb, q0=0.1, bit_rate_per_node=-1.0, encoding_rate=1.0)
    with pytest.raises(ValidationError, match="encoding_rate"):
        Scenario(n=2, scheme=scheme, backoff=cb, q0=0.1, bit_rate_per_node=0.01, encoding_rate=0.0)


def test_scenario_derives_slot_automatically():
    bare = AccessScheme(Family.ALOHA, Connection.BASED, 0.5, 7.5, 2.0)
    sc = Scenario(
        n=10, scheme=bare, backoff=BackoffPolicy.constant(), q0=0.1,
        bit_rate_per_node=1e-4, encoding_rate=1.0,
    )
    assert sc.scheme.slot_ms == 2.0


def test_packet_rate_conversion():
    # lambda = lambda_b * sigma / (R * L), packets per slot
    scheme = AccessScheme(Family.CSMA, Connection.FREE, 0.5, 5.5, 5.5, slot_ms=0.5)
    sc = Scenario(
        n=500, scheme=scheme, backoff=BackoffPolicy.constant(), q0=0.5,
        bit_rate_per_node=1e-5, encoding_rate=0.3066,
    )
    lam = packet_rate(sc)
    assert lam == pytest.approx(1e-5 * 0.5 / (0.3066 * 0.5), rel=1e-12)
    assert sc.lambda_tilde == pytest.approx(5e-3, rel=1e-12)


def test_zero_rate_allowed():
    sc = Scenario(
        n=2, scheme=aloha_free(), backoff=BackoffPolicy.constant(), q0=0.5,
        bit_rate_per_node=0.0, encoding_rate=1.0,
    )
    assert packet_rate(sc) == 0.0


def test_holding_times_are_slot_counts():
    # a non-integer count is legal for analysis (simulator checks separately)
    s = AccessScheme(Family.CSMA, Connection.FREE, 1.0, 0.5, 0.2, slot_ms=0.7)
    hold = holding_times(s)
    assert hold.tau_t == pytest.approx(1.5 / 0.7)
    assert hold.tau_f == pytest.approx(1.2 / 0.7)
    assert not float(hold.tau_t).is_integer()


def test_enum_values_are_config_strings():
    assert Family("aloha") is Family.ALOHA
    assert Connection("based") is Connection.BASED
    assert BackoffKind("binary_exponential") is BackoffKind.BINARY_EXPONENTIAL
    assert math.isfinite(aloha_free().slot_ms)
