"""Domain types and timing derivations shared by analysis and simulation.

Timing is kept in milliseconds; slot counts are reals in the analysis (the
simulator separately insists on integer slot counts). All types are frozen
value objects and safe to share across threads.
"""

import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum

__all__ = [
    "Family",
    "Connection",
    "BackoffKind",
    "ValidationError",
    "ModelWarning",
    "AccessScheme",
    "HoldingTimes",
    "BackoffPolicy",
    "Scenario",
    "derive_slot",
    "holding_times",
    "packet_rate",
]


class Family(Enum):
    ALOHA = "aloha"
    CSMA = "csma"


class Connection(Enum):
    FREE = "free"
    BASED = "based"


class BackoffKind(Enum):
    CONSTANT = "constant"
    BINARY_EXPONENTIAL = "binary_exponential"
    CUSTOM = "custom"


class ValidationError(ValueError):
    """A configuration contradicts the model."""


class ModelWarning(UserWarning):
    """Model-atypical but not contradictory configuration."""


@dataclass(frozen=True)
class AccessScheme:
    """Access scheme timing: family, connection mode, and overheads in ms.

    slot_ms is derived for Aloha (see derive_slot); for CSMA it is the
    sensing time, an input. Leave it None and call derive_slot, or pass it
    explicitly (validated against the derivation rules).
    """

    family: Family
    connection: Connection
    payload_ms: float
    overhead_success_ms: float
    overhead_fail_ms: float
    slot_ms: float | None = None

    def __post_init__(self):
        if not (self.payload_ms > 0):
            raise ValidationError(f"payload_ms must be > 0, got {self.payload_ms}")
        if self.overhead_success_ms < 0 or self.overhead_fail_ms < 0:
            raise ValidationError("overhead times must be >= 0")
        if self.family is Family.ALOHA and self.connection is Connection.FREE:
            if self.overhead_success_ms != self.overhead_fail_ms:
                raise ValidationError(
                    "connection-free Aloha requires equal success and fail "
                    "overheads; the slot is one full packet either way"
                )
        if self.family is Family.ALOHA and self.connection is Connection.BASED:
            if not (self.overhead_fail_ms > 0):
                raise ValidationError(
                    "connection-based Aloha requires overhead_fail_ms > 0 "
                    "(it is the request slot length)"
                )
        if self.slot_ms is not None:
            if not (self.slot_ms > 0):
                raise ValidationError(f"slot_ms must be > 0, got {self.slot_ms}")
            if self.family is Family.ALOHA:
                expect = _aloha_slot_ms(self)
                if not math.isclose(self.slot_ms, expect, rel_tol=1e-12):
                    raise ValidationError(
                        f"Aloha slot_ms must equal {expect} ms for these "
                        f"overheads, got {self.slot_ms}"
                    )
            else:
                limit = self.payload_ms + self.overhead_fail_ms
                if self.slot_ms > limit:
                    warnings.warn(
                        f"sensing time {self.slot_ms} ms exceeds the failed "
                        f"transmission time {limit} ms; sensing is normally "
                        "shorter",
                        ModelWarning,
                        stacklevel=3,
                    )


def _aloha_slot_ms(scheme):
    if scheme.connection is Connection.FREE:
        return scheme.payload_ms + scheme.overhead_fail_ms
    return scheme.overhead_fail_ms


def derive_slot(scheme):
    """Return the scheme with slot_ms populated.

    Aloha slots are derived from the timing fields (connection-free: one
    full packet L + overhead; connection-based: one request). CSMA slots are
    the sensing time and must be supplied by the caller.
    """
    if scheme.family is Family.ALOHA:
        return replace(scheme, slot_ms=_aloha_slot_ms(scheme))
    if scheme.slot_ms is None:
        raise ValidationError("CSMA needs slot_ms (the sensing time) as input")
    return scheme


@dataclass(frozen=True)
class HoldingTimes:
    """Mean holding times in slots: tau_t at the success state, tau_f at a
    failed-transmission state (zero for Aloha, where a failure costs the
    slot itself)."""

    tau_t: float
    tau_f: float = 0.0


def holding_times(scheme):
    """Mean holding times of the scheme, in slots. Requires slot_ms set."""
    if scheme.slot_ms is None:
        raise ValidationError("call derive_slot before holding_times")
    s = scheme.slot_ms
    if scheme.family is Family.ALOHA:
        if scheme.connection is Connection.FREE:
            return HoldingTimes(tau_t=1.0)
        return HoldingTimes(
            tau_t=(scheme.payload_ms + scheme.overhead_success_ms) / s
        )
    tau_t = (scheme.payload_ms + scheme.overhead_success_ms) / s
    if scheme.connection is Connection.FREE:
        tau_f = (scheme.payload_ms + scheme.overhead_fail_ms) / s
    else:
        tau_f = scheme.overhead_fail_ms / s
    return HoldingTimes(tau_t=tau_t, tau_f=tau_f)


@dataclass(frozen=True)
class BackoffPolicy:
    """Backoff function Q(k) with cutoff K: the transmission probability of
    a packet with k failures is q0 * Q(min(k, K)), Q(0) = 1, Q
    non-increasing."""

    kind: BackoffKind
    cutoff: int = 0
    q_table: tuple = ()

    def __post_init__(self):
        if self.cutoff < 0:
            raise ValidationError(f"cutoff must be >= 0, got {self.cutoff}")
        if self.kind is BackoffKind.CUSTOM:
            tab = tuple(float(v) for v in self.q_table)
            if len(tab) != self.cutoff + 1:
                raise ValidationError(
                    f"custom table needs cutoff+1={self.cutoff + 1} entries, "
                    f"got {len(tab)}"
                )
            if tab[0] != 1.0:
                raise ValidationError("Q(0) must be 1")
            for a, b in zip(tab, tab[1:]):
                if b > a:
                    raise ValidationError("Q(k) must be non-increasing")
            if any(not (0.0 < v <= 1.0) for v in tab):
                raise ValidationError("Q(k) values must lie in (0, 1]")
            object.__setattr__(self, "q_table", tab)
        elif self.q_table:
            raise ValidationError("q_table is only for CUSTOM policies")

    @classmethod
    def constant(cls, cutoff=0):
        return cls(BackoffKind.CONSTANT, cutoff)

    @classmethod
    def binary_exponential(cls, cutoff):
        return cls(BackoffKind.BINARY_EXPONENTIAL, cutoff)

    @classmethod
    def custom(cls, q_table):
        tab = tuple(float(v) for v in q_table)
        return cls(BackoffKind.CUSTOM, len(tab) - 1, tab)

    def q(self, k):
        """Q(k), clamped at the cutoff: Q(k) = Q(K) for k >= K."""
        k = min(int(k), self.cutoff)
        if self.kind is BackoffKind.CONSTANT:
            return 1.0
        if self.kind is BackoffKind.BINARY_EXPONENTIAL:
            return 2.0 ** (-k)
        return self.q_table[k]

    def table(self):
        """Q(0..K) as a tuple."""
        return tuple(self.q(k) for k in range(self.cutoff + 1))


@dataclass(frozen=True)
class Scenario:
    """A full network scenario: n symmetric nodes, one access scheme, one
    backoff policy, initial transmission probability q0, and traffic given
    as per-node bit rate with encoding rate R (both bit/s/Hz)."""

    n: int
    scheme: AccessScheme
    backoff: BackoffPolicy
    q0: float
    bit_rate_per_node: float
    encoding_rate: float

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError(f"n must be >= 2, got {self.n}")
        if not (0.0 < self.q0 <= 1.0):
            raise ValidationError(f"q0 must be in (0, 1], got {self.q0}")
        if self.bit_rate_per_node < 0:
            raise ValidationError("bit_rate_per_node must be >= 0")
        if not (self.encoding_rate > 0):
            raise ValidationError("encoding_rate must be > 0")
        if self.scheme.slot_ms is None:
            object.__setattr__(self, "scheme", derive_slot(self.scheme))

    @property
    def lambda_tilde(self):
        """Aggregate bit rate, n * lambda_b (bit/s/Hz)."""
        return self.n * self.bit_rate_per_node


def packet_rate(scenario):
    """Per-node packet rate lambda in packets/slot: lambda_b*sigma/(R*L).

    The aggregate packet rate is n times this value.
    """
    s = scenario.scheme
    lam = (
        scenario.bit_rate_per_node
        * s.slot_ms
        / (scenario.encoding_rate * s.payload_ms)
    )
    return lam
