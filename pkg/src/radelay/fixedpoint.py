"""Steady-state success-probability fixed points and throughput limits.

The head-of-line success probability p solves a fixed-point equation of the
form p = exp(g - a/p), whose two roots come from the real branches of the
Lambert W function. The saturated regime has its own single-root equation
driven by the backoff function f(p). Default equations are the large-n
approximations; exact finite-n forms are available behind a flag for
validating against simulation at small n.
"""

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .lambertw import Branch, lambert_w
from .model import Family, ValidationError

__all__ = [
    "RootPair",
    "SaturatedRoot",
    "UnsaturatedRegion",
    "NoRootsError",
    "f_of_p",
    "unsaturated_roots",
    "saturated_root",
    "unsaturated_region",
    "max_throughput",
    "max_bit_throughput",
]

_BRANCH_POINT = -math.exp(-1.0)
_P_FLOOR = 1e-15
_RESIDUAL_TOL = 1e-10
# Width of the Lambert branch-point slack in the W argument, and the map
# residual that slack permits when the two roots are about to merge.
_FOLD_SLACK = 1e-12
_FOLD_RESIDUAL_TOL = 1e-11


class NoRootsError(ValueError):
    """The unsaturated fixed point has no real roots: offered load is at or
    above the maximum throughput. Carries the limiting value."""

    def __init__(self, lambda_hat, lambda_hat_max):
        self.lambda_hat = lambda_hat
        self.lambda_hat_max = lambda_hat_max
        super().__init__(
            f"no unsaturated fixed point at lambda_hat={lambda_hat:.6g} "
            f"(maximum {lambda_hat_max:.6g} packets/slot)"
        )


@dataclass(frozen=True)
class RootPair:
    """The two unsaturated roots: p_large attracting, p_small repelling."""

    p_large: float
    p_small: float


@dataclass(frozen=True)
class SaturatedRoot:
    p_a: float


@dataclass(frozen=True)
class UnsaturatedRegion:
    """q0 interval on which every queue stays unsaturated. empty means the
    aggregate rate is at or above maximum throughput; upper_clamped means
    the formula exceeded 1 and was cut at 1."""

    q0_lower: float
    q0_upper: float
    empty: bool
    upper_clamped: bool = False


def f_of_p(p, backoff):
    """Backoff aggregate f(p) = (1-p)^K / Q(K) + sum_{k<K} p(1-p)^k / Q(k).

    Always direct summation: exact for every policy and every p in [0,1],
    unlike the binary-exponential closed form which is singular at p=1/2.
    """
    if not (0.0 <= p <= 1.0):
        raise ValidationError(f"p must be in [0,1], got {p}")
    k_max = backoff.cutoff
    total = (1.0 - p) ** k_max / backoff.q(k_max)
    for k in range(k_max):
        total += p * (1.0 - p) ** k / backoff.q(k)
    return total


def _map_coefficients(family, holding, lambda_hat):
    """Coefficients (g, a) of the fixed-point map p -> exp(g - a/p).

    Raises NoRootsError when the load leaves no positive-denominator form.
    """
    tau_t, tau_f = holding.tau_t, holding.tau_f
    if family is Family.ALOHA:
        c = 1.0 - lambda_hat * (tau_t - 1.0)
        if c <= 0.0:
            raise NoRootsError(lambda_hat, max_throughput(family, holding))
        return 0.0, lambda_hat / c
    c = 1.0 - lambda_hat * (tau_t - tau_f)
    if c <= 0.0:
        raise NoRootsError(lambda_hat, max_throughput(family, holding))
    g = lambda_hat * tau_f / c
    a = lambda_hat * (tau_f + 1.0) / c
    return g, a


def fixed_point_map(family, holding, lambda_hat):
    """The unsaturated fixed-point map as a callable p -> exp(g - a/p).

    Direct iteration from p=1 converges to p_large; p_small repels.
    """
    g, a = _map_coefficients(family, holding, lambda_hat)

    def step(p):
        if p == 0.0:
            return 0.0  # continuous extension: exp(g - a/p) -> 0 as p -> 0+
        return math.exp(g - a / p)

    return step


def _family_of(scheme_or_family):
    return scheme_or_family if isinstance(scheme_or_family, Family) else scheme_or_family.family


def _exact_base(family, holding, n, lambda_hat):
    """Base of the exact finite-n fixed point p = max(base(p), 0)^(n-1)."""
    lam = lambda_hat / n
    tau_t, tau_f = holding.tau_t, holding.tau_f
    if family is Family.ALOHA:
        c = 1.0 - lambda_hat * (tau_t - 1.0)
        if c <= 0.0:
            raise NoRootsError(lambda_hat, max_throughput(family, holding))

        def base(p):
            return 1.0 - lam / (p * c)

    else:
        k = 1.0 - lambda_hat * (tau_t - tau_f) - lam * tau_f
        if k <= 0.0:
            raise NoRootsError(lambda_hat, max_throughput(family, holding))

        def base(p):
            return 1.0 + lam * tau_f / k - lam * (tau_f + 1.0) / (p * k)

    return base


def _exact_roots(family, holding, n, lambda_hat):
    base = _exact_base(family, holding, n, lambda_hat)
    m = n - 1

    def resid(p):
        return max(base(p), 0.0) ** m - p

    approx = _approx_roots(family, holding, lambda_hat)
    mid = math.sqrt(approx.p_small * approx.p_large)
    if resid(mid) <= 0.0:
        # The exact roots moved; locate the interior maximum by scanning.
        grid = [math.exp(x) for x in _linspace(math.log(1e-12), math.log(1.0 - 1e-12), 400)]
        mid, best = None, 0.0
        for p in grid:
            r = resid(p)
            if r > best:
                mid, best = p, r
        if mid is None:
            raise NoRootsError(lambda_hat, max_throughput(family, holding))
    p_small = brentq(resid, _P_FLOOR, mid, xtol=_P_FLOOR)
    p_large = brentq(resid, mid, 1.0, xtol=_P_FLOOR)
    for p in (p_small, p_large):
        if abs(resid(p)) > _RESIDUAL_TOL:
            raise ArithmeticError(f"exact fixed-point residual {resid(p):.3e} at p={p}")
    return RootPair(p_large=p_large, p_small=p_small)


def _linspace(lo, hi, count):
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def _approx_roots(family, holding, lambda_hat):
    g, a = _map_coefficients(family, holding, lambda_hat)
    arg = -a * math.exp(-g)
    if arg <= _BRANCH_POINT:
        raise NoRootsError(lambda_hat, max_throughput(family, holding))
    p_large = math.exp(lambert_w(Branch.PRINCIPAL, arg) + g)
    p_small = math.exp(lambert_w(Branch.MINUS_ONE, arg) + g) if arg < 0.0 else 0.0

    def resid(p):
        return p - math.exp(g - a / p)

    # Arguments within the Lambert branch-point slack collapse both W
    # branches to -1: the fold is then the best double-precision stand-in
    # for the two roots, and its map residual stays below p*e*slack.
    near_fold = (arg - _BRANCH_POINT) <= _FOLD_SLACK
    accept = _FOLD_RESIDUAL_TOL if near_fold else _RESIDUAL_TOL

    out = []
    for p in (p_large, p_small):
        if p > 0.0 and abs(resid(p)) > 1e-12:
            # Newton polish on h(p) = ln p - g + a/p, keeping the best
            # iterate: near the fold h' vanishes and a raw step can walk
            # away from the root, so a step is kept only if it improves.
            best, best_r = p, abs(resid(p))
            for _ in range(8):
                dh = (p - a) / (p * p)
                if dh == 0.0:
                    break
                p = p - (math.log(p) - g + a / p) / dh
                if not math.isfinite(p) or not 0.0 < p <= 1.0:
                    break
                r = abs(resid(p))
                if r >= best_r:
                    break
                best, best_r = p, r
            p = best
            if best_r > accept:
                raise ArithmeticError(f"fixed-point residual {resid(p):.3e} at p={p}")
        out.append(p)
    return RootPair(p_large=min(out[0], 1.0), p_small=out[1])


def unsaturated_roots(scheme, holding, lambda_hat, *, n=None, exact_finite_n=False):
    """Both roots of the unsaturated fixed point at aggregate rate lambda_hat.

    Parameters
    ----------
    scheme : AccessScheme or Family
        Only the family matters here.
    holding : HoldingTimes
    lambda_hat : float
        Aggregate packet rate, packets/slot.
    n : int, optional
        Node count, required when exact_finite_n is set.
    exact_finite_n : bool
        Solve the exact finite-n equation instead of the large-n form.
        Intended for validation against simulation at small n.

    Returns
    -------
    RootPair
        p_large (attracting) and p_small (repelling).

    Raises
    ------
    NoRootsError
        When lambda_hat is at or above the maximum throughput.
    """
    family = _family_of(scheme)
    if lambda_hat < 0.0:
        raise ValidationError(f"lambda_hat must be >= 0, got {lambda_hat}")
    if lambda_hat == 0.0:
        return RootPair(p_large=1.0, p_small=0.0)
    if exact_finite_n:
        if n is None or n < 2:
            raise ValidationError("exact_finite_n requires n >= 2")
        return _exact_roots(family, holding, n, lambda_hat)
    return _approx_roots(family, holding, lambda_hat)


def saturated_root(n, q0, backoff, *, exact_finite_n=False):
    """The single saturated-regime root p_a of p = exp(-n q0 / f(p)).

    With exact_finite_n, solves p = max(1 - q0/f(p), 0)^(n-1) instead.
    """
    if n < 2:
        raise ValidationError(f"n must be >= 2, got {n}")
    if not (0.0 < q0 <= 1.0):
        raise ValidationError(f"q0 must be in (0,1], got {q0}")

    if exact_finite_n:
        def rhs(p):
            return max(1.0 - q0 / f_of_p(p, backoff), 0.0) ** (n - 1)
    else:
        def rhs(p):
            return math.exp(-n * q0 / f_of_p(p, backoff))

    def resid(p):
        return p - rhs(p)

    if resid(_P_FLOOR) >= 0.0:
        # Root at or below the floor; the map is nearly constant there, so
        # direct iteration settles it.
        p = _P_FLOOR
        for _ in range(200):
            p_next = rhs(p)
            if abs(p_next - p) <= 1e-18:
                p = p_next
                break
            p = p_next
    else:
        p = brentq(resid, _P_FLOOR, 1.0, xtol=_P_FLOOR)
    if abs(resid(p)) > _RESIDUAL_TOL:
        raise ArithmeticError(f"saturated-root residual {resid(p):.3e} at p={p}")
    return SaturatedRoot(p_a=p)


def unsaturated_region(scheme, holding, n, lambda_hat, backoff, *, exact_finite_n=False):
    """q0 interval keeping every queue unsaturated, from the root pair.

    Bounds map the saturated root onto the unsaturated roots: the saturated
    fixed point must land strictly between p_small and p_large. Emptiness
    (load at or beyond maximum throughput) is a value, not an error.
    """
    try:
        roots = unsaturated_roots(
            scheme, holding, lambda_hat, n=n, exact_finite_n=exact_finite_n
        )
    except NoRootsError:
        return UnsaturatedRegion(q0_lower=math.nan, q0_upper=math.nan, empty=True)

    def q0_at(p):
        if p <= 0.0:
            return math.inf
        if exact_finite_n:
            return f_of_p(p, backoff) * (1.0 - p ** (1.0 / (n - 1)))
        return -math.log(p) * f_of_p(p, backoff) / n

    lower = q0_at(roots.p_large)
    upper = q0_at(roots.p_small)
    clamped = upper > 1.0
    return UnsaturatedRegion(
        q0_lower=lower,
        q0_upper=min(upper, 1.0),
        empty=False,
        upper_clamped=clamped,
    )


def max_throughput(scheme, holding):
    """Maximum aggregate packet rate lambda_hat_max (packets/slot).

    Aloha: 1/(tau_t - 1 + e). CSMA: the principal-branch Lambert W form in
    tau_f, reducing to 1/(tau_t + e) at tau_f = 0.
    """
    family = _family_of(scheme)
    tau_t, tau_f = holding.tau_t, holding.tau_f
    if family is Family.ALOHA:
        return 1.0 / (tau_t - 1.0 + math.e)
    if tau_f == 0.0:
        return 1.0 / (tau_t + math.e)
    w0 = lambert_w(Branch.PRINCIPAL, -tau_f / (math.e * (tau_f + 1.0)))
    return -w0 / (tau_f - (tau_t - tau_f) * w0)


def max_bit_throughput(scheme, holding, encoding_rate):
    """Maximum aggregate bit rate lambda_tilde_max = (R L / sigma) * lambda_hat_max.

    Needs the full scheme (payload and slot length) plus the encoding rate.
    """
    if scheme.slot_ms is None:
        raise ValidationError("scheme needs slot_ms; call derive_slot first")
    lam_hat = max_throughput(scheme, holding)
    return encoding_rate * scheme.payload_ms / scheme.slot_ms * lam_hat
