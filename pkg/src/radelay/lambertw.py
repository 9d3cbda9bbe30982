"""Real branches of the Lambert W function.

Both real branches of w*exp(w) = x are evaluated with a per-branch initial
guess refined by Halley's method, falling back to bisection if the iteration
stalls. Self-contained on purpose: the fixed-point solvers depend on W being
available with guaranteed convergence, independent of the host math library.
"""

import math
import sys
from enum import IntEnum

__all__ = ["Branch", "LambertWDomainError", "lambert_w"]

# Branch point of the real Lambert W function, x = -1/e.
_BRANCH_POINT = -math.exp(-1.0)
# Inputs within this distance of -1/e evaluate to -1 on both branches;
# closer than this the float argument cannot resolve the two branches.
_BRANCH_POINT_SLACK = 1e-12

_MAX_HALLEY = 50
_MACHINE_EPS = sys.float_info.epsilon


class Branch(IntEnum):
    """Real branch selector: PRINCIPAL is W0, MINUS_ONE is W-1."""

    PRINCIPAL = 0
    MINUS_ONE = -1


class LambertWDomainError(ValueError):
    """Argument outside the domain of the requested branch."""


def _halley(x, w):
    """Refine w toward w*exp(w) = x. Returns (w, converged).

    Convergence is relative to |x| (the residual's natural scale), with a
    step-size exit: a step below one part in 2^50 of w means the next
    error term of the cubically convergent iteration is far below one ulp.
    """
    tol = 1e-13 * abs(x)
    for _ in range(_MAX_HALLEY):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= tol:
            return w, True
        w1 = w + 1.0
        # Halley step for f(w) = w*e^w - x.
        denom = ew * w1 - (w + 2.0) * f / (2.0 * w1)
        if denom == 0.0 or not math.isfinite(denom):
            break
        step = f / denom
        w_next = w - step
        if not math.isfinite(w_next):
            break
        w = w_next
        if abs(step) <= 1e-15 * abs(w):
            return w, True
    ew = math.exp(w)
    return w, abs(w * ew - x) <= max(tol, 4.0 * _MACHINE_EPS * abs(w * ew))


def _bisect(x, lo, hi):
    """Bisect w*exp(w) - x over [lo, hi]; the sign change is guaranteed
    by the caller. Interval floor 1e-15 relative."""
    flo = lo * math.exp(lo) - x
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fmid = mid * math.exp(mid) - x
        if fmid == 0.0:
            return mid
        if (fmid < 0.0) == (flo < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
        if abs(hi - lo) <= 1e-15 * max(1.0, abs(lo)):
            break
    return 0.5 * (lo + hi)


def _initial_principal(x):
    if x < -0.25:
        # Series around the branch point, rho = sqrt(2(e*x + 1)).
        rho = math.sqrt(2.0 * (math.e * x + 1.0))
        return -1.0 + rho * (1.0 + rho * (-1.0 / 3.0 + rho * 11.0 / 72.0))
    if x <= math.e:
        return x / (1.0 + x)
    lx = math.log(x)
    return lx - math.log(lx)


def _initial_minus_one(x):
    if x < -0.25:
        rho = math.sqrt(2.0 * (math.e * x + 1.0))
        return -1.0 - rho * (1.0 + rho * (1.0 / 3.0 + rho * 11.0 / 72.0))
    # As x -> 0-, W_{-1}(x) ~ log(-x) - log(-log(-x)).
    lx = math.log(-x)
    return lx - math.log(-lx)


def lambert_w(branch, x):
    """Evaluate a real branch of the Lambert W function at x.

    Parameters
    ----------
    branch : Branch or int
        Branch.PRINCIPAL (0) for W0 on [-1/e, inf); Branch.MINUS_ONE (-1)
        for W-1 on [-1/e, 0).
    x : float
        Argument.

    Returns
    -------
    float
        w such that w*exp(w) = x, with residual at most 1e-13 * |x|
        (up to a few ulps of w*exp(w) for huge arguments). Inputs within
        1e-12 of -1/e return -1 exactly.

    Raises
    ------
    LambertWDomainError
        If x < -1/e, or branch is MINUS_ONE with x >= 0.
    """
    branch = Branch(branch)
    x = float(x)
    if math.isnan(x):
        raise LambertWDomainError("lambert_w argument is NaN")
    if abs(x - _BRANCH_POINT) <= _BRANCH_POINT_SLACK:
        return -1.0
    if x < _BRANCH_POINT:
        raise LambertWDomainError(
            f"lambert_w undefined for x={x!r} < -1/e ~ {_BRANCH_POINT!r}"
        )
    if branch == Branch.MINUS_ONE and x >= 0.0:
        raise LambertWDomainError(
            f"branch W-1 is defined on [-1/e, 0); got x={x!r}"
        )

    if branch == Branch.PRINCIPAL:
        if x == 0.0:
            return 0.0
        w, ok = _halley(x, _initial_principal(x))
        if ok:
            return w
        # Fallback bracket on [-1, hi]: w*e^w is increasing on this branch.
        hi = 1.0
        while hi * math.exp(hi) < x:
            hi *= 2.0
        w = _bisect(x, -1.0, hi)
        w, _ = _halley(x, w)
        return w

    w, ok = _halley(x, _initial_minus_one(x))
    if ok and w <= -1.0 + 1e-9:
        return w
    # w*e^w is decreasing on (-inf, -1]; find lo with lo*e^lo > x.
    lo = -2.0
    while lo * math.exp(lo) < x:
        lo *= 2.0
    w = _bisect(x, lo, -1.0)
    w, _ = _halley(x, w)
    return w
