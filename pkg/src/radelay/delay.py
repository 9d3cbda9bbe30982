"""Steady-state probabilities, service-time moments, and mean queueing delay.

Two independent routes to the service-time moments are kept side by side:
explicit closed-form expressions, and a generic renewal engine that
differentiates the service-time PGF recursion over the embedded Markov
chain. Their agreement is the central correctness check of the analysis.
"""

import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .fixedpoint import (
    NoRootsError,
    f_of_p,
    max_throughput,
    saturated_root,
    unsaturated_region,
    unsaturated_roots,
)
from .model import Family, ModelWarning, ValidationError, holding_times, packet_rate

__all__ = [
    "Regime",
    "SteadyState",
    "HoldingDist",
    "MarkovRenewalModel",
    "ServiceMoments",
    "DelayResult",
    "Q0Optimum",
    "InconsistentRegimeError",
    "DivergentServiceError",
    "SaturatedError",
    "alpha_unconditional",
    "alpha_tilde",
    "solve_steady_state",
    "build_renewal_model",
    "service_moments_generic",
    "service_moments_closed_form",
    "mean_queueing_delay",
    "optimal_q0",
]

_PI_TOL = 1e-10


class Regime(Enum):
    UNSATURATED = "unsaturated"
    SATURATED = "saturated"


class InconsistentRegimeError(ValueError):
    """The requested regime contradicts the parameters (the caller
    classified the operating point wrongly)."""


class DivergentServiceError(ArithmeticError):
    """The service time has no finite moments for these parameters."""


class SaturatedError(ValueError):
    """The operating point is saturated for every q0. Carries the limit."""

    def __init__(self, lambda_hat, lambda_hat_max):
        self.lambda_hat = lambda_hat
        self.lambda_hat_max = lambda_hat_max
        super().__init__(
            f"saturated at lambda_hat={lambda_hat:.6g} "
            f"(maximum {lambda_hat_max:.6g} packets/slot)"
        )


@dataclass(frozen=True)
class SteadyState:
    """Steady-state operating point of one node's HOL process.

    p is the success probability of a request on an accessible channel;
    alpha and alpha_tilde are the channel-accessibility probabilities,
    unconditional and conditioned on request intent; mu is the per-node
    service rate; rho the busy probability; omega the busy-and-requesting
    probability given an accessible channel.
    """

    p: float
    alpha: float
    alpha_tilde: float
    mu: float
    rho: float
    omega: float
    regime: Regime


@dataclass(frozen=True)
class HoldingDist:
    """Holding-time distribution at one state: Deterministic(tau) or
    Geometric(success probability per slot, support 1,2,...)."""

    kind: str  # "det" | "geo"
    value: float

    def mean(self):
        if self.kind == "det":
            return self.value
        return 1.0 / self.value

    def second_factorial(self):
        """E[Y(Y-1)], the second derivative of the PGF at z=1."""
        if self.kind == "det":
            return self.value * (self.value - 1.0)
        r = self.value
        return 2.0 * (1.0 - r) / (r * r)

    def pgf(self, z):
        if self.kind == "det":
            return z ** self.value
        r = self.value
        return r * z / (1.0 - (1.0 - r) * z)


@dataclass(frozen=True)
class MarkovRenewalModel:
    """Embedded Markov chain of the HOL state process plus per-state
    holding-time distributions, request-intent probabilities phi_u, and
    conditional transmission probabilities q_u."""

    states: tuple
    transition: np.ndarray
    holding: tuple
    request_intent: tuple
    request_prob: tuple

    def stationary(self):
        """Stationary distribution pi of the embedded chain (numeric)."""
        m = len(self.states)
        a = np.vstack([self.transition.T - np.eye(m), np.ones((1, m))])
        b = np.zeros(m + 1)
        b[m] = 1.0
        pi, *_ = np.linalg.lstsq(a, b, rcond=None)
        return pi

    def limiting(self):
        """Limiting (time-fraction) probabilities pi~_u = pi_u tau_u / sum."""
        pi = self.stationary()
        tau = np.array([h.mean() for h in self.holding])
        w = pi * tau
        return w / w.sum()


@dataclass(frozen=True)
class ServiceMoments:
    """First moment d1 = E[D] and second moment d2 = E[D^2], in slots."""

    d1: float
    d2: float


@dataclass(frozen=True)
class DelayResult:
    """Mean queueing delay in slots and ms; finite=False means saturation
    (both values are +inf sentinels)."""

    t_slots: float
    t_ms: float
    finite: bool


@dataclass(frozen=True)
class Q0Optimum:
    """Optimal initial transmission probability and the delay there.

    sensitivity is the delay at (region upper bound - 10 epsilon), showing
    how sharply the optimum depends on the epsilon back-off.
    """

    q0_star: float
    delay: DelayResult
    sensitivity: DelayResult | None = None

    def __iter__(self):
        return iter((self.q0_star, self.delay))


def _plogp(p):
    return p * math.log(p) if p > 0.0 else 0.0


def alpha_unconditional(scheme, holding, p, *, n=None, exact_finite_n=False):
    """Unconditional probability alpha that the channel is accessible.

    Default forms are the large-n approximations; with exact_finite_n the
    finite-n expressions are used (n required).
    """
    if not (0.0 < p <= 1.0):
        raise ValidationError(f"p must be in (0,1], got {p}")
    family = scheme if isinstance(scheme, Family) else scheme.family
    tau_t, tau_f = holding.tau_t, holding.tau_f
    if exact_finite_n:
        if n is None or n < 2:
            raise ValidationError("exact_finite_n requires n >= 2")
        shrink = 1.0 - p ** (1.0 / (n - 1))
        if family is Family.ALOHA:
            return 1.0 / (1.0 + n * p * shrink * (tau_t - 1.0))
        return 1.0 / (
            1.0
            + tau_f * (1.0 - p ** (n / (n - 1)))
            + n * p * (tau_t - tau_f) * shrink
        )
    if family is Family.ALOHA:
        return 1.0 / (1.0 - (tau_t - 1.0) * _plogp(p))
    return 1.0 / (1.0 + tau_f * (1.0 - p) - (tau_t - tau_f) * _plogp(p))


def alpha_tilde(
    scheme,
    holding,
    p,
    lam,
    q0,
    backoff,
    regime,
    *,
    n=None,
    exact_finite_n=False,
):
    """Channel-accessibility probability conditioned on request intent.

    Connection-free Aloha returns exactly 1 (the channel is always
    accessible). The unsaturated branch requires the mean cycle length to
    leave room for the load: lam*(tau_t-1) < 1 for Aloha,
    lam*(tau_t + tau_f(1-p)/p) < 1 for CSMA; violation means the caller
    classified the regime wrongly.
    """
    family = scheme if isinstance(scheme, Family) else scheme.family
    if family is Family.ALOHA and holding.tau_t == 1.0:
        return 1.0
    tau_t, tau_f = holding.tau_t, holding.tau_f
    alpha = alpha_unconditional(scheme, holding, p, n=n, exact_finite_n=exact_finite_n)
    if family is Family.ALOHA:
        occupancy = tau_t - 1.0
    else:
        occupancy = tau_t + tau_f * (1.0 - p) / p
    if regime is Regime.UNSATURATED:
        if not (lam * occupancy < 1.0):
            raise InconsistentRegimeError(
                f"unsaturated branch needs lam*occupancy < 1, got "
                f"{lam * occupancy:.6g}"
            )
        return alpha / (1.0 - lam * occupancy)
    denom = 1.0 / alpha - occupancy * p * q0 / f_of_p(p, backoff)
    if denom <= 0.0:
        raise InconsistentRegimeError(
            "saturated accessibility denominator is non-positive"
        )
    return 1.0 / denom


def _mu_closed_form(family, holding, p, atilde, q0, backoff):
    """Per-node service rate 1/E[D] from the closed-form mean."""
    fp = f_of_p(p, backoff)
    base = fp / (p * atilde * q0)
    if family is Family.ALOHA:
        return 1.0 / (holding.tau_t - 1.0 + base)
    return 1.0 / (holding.tau_t + holding.tau_f * (1.0 - p) / p + base)


def solve_steady_state(scenario, *, exact_finite_n=False):
    """Classify the regime and solve the full steady-state operating point.

    Unsaturated iff the saturated fixed point lands strictly between the
    two unsaturated roots (equivalently, q0 lies inside the unsaturated
    region); then p is the attracting root. Otherwise (including loads at
    or above maximum throughput) the point is saturated and p is the
    saturated root.
    """
    scheme = scenario.scheme
    family = scheme.family
    holding = holding_times(scheme)
    lam = packet_rate(scenario)
    lam_hat = scenario.n * lam
    q0 = scenario.q0
    backoff = scenario.backoff
    kw = {"n": scenario.n, "exact_finite_n": exact_finite_n} if exact_finite_n else {}

    p_a = saturated_root(
        scenario.n, q0, backoff, exact_finite_n=exact_finite_n
    ).p_a
    try:
        roots = unsaturated_roots(
            family, holding, lam_hat, n=scenario.n, exact_finite_n=exact_finite_n
        )
    except NoRootsError:
        roots = None

    if roots is not None and roots.p_small < p_a < roots.p_large:
        p = roots.p_large
        alpha = alpha_unconditional(family, holding, p, **kw)
        atilde = alpha_tilde(
            family, holding, p, lam, q0, backoff, Regime.UNSATURATED, **kw
        )
        mu = _mu_closed_form(family, holding, p, atilde, q0, backoff)
        if lam < mu:
            return SteadyState(
                p=p,
                alpha=alpha,
                alpha_tilde=atilde,
                mu=mu,
                rho=lam / mu,
                omega=lam / (p * alpha),
                regime=Regime.UNSATURATED,
            )

    p = p_a
    alpha = alpha_unconditional(family, holding, p, **kw)
    atilde = alpha_tilde(
        family, holding, p, lam, q0, backoff, Regime.SATURATED, **kw
    )
    mu = p * alpha * q0 / f_of_p(p, backoff)
    return SteadyState(
        p=p,
        alpha=alpha,
        alpha_tilde=atilde,
        mu=mu,
        rho=1.0,
        omega=mu / (p * alpha),
        regime=Regime.SATURATED,
    )


def _closed_form_pi(family, p, atilde, q0, cutoff):
    """Stationary distribution of the embedded chain, closed forms."""
    if family is Family.ALOHA:
        pi_t = p / (1.0 + p * (1.0 - atilde * q0))
        pis = [pi_t]
        if cutoff == 0:
            pis.append((1.0 - atilde * q0 * p) / p * pi_t)
        else:
            pis.append((1.0 - atilde * q0) * pi_t)
            for k in range(1, cutoff):
                pis.append((1.0 - p) ** k * pi_t)
            pis.append((1.0 - p) ** cutoff / p * pi_t)
        return np.array(pis)
    pi_t = p / 2.0
    pis = [pi_t]
    for k in range(cutoff):
        pis.append((1.0 - p) ** k * pi_t)
    pis.append((1.0 - p) ** cutoff / p * pi_t)
    for k in range(cutoff):
        pis.append((1.0 - p) ** (k + 1) * pi_t)
    pis.append((1.0 - p) ** (cutoff + 1) / p * pi_t)
    return np.array(pis)


def build_renewal_model(scenario, steady):
    """Embedded chain, holding distributions, and request descriptors.

    Aloha states: T, B0..BK (BK absorbs further failures). CSMA states:
    T, R0..RK, F0..FK. The numerically computed stationary distribution is
    checked against the closed forms to 1e-10 before returning.
    """
    scheme = scenario.scheme
    family = scheme.family
    holding = holding_times(scheme)
    backoff = scenario.backoff
    cutoff = backoff.cutoff
    p = steady.p
    aq = steady.alpha_tilde * scenario.q0

    if family is Family.ALOHA:
        states = ("T",) + tuple(f"B{k}" for k in range(cutoff + 1))
        m = len(states)
        trans = np.zeros((m, m))
        b = lambda k: 1 + min(k, cutoff)  # index of state B_k
        trans[0, 0] = aq * p
        trans[0, b(1)] += aq * (1.0 - p)
        trans[0, b(0)] += 1.0 - aq
        for k in range(cutoff + 1):
            trans[b(k), 0] = p
            trans[b(k), b(k + 1)] += 1.0 - p
        hold = [HoldingDist("det", holding.tau_t)]
        hold += [HoldingDist("geo", aq * backoff.q(k)) for k in range(cutoff + 1)]
        q_u = (scenario.q0,) + tuple(
            scenario.q0 * backoff.q(k) for k in range(cutoff + 1)
        )
    else:
        states = (
            ("T",)
            + tuple(f"R{k}" for k in range(cutoff + 1))
            + tuple(f"F{k}" for k in range(cutoff + 1))
        )
        m = len(states)
        trans = np.zeros((m, m))
        r = lambda k: 1 + min(k, cutoff)
        f = lambda k: 2 + cutoff + min(k, cutoff)
        trans[0, r(0)] = 1.0
        for k in range(cutoff + 1):
            trans[r(k), 0] = p
            trans[r(k), f(k)] = 1.0 - p
            trans[f(k), r(k + 1)] += 1.0
        hold = [HoldingDist("det", holding.tau_t)]
        hold += [HoldingDist("geo", aq * backoff.q(k)) for k in range(cutoff + 1)]
        hold += [HoldingDist("det", holding.tau_f)] * (cutoff + 1)
        q_u = (
            (0.0,)
            + tuple(scenario.q0 * backoff.q(k) for k in range(cutoff + 1))
            + (0.0,) * (cutoff + 1)
        )

    row_sums = trans.sum(axis=1)
    if not np.allclose(row_sums, 1.0, rtol=0.0, atol=1e-12):
        raise ArithmeticError("transition rows do not sum to 1")

    model = MarkovRenewalModel(
        states=states,
        transition=trans,
        holding=tuple(hold),
        request_intent=(),
        request_prob=q_u,
    )
    pi = model.stationary()
    pi_ref = _closed_form_pi(family, p, steady.alpha_tilde, scenario.q0, cutoff)
    if not np.allclose(pi, pi_ref, rtol=0.0, atol=_PI_TOL):
        raise ArithmeticError(
            "stationary distribution disagrees with its closed form: "
            f"{pi} vs {pi_ref}"
        )

    lim = pi * np.array([h.mean() for h in model.holding])
    lim = lim / lim.sum()
    if family is Family.ALOHA:
        phi = (lim[0] / holding.tau_t,) + tuple(lim[1:])
    else:
        phi = (
            (0.0,)
            + tuple(lim[1 : cutoff + 2])
            + (0.0,) * (cutoff + 1)
        )
    return replace(model, request_intent=tuple(float(v) for v in phi))


def service_moments_generic(model, tau_t):
    """Service-time moments by differentiating the PGF recursion.

    The service time D starts at State T (the previous packet's
    transmission just ended): G_D(z) = sum_u P_{T,u} G_{D_u}(z) with
    G_{D_T}(z) = z^tau_t and G_{D_u}(z) = G_{Y_u}(z) sum_v P_{u,v} G_{D_v}(z)
    for u != T. Both moment systems are dense solves over the non-T states.
    """
    trans = model.transition
    m = len(model.states)
    others = list(range(1, m))
    if any(
        h.kind == "geo" and h.value <= 0.0 for h in model.holding
    ):
        raise DivergentServiceError("a geometric holding has rate <= 0")

    p_other = trans[np.ix_(others, others)]
    p_to_t = trans[others, 0]
    sys = np.eye(len(others)) - p_other

    # Absorption check doubles as the PGF normalization G_D(1) = 1.
    try:
        hit = np.linalg.solve(sys, p_to_t)
    except np.linalg.LinAlgError as exc:
        raise DivergentServiceError("moment system is singular") from exc
    if not np.allclose(hit, 1.0, rtol=0.0, atol=1e-12):
        raise DivergentServiceError("chain does not surely return to T")

    tau = np.array([model.holding[u].mean() for u in others])
    y2 = np.array([model.holding[u].second_factorial() for u in others])

    a = np.linalg.solve(sys, tau + p_to_t * tau_t)
    a_full = np.concatenate(([tau_t], a))
    d1 = float(trans[0] @ a_full)

    h1 = p_other @ a + p_to_t * tau_t  # sum_v P_{u,v} a_v for u != T
    b_t = tau_t * (tau_t - 1.0)
    b = np.linalg.solve(sys, y2 + 2.0 * tau * h1 + p_to_t * b_t)
    b_full = np.concatenate(([b_t], b))
    g2 = float(trans[0] @ b_full)
    return ServiceMoments(d1=d1, d2=g2 + d1)


def service_moments_closed_form(scenario, steady):
    """Service-time moments from the explicit first/second-derivative
    expressions of the service-time PGF, by direct summation over the
    backoff stages."""
    scheme = scenario.scheme
    family = scheme.family
    holding = holding_times(scheme)
    backoff = scenario.backoff
    cutoff = backoff.cutoff
    p = steady.p
    aq = steady.alpha_tilde * scenario.q0
    if aq <= 0.0:
        raise ValidationError("alpha_tilde * q0 must be positive")
    tau_t, tau_f = holding.tau_t, holding.tau_f
    qk = backoff.q

    tail = (1.0 - p) ** cutoff / (p * aq * qk(cutoff))
    head = sum((1.0 - p) ** i / (aq * qk(i)) for i in range(cutoff))

    if family is Family.ALOHA:
        d1 = tau_t - 1.0 + tail + head
        g2 = (tau_t - 1.0) * (tau_t - 2.0)
        g2 += 2.0 * tail * (1.0 / (p * aq * qk(cutoff)) + tau_t - 2.0)
        for i in range(cutoff):
            gi = 1.0 / (aq * qk(i))
            g2 += 2.0 * (1.0 - p) ** i * gi * (gi + tau_t - 2.0)
            g2 += (
                2.0
                * gi
                * sum((1.0 - p) ** j / (aq * qk(j)) for j in range(i + 1, cutoff))
            )
            g2 += 2.0 * (1.0 - p) ** cutoff / (p * aq * aq * qk(cutoff) * qk(i))
    else:
        ratio = (1.0 - p) / p
        cycle = tau_t + tau_f * ratio
        d1 = cycle + tail + head
        g2 = tau_t * (tau_t - 1.0) + tau_f * (tau_f - 1.0) * ratio
        gk = 1.0 / (p * aq * qk(cutoff))
        g2 += (
            2.0
            * (1.0 - p) ** cutoff
            * (
                ratio * tau_f * cycle
                + gk * (tau_t + 2.0 * ratio * tau_f - 1.0)
                + gk * gk
            )
        )
        for i in range(cutoff):
            gi = 1.0 / (aq * qk(i))
            inner = sum(
                (1.0 - p) ** j / (aq * qk(j)) for j in range(i + 1, cutoff)
            )
            inner += cycle * (1.0 - p) ** (i + 1) + (1.0 - p) ** cutoff / (
                p * aq * qk(cutoff)
            )
            g2 += 2.0 * (tau_f + gi) * inner
            g2 += (
                2.0
                * p
                * (1.0 - p) ** i
                * gi
                * (cycle + 1.0 / (p * aq * qk(i)) - 1.0 / p)
            )
    return ServiceMoments(d1=d1, d2=g2 + d1)


def mean_queueing_delay(scenario, *, exact_finite_n=False, engine="closed_form"):
    """Mean queueing delay of each node's queue.

    Finite only in the unsaturated regime; saturation returns +inf
    sentinels with finite=False. engine selects the moment route:
    "closed_form" (default) or "generic".
    """
    steady = solve_steady_state(scenario, exact_finite_n=exact_finite_n)
    if steady.regime is Regime.SATURATED:
        return DelayResult(t_slots=math.inf, t_ms=math.inf, finite=False)
    if engine == "closed_form":
        mom = service_moments_closed_form(scenario, steady)
    elif engine == "generic":
        model = build_renewal_model(scenario, steady)
        mom = service_moments_generic(model, holding_times(scenario.scheme).tau_t)
    else:
        raise ValidationError(f"unknown moment engine {engine!r}")
    lam = packet_rate(scenario)
    occupancy = lam * mom.d1
    if occupancy >= 1.0:
        return DelayResult(t_slots=math.inf, t_ms=math.inf, finite=False)
    t_slots = (lam * mom.d2 - lam * mom.d1) / (2.0 * (1.0 - occupancy)) + mom.d1
    return DelayResult(
        t_slots=t_slots, t_ms=scenario.scheme.slot_ms * t_slots, finite=True
    )


def optimal_q0(
    scenario,
    *,
    epsilon=1e-6,
    exact_finite_n=False,
    monotonicity_grid=16,
):
    """Delay-minimizing initial transmission probability.

    The optimum sits at the upper edge of the unsaturated region; we step
    epsilon inside (clamped to 1). scenario.q0 is ignored. Monotone decay
    of the delay in q0 is verified on a sampled grid and a warning is
    issued if it fails, rather than silently optimizing.

    Returns a Q0Optimum; iterating it yields (q0_star, delay).
    """
    scheme = scenario.scheme
    holding = holding_times(scheme)
    lam_hat = scenario.n * packet_rate(scenario)
    region = unsaturated_region(
        scheme.family,
        holding,
        scenario.n,
        lam_hat,
        scenario.backoff,
        exact_finite_n=exact_finite_n,
    )
    if region.empty:
        raise SaturatedError(lam_hat, max_throughput(scheme.family, holding))

    if region.upper_clamped:
        q0_star = 1.0
    else:
        q0_star = region.q0_upper - epsilon
        if q0_star <= region.q0_lower:
            q0_star = 0.5 * (region.q0_lower + region.q0_upper)

    def delay_at(q0):
        return mean_queueing_delay(
            replace(scenario, q0=q0), exact_finite_n=exact_finite_n
        )

    best = delay_at(q0_star)
    sens_q0 = region.q0_upper - 10.0 * epsilon
    sensitivity = (
        delay_at(sens_q0) if region.q0_lower < sens_q0 <= 1.0 else None
    )

    if monotonicity_grid and monotonicity_grid > 1:
        width = min(region.q0_upper, 1.0) - region.q0_lower
        lo = region.q0_lower + 0.02 * width
        hi = min(region.q0_upper, 1.0) - 0.02 * width
        grid = [
            lo + (hi - lo) * i / (monotonicity_grid - 1)
            for i in range(monotonicity_grid)
        ]
        vals = [delay_at(q).t_slots for q in grid]
        slack = 1e-9 * max(abs(v) for v in vals if math.isfinite(v))
        for prev, cur in zip(vals, vals[1:]):
            if math.isfinite(prev) and math.isfinite(cur) and cur > prev + slack:
                warnings.warn(
                    "mean delay is not monotone decreasing in q0 on the "
                    "sampled grid; the region-edge optimum may be local",
                    ModelWarning,
                    stacklevel=2,
                )
                break
    return Q0Optimum(q0_star=q0_star, delay=best, sensitivity=sensitivity)
