"""Both real branches of Lambert W: identity, oracle, and domain tests."""

import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from radelay.lambertw import Branch, LambertWDomainError, lambert_w

BRANCH_POINT = -math.exp(-1.0)


def identity_residual(branch, x):
    w = lambert_w(branch, x)
    return abs(w * math.exp(w) - x) / max(1.0, abs(x))


def test_identity_principal_branch_bulk():
    rng = np.random.default_rng(1)
    xs = np.concatenate(
        [
            rng.uniform(BRANCH_POINT, 0.0, 4000),
            rng.uniform(0.0, 10.0, 3000),
            10.0 ** rng.uniform(1.0, 18.0, 3000),
        ]
    )
    worst = max(identity_residual(Branch.PRINCIPAL, float(x)) for x in xs)
    assert worst <= 1e-12


def test_identity_minus_one_branch_bulk():
    rng = np.random.default_rng(2)
    xs = np.concatenate(
        [
            rng.uniform(BRANCH_POINT, -1e-6, 5000),
            -(10.0 ** rng.uniform(-300.0, -6.0, 5000)),
        ]
    )
    worst = max(identity_residual(Branch.MINUS_ONE, float(x)) for x in xs)
    assert worst <= 1e-12


def test_branch_point_values_exact():
    assert lambert_w(Branch.PRINCIPAL, BRANCH_POINT) == -1.0
    assert lambert_w(Branch.MINUS_ONE, BRANCH_POINT) == -1.0


def test_zero_maps_to_zero_exactly():
    assert lambert_w(Branch.PRINCIPAL, 0.0) == 0.0


def test_against_scipy_principal():
    rng = np.random.default_rng(3)
    xs = np.concatenate(
        [rng.uniform(BRANCH_POINT, 0.0, 500), 10.0 ** rng.uniform(-6, 12, 500)]
    )
    for x in xs:
        ours = lambert_w(Branch.PRINCIPAL, float(x))
        ref = float(scipy.special.lambertw(x, 0).real)
        assert ours == pytest.approx(ref, rel=1e-12, abs=1e-14)


def test_against_scipy_minus_one():
    rng = np.random.default_rng(4)
    xs = rng.uniform(BRANCH_POINT, -1e-12, 1000)
    for x in xs:
        ours = lambert_w(Branch.MINUS_ONE, float(x))
        ref = float(scipy.special.lambertw(x, -1).real)
        assert ours == pytest.approx(ref, rel=1e-12)


def test_domain_errors():
    with pytest.raises(LambertWDomainError):
        lambert_w(Branch.PRINCIPAL, BRANCH_POINT - 1e-9)
    with pytest.raises(LambertWDomainError):
        lambert_w(Branch.MINUS_ONE, BRANCH_POINT - 1e-9)
    with pytest.raises(LambertWDomainError):
        lambert_w(Branch.MINUS_ONE, 0.0)
    with pytest.raises(LambertWDomainError):
        lambert_w(Branch.MINUS_ONE, 1.0)
    with pytest.raises(LambertWDomainError):
        lambert_w(Branch.PRINCIPAL, math.nan)


def test_branch_ranges():
    # principal branch stays >= -1, lower branch <= -1
    rng = np.random.default_rng(5)
    for x in rng.uniform(BRANCH_POINT, -1e-9, 300):
        assert lambert_w(Branch.PRINCIPAL, float(x)) >= -1.0
        assert lambert_w(Branch.MINUS_ONE, float(x)) <= -1.0


@given(st.floats(min_value=-1.0, max_value=700.0, allow_nan=False))
@settings(max_examples=300, deadline=None)
def test_round_trip_principal(w):
    x = w * math.exp(w)
    back = lambert_w(Branch.PRINCIPAL, x)
    assert back == pytest.approx(w, rel=1e-8, abs=1e-8)


@given(st.floats(min_value=-700.0, max_value=-1.0, allow_nan=False))
@settings(max_examples=300, deadline=None)
def test_round_trip_minus_one(w):
    x = w * math.exp(w)
    if x >= 0.0:  # underflow to -0.0 leaves the branch domain
        return
    back = lambert_w(Branch.MINUS_ONE, x)
    assert back == pytest.approx(w, rel=1e-8, abs=1e-8)


@given(
    st.floats(min_value=BRANCH_POINT, max_value=1e12, allow_nan=False).filter(
        lambda x: x >= BRANCH_POINT
    )
)
@settings(max_examples=300, deadline=None)
def test_identity_property_principal(x):
    assert identity_residual(Branch.PRINCIPAL, x) <= 1e-12


def test_principal_monotone_increasing():
    xs = np.linspace(BRANCH_POINT, 100.0, 2000)
    ws = [lambert_w(Branch.PRINCIPAL, float(x)) for x in xs]
    assert all(b >= a for a, b in zip(ws, ws[1:]))
