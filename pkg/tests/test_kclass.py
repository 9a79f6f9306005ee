import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from otelbaev.averages import d_of_x
from otelbaev.coefficient import CumulativeIntegral, DomainError, SmoothPart
from otelbaev.kclass import (INV_E, ConfigurationError, b_for_gamma, estimate_ab, fit_ab,
                             gamma_of_ab, kappa1, kappa2, membership_report)


def zero(t):
    return np.zeros(np.shape(t))


def test_gamma_examples():
    assert gamma_of_ab(1, 1) == pytest.approx(INV_E, rel=1e-15)
    assert gamma_of_ab(2, 4 * math.log(2 * math.e)) == pytest.approx(INV_E, rel=1e-14)
    assert gamma_of_ab(4, 3) == pytest.approx(4 * math.exp(-3 / 16), rel=1e-15)
    for a, b in ((0.5, 1), (1, 0), (1, -2)):
        with pytest.raises(DomainError):
            gamma_of_ab(a, b)


@given(a=st.floats(1, 1e3), b=st.floats(1e-9, 1, exclude_max=True))
def test_small_b_keeps_gamma_above_inverse_e(a, b):
    assert gamma_of_ab(a, b) > INV_E


@given(a=st.floats(1, 50), b=st.floats(1e-6, 1e4))
def test_gamma_at_most_inverse_e_forces_b_at_least_one(a, b):
    if gamma_of_ab(a, b) <= INV_E:
        assert b >= 1


@given(a=st.floats(1, 50))
def test_b_for_gamma_hits_target(a):
    assert gamma_of_ab(a, b_for_gamma(a)) == pytest.approx(INV_E, rel=1e-12)


def test_kappa1_constant_is_zero():
    q1 = SmoothPart(lambda t: np.full(np.shape(t), 2.0), zero)
    assert kappa1(q1, 3.0) == 0.0


def test_kappa1_quadratic_closed_form():
    q1 = SmoothPart(lambda t: 3 * t * t + 1, lambda t: 6 * t)
    assert kappa1(q1, 1.0) == pytest.approx(0.375, rel=1e-12)


def test_kappa1_example1_decreasing(ex1):
    q1 = ex1.decomposition.q1
    vals = [kappa1(q1, x) for x in (10.0, 30.0, 100.0)]
    assert vals[0] > vals[1] > vals[2] > 0


def test_kappa1_rejects_nonpositive_q1():
    q1 = SmoothPart(lambda t: t, lambda t: np.ones(np.shape(t)))
    with pytest.raises(DomainError):
        kappa1(q1, -1.0)
    with pytest.raises(DomainError):
        kappa2(q1, CumulativeIntegral(zero), 0.0)


@given(shift=st.floats(-50, 50), x=st.floats(-5, 5))
def test_kappa1_translation_invariant(shift, x):
    base = SmoothPart(lambda t: 1 + t * t, lambda t: 2 * t)
    moved = SmoothPart(lambda t: 1 + (t - shift) ** 2, lambda t: 2 * (t - shift))
    assert kappa1(moved, x + shift) == pytest.approx(kappa1(base, x), rel=1e-9, abs=1e-12)


def test_kappa2_examples():
    one = SmoothPart(lambda t: np.ones(np.shape(t)), zero)
    assert kappa2(one, CumulativeIntegral(zero), 0.3) == 0.0
    assert kappa2(one, CumulativeIntegral(np.sin), math.pi / 2) == pytest.approx(2.0, rel=1e-10)


def test_kappa2_example2_decreasing(ex2):
    dec = ex2.decomposition
    vals = [kappa2(dec.q1, dec.q2_cumulative, x) for x in (10.0, 30.0, 100.0)]
    assert vals[0] > vals[1] > vals[2]


def test_estimate_ab(const1, sq):
    xs = [-20.0, -10.0, 10.0, 20.0]
    assert estimate_ab(const1, 10.0, 3.0, xs) == 1.0
    a = estimate_ab(sq, 10.0, 1.0, xs)
    assert 1.0 <= a <= 1.1
    with pytest.raises(DomainError):
        estimate_ab(sq, 10.0, 1.0, [5.0])
    with pytest.raises(DomainError):
        estimate_ab(sq, 10.0, 0.0, xs)


def test_fit_ab_example2_reaches_target(ex2):
    xs = [-50.0, -20.0, -10.0, 10.0, 20.0, 50.0]
    a, b, g = fit_ab(ex2, 10.0, xs)
    assert math.isfinite(a) and b >= 1
    assert g <= INV_E * (1 + 1e-12)


def test_membership_example2(ex2):
    rep = membership_report(ex2, x0=10.0)
    assert rep.verdict == "consistent", rep.checks
    for x, e in rep.epsilon_trace:
        assert abs(e) <= 5 / abs(x)
    lo, hi = rep.q_star_over_q1
    assert 0 < lo <= hi < math.inf
    assert len(list(rep.rows())) == 6


def test_membership_example1(ex1):
    rep = membership_report(ex1, x0=10.0)
    assert rep.verdict == "consistent", rep.checks
    eps = {abs(x): abs(e) for x, e in rep.epsilon_trace}
    # |eps| decays like |x|^-0.4
    assert eps[50.0] < eps[10.0]


def test_membership_constant(const1):
    rep = membership_report(const1, x0=10.0)
    assert rep.verdict == "consistent"
    assert all(k == 0 for _, k in rep.kappa1_trace + rep.kappa2_trace)
    assert all(abs(e) <= 1e-12 for _, e in rep.epsilon_trace)


def test_membership_needs_decomposition(sq):
    with pytest.raises(ConfigurationError):
        membership_report(sq)


def test_epsilon_identity_matches_d(ex2):
    rep = membership_report(ex2, x0=10.0, probe_grid=[10.0, 20.0])
    for x, e in rep.epsilon_trace:
        assert e == pytest.approx((3 * x * x + 1) * d_of_x(ex2, x).d - 1, rel=1e-9, abs=1e-14)
