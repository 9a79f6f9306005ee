import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from oracle_values import F1_0, F1_2, F_CUBIC_LINEAR_0, F_CUBIC_LINEAR_1
from otelbaev.coefficient import DomainError, UnimodalPair, pair_cubic, pair_cubic_linear, pair_exponential
from otelbaev.equivalence import (F1_envelope, F1_of_x, F1_parts, F_of_x, expectations, h_of_x,
                                  make_grid, uv_to_q, verify_example1, verify_example2, verify_thm33,
                                  verify_thm35, weak_equiv_constant)

positive_arrays = st.lists(st.floats(1e-3, 1e3), min_size=3, max_size=12)


def test_weak_equiv_examples():
    xs = np.linspace(-3, 3, 7)
    psi = lambda t: 1 + t * t
    assert weak_equiv_constant(psi, psi, xs).c_estimate == 1.0
    rep = weak_equiv_constant(lambda t: 2 * psi(t), psi, xs)
    assert rep.c_estimate == pytest.approx(2.0)
    assert rep.min_ratio == rep.max_ratio == pytest.approx(2.0)


def test_weak_equiv_argmax():
    xs = np.array([0.0, 1.0, 2.0])
    rep = weak_equiv_constant(np.array([1.0, 3.0, 0.5]), np.ones(3), xs)
    assert rep.c_estimate == 3.0 and rep.argmax_hi == 1.0 and rep.argmax_lo == 2.0


def test_weak_equiv_rejects_nonpositive():
    with pytest.raises(DomainError, match="x=1.0"):
        weak_equiv_constant(np.array([1.0, 0.0]), np.ones(2), [0.0, 1.0])
    with pytest.raises(ValueError):
        weak_equiv_constant(np.ones(3), np.ones(2), [0.0, 1.0])


@given(a=positive_arrays, seed=st.integers(0, 2 ** 16))
def test_weak_equiv_symmetric(a, seed):
    a = np.array(a)
    b = np.random.default_rng(seed).uniform(0.1, 10, a.size)
    xs = np.arange(a.size, dtype=float)
    c1 = weak_equiv_constant(a, b, xs).c_estimate
    assert c1 >= 1
    assert c1 == pytest.approx(weak_equiv_constant(b, a, xs).c_estimate, rel=1e-14)


@given(a=positive_arrays, lam=st.floats(1e-3, 1e3))
def test_weak_equiv_scale_invariant(a, lam):
    a = np.array(a)
    b = a[::-1].copy()
    xs = np.arange(a.size, dtype=float)
    assert weak_equiv_constant(lam * a, lam * b, xs).c_estimate == pytest.approx(
        weak_equiv_constant(a, b, xs).c_estimate, rel=1e-12)


def test_make_grid():
    g = make_grid(20.0, 11)
    assert np.allclose(g, np.linspace(-20, 20, 11))
    lg = make_grid(100.0, 201, "log")
    assert lg.size == 201 and lg[0] == -100.0 and lg[-1] == 100.0
    assert np.all(np.diff(lg) > 0) and np.allclose(lg, -lg[::-1])
    assert make_grid(100.0, 20, "log").size == 20
    with pytest.raises(DomainError):
        make_grid(0.0, 11)
    with pytest.raises(DomainError):
        make_grid(5.0, 2)
    with pytest.raises(ValueError):
        make_grid(50.0, 11, "cubic")


def test_kernel_equivalence_constant(const1):
    r = verify_thm33(const1, np.linspace(-5, 5, 11))
    assert r.constants["J"] == pytest.approx(1.0, abs=1e-8)
    assert r.constants["I"] == pytest.approx(1.0, abs=1e-8)
    assert r.constants["S"] == pytest.approx(2.0, abs=1e-8)
    assert r.passed and not r.violations


def test_kernel_equivalence_example2(ex2):
    r = verify_thm33(ex2, np.linspace(-20, 20, 101), c_max=expectations()["thm33"]["c_max"])
    assert r.passed
    assert all(math.isfinite(c) for c in r.constants.values())


def test_uv_to_q():
    q1, q2 = uv_to_q(pair_exponential())
    t = np.linspace(-5, 5, 11)
    assert np.allclose(q1(t), 1.0) and np.allclose(q2(t), 1.0)
    c1, _ = uv_to_q(pair_cubic())
    assert np.allclose(c1(t), 3 * t * t)
    bad = UnimodalPair.from_logs(lambda s: np.sin(s), lambda s: s, np.cos, lambda s: np.ones_like(s))
    with pytest.raises(DomainError):
        uv_to_q(bad)


@given(x=st.floats(-20, 20))
def test_F_exponential_pair(x):
    assert F_of_x(pair_exponential(), x) == pytest.approx(2.0, rel=1e-10)


@given(x=st.floats(0, 4))
def test_F_cubic_even(x):
    pair = pair_cubic()
    assert F_of_x(pair, x) == pytest.approx(F_of_x(pair, -x), rel=1e-10)


def test_F_cubic_linear_oracle():
    pair = pair_cubic_linear()
    assert F_of_x(pair, 0.0) == pytest.approx(F_CUBIC_LINEAR_0, rel=1e-8)
    assert F_of_x(pair, 1.0) == pytest.approx(F_CUBIC_LINEAR_1, rel=1e-8)


@given(x=st.floats(-2, 2))
def test_F_split_matches_direct_kernel(x):
    pair = pair_cubic_linear()
    lu = lambda s: -s ** 3 - s

    def kernel(t):
        # G(x, t) = u(x) v(t) left of x, v(x) u(t) right of x
        return math.exp(lu(x) - lu(t)) if t <= x else math.exp(lu(t) - lu(x))

    direct = quad(kernel, x - 12, x, epsabs=0, epsrel=1e-12)[0] + \
        quad(kernel, x, x + 12, epsabs=0, epsrel=1e-12)[0]
    assert F_of_x(pair, x) == pytest.approx(direct, rel=1e-8)


def test_unimodal_exponential_pair():
    res = verify_thm35(pair_exponential(), np.linspace(-5, 5, 11))
    assert res.report.c_estimate == pytest.approx(1.0, rel=1e-9)
    for est in res.estimates:
        assert est.F > 0 and est.predicted > 0
        assert est.ratio == pytest.approx(1.0, rel=1e-9)


def test_unimodal_cubic_stable():
    coarse = verify_thm35(pair_cubic(), np.linspace(-4, 4, 41)).report.c_estimate
    fine = verify_thm35(pair_cubic(), np.linspace(-4, 4, 81)).report.c_estimate
    assert 1 <= coarse <= fine and (fine - coarse) / coarse < 0.02


def test_F1_oracles():
    assert F1_of_x(0.0) == pytest.approx(F1_0, rel=1e-9)
    assert F1_of_x(2.0) == pytest.approx(F1_2, rel=1e-9)
    left, right = F1_parts(0.0)
    assert left > 0 and right > 0


@given(x=st.floats(-10, 10))
def test_F1_positive_and_sandwiched(ex2, x):
    f = F1_of_x(x)
    assert f > 0
    assert math.exp(-2) < f / h_of_x(x, ex2) < math.exp(2)


def test_F1_envelope(ex2):
    xs = np.linspace(-10, 10, 41)
    F1 = np.array([F1_of_x(x) for x in xs])
    rep = weak_equiv_constant(F1, F1_envelope(xs), xs)
    assert rep.c_estimate <= expectations()["example2"]["F1_envelope_c"]


def test_verify_example2():
    res = verify_example2(grid=np.linspace(-10, 10, 21))
    assert res.passed, res.checks
    assert len(list(res.rows())) == 21


def test_verify_example1():
    res = verify_example1(0.3, 0.4, grid=make_grid(100.0, 61, "log"))
    assert res.passed, res.checks
    assert res.nu_theory == pytest.approx(0.4)
    assert res.deviation[100.0] < res.deviation[10.0]
    assert all(len(r) == len(res.COLUMNS) for r in res.rows())


def test_example1_precondition():
    with pytest.raises(DomainError):
        verify_example1(0.45, 0.04)
