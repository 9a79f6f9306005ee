import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracle_values import D_EXAMPLE1_0, D_EXAMPLE1_10, D_EXAMPLE2_1, D_EXAMPLE2_10, D_SQUARE_0, D_SQUARE_10
from otelbaev.averages import (InsufficientMassError, d0_estimate, d_of_x, d_values, q0_estimate,
                               q_star, solvability_report, steklov_average)
from otelbaev.coefficient import CoefficientFunction, DomainError, from_label

LABELS = ["const:1", "square", "example2", "example1:0.3:0.4"]


@pytest.mark.parametrize("x", [-7.0, 0.0, 3.3])
def test_constant_gives_unit_average(const1, x):
    dv = d_of_x(const1, x)
    assert dv.d == pytest.approx(1.0, abs=1e-12)
    assert dv.q_star == pytest.approx(1.0, abs=1e-12)
    assert dv.bracket[0] <= dv.d <= dv.bracket[1]


@pytest.mark.parametrize("q_label,x,expected", [
    ("square", 0.0, D_SQUARE_0), ("square", 10.0, D_SQUARE_10),
    ("example2", 10.0, D_EXAMPLE2_10), ("example2", 1.0, D_EXAMPLE2_1),
    ("example1:0.3:0.4", 0.0, D_EXAMPLE1_0), ("example1:0.3:0.4", 10.0, D_EXAMPLE1_10),
])
def test_d_matches_high_precision_oracle(q_label, x, expected):
    assert d_of_x(from_label(q_label), x).d == pytest.approx(expected, rel=1e-10)


def test_example2_d_tracks_smooth_part(ex2):
    assert abs(d_of_x(ex2, 10.0).d * 301 - 1) <= 0.5


def test_infimum_on_a_plateau():
    # no mass on [-1, 1], so the mass in the window stays flat for d <= 1
    plateau = CoefficientFunction(lambda t: np.where(np.abs(t) > 1, 1.0, 0.0))
    assert d_of_x(plateau, 0.0).d == pytest.approx(2.0, rel=1e-11)
    step = CoefficientFunction(lambda t: np.where(t > 0, 2.0, 0.0))
    # mass 2 first reached at d = 1 for x = 0; the predicate bisection must not overshoot
    assert d_of_x(step, 0.0).d == pytest.approx(1.0, rel=1e-11)


def test_insufficient_mass():
    q = CoefficientFunction(lambda t: np.exp(-t * t))
    with pytest.raises(InsufficientMassError) as info:
        d_of_x(q, 0.0)
    assert info.value.mass == pytest.approx(math.sqrt(math.pi), rel=1e-6)


def test_vectorized_matches_scalar(ex2):
    xs = np.array([[-3.0, 0.2], [5.0, 11.0]])
    out = d_values(ex2, xs)
    assert out.shape == xs.shape
    for x, d in zip(xs.ravel(), out.ravel()):
        assert d == pytest.approx(d_of_x(ex2, x).d, rel=1e-14)


def test_q_star_is_reciprocal(ex2):
    xs = np.linspace(-4, 4, 9)
    assert np.allclose(q_star(ex2, xs) * d_values(ex2, xs), 1.0, rtol=1e-15)


@pytest.mark.parametrize("label", LABELS)
@given(x=st.floats(-60, 60))
def test_defining_identity(label, x):
    q = from_label(label)
    dv = d_of_x(q, x)
    mass = q.cumulative.integral(x - dv.d, x + dv.d)
    assert abs(mass - 2) <= 1e-9 * (1 + abs(x) ** 3 * dv.d)
    # infimum: slightly less width carries less than 2
    assert q.cumulative.integral(x - dv.d * (1 - 1e-8), x + dv.d * (1 - 1e-8)) < 2


@pytest.mark.parametrize("label", LABELS)
@given(x=st.floats(-40, 40), frac=st.floats(-1, 1))
def test_lipschitz(label, x, frac):
    q = from_label(label)
    d = d_of_x(q, x).d
    h = frac * d
    tol = 1e-11 * max(1.0, d)
    assert abs(d_of_x(q, x + h).d - d) <= abs(h) + 2 * tol


@pytest.mark.parametrize("label", LABELS)
@pytest.mark.parametrize("eps", [0.25, 0.5])
@given(x=st.floats(-40, 40), frac=st.floats(-1, 1))
def test_local_sandwich(label, eps, x, frac):
    q = from_label(label)
    d = d_of_x(q, x).d
    dt = d_of_x(q, x + frac * eps * d).d
    tol = 1e-11 * max(1.0, d)
    assert (1 - eps) * d - 2 * tol <= dt <= (1 + eps) * d + 2 * tol


def test_escape_to_infinity(ex2):
    xs = np.array([10.0, 100.0, 1000.0])
    assert np.all(np.diff(xs - d_values(ex2, xs)) > 0)


def test_steklov_average(const1, sq, ex2):
    assert steklov_average(const1, 2.0, 3.0) == pytest.approx(1.0)
    assert steklov_average(sq, 0.0, 1.0) == pytest.approx(1 / 3, rel=1e-14)
    d = d_of_x(ex2, 5.0).d
    assert steklov_average(ex2, 5.0, d) == pytest.approx(1 / d, rel=1e-11)
    with pytest.raises(DomainError):
        steklov_average(ex2, 0.0, 0.0)


def test_q0(const1, sq, ex1):
    assert q0_estimate(const1, 1.5, 10) == pytest.approx(3.0)
    assert q0_estimate(sq, 1.0, 10) == pytest.approx(2 / 3, rel=1e-13)
    assert q0_estimate(ex1, 1.0, 100) < q0_estimate(ex1, 1.0, 10)
    with pytest.raises(DomainError):
        q0_estimate(const1, 0.0, 10)


def test_d0(const1, sq, ex1):
    assert d0_estimate(const1, 5) == pytest.approx(1.0)
    assert d0_estimate(sq, 10) == pytest.approx(D_SQUARE_0, rel=1e-10)
    assert d0_estimate(ex1, 100) > d0_estimate(ex1, 10)


def test_solvability_verdicts(const1, ex1):
    assert solvability_report(const1, [1.0], [10, 100]).verdict == "correctly_solvable"
    rep = solvability_report(ex1, [1.0], [10, 100])
    assert rep.verdict == "case1_d0_infinite"
    assert rep.mass_diverges == (True, True)
    gauss = CoefficientFunction(lambda t: np.exp(-t * t))
    assert solvability_report(gauss, [1.0], [10]).verdict == "case2_integral_finite"


def test_solvability_needs_inputs(const1):
    with pytest.raises(ValueError):
        solvability_report(const1, [], [10])
