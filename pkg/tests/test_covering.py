import numpy as np
import pytest
from hypothesis import given, strategies as st

from otelbaev.covering import (Covering, CoveringError, bd_mass_bound, build_covering,
                               build_d_covering, verify_covering)
from otelbaev.coefficient import DomainError
from otelbaev.kclass import estimate_ab


def test_unit_kappa_centers():
    cov = build_covering(lambda t: np.ones_like(t), 0.0, max_cells=3)
    assert cov.centers == pytest.approx((1.0, 3.0, 5.0), abs=1e-12)
    assert cov.reach == pytest.approx(6.0, abs=1e-12)
    assert verify_covering(cov, kappa=lambda t: np.ones_like(t)).passed


def test_linear_kappa_centers():
    cov = build_covering(lambda t: t / 2 + 1, 0.0, max_cells=2)
    # t - (t/2 + 1) = 0 -> t = 2, ends at 4; t/2 - 1 = 4 -> t = 10
    assert cov.centers == pytest.approx((2.0, 10.0), rel=1e-12)
    assert cov.plus == pytest.approx((4.0, 16.0), rel=1e-12)


def test_constant_d_cells(const1):
    cov = build_d_covering(const1, 0.0, max_cells=5)
    for n, (c, lo, hi) in enumerate(cov.cells, start=1):
        assert lo == pytest.approx(2 * (n - 1), abs=1e-10)
        assert hi == pytest.approx(2 * n, abs=1e-10)
        assert c == pytest.approx(2 * n - 1, abs=1e-10)


def test_example2_cells_carry_mass_two(ex2):
    cov = build_d_covering(ex2, 1.0, max_cells=30)
    rep = verify_covering(cov, ex2)
    assert rep.passed, rep.violations
    assert np.allclose(rep.cell_masses, 2.0, atol=1e-6)


def test_leftward_covering(ex2):
    cov = build_d_covering(ex2, 0.0, "-", max_cells=20)
    assert cov.plus[0] == 0.0
    assert all(a == b for a, b in zip(cov.minus, cov.plus[1:]))
    assert cov.reach < 0
    assert verify_covering(cov, ex2).passed


@pytest.mark.parametrize("direction,reach", [("+", 7.5), ("-", -7.5)])
def test_reach_is_covered(sq, direction, reach):
    cov = build_d_covering(sq, 0.0, direction, reach=reach)
    assert verify_covering(cov, sq, reach=reach).passed
    assert (cov.reach - reach) * (1 if direction == "+" else -1) >= 0


def test_chaining_violation_reported():
    cov = Covering("+", 0.0, (1.0, 3.0, 5.2), (0.0, 2.0, 4.1), (2.0, 4.0, 6.3))
    rep = verify_covering(cov)
    kinds = [(i, k) for i, k, _ in rep.violations]
    assert (1, "chaining") in kinds
    assert not rep.passed


def test_empty_covering_fails():
    assert not verify_covering(Covering("+", 0.0, (), (), ())).passed


def test_covering_error_when_kappa_outgrows_t():
    # t - 2t never reaches a positive endpoint
    with pytest.raises(CoveringError):
        build_covering(lambda t: 2 * np.abs(t) + 1, 1.0, max_cells=1, horizon=1e6)


def test_bad_arguments(const1):
    with pytest.raises(ValueError):
        build_covering(lambda t: np.ones_like(t), 0.0)
    with pytest.raises(ValueError):
        build_covering(lambda t: np.ones_like(t), 0.0, "up", max_cells=1)
    with pytest.raises(DomainError):
        build_covering(lambda t: np.zeros_like(t), 0.0, max_cells=1)
    with pytest.raises(DomainError):
        bd_mass_bound(const1, 0.0, 1.0, [0.0])


@given(start=st.floats(-20, 20), width=st.floats(0.1, 3))
def test_constant_kappa_chains_from_any_start(start, width):
    cov = build_covering(lambda t: np.full_like(t, width), start, max_cells=4)
    rep = verify_covering(cov, kappa=lambda t: np.full_like(t, width))
    assert rep.passed, rep.violations
    assert cov.reach == pytest.approx(start + 8 * width, rel=1e-10, abs=1e-10)


def test_bd_mass_bound_constant(const1):
    xs = np.linspace(-5, 5, 11)
    assert bd_mass_bound(const1, 1.0, 1.0, xs).max_mass == pytest.approx(2.0)
    m = bd_mass_bound(const1, 3.0, 1.0, xs)
    assert m.max_mass == pytest.approx(6.0) and m.bound == 8.0 and m.holds


def test_bd_mass_bound_example2(ex2):
    xs = np.concatenate([np.linspace(-60, -10, 26), np.linspace(10, 60, 26)])
    a = estimate_ab(ex2, 10.0, 2.0, xs)
    m = bd_mass_bound(ex2, 2.0, a, xs)
    assert m.holds
    assert m.max_mass >= 4.0 * (1 - 1e-3)
