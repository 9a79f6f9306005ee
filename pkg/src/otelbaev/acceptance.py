"""The acceptance battery: ten numbered criteria with pinned tolerances and
runtime budgets.  Each check returns a CriterionResult; nothing here raises
on a failed criterion."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .averages import d_of_x, d_values, q0_estimate
from .coefficient import catalog_example1, catalog_example2, constant, square
from .covering import build_d_covering, verify_covering
from .equivalence import (F1_envelope, F1_of_x, LOWER_BOUND, expectations, h_of_x,
                          make_grid, verify_thm33, weak_equiv_constant)
from .kclass import INV_E, gamma_of_ab, kappa1, kappa2
from .kernel import (I_of_x, J_of_x, M_of_x, S_of_x, SpaceParams, admissibility_estimate,
                     admissibility_family, bump, green_apply, homogeneous_divergence_check,
                     indicator, qstar_weight, residual_check)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    seconds: float = 0.0
    budget: float = math.inf

    @property
    def within_budget(self) -> bool:
        return self.seconds < self.budget

    @property
    def ok(self) -> bool:
        return self.passed and self.within_budget

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        meas = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return (f"[{status}] {self.number:2d} {self.title} "
                f"({self.seconds:.2f}s / {self.budget:g}s) {meas}")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _timed(number: int, title: str, budget: float, body: Callable[[], tuple]) -> CriterionResult:
    t = time.perf_counter()
    passed, measured, expected = body()
    return CriterionResult(number, title, bool(passed), measured, expected,
                           time.perf_counter() - t, budget)


def criterion_1() -> CriterionResult:
    def body():
        q = constant(1.0)
        xs = [-3.0, 0.0, 7.0]
        one = lambda t: np.ones_like(t)
        err = {"d": 0.0, "J": 0.0, "I": 0.0, "S": 0.0, "M": 0.0}
        for x in xs:
            dv = d_of_x(q, x).d
            err["d"] = max(err["d"], abs(dv - 1), abs(1 / dv - 1))
            err["J"] = max(err["J"], abs(J_of_x(q, x) - 1))
            err["I"] = max(err["I"], abs(I_of_x(q, x) - 1))
            err["S"] = max(err["S"], abs(S_of_x(q, x) - 2))
            err["M"] = max(err["M"], abs(M_of_x(q, one, x) - 1))
        ok = err["d"] <= 1e-9 and max(err["J"], err["I"], err["S"], err["M"]) <= 1e-6
        return ok, {f"err_{k}": v for k, v in err.items()}, {"d": 1e-9, "kernels": 1e-6}
    return _timed(1, "constant-coefficient exactness", 1.0, body)


def criterion_2() -> CriterionResult:
    def body():
        q = catalog_example2()
        xs = np.array([-50, -20, -10, -5, 5, 10, 20, 50], dtype=float)
        eps = np.abs(d_values(q, xs) * (3 * xs * xs + 1) - 1)
        slack = eps - 5 / np.abs(xs)
        c = float(np.max(eps * np.abs(xs)))
        return bool(np.all(slack <= 0)), {"max_x_eps": c}, {"max_x_eps": 5.0}
    return _timed(2, "example2 asymptotics of d", 10.0, body)


def criterion_3() -> CriterionResult:
    def body():
        xs = np.linspace(-20, 20, 201)
        worst = {}
        n_viol = 0
        for name, q in (("const:1", constant(1.0)), ("square", square()),
                        ("example2", catalog_example2())):
            r = verify_thm33(q, xs)
            p = r.profile
            worst[name] = float(min(np.min(p.J / p.d), np.min(p.I / p.d)))
            n_viol += len(r.violations)
        return n_viol == 0, {f"min_ratio_{k}": v for k, v in worst.items()}, \
            {"min_ratio": LOWER_BOUND}
    return _timed(3, "kernel lower bound e^-2 d", 60.0, body)


def criterion_4() -> CriterionResult:
    def body():
        anchors = expectations()["thm33"]
        q = catalog_example2()
        coarse = verify_thm33(q, np.linspace(-20, 20, 201)).constants
        fine = verify_thm33(q, np.linspace(-20, 20, 401)).constants
        drift = {k: abs(fine[k] - coarse[k]) / coarse[k] for k in coarse}
        ok = all(v <= anchors["c_max"] for v in fine.values()) and \
            all(v <= anchors["c_max"] for v in coarse.values()) and \
            all(v < anchors["grid_stability"] for v in drift.values())
        meas = {f"c_{k}": v for k, v in fine.items()}
        meas.update({f"drift_{k}": v for k, v in drift.items()})
        return ok, meas, dict(anchors)
    return _timed(4, "kernel equivalence stability", 60.0, body)


def criterion_5() -> CriterionResult:
    def body():
        alpha = 0.3
        q = catalog_example1(alpha, 0.4)
        xs = make_grid(100.0, 201, "log")
        c = weak_equiv_constant(d_values(q, xs), (1 + xs * xs) ** alpha, xs).c_estimate
        dev = {}
        for r in (10.0, 100.0):
            pts = np.array([-r, r])
            dev[r] = float(np.max(np.abs(d_values(q, pts) * (1 + r * r) ** -alpha - 1)))
        q10, q100 = q0_estimate(q, 1.0, 10.0), q0_estimate(q, 1.0, 100.0)
        bound = expectations()["example1"]["d_equivalence_c"]
        ok = c <= bound and dev[100.0] < dev[10.0] and q100 < q10
        return ok, {"c": c, "dev_10": dev[10.0], "dev_100": dev[100.0], "q0_w10": q10,
                    "q0_w100": q100}, {"c": bound}
    return _timed(5, "example1 d ~ (1+x^2)^alpha", 60.0, body)


def criterion_6(samples: int = 10_000, seed: int = 20240601) -> CriterionResult:
    def body():
        q = catalog_example2()
        dec = q.decomposition
        xs = np.array([-50, -20, -10, 10, 20, 50], dtype=float)
        d = d_values(q, xs)
        worst = -math.inf
        for x, dx in zip(xs, d):
            eps = abs(float(dec.q1.value(np.array([x]))[0]) * dx - 1)
            k = kappa1(dec.q1, x) + kappa2(dec.q1, dec.q2_cumulative, x)
            worst = max(worst, eps - k)
        rng = np.random.default_rng(seed)
        a = 1 + rng.exponential(3.0, samples)
        b = rng.uniform(0, 1, samples)
        b = np.where(b > 0, b, 0.5)
        gam = np.array([gamma_of_ab(ai, bi) for ai, bi in zip(a, b)])
        ok = worst <= 1e-6 and bool(np.all(gam > INV_E))
        return ok, {"max_eps_minus_kappa": worst, "min_gamma_b_lt_1": float(gam.min())}, \
            {"slack": 1e-6, "gamma_floor": INV_E}
    return _timed(6, "K(gamma) diagnostics", 10.0, body)


def criterion_7() -> CriterionResult:
    def body():
        meas = {}
        ok = True
        for name, q in (("const:1", constant(1.0)), ("example2", catalog_example2())):
            cov = build_d_covering(q, 0.0, "+", max_cells=50)
            rep = verify_covering(cov, q, mass_tol=1e-6)
            ok &= rep.passed and len(cov) == 50
            meas[f"mass_err_{name}"] = float(max(abs(m - 2) for m in rep.cell_masses))
            meas[f"reach_{name}"] = cov.reach
        return ok, meas, {"mass_err": 1e-6}
    return _timed(7, "R(x,d)-covering invariants", 5.0, body)


def criterion_8() -> CriterionResult:
    def body():
        q = catalog_example2()
        f = bump(0.0)
        xs = np.linspace(-3, 3, 61)
        r1 = residual_check(q, f, xs, 1e-4)
        r2 = residual_check(q, f, xs, 5e-5)
        one = constant(1.0)
        ind = indicator(0, 1)
        e0 = abs(green_apply(one, ind, 0.0) - (1 - math.exp(-1)))
        e1 = abs(green_apply(one, ind, -1.0) - (math.exp(-1) - math.exp(-2)))
        ratio = r1 / r2 if r2 > 0 else math.inf
        ok = r1 <= 1e-3 and 3.0 <= ratio <= 5.0 and e0 <= 1e-8 and e1 <= 1e-8
        return ok, {"residual_h": r1, "residual_h2": r2, "halving_ratio": ratio,
                    "err_y0": e0, "err_y-1": e1}, {"residual": 1e-3, "halving_ratio": "~4"}
    return _timed(8, "Green operator residual", 10.0, body)


def criterion_9() -> CriterionResult:
    def body():
        q = catalog_example2()
        fam = admissibility_family()
        tol = expectations()["admissibility"]["window_stability"]
        meas = {}
        ok = True
        for p in (1.0, 2.0):
            sp = SpaceParams(p, qstar_weight(q), "qstar")
            traces = {}
            c20 = admissibility_estimate(q, sp, fam, 20.0, traces=traces).c_estimate
            c40 = admissibility_estimate(q, sp, fam, 40.0, traces=traces).c_estimate
            change = abs(c40 - c20) / c20
            ok &= math.isfinite(c40) and change < tol
            meas[f"c_p{p:g}"] = c40
            meas[f"change_p{p:g}"] = change
        sp = SpaceParams(2.0, qstar_weight(q), "qstar")
        div = homogeneous_divergence_check(q, sp, [3.0, 5.0, 8.0])
        ok &= div.strictly_increasing
        meas["z_log_norms"] = [round(v, 6) for v in div.log_norms]
        return ok, meas, {"window_change": tol}
    return _timed(9, "admissibility and uniqueness", 60.0, body)


def criterion_10() -> CriterionResult:
    def body():
        xs = np.linspace(-10, 10, 101)
        q = catalog_example2()
        F1 = np.array([F1_of_x(x) for x in xs])
        h = np.array([h_of_x(x, q) for x in xs])
        c = weak_equiv_constant(F1, F1_envelope(xs), xs).c_estimate
        r = F1 / h
        bound = expectations()["example2"]["F1_envelope_c"]
        sandwich = bool(np.all((r > math.exp(-2)) & (r < math.exp(2))))
        return c <= bound and sandwich, {"c": c, "min_F1_over_h": float(r.min()),
                                         "max_F1_over_h": float(r.max())}, {"c": bound}
    return _timed(10, "example2 F1 envelope", 30.0, body)


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10)


def run_all() -> list:
    return [c() for c in CRITERIA]
