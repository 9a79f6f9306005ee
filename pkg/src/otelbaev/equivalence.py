"""Weak-equivalence constants and the verification suites built on them:
kernel integrals against d, unimodal kernels, and the two worked examples."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .averages import d_values, q0_estimate
from .coefficient import (CoefficientFunction, DomainError, UnimodalPair,
                          catalog_example1, catalog_example2)
from .kclass import KGammaReport, membership_report
from .kernel import I_of_x, J_of_x, KernelProfile, kernel_profile
from .parallel import ordered_map
from .quadrature import DEFAULT_CONFIG, QuadratureConfig, truncated_exp_integral

LOWER_BOUND = math.exp(-2.0) - 1e-6


@lru_cache(maxsize=1)
def expectations() -> dict:
    """Regression anchors for the verification suites (versioned JSON)."""
    text = resources.files(__package__).joinpath("expectations.json").read_text()
    return json.loads(text)


# --------------------------------------------------------------------------
# grids

def make_grid(window: float, n: int, spacing: str = "uniform", knee: float = 10.0) -> np.ndarray:
    """Symmetric grid of ``n`` points on [-window, window].

    ``log`` spacing is uniform on [-knee, knee] and geometric beyond it.
    """
    if not (window > 0 and n >= 3):
        raise DomainError("grid needs window > 0 and n >= 3")
    if spacing == "uniform" or window <= knee:
        if spacing not in ("uniform", "log"):
            raise ValueError(f"unknown spacing {spacing!r}")
        return np.linspace(-window, window, n)
    if spacing != "log":
        raise ValueError(f"unknown spacing {spacing!r}")
    m = n // 2    # positive points; for even n the innermost one becomes a pair around 0
    if m < 2:
        return np.linspace(-window, window, n)
    # share points between the two zones by their log-length
    inner_share = 1.0 / (1.0 + math.log(window / knee))
    m_in = min(max(1, round(m * inner_share)), m - 1)
    inner = np.linspace(0.0, knee, m_in + 1)[1:]
    outer = np.geomspace(knee, window, m - m_in + 1)[1:]
    pos = np.concatenate([inner, outer])
    mid = [0.0] if n % 2 else []
    if n % 2 == 0:
        # drop the innermost pair, add a pair straddling 0
        pos = pos[1:]
        mid = [-0.5 * pos[0], 0.5 * pos[0]]
    return np.concatenate([-pos[::-1], mid, pos])


# --------------------------------------------------------------------------
# weak equivalence

@dataclass
class EquivalenceReport:
    c_estimate: float
    argmax_hi: float
    argmax_lo: float
    grid: str
    ratios: list     # (x, phi/psi)

    @property
    def max_ratio(self) -> float:
        return max(r for _, r in self.ratios)

    @property
    def min_ratio(self) -> float:
        return min(r for _, r in self.ratios)


def _values(fn: Union[Callable, Sequence[float]], xs: np.ndarray) -> np.ndarray:
    if callable(fn):
        out = fn(xs)
        if np.ndim(out) == 0 or np.shape(out) != xs.shape:
            out = np.array([fn(x) for x in xs], dtype=float)
        return np.asarray(out, dtype=float)
    out = np.asarray(fn, dtype=float)
    if out.shape != xs.shape:
        raise ValueError("value array does not match the grid")
    return out


def describe_grid(xs: np.ndarray) -> str:
    return f"{xs.size} points on [{xs.min():g}, {xs.max():g}]"


def weak_equiv_constant(phi, psi, grid) -> EquivalenceReport:
    """Smallest c with psi/c <= phi <= c psi on the grid.

    ``phi`` and ``psi`` are callables or arrays of values on ``grid``.
    """
    xs = np.asarray(grid, dtype=float)
    a, b = _values(phi, xs), _values(psi, xs)
    for name, v in (("phi", a), ("psi", b)):
        bad = ~(v > 0)
        if bad.any():
            x = float(xs[bad][0])
            raise DomainError(f"{name} is not positive at x={x!r}")
    r = a / b
    ihi, ilo = int(np.argmax(r)), int(np.argmin(r))
    c = float(max(r[ihi], 1.0 / r[ilo]))
    return EquivalenceReport(c, float(xs[ihi]), float(xs[ilo]), describe_grid(xs),
                             list(zip(xs.tolist(), r.tolist())))


# --------------------------------------------------------------------------
# kernel integrals against d

@dataclass
class Thm33Result:
    profile: KernelProfile
    reports: dict                  # "J", "I", "S" -> EquivalenceReport
    violations: list = field(default_factory=list)   # (x, "J"|"I", ratio)
    c_max: Optional[float] = None

    @property
    def constants(self) -> dict:
        return {k: r.c_estimate for k, r in self.reports.items()}

    @property
    def passed(self) -> bool:
        if self.violations:
            return False
        return self.c_max is None or all(c <= self.c_max for c in self.constants.values())


def verify_thm33(q: CoefficientFunction, grid, cfg: QuadratureConfig = DEFAULT_CONFIG,
                 c_max: Optional[float] = None) -> Thm33Result:
    """Profile I, J, S against d on the grid and flag points where J or I
    drops below (e^-2 - 1e-6) d."""
    xs = np.asarray(grid, dtype=float)
    prof = kernel_profile(q, xs, cfg)
    reports = {
        "J": weak_equiv_constant(prof.J, prof.d, xs),
        "I": weak_equiv_constant(prof.I, prof.d, xs),
        "S": weak_equiv_constant(prof.S, prof.d, xs),
    }
    violations = []
    for name, vals in (("J", prof.J), ("I", prof.I)):
        ratio = vals / prof.d
        for i in np.flatnonzero(ratio < LOWER_BOUND):
            violations.append((float(xs[i]), name, float(ratio[i])))
    return Thm33Result(prof, reports, violations, c_max)


# --------------------------------------------------------------------------
# unimodal kernels

def uv_to_q(pair: UnimodalPair, probe_grid=None) -> tuple:
    """q1 = -u'/u and q2 = v'/v as coefficients; both must be nonnegative."""
    grid = np.linspace(-50.0, 50.0, 1001) if probe_grid is None else np.asarray(probe_grid, float)
    q1 = CoefficientFunction(lambda t: -pair.u_log_derivative(t), label=f"{pair.label}:q1")
    q2 = CoefficientFunction(pair.v_log_derivative, label=f"{pair.label}:q2")
    for name, q in (("q1", q1), ("q2", q2)):
        v = np.asarray(q(grid))
        if np.any(v < 0):
            x = float(grid[v < 0][0])
            raise DomainError(f"{name} of pair {pair.label!r} is negative at t={x!r}")
    return q1, q2


def _uv_parts(pair: UnimodalPair, x: float, cfg: QuadratureConfig) -> tuple:
    """(log u(x)v(x), A, B) with F = u v (A + B):
    A = int_{-inf}^x v(t)/v(x) dt and B = int_x^inf u(t)/u(x) dt."""
    lu = float(pair.log_u(np.array([x]))[0])
    lv = float(pair.log_v(np.array([x]))[0])
    A = truncated_exp_integral(lambda t: lv - pair.log_v(t), x, "-", cfg).value
    B = truncated_exp_integral(lambda t: lu - pair.log_u(t), x, "+", cfg).value
    return lu + lv, A, B


def F_of_x(pair: UnimodalPair, x: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """F(x) = u(x) int_{-inf}^x v + v(x) int_x^inf u."""
    luv, A, B = _uv_parts(pair, x, cfg)
    return math.exp(luv) * (A + B)


@dataclass(frozen=True)
class UnimodalEstimate:
    x: float
    F: float
    d1: float
    d2: float
    predicted: float

    @property
    def ratio(self) -> float:
        return self.F / self.predicted


@dataclass
class Thm35Result:
    estimates: list
    report: EquivalenceReport


def verify_thm35(pair: UnimodalPair, grid, cfg: QuadratureConfig = DEFAULT_CONFIG) -> Thm35Result:
    """F against u v (d1 + d2), with d1, d2 the averages of q1 = -u'/u and q2 = v'/v."""
    xs = np.asarray(grid, dtype=float)
    q1, q2 = uv_to_q(pair)
    d1, d2 = d_values(q1, xs), d_values(q2, xs)
    parts = ordered_map(lambda x: _uv_parts(pair, x, cfg), xs)
    ests = []
    for x, (luv, A, B), a, b in zip(xs, parts, d1, d2):
        uv = math.exp(luv)
        ests.append(UnimodalEstimate(float(x), uv * (A + B), float(a), float(b), uv * (a + b)))
    # the common factor u v cancels; comparing A + B with d1 + d2 avoids under/overflow
    rep = weak_equiv_constant(np.array([p[1] + p[2] for p in parts]), d1 + d2, xs)
    return Thm35Result(ests, rep)


# --------------------------------------------------------------------------
# Example 2: F1 and its h-sandwich

def _phase(t):
    return t ** 3 + t * np.cos(t)


def F1_parts(x: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> tuple:
    """The two halves of F1(x) = int G1(x, t) dt, split at t = x.

    G1 = exp(phase(t) - x^3) for t <= x and exp(x^3 - phase(t)) for t >= x,
    with phase(t) = t^3 + t cos t strictly increasing.
    """
    px = float(_phase(x))
    c = x * math.cos(x)
    left = truncated_exp_integral(lambda t: px - _phase(t), x, "-", cfg).value
    right = truncated_exp_integral(lambda t: _phase(t) - px, x, "+", cfg).value
    return math.exp(c) * left, math.exp(-c) * right


def F1_of_x(x: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    a, b = F1_parts(x, cfg)
    return a + b


def h_of_x(x: float, q: Optional[CoefficientFunction] = None,
           cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """e^{x cos x} I(x) + e^{-x cos x} J(x) for q(t) = 3t^2 - t sin t."""
    q = catalog_example2() if q is None else q
    c = x * math.cos(x)
    return math.exp(c) * I_of_x(q, x, cfg) + math.exp(-c) * J_of_x(q, x, cfg)


def F1_envelope(x):
    """cosh(x cos x) / (x^2 + 1)."""
    x = np.asarray(x, dtype=float)
    return np.cosh(x * np.cos(x)) / (x * x + 1.0)


@dataclass
class Example2Result:
    epsilon: list            # (x, d(x)(3x^2+1) - 1)
    epsilon_constant: float  # max |x| |eps|
    membership: KGammaReport
    xs: np.ndarray
    F1: np.ndarray
    h: np.ndarray
    envelope_report: EquivalenceReport
    sandwich_ok: bool
    anchors: dict

    @property
    def checks(self) -> dict:
        a = self.anchors
        return {
            "epsilon_bound": self.epsilon_constant <= a["epsilon_constant"],
            "membership": self.membership.verdict == "consistent",
            "F1_envelope": self.envelope_report.c_estimate <= a["F1_envelope_c"],
            "h_sandwich": self.sandwich_ok,
        }

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    COLUMNS = ("x", "F1", "h", "F1_over_h", "F1_over_envelope")

    def rows(self):
        env = F1_envelope(self.xs)
        for x, f, h, e in zip(self.xs, self.F1, self.h, env):
            yield x, f, h, f / h, f / e


def verify_example2(grid=None, probes: Sequence[float] = (-50, -20, -10, -5, 5, 10, 20, 50),
                    cfg: QuadratureConfig = DEFAULT_CONFIG) -> Example2Result:
    q = catalog_example2()
    anchors = expectations()["example2"]
    xp = np.asarray(probes, dtype=float)
    eps = d_values(q, xp) * (3 * xp * xp + 1) - 1.0
    eps_c = float(np.max(np.abs(xp) * np.abs(eps)))
    member = membership_report(q, x0=10.0)
    xs = np.linspace(-10, 10, 101) if grid is None else np.asarray(grid, dtype=float)
    F1 = np.array(ordered_map(lambda x: F1_of_x(x, cfg), xs))
    h = np.array(ordered_map(lambda x: h_of_x(x, q, cfg), xs))
    r = F1 / h
    sandwich = bool(np.all((r > math.exp(-2)) & (r < math.exp(2))))
    env = weak_equiv_constant(F1, F1_envelope(xs), xs)
    return Example2Result(list(zip(xp.tolist(), eps.tolist())), eps_c, member, xs, F1, h, env,
                          sandwich, anchors)


# --------------------------------------------------------------------------
# Example 1

@dataclass
class Example1Result:
    alpha: float
    beta: float
    xs: np.ndarray
    d: np.ndarray
    report: EquivalenceReport           # d vs (1+x^2)^alpha
    deviation: dict                     # |x| -> max |d (1+x^2)^-alpha - 1| over +-x
    nu_theory: float
    nu_fit: float
    q0: dict                            # window -> q0_estimate(a=1)
    membership: KGammaReport
    thm33: Optional[Thm33Result]
    anchors: dict

    @property
    def checks(self) -> dict:
        out = {
            "d_equivalence": self.report.c_estimate <= self.anchors["d_equivalence_c"],
            "deviation_decay": self.deviation[100.0] < self.deviation[10.0],
            "q0_decay": self.q0[100.0] < self.q0[10.0],
            "membership": self.membership.verdict == "consistent",
        }
        if self.thm33 is not None:
            out["thm33"] = not self.thm33.violations
        return out

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    COLUMNS = ("x", "d", "d_over_power", "J_over_d", "I_over_d", "S_over_d")

    def rows(self):
        power = (1 + self.xs ** 2) ** self.alpha
        prof = self.thm33.profile if self.thm33 is not None else None
        for i, x in enumerate(self.xs):
            if prof is not None:
                dd = prof.d[i]
                yield x, self.d[i], self.d[i] / power[i], prof.J[i] / dd, prof.I[i] / dd, prof.S[i] / dd
            else:
                yield x, self.d[i], self.d[i] / power[i], math.nan, math.nan, math.nan


def verify_example1(alpha: float, beta: float, grid=None,
                    cfg: QuadratureConfig = DEFAULT_CONFIG,
                    with_thm33: bool = True) -> Example1Result:
    """d against (1+x^2)^alpha, decay of the relative deviation, decay of
    q0(a=1) across windows, K(gamma) diagnostics and the kernel profile."""
    q = catalog_example1(alpha, beta)
    xs = make_grid(100.0, 201, "log") if grid is None else np.asarray(grid, dtype=float)
    d = d_values(q, xs)
    power = (1 + xs * xs) ** alpha
    rep = weak_equiv_constant(d, power, xs)
    dev = {}
    for r in (10.0, 100.0):
        pts = np.array([-r, r])
        dev[r] = float(np.max(np.abs(d_values(q, pts) * (1 + r * r) ** -alpha - 1.0)))
    nu_fit = math.log(dev[10.0] / dev[100.0]) / math.log(10.0) if dev[100.0] > 0 else math.inf
    nu_theory = min(4 * alpha, 2 * beta + 2 * alpha - 1)
    q0 = {w: q0_estimate(q, 1.0, w) for w in (10.0, 100.0)}
    member = membership_report(q, x0=10.0)
    thm = verify_thm33(q, xs, cfg) if with_thm33 else None
    return Example1Result(alpha, beta, xs, d, rep, dev, nu_theory, nu_fit, q0, member, thm,
                          expectations()["example1"])
