"""The Otelbaev average d(x), its reciprocal q*(x), Steklov averages, and the
solvability functionals q0(a) and d0."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .coefficient import CoefficientFunction, DomainError
from .quadrature import DEFAULT_CONFIG, DivergenceSuspectError, QuadratureConfig, truncated_exp_integral

log = logging.getLogger(__name__)

HORIZON = 2.0 ** 40
DEFAULT_REL_TOL = 1e-12


class InsufficientMassError(ArithmeticError):
    """int_{x-d}^{x+d} q stays below 2 for every d up to the horizon."""

    def __init__(self, x: float, mass: float):
        super().__init__(
            f"mass of q around x={x!r} only reaches {mass:.6g} < 2 within half-width {HORIZON:g}")
        self.x = x
        self.mass = mass


@dataclass(frozen=True)
class DValue:
    x: float
    d: float
    residual: float
    bracket: tuple[float, float]

    @property
    def q_star(self) -> float:
        return 1.0 / self.d


def _mass(q: CoefficientFunction, x, d):
    return q.cumulative.integral(x - d, x + d)


def d_values(q: CoefficientFunction, xs, tol: Optional[float] = None,
             with_brackets: bool = False):
    """Vectorized Otelbaev average: smallest d >= 0 with int_{x-d}^{x+d} q >= 2.

    The monotone predicate ``g(d) >= 2`` is bracketed geometrically, then the
    bracket is shrunk by Newton steps safeguarded by bisection.  A Newton root
    is only accepted once ``g`` is seen below 2 just to its left, so flat
    stretches of ``g`` (q vanishing on an interval) still give the infimum.

    ``tol`` is an absolute bracket width; by default the width is
    ``1e-12 * d`` so that tiny and huge values of d are equally resolved.
    """
    xs_in = np.asarray(xs, dtype=float)
    shape = xs_in.shape if xs_in.ndim else (1,)
    xs = xs_in.ravel()
    n = xs.size
    qx = np.asarray(q(xs), dtype=float)
    guess = np.where(qx > 0, 1.0 / np.maximum(qx, 1e-300), 1.0)
    guess = np.clip(guess, 1e-200, 1.0)

    # geometric bracket: g(lo) < 2 <= g(hi)
    lo = np.zeros(n)
    hi = np.full(n, np.nan)
    d = guess.copy()
    g = _mass(q, xs, d)
    up = g < 2
    # expand upward until the predicate holds
    cur = d.copy()
    gcur = g.copy()
    idx = np.flatnonzero(up)
    lo[idx] = cur[idx]
    while idx.size:
        cur[idx] *= 2
        if np.any(cur[idx] > HORIZON):
            j = idx[cur[idx] > HORIZON][0]
            raise InsufficientMassError(float(xs[j]), float(gcur[j]))
        gcur[idx] = _mass(q, xs[idx], cur[idx])
        still = gcur[idx] < 2
        lo[idx[still]] = cur[idx[still]]
        idx = idx[still]
    hi[up] = cur[up]
    ghi = np.where(up, gcur, np.nan)
    # shrink downward until the predicate fails
    idx = np.flatnonzero(~up)
    hi[idx] = d[idx]
    ghi[idx] = g[idx]
    cur = d.copy()
    while idx.size:
        cur[idx] *= 0.5
        tiny = cur[idx] < 1e-250
        if tiny.any():
            lo[idx[tiny]] = 0.0
            idx = idx[~tiny]
            if not idx.size:
                break
        gc = _mass(q, xs[idx], cur[idx])
        fail = gc < 2
        lo[idx[fail]] = cur[idx[fail]]
        keep = ~fail
        hi[idx[keep]] = cur[idx[keep]]
        ghi[idx[keep]] = gc[keep]
        idx = idx[keep]

    width = (lambda h: tol if tol is not None else DEFAULT_REL_TOL * h)

    # safeguarded Newton from the upper end
    for _ in range(100):
        active = np.flatnonzero(hi - lo > width(hi))
        if not active.size:
            break
        xa, la, ha, gh = xs[active], lo[active], hi[active], ghi[active]
        slope = np.asarray(q(xa + ha), dtype=float) + np.asarray(q(xa - ha), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = ha - (gh - 2.0) / slope
        step = ha - c
        bisect = ~np.isfinite(c) | (c <= la) | (c > ha)
        # a converged Newton point is tested against a point just below it
        small = ~bisect & (step <= 0.5 * width(ha))
        c = np.where(small, ha - width(ha), c)
        c = np.where(bisect | (c <= la), 0.5 * (la + ha), c)
        gc = _mass(q, xa, c)
        ok = gc >= 2
        hi[active[ok]] = c[ok]
        ghi[active[ok]] = gc[ok]
        lo[active[~ok]] = c[~ok]

    dvals = hi.reshape(shape)
    resid = np.abs(ghi - 2.0).reshape(shape)
    if with_brackets:
        return dvals, resid, lo.reshape(shape), hi.reshape(shape)
    return dvals


def d_of_x(q: CoefficientFunction, x: float, tol: Optional[float] = None) -> DValue:
    d, r, lo, hi = d_values(q, [x], tol=tol, with_brackets=True)
    return DValue(float(x), float(d[0]), float(r[0]), (float(lo[0]), float(hi[0])))


def q_star(q: CoefficientFunction, xs):
    """q*(x) = 1/d(x), vectorized."""
    return 1.0 / d_values(q, xs)


def steklov_average(q: CoefficientFunction, x: float, h: float) -> float:
    """Mean of q over [x-h, x+h]."""
    if not h > 0:
        raise DomainError("Steklov average needs h > 0")
    return float(q.cumulative.integral(x - h, x + h)) / (2.0 * h)


def q0_estimate(q: CoefficientFunction, a: float, window: float, grid_n: int = 2001) -> float:
    """Minimum of int_{x-a}^{x+a} q over an equispaced grid on [-window, window].

    This is an upper bound for the infimum over the window.
    """
    if not (a > 0 and window > 0 and grid_n >= 3):
        raise DomainError("q0_estimate needs a > 0, window > 0, grid_n >= 3")
    xs = np.linspace(-window, window, grid_n)
    return float(np.min(q.cumulative.integral(xs - a, xs + a)))


def d0_estimate(q: CoefficientFunction, window: float, grid_n: int = 2001) -> float:
    """Maximum of d over an equispaced grid on [-window, window]; a lower bound on sup d."""
    if not (window > 0 and grid_n >= 3):
        raise DomainError("d0_estimate needs window > 0 and grid_n >= 3")
    return float(np.max(d_values(q, np.linspace(-window, window, grid_n))))


VERDICTS = ("correctly_solvable", "case1_d0_infinite", "case2_integral_finite", "inconclusive")


@dataclass
class SolvabilityReport:
    q0_samples: list = field(default_factory=list)   # (a, window, value)
    d0_samples: list = field(default_factory=list)   # (window, sup_d)
    verdict: str = "inconclusive"
    mass_diverges: tuple = (None, None)               # (left, right)
    notes: list = field(default_factory=list)


def _one_sided_mass_diverges(q: CoefficientFunction, direction: str,
                             cfg: QuadratureConfig) -> bool:
    sign = 1.0 if direction == "+" else -1.0
    try:
        truncated_exp_integral(lambda t: sign * q.cumulative.integral(0.0, t), 0.0, direction, cfg)
    except DivergenceSuspectError:
        return False
    return True


def solvability_report(q: CoefficientFunction, a_list: Sequence[float],
                       windows: Sequence[float], grid_n: int = 2001,
                       floor_ratio: float = 0.5,
                       cfg: QuadratureConfig = DEFAULT_CONFIG) -> SolvabilityReport:
    """Window-indexed diagnosis of correct solvability in L_p.

    The verdict is a trend reading, never a proof: q0 is "stable" when its
    value on the largest window keeps at least ``floor_ratio`` of its value on
    the smallest window, for some a.
    """
    if not a_list or not windows:
        raise ValueError("a_list and windows must be nonempty")
    windows = sorted(windows)
    rep = SolvabilityReport()
    right = _one_sided_mass_diverges(q, "+", cfg)
    left = _one_sided_mass_diverges(q, "-", cfg)
    rep.mass_diverges = (left, right)
    if not left and not right:
        rep.verdict = "case2_integral_finite"
        rep.notes.append("int q appears finite on both half-axes")
        return rep

    stable = False
    decaying = False
    for a in a_list:
        vals = [q0_estimate(q, a, w, grid_n) for w in windows]
        rep.q0_samples.extend((a, w, v) for w, v in zip(windows, vals))
        if vals[-1] > 0 and vals[-1] >= floor_ratio * vals[0]:
            stable = True
        if vals[-1] < floor_ratio * vals[0] and all(np.diff(vals) <= 0):
            decaying = True

    d_growing = False
    try:
        sups = [d0_estimate(q, w, grid_n) for w in windows]
        rep.d0_samples = list(zip(windows, sups))
        d_growing = sups[-1] > sups[0] * (1 + 1e-9) and all(np.diff(sups) >= 0)
    except InsufficientMassError as exc:
        rep.notes.append(str(exc))

    if stable:
        rep.verdict = "correctly_solvable"
    elif decaying and left and right and d_growing:
        rep.verdict = "case1_d0_infinite"
    else:
        rep.verdict = "inconclusive"
    return rep
