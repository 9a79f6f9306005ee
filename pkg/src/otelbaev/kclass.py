"""Diagnostics for the class K(gamma): the functionals kappa1 and kappa2 of a
decomposition q = q1 + q2, the gamma(a, b) formula, and empirical (a, b)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .averages import d_values
from .coefficient import CoefficientFunction, DomainError, SmoothPart

INV_E = math.exp(-1.0)
TREND_PROBES = (10.0, 30.0, 100.0, 300.0)
EPS_SLACK = 1e-6


class ConfigurationError(ValueError):
    """The coefficient lacks data a diagnostic needs (e.g. a decomposition)."""


def gamma_of_ab(a: float, b: float) -> float:
    """gamma = a * exp(-b / a^2)."""
    if not (a >= 1 and b > 0):
        raise DomainError(f"gamma needs a >= 1 and b > 0, got a={a!r}, b={b!r}")
    return a * math.exp(-b / (a * a))


def b_for_gamma(a: float, gamma: float = INV_E) -> float:
    """Smallest b with gamma(a, b) <= gamma."""
    if not (a >= 1 and 0 < gamma < a):
        raise DomainError("need a >= 1 and 0 < gamma < a")
    return a * a * math.log(a / gamma)


def _check_q1(q1: SmoothPart, x: float) -> float:
    v = float(q1.value(np.array([x]))[0])
    if not v > 0:
        raise DomainError(f"q1({x!r}) = {v!r} is not positive")
    return v


def _sup_over_xi(phi, radius: float, n: int) -> float:
    """max of phi on [0, radius]: grid search, then a bounded scalar search
    between the neighbours of the best grid point."""
    xi = np.linspace(0.0, radius, max(n, 3))
    vals = phi(xi)
    j = int(np.argmax(vals))
    best = float(vals[j])
    lo, hi = xi[max(j - 1, 0)], xi[min(j + 1, xi.size - 1)]
    res = minimize_scalar(lambda s: -float(phi(np.array([s]))[0]), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-12 * max(radius, 1e-300)})
    return max(best, -float(res.fun))


def kappa1(q1: SmoothPart, x: float, xi_grid_n: int = 257) -> float:
    """sup_{|xi| <= 2/q1(x)} |q1'(x+xi) - q1'(x-xi)| / q1(x)^2."""
    v = _check_q1(q1, x)
    phi = lambda s: np.abs(q1.derivative(x + s) - q1.derivative(x - s))
    return _sup_over_xi(phi, 2.0 / v, xi_grid_n) / (v * v)


def kappa2(q1: SmoothPart, q2_cumulative, x: float, xi_grid_n: int = 257) -> float:
    """sup_{|xi| <= 2/q1(x)} |int_{x-xi}^{x+xi} q2|.

    ``q2_cumulative`` is a CumulativeIntegral of q2 (see Decomposition).
    """
    v = _check_q1(q1, x)
    phi = lambda s: np.abs(q2_cumulative.integral(x - s, x + s))
    return _sup_over_xi(phi, 2.0 / v, xi_grid_n)


def estimate_ab(q: CoefficientFunction, x0: float, b: float, x_grid: Sequence[float],
                t_grid_n: int = 65) -> float:
    """Smallest a >= 1 with d(x)/a <= d(t) <= a d(x) for sampled |t - x| <= b d(x)."""
    if not b > 0:
        raise DomainError("b must be positive")
    xs = np.asarray(x_grid, dtype=float)
    if np.any(np.abs(xs) < x0):
        raise DomainError(f"all grid points must satisfy |x| >= x0 = {x0!r}")
    dx = d_values(q, xs)
    ts = xs[:, None] + b * dx[:, None] * np.linspace(-1.0, 1.0, t_grid_n)
    dt = d_values(q, ts)
    ratio = dt / dx[:, None]
    return float(max(1.0, np.max(ratio), np.max(1.0 / ratio)))


def fit_ab(q: CoefficientFunction, x0: float, x_grid: Sequence[float], b: float = 1.0,
           gamma_target: float = INV_E, t_grid_n: int = 65, max_iter: int = 30,
           max_b: float = 64.0) -> tuple:
    """Raise b until gamma(a(b), b) <= gamma_target; returns (a, b, gamma).

    Raising b can also raise a; when the iteration runs past ``max_b`` the
    best pair seen is returned and its gamma stays above the target.
    """
    best = None
    for _ in range(max_iter):
        a = estimate_ab(q, x0, b, x_grid, t_grid_n)
        g = gamma_of_ab(a, b)
        if best is None or g < best[2]:
            best = (a, b, g)
        if g <= gamma_target * (1 + 1e-12):
            return a, b, g
        b = max(b_for_gamma(a, gamma_target), b * 1.01)
        if b > max_b:
            break
    return best


VERDICTS = ("consistent", "inconsistent", "inconclusive")


@dataclass
class KGammaReport:
    a: float
    b: float
    x0: float
    gamma: float
    kappa1_trace: list = field(default_factory=list)      # (x, kappa1)
    kappa2_trace: list = field(default_factory=list)      # (x, kappa2)
    epsilon_trace: list = field(default_factory=list)     # (x, q1 d - 1)
    ratio_trace: list = field(default_factory=list)       # (x, q*/q1)
    q_star_over_q1: tuple = (math.nan, math.nan)          # (min, max)
    checks: dict = field(default_factory=dict)
    verdict: str = "inconclusive"

    @property
    def epsilon_constant(self) -> float:
        """max |x| |eps(x)| over the trace."""
        return max((abs(x) * abs(e) for x, e in self.epsilon_trace), default=0.0)

    def rows(self):
        d1 = dict(self.kappa1_trace)
        d2 = dict(self.kappa2_trace)
        for (x, e), (_, r) in zip(self.epsilon_trace, self.ratio_trace):
            yield x, d1[x], d2[x], e, r


def _nonincreasing(vals, rel=1e-9) -> bool:
    return all(b <= a * (1 + rel) + 1e-300 for a, b in zip(vals, vals[1:]))


def membership_report(q: CoefficientFunction, x0: float = 10.0,
                      probe_grid: Optional[Sequence[float]] = None,
                      xi_grid_n: int = 257) -> KGammaReport:
    """Evaluate the K(gamma) diagnostics of a decomposed coefficient.

    The default probe grid is +-x0 * {1, 2, 5}.  Limits are only read as
    trends on |x| in TREND_PROBES; nothing here proves membership.
    """
    dec = q.decomposition
    if dec is None:
        raise ConfigurationError(f"coefficient {q.label!r} has no stored decomposition q = q1 + q2")
    if not x0 >= 1:
        raise DomainError("x0 must be >= 1")
    if probe_grid is None:
        probe_grid = [s * x0 * k for k in (1.0, 2.0, 5.0) for s in (-1.0, 1.0)]
    xs = np.array(sorted(x for x in probe_grid if abs(x) >= x0), dtype=float)
    if not xs.size:
        raise DomainError("probe grid has no point with |x| >= x0")
    q1, q2c = dec.q1, dec.q2_cumulative

    k1 = [kappa1(q1, x, xi_grid_n) for x in xs]
    k2 = [kappa2(q1, q2c, x, xi_grid_n) for x in xs]
    d = d_values(q, xs)
    q1x = q1.value(xs)
    eps = q1x * d - 1.0
    ratios = (1.0 / d) / q1x

    checks = {}
    checks["epsilon_bound"] = bool(np.all(np.abs(eps) <= np.array(k1) + np.array(k2) + EPS_SLACK))
    for sign, name in ((1.0, "right"), (-1.0, "left")):
        probes = sign * np.array(TREND_PROBES)
        v = q1.value(probes)
        checks[f"log_derivative_decay_{name}"] = _nonincreasing(list(np.abs(q1.derivative(probes)) / v ** 2))
        checks[f"x_q1_growth_{name}"] = bool(np.all(np.diff(np.abs(probes) * v) > 0))
        kap = [kappa1(q1, x, xi_grid_n) + kappa2(q1, q2c, x, xi_grid_n) for x in probes]
        checks[f"kappa_decay_{name}"] = kap[-1] <= kap[0] * (1 + 1e-9) + 1e-15

    a, b, g = fit_ab(q, x0, xs)
    if not checks["epsilon_bound"]:
        verdict = "inconsistent"
    elif all(checks.values()):
        verdict = "consistent"
    else:
        verdict = "inconclusive"
    xl = xs.tolist()
    return KGammaReport(a, b, x0, g, list(zip(xl, k1)), list(zip(xl, k2)),
                        list(zip(xl, eps.tolist())), list(zip(xl, ratios.tolist())),
                        (float(ratios.min()), float(ratios.max())), checks, verdict)
