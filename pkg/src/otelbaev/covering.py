"""R(x, kappa)-coverings of half-axes: chains of abutting intervals
[t - kappa(t), t + kappa(t)] starting at a given point."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .averages import d_values
from .coefficient import CoefficientFunction, DomainError
from .quadrature import as_array_fn


class CoveringError(ArithmeticError):
    """No center solves t -/+ kappa(t) = endpoint within the scan horizon."""


@dataclass(frozen=True)
class Covering:
    """Cells ``[minus[n], plus[n]]`` with centers ``centers[n]``.

    For direction ``+`` the cells run rightwards from ``start``; for ``-``
    leftwards, so ``plus[0] == start`` and ``minus[n] == plus[n+1]``.
    """

    direction: str
    start: float
    centers: tuple
    minus: tuple
    plus: tuple
    kappa_label: str = "kappa"

    def __len__(self):
        return len(self.centers)

    @property
    def cells(self):
        return list(zip(self.centers, self.minus, self.plus))

    @property
    def reach(self) -> float:
        if not self.centers:
            return self.start
        return self.plus[-1] if self.direction == "+" else self.minus[-1]


def _solve_center(kappa: Callable, endpoint: float, sign: int, horizon: float) -> float:
    """Smallest t beyond ``endpoint`` (along ``sign``) with t - sign*kappa(t) = endpoint."""
    # phi < 0 at the endpoint itself, phi >= 0 once the cell fits
    def phi(t):
        return sign * (t - endpoint) - kappa(t)

    k0 = float(kappa(np.array([endpoint]))[0])
    if not (k0 > 0 and math.isfinite(k0)):
        raise DomainError(f"kappa must be positive and finite, got {k0!r} at {endpoint!r}")
    step = k0 / 4
    t_prev = endpoint
    travelled = 0.0
    while True:
        ts = t_prev + sign * step * np.arange(1, 33)
        vals = phi(ts)
        hit = np.flatnonzero(vals >= 0)
        if hit.size:
            j = hit[0]
            a = t_prev if j == 0 else float(ts[j - 1])
            b = float(ts[j])
            break
        t_prev = float(ts[-1])
        travelled += 32 * step
        if travelled > horizon:
            raise CoveringError(
                f"no center found within {horizon:g} of {endpoint!r}; "
                "t - kappa(t) may not tend to infinity along this direction")
        step *= 2
    if phi(np.array([a]))[0] >= 0:
        return a
    # the scan step fixes which root counts as the smallest one
    return brentq(lambda t: float(phi(np.array([t]))[0]), a, b,
                  xtol=1e-13 * k0, rtol=4 * np.finfo(float).eps)


def build_covering(kappa: Callable, start: float, direction: str = "+",
                   max_cells: Optional[int] = None, reach: Optional[float] = None,
                   kappa_label: str = "kappa", horizon: float = 2.0 ** 40) -> Covering:
    """Chain cells from ``start`` until ``max_cells`` cells exist or ``reach`` is covered."""
    if direction not in ("+", "-"):
        raise ValueError("direction must be '+' or '-'")
    if max_cells is None and reach is None:
        raise ValueError("give max_cells or reach")
    sign = 1 if direction == "+" else -1
    kap = as_array_fn(kappa)
    centers, minus, plus = [], [], []
    endpoint = float(start)
    while True:
        if max_cells is not None and len(centers) >= max_cells:
            break
        if reach is not None and sign * (endpoint - reach) >= 0 and centers:
            break
        c = _solve_center(kap, endpoint, sign, horizon)
        far = c + sign * float(kap(np.array([c]))[0])
        centers.append(c)
        if sign > 0:
            minus.append(endpoint)
            plus.append(far)
        else:
            plus.append(endpoint)
            minus.append(far)
        endpoint = far
    return Covering(direction, float(start), tuple(centers), tuple(minus), tuple(plus), kappa_label)


def d_kappa(q: CoefficientFunction, factor: float = 1.0) -> Callable:
    """kappa(t) = factor * d(t) for use with build_covering."""
    return lambda t: factor * d_values(q, t)


def build_d_covering(q: CoefficientFunction, start: float, direction: str = "+",
                     max_cells: Optional[int] = None, reach: Optional[float] = None,
                     b: float = 1.0) -> Covering:
    label = "d" if b == 1.0 else f"{b:g}*d"
    return build_covering(d_kappa(q, b), start, direction, max_cells, reach, label)


@dataclass
class CoveringReport:
    violations: list = field(default_factory=list)   # (index, kind, detail)
    cell_masses: list = field(default_factory=list)
    center_residuals: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def verify_covering(cov: Covering, q: Optional[CoefficientFunction] = None,
                    kappa: Optional[Callable] = None, reach: Optional[float] = None,
                    mass_tol: float = 1e-6, center_tol: float = 1e-9) -> CoveringReport:
    """Structural checks of a covering, plus per-cell masses when q is given and kappa is d."""
    rep = CoveringReport()
    n = len(cov)
    sign = 1 if cov.direction == "+" else -1
    if n == 0:
        rep.violations.append((0, "empty", "covering has no cells"))
        return rep
    first_anchor = cov.minus[0] if sign > 0 else cov.plus[0]
    if first_anchor != cov.start:
        rep.violations.append((0, "start", f"first cell anchored at {first_anchor!r}, not {cov.start!r}"))
    for i in range(n - 1):
        if sign > 0:
            a, b = cov.plus[i], cov.minus[i + 1]
        else:
            a, b = cov.minus[i], cov.plus[i + 1]
        if a != b:
            rep.violations.append((i, "chaining", f"cell {i} ends at {a!r}, cell {i + 1} starts at {b!r}"))
    for i in range(n):
        if not cov.minus[i] < cov.plus[i]:
            rep.violations.append((i, "empty-cell", f"[{cov.minus[i]!r}, {cov.plus[i]!r}]"))
        if not cov.minus[i] <= cov.centers[i] <= cov.plus[i]:
            rep.violations.append((i, "center", f"center {cov.centers[i]!r} outside its cell"))
    far = np.asarray(cov.plus if sign > 0 else cov.minus)
    if np.any(sign * np.diff(far) <= 0):
        i = int(np.flatnonzero(sign * np.diff(far) <= 0)[0])
        rep.violations.append((i, "monotone", "far endpoints do not advance"))
    if reach is not None and sign * (cov.reach - reach) < 0:
        rep.violations.append((n - 1, "reach", f"covering stops at {cov.reach!r} before {reach!r}"))

    if kappa is None and q is not None and cov.kappa_label == "d":
        kappa = d_kappa(q)
    if kappa is not None:
        c = np.asarray(cov.centers)
        k = as_array_fn(kappa)(c)
        res = np.maximum(np.abs(c - k - np.asarray(cov.minus)), np.abs(c + k - np.asarray(cov.plus)))
        rep.center_residuals = res.tolist()
        scale = np.maximum(1.0, np.abs(c))
        for i in np.flatnonzero(res > center_tol * scale):
            rep.violations.append((int(i), "center-residual", f"{res[i]:.3g}"))
    if q is not None and cov.kappa_label == "d":
        masses = q.cumulative.integral(np.asarray(cov.minus), np.asarray(cov.plus))
        rep.cell_masses = np.atleast_1d(masses).tolist()
        for i, m in enumerate(rep.cell_masses):
            if abs(m - 2.0) > mass_tol:
                rep.violations.append((i, "mass", f"cell mass {m!r}"))
    return rep


@dataclass(frozen=True)
class MassBound:
    max_mass: float
    bound: float
    argmax: float

    @property
    def holds(self) -> bool:
        return self.max_mass <= self.bound


def bd_mass_bound(q: CoefficientFunction, b: float, a: float, x_grid) -> MassBound:
    """max over x of int_{x-b d(x)}^{x+b d(x)} q, against the bound 2(ab+1)."""
    if not (b > 0 and a >= 1):
        raise DomainError("bd_mass_bound needs b > 0 and a >= 1")
    xs = np.asarray(x_grid, dtype=float)
    d = d_values(q, xs)
    masses = q.cumulative.integral(xs - b * d, xs + b * d)
    i = int(np.argmax(masses))
    return MassBound(float(masses[i]), 2.0 * (a * b + 1.0), float(xs[i]))
