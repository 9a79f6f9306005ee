"""Coefficient functions q, their smooth/rough decompositions, and a cached
antiderivative used for every integral of q in the package."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .quadrature import XK, WK, WG, as_array_fn, gauss_legendre

PARITIES = ("even", "odd", "none")


class EvaluationError(ValueError):
    """A coefficient returned a non-finite value."""

    def __init__(self, label: str, t: float):
        super().__init__(f"coefficient {label!r} is not finite at t={t!r}")
        self.t = t


class DomainError(ValueError):
    """Parameters outside the admissible range of a constructor or formula."""


class CumulativeIntegral:
    """Antiderivative ``P(t) = int_0^t f`` on a lazily grown, adaptively refined grid.

    The real line is cut into base panels with dyadic edges
    ``..., -4, -2, -1, 0, 1, 2, 4, ...``; each base panel is bisected until the
    15-point Kronrod and 7-point Gauss estimates agree to
    ``max(refinement_tolerance * width, 1e-13 * int |f|)``.  Prefix sums over
    the accepted panels give ``P`` at every panel edge; values in between are
    completed with a 20-point Gauss-Legendre rule on the partial panel.

    The grid only ever grows; a lock guards growth so concurrent readers see a
    consistent snapshot.
    """

    def __init__(self, f: Callable, label: str = "f", refinement_tolerance: float = 1e-10,
                 max_depth: int = 60, oscillation_scale: Optional[Callable] = None):
        self.f = as_array_fn(f)
        self.label = label
        self.refinement_tolerance = refinement_tolerance
        self.max_depth = max_depth
        self.oscillation_scale = oscillation_scale
        self._lock = threading.Lock()
        # (edges, prefix) snapshot; prefix[i] = int_0^{edges[i]} f
        self._grid = (np.array([0.0]), np.array([0.0]))
        self._base_k = (0, 0)  # built range is [-2**(kl-1), 2**(kr-1)], 0 meaning "none yet"

    @property
    def base_point(self) -> float:
        return 0.0

    @property
    def edges(self) -> np.ndarray:
        return self._grid[0]

    def _eval(self, t: np.ndarray) -> np.ndarray:
        v = self.f(t)
        bad = ~np.isfinite(v)
        if bad.any():
            raise EvaluationError(self.label, float(np.asarray(t)[bad].flat[0]))
        return v

    def _refine(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        pieces = 1
        if self.oscillation_scale is not None:
            scale = min(float(self.oscillation_scale(a)), float(self.oscillation_scale(b)))
            if scale > 0 and math.isfinite(scale):
                pieces = int(min(1e6, math.ceil((b - a) / scale)))
        lo = np.linspace(a, b, pieces + 1)[:-1]
        hi = np.append(lo[1:], b)
        depth = np.zeros(lo.size, dtype=int)
        out_lo, out_val = [], []
        while lo.size:
            half = 0.5 * (hi - lo)
            nodes = (0.5 * (lo + hi))[:, None] + half[:, None] * XK
            vals = self._eval(nodes)
            k = half * (vals @ WK)
            g = half * (vals @ WG)
            kabs = half * (np.abs(vals) @ WK)
            ok = np.abs(k - g) <= np.maximum(self.refinement_tolerance * 2 * half, 1e-13 * kabs)
            mid = 0.5 * (lo + hi)
            ok |= (mid <= lo) | (mid >= hi)
            out_lo.append(lo[ok])
            out_val.append(k[ok])
            bad = ~ok
            if not bad.any():
                break
            if (depth[bad] >= self.max_depth).any():
                i = np.flatnonzero(bad & (depth >= self.max_depth))[0]
                raise ArithmeticError(
                    f"antiderivative of {self.label!r} did not resolve on [{lo[i]!r}, {hi[i]!r}]")
            lo, hi, mid, depth = lo[bad], hi[bad], mid[bad], depth[bad] + 1
            lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
            depth = np.concatenate([depth, depth])
        left = np.concatenate(out_lo)
        vals = np.concatenate(out_val)
        order = np.argsort(left)
        return left[order], vals[order]

    def _ensure(self, lo: float, hi: float):
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"cannot integrate {self.label!r} up to a non-finite limit")
        edges = self._grid[0]
        if edges[0] <= lo and hi <= edges[-1]:
            return
        with self._lock:
            edges, prefix = self._grid
            kl, kr = self._base_k
            while hi > edges[-1]:
                a = 0.0 if kr == 0 else 2.0 ** (kr - 1)
                b = 2.0 ** kr
                left, vals = self._refine(a, b)
                new_edges = np.append(left[1:], b)
                new_prefix = prefix[-1] + np.cumsum(vals)
                edges = np.concatenate([edges, new_edges])
                prefix = np.concatenate([prefix, new_prefix])
                kr += 1
            while lo < edges[0]:
                a = -(2.0 ** kl)
                b = 0.0 if kl == 0 else -(2.0 ** (kl - 1))
                left, vals = self._refine(a, b)
                # prefix at each left edge, walking down from edges[0]
                new_prefix = prefix[0] - np.cumsum(vals[::-1])[::-1]
                edges = np.concatenate([left, edges])
                prefix = np.concatenate([new_prefix, prefix])
                kl += 1
            self._grid = (edges, prefix)
            self._base_k = (kl, kr)

    def prebuild(self, lo: float, hi: float) -> "CumulativeIntegral":
        self._ensure(lo, hi)
        return self

    def integral(self, a, b):
        """``int_a^b f`` elementwise (broadcasting); negative when ``b < a``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        a, b = np.broadcast_arrays(a, b)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        if lo.size == 0:
            return np.zeros(lo.shape)
        self._ensure(float(lo.min()), float(hi.max()))
        edges, prefix = self._grid
        last = edges.size - 2
        ia = np.clip(np.searchsorted(edges, lo, side="right") - 1, 0, last)
        ib = np.clip(np.searchsorted(edges, hi, side="right") - 1, 0, last)
        same = ia == ib
        left_end = np.where(same, hi, edges[np.minimum(ia + 1, last + 1)])
        right_start = np.where(same, hi, edges[ib])
        left = gauss_legendre(self._eval, lo, left_end)
        right = gauss_legendre(self._eval, right_start, hi)
        middle = np.where(same, 0.0, prefix[ib] - prefix[np.minimum(ia + 1, last + 1)])
        total = left + middle + right
        out = np.where(b < a, -total, total)
        return out if out.ndim else float(out)

    def __call__(self, t):
        """``P(t) = int_0^t f``."""
        return self.integral(0.0, t)


@dataclass(frozen=True, eq=False)
class SmoothPart:
    """The smooth positive part q1 of a decomposition, with its derivative."""

    value: Callable
    derivative: Callable

    def __post_init__(self):
        object.__setattr__(self, "value", as_array_fn(self.value))
        object.__setattr__(self, "derivative", as_array_fn(self.derivative))


@dataclass(frozen=True, eq=False)
class Decomposition:
    q1: SmoothPart
    q2: Callable

    def __post_init__(self):
        object.__setattr__(self, "q2", as_array_fn(self.q2))

    @cached_property
    def q2_cumulative(self) -> CumulativeIntegral:
        return CumulativeIntegral(self.q2, label="q2")


@dataclass(frozen=True, eq=False)
class CoefficientFunction:
    """A nonnegative, locally integrable coefficient q of -y' + q y = f.

    ``evaluator`` must accept numpy arrays (scalar-only callables are wrapped
    automatically, at a speed cost).
    """

    evaluator: Callable
    first_derivative: Optional[Callable] = None
    parity: str = "none"
    decomposition: Optional[Decomposition] = None
    label: str = "custom"
    oscillation_scale: Optional[Callable] = field(default=None, repr=False)
    refinement_tolerance: float = 1e-10

    def __post_init__(self):
        if self.parity not in PARITIES:
            raise ValueError(f"parity must be one of {PARITIES}")
        object.__setattr__(self, "evaluator", as_array_fn(self.evaluator))
        if self.first_derivative is not None:
            object.__setattr__(self, "first_derivative", as_array_fn(self.first_derivative))

    def __call__(self, t):
        out = self.evaluator(np.asarray(t, dtype=float))
        return out if np.ndim(out) else float(out)

    @cached_property
    def cumulative(self) -> CumulativeIntegral:
        return CumulativeIntegral(self.evaluator, label=self.label,
                                  refinement_tolerance=self.refinement_tolerance,
                                  oscillation_scale=self.oscillation_scale)

    def integral(self, a, b):
        return self.cumulative.integral(a, b)


def integrate_q(q: CoefficientFunction, a: float, b: float) -> float:
    """``int_a^b q``; requires ``a <= b``."""
    if b < a:
        raise ValueError("integrate_q requires a <= b")
    return float(q.cumulative.integral(a, b))


def constant(k: float) -> CoefficientFunction:
    if not k >= 0:
        raise DomainError("constant coefficient must be nonnegative")
    k = float(k)
    return CoefficientFunction(
        lambda t: np.full(np.shape(t), k),
        first_derivative=lambda t: np.zeros(np.shape(t)),
        parity="even",
        decomposition=Decomposition(SmoothPart(lambda t: np.full(np.shape(t), k),
                                               lambda t: np.zeros(np.shape(t))),
                                    lambda t: np.zeros(np.shape(t))) if k > 0 else None,
        label=f"const:{k:g}",
    )


def square() -> CoefficientFunction:
    return CoefficientFunction(lambda t: t * t, first_derivative=lambda t: 2 * t,
                               parity="even", label="square")


def catalog_example1(alpha: float, beta: float) -> CoefficientFunction:
    """q(x) = (1 + cos((1+x^2)^beta)) / (1+x^2)^alpha with 0 < alpha < 1/2 < alpha + beta."""
    if not (0 < alpha < 0.5 and alpha + beta > 0.5):
        raise DomainError(
            f"example1 needs 0 < alpha < 1/2 and alpha + beta > 1/2, got alpha={alpha}, beta={beta}")

    def q1(t):
        return (1 + t * t) ** -alpha

    def dq1(t):
        return -2 * alpha * t * (1 + t * t) ** (-alpha - 1)

    def q2(t):
        s = 1 + t * t
        return np.cos(s ** beta) * s ** -alpha

    def q(t):
        s = 1 + t * t
        return (1 + np.cos(s ** beta)) * s ** -alpha

    def dq(t):
        s = 1 + t * t
        return (dq1(t) * (1 + np.cos(s ** beta))
                - s ** -alpha * np.sin(s ** beta) * beta * s ** (beta - 1) * 2 * t)

    def half_period(t):
        # the phase (1+t^2)^beta advances by pi over this length
        t = abs(t) + 1.0
        rate = 2 * beta * t * (1 + t * t) ** (beta - 1)
        return math.pi / rate / 4

    return CoefficientFunction(
        q, first_derivative=dq, parity="even",
        decomposition=Decomposition(SmoothPart(q1, dq1), q2),
        label=f"example1:{alpha:g}:{beta:g}",
        oscillation_scale=half_period,
    )


def catalog_example2() -> CoefficientFunction:
    """q(t) = 3t^2 - t sin t, split as (3t^2 + 1) + (-1 - t sin t)."""
    return CoefficientFunction(
        lambda t: 3 * t * t - t * np.sin(t),
        first_derivative=lambda t: 6 * t - np.sin(t) - t * np.cos(t),
        parity="even",
        decomposition=Decomposition(SmoothPart(lambda t: 3 * t * t + 1, lambda t: 6 * t),
                                    lambda t: -1 - t * np.sin(t)),
        label="example2",
    )


CATALOG_HELP = "const:<k>, square, example1:<alpha>:<beta>, example2"


def from_label(label: str) -> CoefficientFunction:
    """Resolve a catalog label such as ``const:1`` or ``example1:0.3:0.4``."""
    parts = label.strip().split(":")
    name, args = parts[0], parts[1:]
    try:
        if name == "const" and len(args) == 1:
            return constant(float(args[0]))
        if name == "square" and not args:
            return square()
        if name == "example1" and len(args) == 2:
            return catalog_example1(float(args[0]), float(args[1]))
        if name == "example2" and not args:
            return catalog_example2()
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise KeyError(f"malformed coefficient label {label!r}; catalog: {CATALOG_HELP}") from exc
    raise KeyError(f"unknown coefficient label {label!r}; catalog: {CATALOG_HELP}")


@dataclass(frozen=True, eq=False)
class UnimodalPair:
    """Nonincreasing u and nondecreasing v with u(+inf) = v(-inf) = 0.

    ``log_u``/``log_v`` are optional closed forms of log u and log v; when
    given they are used instead of ``np.log(u(t))`` to avoid underflow.
    """

    u: Callable
    v: Callable
    u_log_derivative: Callable
    v_log_derivative: Callable
    log_u: Optional[Callable] = None
    log_v: Optional[Callable] = None
    label: str = "pair"

    def __post_init__(self):
        for name in ("u", "v", "u_log_derivative", "v_log_derivative", "log_u", "log_v"):
            fn = getattr(self, name)
            if fn is not None:
                object.__setattr__(self, name, as_array_fn(fn))
        if self.log_u is None:
            object.__setattr__(self, "log_u", lambda t: np.log(self.u(t)))
        if self.log_v is None:
            object.__setattr__(self, "log_v", lambda t: np.log(self.v(t)))

    @classmethod
    def from_logs(cls, log_u, log_v, dlog_u, dlog_v, label="pair"):
        log_u, log_v = as_array_fn(log_u), as_array_fn(log_v)
        return cls(lambda t: np.exp(log_u(t)), lambda t: np.exp(log_v(t)),
                   dlog_u, dlog_v, log_u=log_u, log_v=log_v, label=label)

    def check(self, grid) -> list[str]:
        """Sampled checks of monotonicity and vanishing at the ends; returns problems."""
        grid = np.sort(np.asarray(grid, dtype=float))
        problems = []
        lu, lv = self.log_u(grid), self.log_v(grid)
        if np.any(np.diff(lu) > 1e-12 * (1 + np.abs(lu[1:]))):
            problems.append("u is not nonincreasing on the grid")
        if np.any(np.diff(lv) < -1e-12 * (1 + np.abs(lv[1:]))):
            problems.append("v is not nondecreasing on the grid")
        probes = np.array([1e1, 1e2, 1e3])
        if not np.all(np.diff(self.log_u(probes)) < 0) or self.log_u(probes)[-1] > -30:
            problems.append("u does not vanish at +infinity")
        if not np.all(np.diff(self.log_v(-probes)) < 0) or self.log_v(-probes)[-1] > -30:
            problems.append("v does not vanish at -infinity")
        return problems


def pair_exponential() -> UnimodalPair:
    return UnimodalPair.from_logs(lambda t: -t, lambda t: t,
                                  lambda t: -np.ones_like(t), lambda t: np.ones_like(t),
                                  label="exp")


def pair_cubic() -> UnimodalPair:
    return UnimodalPair.from_logs(lambda t: -t ** 3, lambda t: t ** 3,
                                  lambda t: -3 * t * t, lambda t: 3 * t * t, label="cubic")


def pair_cubic_linear() -> UnimodalPair:
    return UnimodalPair.from_logs(lambda t: -t ** 3 - t, lambda t: t ** 3 + t,
                                  lambda t: -3 * t * t - 1, lambda t: 3 * t * t + 1,
                                  label="cubic_linear")


PAIRS = {"exp": pair_exponential, "cubic": pair_cubic, "cubic_linear": pair_cubic_linear}
