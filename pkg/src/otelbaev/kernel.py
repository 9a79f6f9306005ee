"""Kernel integrals I, J, S, the Green operator of -y' + q y = f, the weight
functional M, weighted L_p norms, and the homogeneous solution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .averages import d_values
from .coefficient import CoefficientFunction, DomainError
from .parallel import ordered_map
from .quadrature import (DEFAULT_CONFIG, QuadratureConfig, as_array_fn,
                         integrate_adaptive, truncated_exp_integral)

_GL10_X, _GL10_W = np.polynomial.legendre.leggauss(10)


@dataclass(frozen=True)
class SpaceParams:
    """Exponent p >= 1 and positive weight theta of L_{p,theta}."""

    p: float
    theta: Callable = field(default=lambda t: np.ones_like(t))
    theta_label: str = "one"

    def __post_init__(self):
        if not self.p >= 1:
            raise DomainError("p must be >= 1")
        object.__setattr__(self, "theta", as_array_fn(self.theta))

    @property
    def p_conjugate(self) -> float:
        return math.inf if self.p == 1 else self.p / (self.p - 1)

    @property
    def inv_p_conjugate(self) -> float:
        return 1.0 - 1.0 / self.p


def qstar_weight(q: CoefficientFunction) -> Callable:
    """theta = q* = 1/d as a vectorized weight."""
    return lambda t: 1.0 / d_values(q, t)


def space(p: float, theta: str, q: Optional[CoefficientFunction] = None) -> SpaceParams:
    if theta == "one":
        return SpaceParams(p)
    if theta == "qstar":
        if q is None:
            raise ValueError("theta=qstar needs a coefficient")
        return SpaceParams(p, qstar_weight(q), "qstar")
    raise ValueError(f"unknown weight {theta!r}; use 'one' or 'qstar'")


# --------------------------------------------------------------------------
# data functions f

@dataclass(frozen=True)
class DataFunction:
    """Right-hand side f with a (possibly effective) support and kink points."""

    name: str
    func: Callable
    support: Optional[tuple] = None
    breakpoints: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "func", as_array_fn(self.func))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.func(t)
        if self.support is not None:
            out = np.where((t >= self.support[0]) & (t <= self.support[1]), out, 0.0)
        return out

    def scaled(self, c: float) -> "DataFunction":
        return DataFunction(f"{c:g}*{self.name}", lambda t: c * self.func(t),
                            self.support, self.breakpoints)


def as_data(f) -> DataFunction:
    return f if isinstance(f, DataFunction) else DataFunction("f", f)


def indicator(a: float, b: float) -> DataFunction:
    return DataFunction(f"ind[{a:g},{b:g}]", lambda t: np.ones_like(t), (a, b), (a, b))


def gaussian(center: float = 0.0) -> DataFunction:
    # exp(-81) ~ 6.6e-36 at the ends of the effective support
    return DataFunction(f"gauss@{center:g}", lambda t: np.exp(-(t - center) ** 2),
                        (center - 9.0, center + 9.0), ())


def triangle(center: float = 0.0, half_width: float = 1.0) -> DataFunction:
    c, h = center, half_width
    return DataFunction(f"tri@{c:g}", lambda t: np.maximum(0.0, 1.0 - np.abs(t - c) / h),
                        (c - h, c + h), (c - h, c, c + h))


def bump(center: float = 0.0, radius: float = 1.0) -> DataFunction:
    """The smooth bump exp(1 - 1/(1 - s^2)), s = (t - center)/radius."""
    def f(t):
        s = (t - center) / radius
        inside = np.abs(s) < 1
        s2 = np.where(inside, s * s, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - s2)), 0.0)
    return DataFunction(f"bump@{center:g}", f, (center - radius, center + radius), ())


def zero() -> DataFunction:
    return DataFunction("zero", lambda t: np.zeros_like(t), (0.0, 0.0), ())


# fixed and versioned: changing it breaks comparability of admissibility constants
ADMISSIBILITY_FAMILY_VERSION = 1


def admissibility_family() -> list:
    return [indicator(0, 1), indicator(-1, 1), gaussian(0), triangle(0),
            gaussian(5), gaussian(-5), triangle(10), triangle(-10)]


FAMILY_BY_NAME = {
    "ind01": lambda: indicator(0, 1),
    "ind11": lambda: indicator(-1, 1),
    "gauss": lambda: gaussian(0),
    "tri": lambda: triangle(0),
    "bump": lambda: bump(0),
}


# --------------------------------------------------------------------------
# kernel integrals

def J_of_x(q: CoefficientFunction, x: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """int_x^inf exp(-int_x^t q) dt."""
    return truncated_exp_integral(lambda t: q.cumulative.integral(x, t), x, "+", cfg).value


def I_of_x(q: CoefficientFunction, x: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """int_-inf^x exp(-int_t^x q) dt."""
    return truncated_exp_integral(lambda t: q.cumulative.integral(t, x), x, "-", cfg).value


def S_of_x(q: CoefficientFunction, x: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """int exp(-|int_x^t q|) dt over the line, split at t = x."""
    return I_of_x(q, x, cfg) + J_of_x(q, x, cfg)


@dataclass
class KernelProfile:
    x: np.ndarray
    d: np.ndarray
    I: np.ndarray
    J: np.ndarray

    @property
    def q_star(self):
        return 1.0 / self.d

    @property
    def S(self):
        return self.I + self.J

    COLUMNS = ("x", "d", "q_star", "I", "J", "S", "J_over_d", "I_over_d", "S_over_d")

    def rows(self):
        S = self.S
        for i in range(self.x.size):
            d = self.d[i]
            yield (self.x[i], d, 1.0 / d, self.I[i], self.J[i], S[i],
                   self.J[i] / d, self.I[i] / d, S[i] / d)


def kernel_profile(q: CoefficientFunction, xs, cfg: QuadratureConfig = DEFAULT_CONFIG) -> KernelProfile:
    xs = np.asarray(xs, dtype=float)
    d = d_values(q, xs)
    q.cumulative.prebuild(float(xs.min()) - 1.0, float(xs.max()) + 1.0)
    I = np.array(ordered_map(lambda x: I_of_x(q, x, cfg), xs))
    J = np.array(ordered_map(lambda x: J_of_x(q, x, cfg), xs))
    return KernelProfile(xs, d, I, J)


# --------------------------------------------------------------------------
# Green operator

def green_apply(q: CoefficientFunction, f, x: float,
                cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """(Gf)(x) = int_x^inf exp(-int_x^t q) f(t) dt, truncated like J."""
    f = as_data(f)
    stop = f.support[1] if f.support is not None else None
    if stop is not None and stop <= x:
        return 0.0
    points = tuple(f.breakpoints)
    if f.support is not None:
        points += (f.support[0],)
    res = truncated_exp_integral(lambda t: q.cumulative.integral(x, t), x, "+", cfg,
                                 weight=f, stop=stop, points=points)
    return res.value


def green_residuals(q: CoefficientFunction, f, xs, h: float = 1e-4,
                    cfg: QuadratureConfig = DEFAULT_CONFIG):
    """y = Gf on ``xs`` and the pointwise residual |-y' + q y - f| with a
    central difference of step ``h``."""
    f = as_data(f)
    xs = np.asarray(xs, dtype=float)
    y = np.array([green_apply(q, f, x, cfg) for x in xs])
    yp = np.array([green_apply(q, f, x + h, cfg) for x in xs])
    ym = np.array([green_apply(q, f, x - h, cfg) for x in xs])
    deriv = (yp - ym) / (2 * h)
    res = np.abs(-deriv + np.asarray(q(xs)) * y - f(xs))
    return y, res


def residual_check(q: CoefficientFunction, f, x_grid, h: float = 1e-4,
                   cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    return float(np.max(green_residuals(q, f, x_grid, h, cfg)[1]))


def M_of_x(q: CoefficientFunction, theta: Callable, x: float,
           cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """int_-inf^x theta(t) exp(-int_t^x q) dt."""
    return truncated_exp_integral(lambda t: q.cumulative.integral(t, x), x, "-", cfg,
                                  weight=theta).value


def sup_M(q: CoefficientFunction, theta: Callable, grid,
          cfg: QuadratureConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """Largest M over the grid and where it occurs."""
    vals = [M_of_x(q, theta, x, cfg) for x in grid]
    i = int(np.argmax(vals))
    return float(vals[i]), float(grid[i])


# --------------------------------------------------------------------------
# norms

def lp_theta_norm(f, sp: SpaceParams, window: float,
                  cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """(int_{-window}^{window} |theta f|^p)^{1/p}."""
    if not window > 0:
        raise DomainError("window must be positive")
    f = as_data(f)
    a, b = -window, window
    if f.support is not None:
        a, b = max(a, f.support[0]), min(b, f.support[1])
        if b <= a:
            return 0.0
    val, _ = integrate_adaptive(lambda t: np.abs(sp.theta(t) * f(t)) ** sp.p, a, b, cfg,
                                points=f.breakpoints)
    return val ** (1.0 / sp.p)


def _mass_grid(q: CoefficientFunction, a: float, b: float, step: float,
               max_width: float, extra: Sequence[float] = ()) -> np.ndarray:
    """Edges of [a, b] such that each piece carries at most ~step of q-mass and
    is at most max_width long."""
    base = q.cumulative.prebuild(a, b).edges
    edges = np.unique(np.concatenate([[a, b], base[(base > a) & (base < b)],
                                      [e for e in extra if a < e < b]]))
    for _ in range(3):
        w = np.diff(edges)
        m = np.abs(np.atleast_1d(q.cumulative.integral(edges[:-1], edges[1:])))
        pieces = np.maximum(np.ceil(m / step), np.ceil(w / max_width)).astype(int)
        pieces = np.maximum(pieces, 1)
        if np.all(pieces == 1):
            break
        frac = np.concatenate([np.arange(k) / k for k in pieces])
        left = np.repeat(edges[:-1], pieces) + np.repeat(w, pieces) * frac
        edges = np.append(left, b)
    return edges


def _gl_nodes(edges: np.ndarray):
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    return mid[:, None] + half[:, None] * _GL10_X, half[:, None] * _GL10_W


@dataclass
class GreenTrace:
    """y = Gf sampled at Gauss nodes of a mass-adapted grid on the support of f."""

    edges: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    y_nodes: np.ndarray
    y_edges: np.ndarray
    _theta_cache: dict = field(default_factory=dict, repr=False)

    def theta_at_nodes(self, sp: SpaceParams) -> np.ndarray:
        key = id(sp.theta)
        if key not in self._theta_cache:
            self._theta_cache[key] = (sp.theta, sp.theta(self.nodes.ravel()).reshape(self.nodes.shape))
        return self._theta_cache[key][1]


def green_trace(q: CoefficientFunction, f: DataFunction, a: float, b: float,
                step: float = 2.0) -> GreenTrace:
    """Evaluate Gf on [a, b] for f vanishing beyond b, by backward recursion
    over pieces with bounded q-mass (all exponentials have nonpositive
    arguments, so nothing overflows)."""
    edges = _mass_grid(q, a, b, step, max(min(0.25, (b - a) / 8), 1e-12), f.breakpoints)
    nodes, weights = _gl_nodes(edges)
    npiece = edges.size - 1
    # A_k = int over piece k of exp(-int_{e_k}^t q) f(t) dt ; D_k = exp(-int_piece q)
    E_nodes = q.cumulative.integral(edges[:-1, None], nodes)
    A = np.sum(weights * np.exp(-E_nodes) * f(nodes), axis=1)
    D = np.exp(-np.atleast_1d(q.cumulative.integral(edges[:-1], edges[1:])))
    y_edges = np.zeros(npiece + 1)
    for k in range(npiece - 1, -1, -1):
        y_edges[k] = A[k] + D[k] * y_edges[k + 1]
    # inside piece k at node x: y = exp(-int_x^{e_{k+1}} q) y_{k+1} + int_x^{e_{k+1}} e^{-int_x^t q} f
    right = edges[1:, None]
    half = 0.5 * (right - nodes)
    inner = (0.5 * (nodes + right))[..., None] + half[..., None] * _GL10_X
    E_inner = q.cumulative.integral(nodes[..., None], inner)
    tail = np.sum(half[..., None] * _GL10_W * np.exp(-E_inner) * f(inner), axis=2)
    decay = np.exp(-q.cumulative.integral(nodes, np.broadcast_to(right, nodes.shape)))
    y_nodes = tail + decay * y_edges[1:, None]
    return GreenTrace(edges, nodes, weights, y_nodes, y_edges)


@dataclass
class GreenNorm:
    name: str
    norm_y: float
    norm_f: float

    @property
    def ratio(self) -> float:
        return self.norm_y / self.norm_f


def green_weighted_norm(q: CoefficientFunction, f: DataFunction, sp: SpaceParams,
                        window: float, cfg: QuadratureConfig = DEFAULT_CONFIG,
                        trace: Optional[GreenTrace] = None) -> float:
    """||Gf||_{p,theta} restricted to [-window, window], for f with bounded support."""
    if f.support is None:
        raise ValueError("green_weighted_norm needs f with a (effective) bounded support")
    s0, s1 = f.support
    a, b = max(s0, -window), min(s1, window)
    total = 0.0
    y_a = 0.0
    if b > a:
        if trace is None:
            trace = green_trace(q, f, s0, s1)
        inside = (trace.nodes >= a) & (trace.nodes <= b)
        th = trace.theta_at_nodes(sp)
        # pieces straddling a or b only occur when the window cuts the support
        total += float(np.sum(np.where(inside, trace.weights * np.abs(th * trace.y_nodes) ** sp.p, 0.0)))
        y_a = float(np.interp(a, trace.edges, trace.y_edges))
    elif s0 >= window:
        return 0.0
    else:
        y_a = green_apply(q, f, a, cfg)
    if a > -window and y_a != 0.0:
        p = sp.p
        left = truncated_exp_integral(lambda t: p * q.cumulative.integral(t, a), a, "-", cfg,
                                      weight=lambda t: sp.theta(t) ** p, stop=-window)
        total += abs(y_a) ** p * left.value
    return total ** (1.0 / sp.p)


@dataclass
class AdmissibilityEstimate:
    c_estimate: float
    per_f: list            # GreenNorm records
    skipped: list = field(default_factory=list)


def admissibility_estimate(q: CoefficientFunction, sp: SpaceParams, f_family: Sequence,
                           window: float, cfg: QuadratureConfig = DEFAULT_CONFIG,
                           traces: Optional[dict] = None) -> AdmissibilityEstimate:
    """max over the family of ||Gf||_{p,theta} / ||f||_p on [-window, window].

    ``traces`` (name -> GreenTrace) lets callers reuse Gf across p and windows.
    """
    per_f, skipped = [], []
    unit = SpaceParams(sp.p)
    for f in f_family:
        f = as_data(f)
        nf = lp_theta_norm(f, unit, window, cfg)
        if nf == 0.0:
            skipped.append(f"{f.name}: zero norm")
            continue
        tr = None
        if traces is not None:
            tr = traces.get(f.name)
            if tr is None:
                tr = traces[f.name] = green_trace(q, f, *f.support)
        ny = green_weighted_norm(q, f, sp, window, cfg, trace=tr)
        per_f.append(GreenNorm(f.name, ny, nf))
    c = max((g.ratio for g in per_f), default=0.0)
    return AdmissibilityEstimate(c, per_f, skipped)


@dataclass
class PointwiseBound:
    C: float
    ratios: np.ndarray
    norm_f: float


def pointwise_bound_check(q: CoefficientFunction, f, sp: SpaceParams, x_grid,
                          cfg: QuadratureConfig = DEFAULT_CONFIG) -> PointwiseBound:
    """Smallest C with |Gf(x)| <= C d(x)^{1/p'} ||f||_p on the grid."""
    f = as_data(f)
    xs = np.asarray(x_grid, dtype=float)
    window = max(abs(f.support[0]), abs(f.support[1])) if f.support else 1e3
    nf = lp_theta_norm(f, SpaceParams(sp.p), max(window, 1e-12), cfg)
    if nf == 0.0:
        return PointwiseBound(0.0, np.zeros(xs.size), 0.0)
    y = np.array([green_apply(q, f, x, cfg) for x in xs])
    d = d_values(q, xs)
    ratios = np.abs(y) / (d ** sp.inv_p_conjugate * nf)
    return PointwiseBound(float(ratios.max()), ratios, nf)


# --------------------------------------------------------------------------
# homogeneous solution z = alpha exp(int_{x0}^x q)

class ZValue(NamedTuple):
    value: float
    log_abs: float


def homogeneous_z(q: CoefficientFunction, x0: float, alpha: float, x: float) -> ZValue:
    if alpha == 0:
        return ZValue(0.0, -math.inf)
    log_abs = math.log(abs(alpha)) + float(q.cumulative.integral(x0, x))
    try:
        value = math.copysign(math.exp(log_abs), alpha)
    except OverflowError:
        value = math.copysign(math.inf, alpha)
    return ZValue(value, log_abs)


def log_weighted_norm_z(q: CoefficientFunction, sp: SpaceParams, window: float,
                        alpha: float = 1.0, x0: float = 0.0) -> float:
    """log ||z||_{p,theta} over [-window, window], computed by log-sum-exp."""
    if alpha == 0:
        return -math.inf
    p = sp.p
    edges = _mass_grid(q, -window, window, 0.5 / p, max(window / 64, 1e-6))
    nodes, weights = _gl_nodes(edges)
    expo = p * (math.log(abs(alpha)) + q.cumulative.integral(x0, nodes)) \
        + p * np.log(sp.theta(nodes.ravel()).reshape(nodes.shape)) + np.log(weights)
    top = float(np.max(expo))
    return (top + math.log(float(np.sum(np.exp(expo - top))))) / p


@dataclass
class DivergenceReport:
    windows: list
    log_norms: list
    strictly_increasing: bool
    unbounded: bool
    trivial: bool = False
    ratio_floor: float = 2.0

    @property
    def log_ratios(self):
        return list(np.diff(self.log_norms)) if not self.trivial else []


def homogeneous_divergence_check(q: CoefficientFunction, sp: SpaceParams, windows: Sequence[float],
                                 alpha: float = 1.0, x0: float = 0.0,
                                 ratio_floor: float = 2.0) -> DivergenceReport:
    """Norms of the homogeneous solution over growing windows.

    Growth by at least ``ratio_floor`` per window step is read as "z is not in
    L_{p,theta}", so only alpha = 0 gives a solution in the space.
    """
    windows = list(windows)
    if alpha == 0:
        return DivergenceReport(windows, [-math.inf] * len(windows), False, False, True, ratio_floor)
    logs = [log_weighted_norm_z(q, sp, w, alpha, x0) for w in windows]
    steps = np.diff(logs)
    return DivergenceReport(windows, logs, bool(np.all(steps > 0)),
                            bool(np.all(steps >= math.log(ratio_floor))), False, ratio_floor)
