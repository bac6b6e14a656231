"""Canonical phase space, observables and the Poisson bracket.

Bracket convention: momenta come first,

    {f, g} = sum_i (df/dp_i dg/dq_i - df/dq_i dg/dp_i),

so that {p_i, q_j} = delta_ij and {p_r, r} = 1.  This is the transpose of the
more common {q, p} = 1 convention.  Time evolution is the usual
dq/dt = dH/dp, dp/dt = -dH/dq, which in this convention reads df/dt = {H, f}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import ChartMismatch, EmptyPointSet, NonFiniteGradient, SingularPoint

CHARTS = ("cartesian", "polar", "radial-angular", "angular")

Number = Union[float, complex]
GradFn = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
EvalFn = Callable[[np.ndarray, np.ndarray], Number]


@dataclass(frozen=True)
class PhasePoint:
    """A point (q, p) of a 2n-dimensional phase space in a named chart.

    ``polar`` is (r, phi | p_r, p_phi); ``radial-angular`` is
    (r, theta, phi | p_r, p_theta, p_phi); ``angular`` is the bare circle
    (phi | p_phi); ``cartesian`` is any (x_1..x_n | p_1..p_n).
    """

    chart: str
    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise ChartMismatch(f"unknown chart {self.chart!r}")
        q = np.array(self.q, dtype=float).reshape(-1)
        p = np.array(self.p, dtype=float).reshape(-1)
        if q.size == 0 or q.size != p.size:
            raise ValueError(f"q and p must have equal length n >= 1, got {q.size}, {p.size}")
        if self.chart == "polar" and q.size != 2:
            raise ChartMismatch("polar chart is two-dimensional")
        if self.chart == "radial-angular" and q.size != 3:
            raise ChartMismatch("radial-angular chart is (r, theta, phi)")
        if self.chart == "angular" and q.size != 1:
            raise ChartMismatch("angular chart is (phi, p_phi)")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.q.size

    def vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_vector(cls, chart: str, y: Sequence[float], t: float = 0.0) -> "PhasePoint":
        y = np.asarray(y, dtype=float)
        n = y.size // 2
        return cls(chart, y[:n], y[n:], t)

    def replace(self, q=None, p=None, t=None) -> "PhasePoint":
        return PhasePoint(
            self.chart,
            self.q if q is None else q,
            self.p if p is None else p,
            self.t if t is None else t,
        )


def fd_steps(x: np.ndarray) -> np.ndarray:
    """Central-difference step per component: max(1e-6, 1e-6 |x|)."""
    return np.maximum(1e-6, 1e-6 * np.abs(x))


def _wrap(d, period):
    return (d + period / 2) % period - period / 2


@dataclass(frozen=True)
class Observable:
    """A scalar (real or complex) function on phase space.

    ``func`` and ``grad`` take the raw arrays (q, p).  ``period`` marks an
    angle-valued observable; finite differences are then taken modulo the
    period so that a branch cut does not spoil the derivative.
    """

    func: EvalFn
    grad: Optional[GradFn] = None
    name: str = ""
    chart: Optional[str] = None
    n: Optional[int] = None
    singular: Optional[Callable[[np.ndarray, np.ndarray], bool]] = field(default=None, repr=False)
    period: Optional[float] = None

    def _check(self, s: PhasePoint):
        if self.chart is not None and s.chart != self.chart:
            raise ChartMismatch(f"{self.name or 'observable'} lives on chart {self.chart!r}, got {s.chart!r}")
        if self.n is not None and s.n != self.n:
            raise ChartMismatch(f"{self.name or 'observable'} has arity {self.n}, got {s.n}")
        if self.singular is not None and self.singular(s.q, s.p):
            raise SingularPoint(f"{self.name or 'observable'} is singular at q={s.q}, p={s.p}")

    def __call__(self, s: PhasePoint) -> Number:
        self._check(s)
        return self.func(s.q, s.p)

    def gradient(self, s: PhasePoint, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
        """Return (df/dq, df/dp); ``method`` is 'auto', 'analytic' or 'fd'."""
        self._check(s)
        if method == "analytic" or (method == "auto" and self.grad is not None):
            if self.grad is None:
                raise ValueError(f"{self.name} has no analytic gradient")
            gq, gp = self.grad(s.q, s.p)
            return np.asarray(gq), np.asarray(gp)
        return self.fd_gradient(s)

    def fd_gradient(self, s: PhasePoint) -> tuple[np.ndarray, np.ndarray]:
        y = s.vector()
        n = s.n
        h = fd_steps(y)
        out = []
        for i in range(y.size):
            yp = y.copy()
            ym = y.copy()
            yp[i] += h[i]
            ym[i] -= h[i]
            d = self.func(yp[:n], yp[n:]) - self.func(ym[:n], ym[n:])
            if self.period is not None:
                d = _wrap(d, self.period)
            out.append(d / (2 * h[i]))
        g = np.array(out)
        return g[:n], g[n:]

    # Algebra used by the Leibniz/antisymmetry properties and by composite constants.
    def _combine(self, other, op, dop, label):
        if not isinstance(other, Observable):
            c = other
            other = Observable(lambda q, p: c, lambda q, p: (np.zeros_like(q), np.zeros_like(p)), name=repr(c))
        f, g = self, other
        grad = None
        if f.grad is not None and g.grad is not None:
            def grad(q, p):
                return dop(f.func(q, p), f.grad(q, p), g.func(q, p), g.grad(q, p))
        sing = None
        if f.singular or g.singular:
            def sing(q, p):
                return bool((f.singular and f.singular(q, p)) or (g.singular and g.singular(q, p)))
        return Observable(
            lambda q, p: op(f.func(q, p), g.func(q, p)),
            grad,
            name=f"({f.name}{label}{g.name})",
            chart=f.chart or g.chart,
            n=f.n or g.n,
            singular=sing,
        )

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b,
                             lambda a, ga, b, gb: (ga[0] + gb[0], ga[1] + gb[1]), "+")

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b,
                             lambda a, ga, b, gb: (ga[0] - gb[0], ga[1] - gb[1]), "-")

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b,
                             lambda a, ga, b, gb: (b * ga[0] + a * gb[0], b * ga[1] + a * gb[1]), "*")

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def observable(func: EvalFn, grad: Optional[GradFn] = None, **kw) -> Observable:
    return Observable(func, grad, **kw)


def coordinate(i: int, **kw) -> Observable:
    def grad(q, p):
        gq = np.zeros_like(q)
        gq[i] = 1.0
        return gq, np.zeros_like(p)
    return Observable(lambda q, p: q[i], grad, name=f"q{i}", **kw)


def momentum(i: int, **kw) -> Observable:
    def grad(q, p):
        gp = np.zeros_like(p)
        gp[i] = 1.0
        return np.zeros_like(q), gp
    return Observable(lambda q, p: p[i], grad, name=f"p{i}", **kw)


def constant(c: Number, **kw) -> Observable:
    return Observable(lambda q, p: c, lambda q, p: (np.zeros_like(q), np.zeros_like(p)), name=repr(c), **kw)


def evaluate(f: Observable, s: PhasePoint) -> Number:
    return f(s)


def poisson_bracket(f: Observable, g: Observable, s: PhasePoint, method: str = "auto") -> Number:
    """{f, g}(s) with momenta first; see the module docstring."""
    fq, fp = f.gradient(s, method)
    gq, gp = g.gradient(s, method)
    val = np.sum(fp * gq) - np.sum(fq * gp)
    if not np.isfinite(val):
        raise NonFiniteGradient(f"non-finite bracket {{{f.name},{g.name}}} at {s}")
    return val.item() if hasattr(val, "item") else val


def bracket_observable(f: Observable, g: Observable, method: str = "auto") -> Observable:
    """{f, g} as an Observable (evaluated pointwise; no analytic gradient)."""
    def func(q, p):
        return poisson_bracket(f, g, PhasePoint(f.chart or g.chart or "cartesian", q, p), method)
    return Observable(func, name=f"{{{f.name},{g.name}}}", chart=f.chart or g.chart, n=f.n or g.n)


@dataclass(frozen=True)
class ResidualReport:
    """Max and mean of |{f,g} - rhs| / (1 + |rhs|) over a point set."""

    name: str
    max: float
    mean: float
    count: int
    worst_index: int

    def passed(self, tol: float) -> bool:
        return self.max < tol


def bracket_residual(
    lhs: tuple[Observable, Observable],
    rhs: Union[Observable, Callable[[PhasePoint], Number], Number],
    points: Sequence[PhasePoint],
    method: str = "auto",
    name: str = "",
) -> ResidualReport:
    if len(points) == 0:
        raise EmptyPointSet("bracket_residual needs at least one point")
    f, g = lhs
    res = []
    for s in points:
        lhs_val = poisson_bracket(f, g, s, method)
        rhs_val = rhs(s) if callable(rhs) else rhs
        res.append(abs(lhs_val - rhs_val) / (1.0 + abs(rhs_val)))
    res = np.array(res)
    return ResidualReport(
        name or f"{{{f.name},{g.name}}}", float(res.max()), float(res.mean()), len(res), int(res.argmax())
    )


def pointwise_residual(
    lhs: Callable[[PhasePoint], Number],
    rhs: Callable[[PhasePoint], Number],
    points: Sequence[PhasePoint],
    name: str = "",
) -> ResidualReport:
    """Same statistic as :func:`bracket_residual` for a plain identity lhs(s) = rhs(s)."""
    if len(points) == 0:
        raise EmptyPointSet("pointwise_residual needs at least one point")
    res = []
    for s in points:
        a = lhs(s)
        b = rhs(s)
        res.append(abs(a - b) / (1.0 + abs(b)))
    res = np.array(res)
    return ResidualReport(name, float(res.max()), float(res.mean()), len(res), int(res.argmax()))
