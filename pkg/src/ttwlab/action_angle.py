"""Action-angle charts: Poschl-Teller, the free sphere and radial actions.

Angle orientation: every angle here increases along the flow of its
Hamiltonian, so with the momenta-first bracket the canonical pairs satisfy
{I, Phi} = +1 (the action plays the role of a momentum).

Poschl-Teller
-------------
I_PT = k^2 It^2 / 2 defines the shifted action It.  With u = cos(2 k phi) the
accessible interval is |u + b| <= a, where

    b = 2 (alpha^2 - beta^2) / It^2,   a = sqrt(b^2 + 1 - 4 (alpha^2 + beta^2) / It^2),

and the angle obeys a sin(-2 Phi) = u + b,  a cos(2 Phi) = p_phi sin(2 k phi) / (k It).
Only 2 Phi is a function on phase space: one libration of phi advances Phi by
pi, so Phi is returned on the principal sheet [0, pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BranchUndefined,
    DomainViolation,
    InvalidParams,
    NoTurningPoints,
    PolarSingularity,
    SingularPoint,
    UnboundedMotion,
)
from .models import Model, ModelSpec, PoschlTellerMixin, build
from .phase import Observable, PhasePoint

TWO_PI = 2 * math.pi


# ---------------------------------------------------------------------------
# Poschl-Teller


def _pt_model(m: Model) -> PoschlTellerMixin:
    if not isinstance(m, PoschlTellerMixin):
        raise InvalidParams(f"{m.family} has no Poschl-Teller angular part")
    return m


def _pt_coords(m: Model, q, p) -> tuple[float, float]:
    if m.chart == "angular":
        return q[0], p[0]
    return q[1], p[1]


@dataclass(frozen=True)
class PTActionAngle:
    shifted_action: float  # It, with sqrt(2 I_PT) = k It
    action: float  # It - alpha - beta
    angle: float  # Phi on [0, pi)
    two_angle: float  # 2 Phi on [0, 2 pi)
    a: float
    b: float


def pt_shifted_action_raw(m: Model, q, p) -> float:
    pt = _pt_model(m)
    phi, pphi = _pt_coords(m, q, p)
    return math.sqrt(2 * pt.I_pt(phi, pphi)) / pt.k


def pt_action(m: Model, s: PhasePoint) -> float:
    """It = sqrt(2 I_PT) / k."""
    if m.singular(s.q, s.p):
        raise SingularPoint(f"pt_action at a Poschl-Teller wall: {s}")
    return pt_shifted_action_raw(m, s.q, s.p)


def pt_aux(m: Model, It: float) -> tuple[float, float]:
    """(a, b) of the libration interval |cos(2 k phi) + b| <= a."""
    pt = _pt_model(m)
    b = 2 * (pt.alpha ** 2 - pt.beta ** 2) / It ** 2
    rad = b * b + 1 - 4 * (pt.alpha ** 2 + pt.beta ** 2) / It ** 2
    return math.sqrt(max(rad, 0.0)), b


def pt_two_angle_raw(m: Model, q, p) -> float:
    pt = _pt_model(m)
    phi, pphi = _pt_coords(m, q, p)
    It = math.sqrt(2 * pt.I_pt(phi, pphi)) / pt.k
    a, b = pt_aux(m, It)
    if a < 1e-7:  # a is the square root of a cancelling difference
        raise BranchUndefined("Poschl-Teller angle undefined at the bottom of the well (a = 0)")
    u = math.cos(2 * pt.k * phi)
    ang = math.atan2(-(u + b), pphi * math.sin(2 * pt.k * phi) / (pt.k * It))
    return ang % TWO_PI


def pt_angle(m: Model, s: PhasePoint) -> float:
    """Phi on the principal sheet [0, pi); see the module docstring."""
    if m.singular(s.q, s.p):
        raise SingularPoint(f"pt_angle at a Poschl-Teller wall: {s}")
    return pt_two_angle_raw(m, s.q, s.p) / 2


def pt_chart(m: Model, s: PhasePoint) -> PTActionAngle:
    It = pt_action(m, s)
    a, b = pt_aux(m, It)
    two = pt_two_angle_raw(m, s.q, s.p)
    pt = _pt_model(m)
    return PTActionAngle(It, It - pt.alpha - pt.beta, two / 2, two, a, b)


def lambda_var(m: Model, s: PhasePoint) -> float:
    """Lambda = Phi / k, defined modulo pi / k."""
    return pt_angle(m, s) / _pt_model(m).k


def pt_action_observable(m: Model) -> Observable:
    return Observable(lambda q, p: pt_shifted_action_raw(m, q, p), name="It", chart=m.chart, n=m.n,
                      singular=m.singular)


def pt_angle_observable(m: Model) -> Observable:
    return Observable(lambda q, p: pt_two_angle_raw(m, q, p) / 2, name="Phi", chart=m.chart, n=m.n,
                      singular=m.singular, period=math.pi)


def lambda_observable(m: Model) -> Observable:
    k = _pt_model(m).k
    return Observable(lambda q, p: pt_two_angle_raw(m, q, p) / (2 * k), name="Lambda", chart=m.chart, n=m.n,
                      singular=m.singular, period=math.pi / k)


def sqrt_2I_observable(m: Model) -> Observable:
    return Observable(lambda q, p: math.sqrt(2 * m.angular_energy(q, p)), name="sqrt(2I)", chart=m.chart,
                      n=m.n, singular=m.singular)


def pt_libration_action(m: Model, E: float, nodes: int = 200) -> float:
    """(1/2 pi) closed integral of p_phi d phi over one libration of energy E.

    Independent of the shifted normalization; used to pin the constant in
    It = 2 I_lib + sqrt(2) (alpha + beta).
    """
    pt = _pt_model(m)
    k = pt.k
    It = math.sqrt(2 * E) / k
    if It <= math.sqrt(2) * (pt.alpha + pt.beta):
        raise NoTurningPoints(f"E = {E} is not above the Poschl-Teller well bottom")
    a, b = pt_aux(m, It)
    # phi = arccos(u)/(2k) on the first wedge; substitute u = -b + a sin(t)
    x, w = np.polynomial.legendre.leggauss(nodes)
    t = x * math.pi / 2
    u = -b + a * np.sin(t)
    phi = np.arccos(np.clip(u, -1, 1)) / (2 * k)
    V = pt._A / np.sin(k * phi) ** 2 + pt._B / np.cos(k * phi) ** 2
    pphi = np.sqrt(np.maximum(2 * (E - V), 0.0))
    dphi_du = -1 / (2 * k * np.sqrt(1 - u * u))
    du_dt = a * np.cos(t)
    integral = float(np.sum(w * pphi * np.abs(dphi_du) * du_dt) * math.pi / 2)
    return 2 * integral / TWO_PI


# ---------------------------------------------------------------------------
# free sphere


@dataclass(frozen=True)
class SphereActionAngle:
    N: int
    actions: np.ndarray
    angles: np.ndarray
    j: np.ndarray  # nested squared angular momenta j_1..j_{N-1}
    angles_defined: bool = True

    @property
    def casimir(self) -> float:
        return 0.5 * float(np.sum(self.actions)) ** 2


def _sphere_raw(N: int, q, p, need_angles: bool = True):
    if N == 2:
        r, phi = q[0], q[1]
        pphi = p[1]
        I = abs(pphi)
        ang = (phi * math.copysign(1.0, pphi)) % TWO_PI
        return np.array([I]), np.array([ang]), np.array([pphi * pphi]), I > 0
    if N != 3:
        raise InvalidParams("sphere charts implemented for N in {2, 3}")
    r, th, phi = q
    pr, pth, pph = p
    st, ct = math.sin(th), math.cos(th)
    if abs(st) < 1e-12:
        raise PolarSingularity("sphere chart on the polar axis")
    j1 = pph * pph
    j2 = pth * pth + j1 / (st * st)
    L = math.sqrt(j2)
    I1 = abs(pph)
    acts = np.array([I1, L - I1])
    js = np.array([j1, j2])
    if not need_angles:
        return acts, np.array([math.nan, math.nan]), js, False
    cp, sp = math.cos(phi), math.sin(phi)
    xhat = np.array([st * cp, st * sp, ct])
    # J = x cross p, written in the spherical frame
    Jx = -sp * pth - cp * (ct / st) * pph
    Jy = cp * pth - sp * (ct / st) * pph
    Jz = pph
    perp = math.hypot(Jx, Jy)
    if L < 1e-12 or perp < 1e-12 * max(L, 1.0) or I1 < 1e-12:
        return acts, np.array([math.nan, math.nan]), js, False
    Jhat = np.array([Jx, Jy, Jz]) / L
    node = np.array([-Jy, Jx, 0.0]) / perp
    psi = math.atan2(float(xhat @ np.cross(Jhat, node)), float(xhat @ node))
    Om = math.atan2(node[1], node[0])
    sigma = math.copysign(1.0, pph)
    return acts, np.array([(psi + sigma * Om) % TWO_PI, psi % TWO_PI]), js, True


def sphere_actions(N: int, s: PhasePoint) -> SphereActionAngle:
    """Actions I_a = sqrt(j_a) - sqrt(j_{a-1}) and conjugate angles of the free sphere S^{N-1}.

    For N = 3, Phi_2 is the argument of latitude of the position in the orbit
    plane and Phi_1 = Phi_2 + sign(p_phi) * node longitude.  The angles are
    undefined (``angles_defined`` False, NaN) on equatorial or radial motion.
    """
    if s.n != N:
        raise InvalidParams(f"point of arity {s.n} is not on the N={N} radial chart")
    acts, angs, js, ok = _sphere_raw(N, s.q, s.p)
    return SphereActionAngle(N, acts, angs, js, ok)


def sphere_action_observable(N: int, a: int, chart: str) -> Observable:
    return Observable(lambda q, p: _sphere_raw(N, q, p, False)[0][a - 1], name=f"I{a}", chart=chart, n=N)


def sphere_angle_observable(N: int, a: int, chart: str) -> Observable:
    def func(q, p):
        v = _sphere_raw(N, q, p)[1][a - 1]
        if math.isnan(v):
            raise DomainViolation("sphere angle undefined at this point")
        return v
    return Observable(func, name=f"Phi{a}", chart=chart, n=N, period=TWO_PI)


# ---------------------------------------------------------------------------
# radial actions


@dataclass(frozen=True)
class RadialAction:
    value: float
    r_minus: float
    r_plus: float
    nodes: int
    error_estimate: float
    meta: dict = field(default_factory=dict)


def _radial_kind(m: Union[Model, ModelSpec]):
    if isinstance(m, ModelSpec):
        m = build(m)
    if m.radial_kind == "osc":
        w = m.omega
        return "osc", (lambda r: 0.5 * w * w * r * r), (lambda r: w * w * r)
    if m.radial_kind == "coul":
        g = m.gamma
        return "coul", (lambda r: -g / r), (lambda r: g / (r * r))
    raise InvalidParams(f"{m.family} has no bounded radial potential")


def radial_action(m: Union[Model, ModelSpec], E: float, L: float, tol: float = 1e-10,
                  start_nodes: int = 64, max_nodes: int = 4096) -> RadialAction:
    """I_r = (1/pi) int_{r-}^{r+} sqrt(2 (E - L^2/(2 r^2) - V(r))) dr by Gauss-Legendre.

    The substitution r = (r+ + r-)/2 + (r+ - r-)/2 sin(u) removes the square
    root endpoint singularities.
    """
    kind, V, dV = _radial_kind(m)
    if not L > 0:
        raise InvalidParams("radial_action needs L = sqrt(2 I) > 0")
    if kind == "coul" and E >= 0:
        raise UnboundedMotion(f"Coulomb motion with E = {E} >= 0 is unbounded")

    def veff(r):
        return L * L / (2 * r * r) + V(r)

    def dveff(r):
        return -L * L / r ** 3 + dV(r)

    lo, hi = 1e-8, 1.0
    while dveff(hi) < 0:
        hi *= 2
        if hi > 1e12:
            raise UnboundedMotion("effective potential has no minimum")
    r_star = brentq(dveff, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    vmin = veff(r_star)
    scale = max(abs(E), abs(vmin), 1e-300)
    if E < vmin - 1e-14 * scale:
        raise NoTurningPoints(f"E = {E} lies below the effective-potential minimum {vmin}")
    if E - vmin <= 1e-14 * scale:
        return RadialAction(0.0, r_star, r_star, 0, 0.0, {"circular": True})

    def f(r):
        return veff(r) - E

    a = r_star
    while f(a) < 0:
        a /= 2
    b = r_star
    while f(b) < 0:
        b *= 2
    rm = brentq(f, a, r_star, xtol=1e-15, rtol=1e-15, maxiter=500)
    rp = brentq(f, r_star, b, xtol=1e-15, rtol=1e-15, maxiter=500)
    c, h = (rp + rm) / 2, (rp - rm) / 2

    def quad(n):
        x, w = np.polynomial.legendre.leggauss(n)
        u = x * math.pi / 2
        r = c + h * np.sin(u)
        integrand = np.sqrt(np.maximum(2 * (E - veff(r)), 0.0)) * h * np.cos(u)
        return float(np.sum(w * integrand)) * (math.pi / 2) / math.pi

    n = start_nodes
    prev = quad(n)
    err = math.inf
    while n < max_nodes:
        n *= 2
        cur = quad(n)
        err = abs(cur - prev)
        prev = cur
        if err < tol * (1 + abs(cur)):
            break
    return RadialAction(prev, rm, rp, n, err, {"kind": kind})


def oscillator_energy(I_r: float, L: float, omega: float) -> float:
    return omega * (2 * I_r + L)


def coulomb_energy(I_r: float, L: float, gamma: float) -> float:
    return -gamma ** 2 / (2 * (I_r + L) ** 2)


def oscillator_radial_action_closed(E: float, L: float, omega: float) -> float:
    return (E / omega - L) / 2


def coulomb_radial_action_closed(E: float, L: float, gamma: float) -> float:
    return gamma / math.sqrt(-2 * E) - L


def frequency_ratio(m: Model, a: int = 1) -> float:
    """omega_a = d sqrt(2 I)/d I_a: k for the Poschl-Teller circle, 1 for the free sphere."""
    if isinstance(m, PoschlTellerMixin):
        return float(m.k)
    if m.chart in ("polar", "radial-angular"):
        return 1.0
    raise InvalidParams(f"{m.family} has no angular action chart")


def rational_ratio(value: float, max_den: int = 64, tol: float = 1e-12) -> Optional[tuple[int, int]]:
    """(n, m) with n/m == value, or None when value is not a small-denominator rational."""
    from fractions import Fraction

    fr = Fraction(value).limit_denominator(max_den)
    if abs(fr.numerator / fr.denominator - value) > tol * max(1.0, abs(value)):
        return None
    return fr.numerator, fr.denominator
