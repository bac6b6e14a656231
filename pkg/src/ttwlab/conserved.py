"""Hidden constants of motion, their cross-identities and drift along trajectories.

Notation used below: L = sqrt(2 I) (I the angular energy), z the Klein
coordinate, M = z / sqrt(2 Im z), and for Poschl-Teller models 2 Phi the
single-valued double angle from :mod:`ttwlab.action_angle`.

Several constants need e^{i Phi} with Phi itself only defined modulo pi
(e.g. the PW constant).  Such constants are evaluated pointwise on the
principal sheet and, along a trajectory, with the angle lifted continuously
(unwrap 2 Phi, then halve).  The ``lifted`` flag marks them.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .action_angle import (
    _sphere_raw,
    frequency_ratio,
    pt_aux,
    pt_shifted_action_raw,
    pt_two_angle_raw,
    rational_ratio,
)
from .conformal import _z_raw
from .errors import DomainViolation, EmptyTrajectory, InvalidParams, NonRationalFrequency
from .models import Model, PoschlTellerMixin
from .phase import Observable, PhasePoint, ResidualReport, pointwise_residual

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class HiddenConstant:
    """A (possibly complex) constant of motion of one model.

    ``func(q, p, angle)`` receives the angle returned by ``angle(q, p)``
    (a 2 pi periodic quantity), or its continuous lift along a trajectory.
    ``lifted`` says whether the value depends on that lift.
    """

    name: str
    model: Model
    func: Callable
    angle: Optional[Callable] = None
    lifted: bool = False
    note: str = ""

    def _args(self, q, p):
        return self.func(q, p, None if self.angle is None else self.angle(q, p))

    def __call__(self, s: PhasePoint):
        if s.chart != self.model.chart:
            raise DomainViolation(f"{self.name} lives on chart {self.model.chart!r}, got {s.chart!r}")
        if self.model.singular(s.q, s.p):
            raise DomainViolation(f"{self.name} at a singular point {s}")
        return self._args(s.q, s.p)

    def observable(self) -> Observable:
        return Observable(self._args, name=self.name, chart=self.model.chart, n=self.model.n,
                          singular=self.model.singular)

    def along(self, y: np.ndarray) -> np.ndarray:
        """Values at the rows of y (shape (T, 2n)), lifting the angle continuously."""
        n = self.model.n
        if self.angle is None:
            return np.array([self.func(r[:n], r[n:], None) for r in y])
        ang = np.unwrap(np.array([self.angle(r[:n], r[n:]) for r in y]))
        return np.array([self.func(r[:n], r[n:], a) for r, a in zip(y, ang)])


# ---------------------------------------------------------------------------
# building blocks


def _L(m: Model, q, p) -> float:
    i_ang = m.angular_energy(q, p)
    if not i_ang > 0:
        raise DomainViolation(f"angular energy must be positive, got {i_ang}")
    return math.sqrt(2 * i_ang)


def _osc_factor(m: Model, q, p, omega: float) -> complex:
    """(z^2 + omega^2) / (i (zbar - z))."""
    z = _z_raw(m, q, p)
    return (z * z + omega * omega) / (2 * z.imag)


def _coul_factor(m: Model, q, p, gamma: float, variant: str = "rl") -> complex:
    """M - i gamma c(L); the variants differ only in c(L)."""
    z = _z_raw(m, q, p)
    M = z / math.sqrt(2 * z.imag)
    L = _L(m, q, p)
    if variant == "rl":
        return M - 1j * gamma / math.sqrt(2 * L ** 3)
    if variant == "8L":
        return M - 1j * gamma / (8 * L) ** 1.5
    if variant == "bare":
        return M + 1j * gamma
    raise ValueError(f"unknown Coulomb coefficient variant {variant!r}")


def _pt(m: Model) -> PoschlTellerMixin:
    if not isinstance(m, PoschlTellerMixin) or m.chart != "polar":
        raise InvalidParams(f"{m.family} is not a polar Poschl-Teller model")
    return m


def _two_phi(m):
    return lambda q, p: pt_two_angle_raw(m, q, p)


def _sphere_angle(m: Model, a: int):
    N = m.n

    def ang(q, p):
        v = _sphere_raw(N, q, p)[1][a - 1]
        if math.isnan(v):
            raise DomainViolation("sphere angle undefined at this point")
        return v
    return ang


# ---------------------------------------------------------------------------
# Liouville constants


def energy(m: Model) -> HiddenConstant:
    return HiddenConstant("H", m, lambda q, p, _: m.H(q, p))


def angular_energy(m: Model) -> HiddenConstant:
    name = "I_PT" if isinstance(m, PoschlTellerMixin) else "I"
    return HiddenConstant(name, m, lambda q, p, _: m.angular_energy(q, p))


def sphere_action(m: Model, a: int) -> HiddenConstant:
    return HiddenConstant(f"I{a}", m, lambda q, p, _: float(_sphere_raw(m.n, q, p, False)[0][a - 1]))


# ---------------------------------------------------------------------------
# TTW and PW


def m_ttw(m: Model, omega: Optional[float] = None) -> HiddenConstant:
    """((z^2 + omega^2)/(i(zbar - z)))^k e^{2 i Phi}.

    ``omega`` overrides the frequency inside the formula only (negative control).
    """
    pt = _pt(m)
    w = m.omega if omega is None else float(omega)
    k = pt.k

    def f(q, p, two):
        return _osc_factor(m, q, p, w) ** k * cmath.exp(1j * two)
    return HiddenConstant("M_TTW" if omega is None else f"M_TTW[omega={w}]", m, f, _two_phi(m))


def m_pw(m: Model, variant: str = "rl") -> HiddenConstant:
    """(M - i gamma / sqrt(2 L^3))^k e^{i Phi}, Phi lifted along trajectories."""
    pt = _pt(m)
    k = pt.k
    g = m.gamma

    def f(q, p, two):
        return _coul_factor(m, q, p, g, variant) ** k * cmath.exp(0.5j * two)
    name = "M_PW" if variant == "rl" else f"M_PW[{variant}]"
    return HiddenConstant(name, m, f, _two_phi(m), lifted=True)


def ranada_N(m: Model, q, p, printed: bool = False) -> complex:
    """N = c + 2 I_PT cos 2k phi + i sqrt(2 I_PT) p_phi sin 2k phi.

    c = 2 k^2 (alpha^2 - beta^2) makes N proportional to e^{2 i Phi};
    ``printed`` uses c = k (beta - alpha) instead.
    """
    pt = _pt(m)
    k = pt.k
    phi, pphi = q[1], p[1]
    I = pt.I_pt(phi, pphi)
    c = k * (pt.beta - pt.alpha) if printed else 2 * k * k * (pt.alpha ** 2 - pt.beta ** 2)
    return c + 2 * I * math.cos(2 * k * phi) + 1j * math.sqrt(2 * I) * pphi * math.sin(2 * k * phi)


def ranada_M0_ttw(m: Model, q, p, printed: bool = False) -> complex:
    """(2 p_r / r) L + 2 i (H - 2 I_PT / r^2); ``printed`` drops the -2 I_PT / r^2 term."""
    r, pr = q[0], p[0]
    I = m.angular_energy(q, p)
    H = m.H(q, p)
    im = H if printed else H - 2 * I / (r * r)
    return 2 * pr / r * math.sqrt(2 * I) + 2j * im


def ranada_M0_pw(m: Model, q, p) -> complex:
    r, pr = q[0], p[0]
    I = m.angular_energy(q, p)
    return pr * math.sqrt(2 * I) + 1j * (m.gamma - 2 * I / r)


def ranada_ttw(m: Model, printed: bool = False) -> HiddenConstant:
    """R_TTW = conj(M0)^{2k} N^2; ``printed`` gives conj(M0)^k N^2 with the printed M0 and N."""
    k = _pt(m).k
    e = k if printed else 2 * k

    def f(q, p, _):
        return ranada_M0_ttw(m, q, p, printed).conjugate() ** e * ranada_N(m, q, p, printed) ** 2
    return HiddenConstant("R_TTW[printed]" if printed else "R_TTW", m, f)


def ranada_pw(m: Model, printed: bool = False) -> HiddenConstant:
    """conj(M0)^{2k} N; ``printed`` uses the exponent k and the printed constant in N."""
    k = _pt(m).k
    e = k if printed else 2 * k

    def f(q, p, _):
        return ranada_M0_pw(m, q, p).conjugate() ** e * ranada_N(m, q, p, printed)
    return HiddenConstant("R_PW[printed]" if printed else "R_PW", m, f)


def ttw_constants(m: Model) -> list[HiddenConstant]:
    return [energy(m), angular_energy(m), m_ttw(m), ranada_ttw(m)]


def pw_constants(m: Model) -> list[HiddenConstant]:
    return [energy(m), angular_energy(m), m_pw(m), ranada_pw(m)]


def ranada_prefactor_ttw(m: Model, s: PhasePoint) -> dict:
    """Closed forms of R_TTW in terms of M_TTW at s.

    derived:  R_TTW = (-1)^{k+1} 4^k a^2 L^{2k+4} M_TTW^2
    printed:  K = -a^2 (2 k It)^{2k+4} / 16 * conj(M_TTW)^2
    """
    pt = _pt(m)
    k = pt.k
    It = pt_shifted_action_raw(m, s.q, s.p)
    a, _ = pt_aux(m, It)
    L = k * It
    return {"derived_vs_M2": (-1) ** (k + 1) * 4 ** k * a * a * L ** (2 * k + 4),
            "printed_vs_Mbar2": -a * a * (2 * L) ** (2 * k + 4) / 16, "a": a, "L": L}


def ranada_prefactor_pw(m: Model, s: PhasePoint) -> dict:
    """derived: R_PW = i a 2^k L^{3k+2} M_PW^2;  printed: K = -i a L^{2k+2} conj(M_PW)^2."""
    pt = _pt(m)
    k = pt.k
    It = pt_shifted_action_raw(m, s.q, s.p)
    a, _ = pt_aux(m, It)
    L = k * It
    return {"derived_vs_M2": 1j * a * 2 ** k * L ** (3 * k + 2),
            "printed_vs_Mbar2": -1j * a * L ** (2 * k + 2), "a": a, "L": L}


# ---------------------------------------------------------------------------
# N-dimensional oscillator and Coulomb


def _radial_free(m: Model, kind: str):
    if m.n not in (2, 3) or m.chart not in ("polar", "radial-angular") or isinstance(m, PoschlTellerMixin):
        raise InvalidParams(f"{m.family} is not an oscillator/Coulomb model with a free-sphere angular part")
    if m.radial_kind != kind:
        raise InvalidParams(f"{m.family} has radial potential {m.radial_kind!r}, expected {kind!r}")


def m_osc_nd(m: Model, a: int = 1, form: str = "z") -> HiddenConstant:
    """Per-angle oscillator constant F e^{2 i Phi_a}.

    form 'z':  F = (z^2 + omega^2)/(i (zbar - z))
    form 'MK': F = M^2 + omega^2 K  (agrees with 'z' only where sqrt(2 I) = 1)
    """
    _radial_free(m, "osc")
    w = m.omega
    ang = _sphere_angle(m, a)

    def f(q, p, phi):
        if form == "z":
            F = _osc_factor(m, q, p, w)
        elif form == "MK":
            z = _z_raw(m, q, p)
            F = z * z / (2 * z.imag) + w * w * q[0] ** 2 / 2
        else:
            raise ValueError(f"unknown oscillator form {form!r}")
        return F * cmath.exp(2j * phi)
    return HiddenConstant(f"M_osc[{a}]" + ("" if form == "z" else f"[{form}]"), m, f, ang)


def m_coul_nd(m: Model, a: int = 1, variant: str = "rl") -> HiddenConstant:
    """Per-angle Coulomb constant (M - i gamma c(L)) e^{i Phi_a}; see :func:`coulomb_variants`."""
    _radial_free(m, "coul")
    g = m.gamma
    ang = _sphere_angle(m, a)

    def f(q, p, phi):
        return _coul_factor(m, q, p, g, variant) * cmath.exp(1j * phi)
    return HiddenConstant(f"M_Coul[{a}]" + ("" if variant == "rl" else f"[{variant}]"), m, f, ang)


COULOMB_VARIANTS = {
    "rl": "M - i gamma / sqrt(2 L^3)",
    "8L": "M - i gamma / (8 L)^(3/2)",
    "bare": "M + i gamma",
}

OSCILLATOR_FORMS = {
    "z": "(z^2 + omega^2)/(i(zbar - z))",
    "MK": "M^2 + omega^2 K",
}


def nd_constants(m: Model) -> list[HiddenConstant]:
    out = [energy(m), angular_energy(m)]
    out += [sphere_action(m, a) for a in range(1, m.n)]
    make = m_osc_nd if m.radial_kind == "osc" else m_coul_nd
    out += [make(m, a) for a in range(1, m.n)]
    return out


def _xy(q, p):
    r, phi = q
    pr, pphi = p
    c, s = math.cos(phi), math.sin(phi)
    return r * c, r * s, pr * c - pphi * s / r, pr * s + pphi * c / r


def demkov_form(m: Model, q, p, printed: bool = False) -> complex:
    """(H_11 - H_22 + 2 i H_12) / (2 |p_phi|) with H_ab = p_a p_b + omega^2 x_a x_b.

    Conjugated for p_phi < 0 so that it matches the z-form with Phi = phi sign(p_phi).
    ``printed`` drops the factor 2 and the conjugation.
    """
    w = m.omega
    x, y, px, py = _xy(q, p)
    h11 = px * px + w * w * x * x
    h22 = py * py + w * w * y * y
    h12 = px * py + w * w * x * y
    pphi = p[1]
    if printed:
        return complex(h11 - h22, 2 * h12) / abs(pphi)
    v = complex(h11 - h22, 2 * h12) / (2 * abs(pphi))
    return v if pphi > 0 else v.conjugate()


def runge_lenz(m: Model, q, p, printed: bool = False) -> tuple[float, float]:
    """(A_x, A_y) = (p_phi p_y - gamma cos phi, -p_phi p_x - gamma sin phi); ``printed`` flips A_y's first term."""
    g = m.gamma
    x, y, px, py = _xy(q, p)
    pphi = p[1]
    phi = q[1]
    ax = pphi * py - g * math.cos(phi)
    ay = (1 if printed else -1) * pphi * px - g * math.sin(phi)
    return ax, ay


def runge_lenz_form(m: Model, q, p, printed: bool = False) -> complex:
    """(A_y - i A_x) / sqrt(2 |p_phi|^3) mapped onto the z-form convention.

    For p_phi > 0 the z-form is minus this combination, for p_phi < 0 it is
    its conjugate.  ``printed`` returns the bare combination with the printed A_y.
    """
    ax, ay = runge_lenz(m, q, p, printed)
    v = complex(ay, -ax) / math.sqrt(2 * abs(p[1]) ** 3)
    if printed:
        return v
    return -v if p[1] > 0 else v.conjugate()


def cross_identities(m_osc: Model, m_coul: Model, points_osc: Sequence[PhasePoint],
                     points_coul: Sequence[PhasePoint]) -> dict[str, ResidualReport]:
    """The four pointwise identities between the 2D z-forms and their classical counterparts."""
    mo = m_osc_nd(m_osc)
    mc = m_coul_nd(m_coul)
    w, g = m_osc.omega, m_coul.gamma
    out = {
        "demkov": pointwise_residual(lambda s: demkov_form(m_osc, s.q, s.p), mo, points_osc,
                                     "Demkov form = z-form"),
        "runge_lenz": pointwise_residual(lambda s: runge_lenz_form(m_coul, s.q, s.p), mc, points_coul,
                                         "Runge-Lenz form = z-form"),
        "abs_osc": pointwise_residual(
            lambda s: abs(mo(s)) ** 2,
            lambda s: m_osc.H(s.q, s.p) ** 2 / (2 * m_osc.angular_energy(s.q, s.p)) - w * w,
            points_osc, "|M_osc|^2 = H^2/(2I) - omega^2"),
        "abs_coul": pointwise_residual(
            lambda s: abs(mc(s)) ** 2,
            lambda s: (m_coul.H(s.q, s.p) / _L(m_coul, s.q, s.p)
                       + g * g / (2 * _L(m_coul, s.q, s.p) ** 3)),
            points_coul, "|M_Coul|^2 = H/L + gamma^2/(2 L^3)"),
    }
    # the printed forms, for the record
    out["demkov_printed"] = pointwise_residual(lambda s: demkov_form(m_osc, s.q, s.p, True), mo, points_osc,
                                               "printed Demkov form = z-form")
    out["runge_lenz_printed"] = pointwise_residual(lambda s: runge_lenz_form(m_coul, s.q, s.p, True), mc,
                                                   points_coul, "printed Runge-Lenz form = z-form")
    return out


# ---------------------------------------------------------------------------
# rational-frequency globalisation


def rational_power_constant(m: Model, n: int, mm: int, a: int = 1) -> HiddenConstant:
    """M^n e^{i mm Phi_a} for a conformal model whose angular frequency is n/mm.

    For the Poschl-Teller circle Phi_a is the PT angle (lifted when mm is odd),
    for the free sphere it is the sphere angle Phi_a.
    """
    if m.radial_kind is not None:
        raise InvalidParams("rational_power_constant needs a conformal model")
    ratio = frequency_ratio(m, a)
    frac = rational_ratio(ratio)
    if frac is None:
        raise NonRationalFrequency(f"angular frequency {ratio} is not rational")
    if n * frac[1] != mm * frac[0]:
        raise InvalidParams(f"(n, m) = ({n}, {mm}) does not match the frequency ratio {frac[0]}/{frac[1]}")
    if isinstance(m, PoschlTellerMixin):
        angle = _two_phi(m)
        half = 0.5
    else:
        angle = _sphere_angle(m, a)
        half = 1.0

    def f(q, p, th):
        z = _z_raw(m, q, p)
        return (z / math.sqrt(2 * z.imag)) ** n * cmath.exp(1j * mm * half * th)
    lifted = isinstance(m, PoschlTellerMixin) and mm % 2 == 1
    return HiddenConstant(f"M^{n} e^(i{mm}Phi{a})", m, f, angle, lifted=lifted)


# ---------------------------------------------------------------------------
# drift


@dataclass(frozen=True)
class DriftEntry:
    name: str
    initial: complex
    max_abs: float
    max_rel: float
    t_max: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        init = self.initial
        return {"name": self.name,
                "initial": [init.real, init.imag] if isinstance(init, complex) else float(init),
                "max_abs_drift": self.max_abs, "max_rel_drift": self.max_rel, "t_of_max": self.t_max,
                "tol": self.tol, "status": "pass" if self.passed else "fail"}


@dataclass(frozen=True)
class DriftReport:
    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, name) -> DriftEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_dict(self) -> list:
        return [e.to_dict() for e in self.entries]


def drift(traj, constants: Sequence[HiddenConstant], tol: float = 1e-8) -> DriftReport:
    """Max |c(t) - c(0)| / max(|c(0)|, 1e-12) for each constant along a trajectory."""
    if len(traj) == 0:
        raise EmptyTrajectory("drift of an empty trajectory")
    out = []
    for c in constants:
        v = c.along(traj.y)
        d = np.abs(v - v[0])
        i = int(d.argmax())
        rel = float(d[i]) / max(abs(v[0]), 1e-12)
        init = complex(v[0]) if np.iscomplexobj(v) else float(v[0])
        out.append(DriftEntry(c.name, init, float(d[i]), rel, float(traj.t[i]), tol, rel < tol))
    return DriftReport(out)


@dataclass(frozen=True)
class RatioReport:
    name: str
    mean: complex
    max_rel_dev: float
    samples: int
    skipped: int
    printed: Optional[complex] = None
    derived: Optional[complex] = None

    def to_dict(self) -> dict:
        def c(v):
            return None if v is None else [float(np.real(v)), float(np.imag(v))]
        return {"name": self.name, "mean": c(self.mean), "max_rel_dev": self.max_rel_dev,
                "samples": self.samples, "skipped": self.skipped, "printed_prefactor": c(self.printed),
                "derived_prefactor": c(self.derived)}


def ratio_report(traj, num: HiddenConstant, den: HiddenConstant, power: int = 2, conj: bool = True,
                 guard: float = 1e-10, name: str = "", printed=None, derived=None) -> RatioReport:
    """Constancy of num / den^power (den conjugated by default) along a trajectory.

    Samples where |den| <= guard are skipped.
    """
    a = num.along(traj.y)
    b = den.along(traj.y)
    if conj:
        b = np.conj(b)
    keep = np.abs(b) > guard
    if not keep.any():
        raise DomainViolation("every sample of the denominator is degenerate")
    r = a[keep] / b[keep] ** power
    ref = r[0]
    dev = float(np.max(np.abs(r - ref)) / max(abs(ref), 1e-300))
    return RatioReport(name or f"{num.name}/{den.name}^{power}", complex(np.mean(r)), dev, int(keep.sum()),
                       int((~keep).sum()), printed, derived)
