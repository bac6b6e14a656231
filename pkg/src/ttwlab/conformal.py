"""so(1,2) generators, the Klein-model coordinate z and the M generators.

For a conformal Hamiltonian H0 = p_r^2/2 + I/r^2 the radial phase space is
packed into the upper-half-plane coordinate

    z = p_r/r + i sqrt(2 I)/r^2 = (D + i sqrt(2 I)) / (2 K),

and H0, D, K become Killing potentials of the hyperbolic upper-half-plane metric.  All
functions here take a :class:`~ttwlab.models.Model`; a model that carries an
oscillator or Coulomb term contributes only its conformal part.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainViolation, NonpositiveAngularEnergy, OriginSingularity, ZeroInput
from .models import Model
from .phase import Observable, PhasePoint, ResidualReport, bracket_residual, pointwise_residual


@dataclass(frozen=True)
class ConformalTriple:
    H0: Observable
    D: Observable
    K: Observable


def _radial_grads(n):
    def dgrad(q, p):
        gq = np.zeros(n)
        gp = np.zeros(n)
        gq[0] = p[0]
        gp[0] = q[0]
        return gq, gp

    def kgrad(q, p):
        gq = np.zeros(n)
        gq[0] = q[0]
        return gq, np.zeros(n)
    return dgrad, kgrad


def conformal_triple(m: Model) -> ConformalTriple:
    c = m.conformal()
    kw = dict(chart=m.chart, n=m.n, singular=m.singular)
    H0 = Observable(c.H, c.dH, name="H0", **kw)
    if m.chart == "cartesian":
        D = Observable(lambda q, p: float(p @ q), lambda q, p: (np.array(p, float), np.array(q, float)), name="D", **kw)
        K = Observable(lambda q, p: float(q @ q) / 2, lambda q, p: (np.array(q, float), np.zeros_like(p)), name="K", **kw)
    elif m.chart in ("polar", "radial-angular"):
        dgrad, kgrad = _radial_grads(m.n)
        D = Observable(lambda q, p: q[0] * p[0], dgrad, name="D", **kw)
        K = Observable(lambda q, p: q[0] * q[0] / 2, kgrad, name="K", **kw)
    else:
        raise DomainViolation(f"chart {m.chart!r} carries no conformal algebra")
    return ConformalTriple(H0, D, K)


def casimir(m: Model, s: PhasePoint) -> float:
    """(4 H0 K - D^2)/2 from the generators of the conformal part."""
    t = conformal_triple(m)
    h, d, k = t.H0(s), t.D(s), t.K(s)
    return (4 * h * k - d * d) / 2


def casimir_observable(m: Model) -> Observable:
    t = conformal_triple(m)

    def func(q, p):
        return (4 * t.H0.func(q, p) * t.K.func(q, p) - t.D.func(q, p) ** 2) / 2

    def grad(q, p):
        h, d, k = t.H0.func(q, p), t.D.func(q, p), t.K.func(q, p)
        hq, hp = t.H0.grad(q, p)
        dq, dp = t.D.grad(q, p)
        kq, kp = t.K.grad(q, p)
        return 2 * (k * hq + h * kq) - d * dq, 2 * (k * hp + h * kp) - d * dp
    return Observable(func, grad, name="I", chart=m.chart, n=m.n, singular=m.singular)


def angular_energy_observable(m: Model) -> Observable:
    """The angular Hamiltonian evaluated directly in the model's own chart."""
    return Observable(m.angular_energy, name="I_ang", chart=m.chart, n=m.n, singular=m.singular)


def _z_raw(m: Model, q, p) -> complex:
    c = m.conformal()
    k = c.K(q, p)
    if k <= 0.5e-24:
        raise OriginSingularity("klein_z at r = 0")
    d = c.D(q, p)
    i_ang = m.angular_energy(q, p)
    if not i_ang > 0:
        raise NonpositiveAngularEnergy(f"klein_z needs I > 0, got {i_ang}")
    return complex(d, math.sqrt(2 * i_ang)) / (2 * k)


def klein_z(m: Model, s: PhasePoint) -> complex:
    if m.singular(s.q, s.p):
        raise OriginSingularity(f"klein_z at singular point {s}")
    return _z_raw(m, s.q, s.p)


def klein_z_observable(m: Model) -> Observable:
    return Observable(lambda q, p: _z_raw(m, q, p), name="z", chart=m.chart, n=m.n, singular=m.singular)


def killing_potentials(z: complex, I: float) -> tuple[float, float, float]:
    """(H0, D, K) reconstructed from z and the angular energy I."""
    if not z.imag > 0:
        raise DomainViolation(f"Killing potentials need Im z > 0, got {z}")
    if not I > 0:
        raise NonpositiveAngularEnergy(f"Killing potentials need I > 0, got {I}")
    L = math.sqrt(2 * I)
    den = 2 * z.imag  # i (zbar - z)
    return L * abs(z) ** 2 / den, L * 2 * z.real / den, L / den


def inversion_1d(z: complex) -> complex:
    """z -> -1/z; swaps H0 and K and flips D (one-dimensional case only)."""
    if z == 0:
        raise ZeroInput("inversion_1d(0)")
    if not z.imag > 0:
        raise DomainViolation(f"inversion_1d needs Im z > 0, got {z}")
    return -1 / z


def point_from_z_1d(z: complex, g: float, t: float = 0.0) -> PhasePoint:
    """The phase-space point (x > 0, p) of the 1D conformal model with coordinate z."""
    if not z.imag > 0:
        raise DomainViolation(f"need Im z > 0, got {z}")
    x = math.sqrt(g / z.imag)
    return PhasePoint("cartesian", [x], [z.real * x], t)


def m_generator_raw(z: complex) -> complex:
    return z / cmath.sqrt(2 * z.imag)


def m_generator(m: Model, s: PhasePoint) -> complex:
    """M = z / sqrt(i (zbar - z)) on the principal branch."""
    return m_generator_raw(klein_z(m, s))


def m_observable(m: Model, conjugate: bool = False) -> Observable:
    def func(q, p):
        v = m_generator_raw(_z_raw(m, q, p))
        return v.conjugate() if conjugate else v
    return Observable(func, name="Mbar" if conjugate else "M", chart=m.chart, n=m.n, singular=m.singular)


# ---------------------------------------------------------------------------
# residual checkers


def conformal_algebra_residuals(m: Model, points: Sequence[PhasePoint], method: str = "fd") -> list[ResidualReport]:
    """{H0,D}=2H0, {H0,K}=D, {K,D}=-2K over the points."""
    t = conformal_triple(m)
    return [
        bracket_residual((t.H0, t.D), lambda s: 2 * t.H0(s), points, method, "{H0,D}=2H0"),
        bracket_residual((t.H0, t.K), t.D, points, method, "{H0,K}=D"),
        bracket_residual((t.K, t.D), lambda s: -2 * t.K(s), points, method, "{K,D}=-2K"),
    ]


def casimir_residuals(m: Model, points: Sequence[PhasePoint], method: str = "fd") -> list[ResidualReport]:
    """4HK - D^2 = 2I against the directly evaluated angular energy, and the three commutators."""
    t = conformal_triple(m)
    cas = casimir_observable(m)
    direct = angular_energy_observable(m)
    out = [pointwise_residual(lambda s: 4 * t.H0(s) * t.K(s) - t.D(s) ** 2, lambda s: 2 * direct(s), points,
                              "4HK-D^2=2I")]
    for gen in (t.H0, t.D, t.K):
        out.append(bracket_residual((cas, gen), 0.0, points, method, f"{{I,{gen.name}}}=0"))
    return out


def klein_bracket_residual(m: Model, points: Sequence[PhasePoint]) -> ResidualReport:
    """{z, zbar} + (i/sqrt(2I)) (z - zbar)^2 = 0."""
    z = klein_z_observable(m)
    zb = Observable(lambda q, p: _z_raw(m, q, p).conjugate(), name="zbar", chart=m.chart, n=m.n)

    def rhs(s):
        zz = z(s)
        return -1j / math.sqrt(2 * m.angular_energy(s.q, s.p)) * (zz - zz.conjugate()) ** 2
    return bracket_residual((z, zb), rhs, points, "fd", "{z,zbar}=-(i/sqrt(2I))(z-zbar)^2")


def killing_roundtrip_residual(m: Model, points: Sequence[PhasePoint]) -> ResidualReport:
    """Largest deviation of (H0, D, K) rebuilt from z against direct evaluation."""
    t = conformal_triple(m)
    worst = []
    for s in points:
        rebuilt = killing_potentials(klein_z(m, s), m.angular_energy(s.q, s.p))
        direct = (t.H0(s), t.D(s), t.K(s))
        worst.append(max(abs(a - b) / (1 + abs(b)) for a, b in zip(rebuilt, direct)))
    w = np.array(worst)
    return ResidualReport("killing round trip", float(w.max()), float(w.mean()), len(w), int(w.argmax()))


def inversion_residuals(g: float, zs: Sequence[complex]) -> ResidualReport:
    """H0(-1/z) = K(z), K(-1/z) = H0(z), D(-1/z) = -D(z) for the 1D model."""
    I = g * g / 2
    worst = []
    for z in zs:
        h, d, k = killing_potentials(z, I)
        hi, di, ki = killing_potentials(inversion_1d(z), I)
        worst.append(max(abs(hi - k) / (1 + abs(k)), abs(ki - h) / (1 + abs(h)), abs(di + d) / (1 + abs(d))))
    w = np.array(worst)
    return ResidualReport("inversion H0<->K, D->-D", float(w.max()), float(w.mean()), len(w), int(w.argmax()))


@dataclass(frozen=True)
class AdjudicatedIdentity:
    """A printed bracket identity checked as printed and against the measured right-hand side."""

    name: str
    printed_rhs: str
    printed: ResidualReport
    measured_rhs: str
    measured: ResidualReport

    def printed_holds(self, tol: float) -> bool:
        return self.printed.max < tol


def m_algebra_residuals(m: Model, points: Sequence[PhasePoint], tol: float = 1e-6) -> list[AdjudicatedIdentity]:
    t = conformal_triple(m)
    M = m_observable(m)
    Mb = m_observable(m, conjugate=True)

    def z(s):
        return klein_z(m, s)

    def L(s):
        return math.sqrt(2 * m.angular_energy(s.q, s.p))

    def sq(s):
        return cmath.sqrt(2 * z(s).imag)  # sqrt(i (zbar - z))

    cases = [
        ("{M,H0}", (M, t.H0),
         "(i/2) z sqrt(i(zbar-z))", lambda s: 0.5j * z(s) * sq(s),
         "(i/2) z sqrt(i(zbar-z))", lambda s: 0.5j * z(s) * sq(s)),
        ("{M,K}", (M, t.K),
         "2z/(i(zbar-z))", lambda s: 2 * z(s) / (2 * z(s).imag),
         "1/sqrt(i(zbar-z))", lambda s: 1 / sq(s)),
        ("{M,D}", (M, t.D),
         "M", lambda s: m_generator(m, s),
         "M", lambda s: m_generator(m, s)),
        ("{M,Mbar}", (M, Mb),
         "(z-zbar)/(2 sqrt(2I))", lambda s: (z(s) - z(s).conjugate()) / (2 * L(s)),
         "(z-zbar)/(2 sqrt(2I))", lambda s: (z(s) - z(s).conjugate()) / (2 * L(s))),
    ]
    out = []
    for name, pair, prhs_s, prhs, mrhs_s, mrhs in cases:
        pr = bracket_residual(pair, prhs, points, "fd", f"{name}={prhs_s}")
        mr = pr if mrhs_s == prhs_s else bracket_residual(pair, mrhs, points, "fd", f"{name}={mrhs_s}")
        out.append(AdjudicatedIdentity(name, prhs_s, pr, mrhs_s, mr))
    return out
