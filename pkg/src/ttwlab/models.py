"""Hamiltonian catalog and canonical chart maps.

Families
--------
conformal-1d        p^2/2 + g^2/(2 x^2)
calogero-AN         sum p^2/2 + sum_{i<j} g^2/(x_i - x_j)^2
dihedral-calogero   2D Coxeter model of the dihedral group with 2k mirrors, plus omega^2 x^2/2
ttw                 p_r^2/2 + I_PT/r^2 + omega^2 r^2/2
poschl-teller       I_PT = p_phi^2/2 + k^2 alpha^2/sin^2(k phi) + k^2 beta^2/cos^2(k phi)
pw                  p_r^2/2 + I_PT/r^2 - gamma/r
oscillator-nd       p_r^2/2 + J^2/(2 r^2) + omega^2 r^2/2,  N in {2, 3}
coulomb-nd          p_r^2/2 + J^2/(2 r^2) - gamma/r,        N in {2, 3}

``ttw-detuned`` is the ttw Hamiltonian with a non-integer k.  It is only used
as a negative control: its orbits do not close.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import InvalidParams, OriginSingularity, PolarSingularity
from .phase import Observable, PhasePoint

SINGULAR_DISTANCE = 1e-8

FAMILY_PARAMS: dict[str, tuple[str, ...]] = {
    "conformal-1d": ("g",),
    "calogero-AN": ("g", "N"),
    "dihedral-calogero": ("k", "alpha", "beta", "omega"),
    "ttw": ("k", "alpha", "beta", "omega"),
    "ttw-detuned": ("k", "alpha", "beta", "omega"),
    "poschl-teller": ("k", "alpha", "beta"),
    "pw": ("k", "alpha", "beta", "gamma"),
    "oscillator-nd": ("N", "omega"),
    "coulomb-nd": ("N", "gamma"),
}

_POSITIVE = {"alpha", "beta"}
_NONNEGATIVE = {"g", "omega", "gamma"}


@dataclass(frozen=True)
class ModelSpec:
    """A validated Hamiltonian family instance."""

    family: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILY_PARAMS:
            raise InvalidParams(f"unknown model family {self.family!r}")
        wanted = FAMILY_PARAMS[self.family]
        extra = sorted(set(self.params) - set(wanted))
        if extra:
            raise InvalidParams(f"family {self.family!r} does not use parameter(s) {', '.join(extra)}")
        clean = {}
        for name in wanted:
            if name not in self.params:
                raise InvalidParams(f"missing parameter {name!r} for family {self.family!r}")
            val = self.params[name]
            if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
                raise InvalidParams(f"parameter {name!r} must be a finite number, got {val!r}")
            if name in _POSITIVE and not val > 0:
                raise InvalidParams(f"parameter {name!r} must be > 0")
            if name in _NONNEGATIVE and val < 0:
                raise InvalidParams(f"parameter {name!r} must be >= 0")
            if name == "k":
                if self.family == "ttw-detuned":
                    if not val > 0:
                        raise InvalidParams("parameter 'k' must be > 0")
                    val = float(val)
                else:
                    if float(val) != int(val) or val < 1:
                        raise InvalidParams("parameter 'k' must be an integer >= 1")
                    val = int(val)
            elif name == "N":
                if float(val) != int(val):
                    raise InvalidParams("parameter 'N' must be an integer")
                val = int(val)
                if self.family == "calogero-AN" and val < 2:
                    raise InvalidParams("calogero-AN needs N >= 2")
                if self.family in ("oscillator-nd", "coulomb-nd") and val not in (2, 3):
                    raise InvalidParams("oscillator-nd/coulomb-nd support N in {2, 3}")
            else:
                val = float(val)
            clean[name] = val
        object.__setattr__(self, "params", clean)

    def __getitem__(self, name):
        return self.params[name]

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ModelSpec":
        return cls(d["family"], dict(d.get("params", {})))

    def with_params(self, **kw) -> "ModelSpec":
        return ModelSpec(self.family, {**self.params, **kw})


# ---------------------------------------------------------------------------
# chart maps


def to_polar(s: PhasePoint) -> PhasePoint:
    """Cartesian 2D -> (r, phi | p_r, p_phi) with p_r = p.x/r, p_phi = x p_y - y p_x."""
    if s.chart != "cartesian" or s.n != 2:
        raise InvalidParams("to_polar expects a cartesian 2D point")
    x, y = s.q
    px, py = s.p
    r = math.hypot(x, y)
    if r <= 1e-12:
        raise OriginSingularity("to_polar at the origin")
    return PhasePoint("polar", [r, math.atan2(y, x)], [(x * px + y * py) / r, x * py - y * px], s.t)


def from_polar(s: PhasePoint) -> PhasePoint:
    if s.chart != "polar":
        raise InvalidParams("from_polar expects a polar point")
    r, phi = s.q
    pr, pphi = s.p
    if r <= 1e-12:
        raise OriginSingularity("from_polar at the origin")
    c, sn = math.cos(phi), math.sin(phi)
    return PhasePoint("cartesian", [r * c, r * sn], [pr * c - pphi * sn / r, pr * sn + pphi * c / r], s.t)


def to_spherical(s: PhasePoint) -> PhasePoint:
    """Cartesian 3D -> (r, theta, phi | p_r, p_theta, p_phi)."""
    if s.chart != "cartesian" or s.n != 3:
        raise InvalidParams("to_spherical expects a cartesian 3D point")
    x = s.q
    p = s.p
    r = float(np.linalg.norm(x))
    if r <= 1e-12:
        raise OriginSingularity("to_spherical at the origin")
    rho = math.hypot(x[0], x[1])
    if rho <= 1e-12:
        raise PolarSingularity("to_spherical on the polar axis")
    theta = math.atan2(rho, x[2])
    phi = math.atan2(x[1], x[0])
    ct, st, cp, sp = math.cos(theta), math.sin(theta), math.cos(phi), math.sin(phi)
    pr = float(x @ p) / r
    pth = r * (ct * cp * p[0] + ct * sp * p[1] - st * p[2])
    pph = x[0] * p[1] - x[1] * p[0]
    return PhasePoint("radial-angular", [r, theta, phi], [pr, pth, pph], s.t)


def from_spherical(s: PhasePoint) -> PhasePoint:
    if s.chart != "radial-angular":
        raise InvalidParams("from_spherical expects a radial-angular point")
    r, theta, phi = s.q
    pr, pth, pph = s.p
    st = math.sin(theta)
    if r <= 1e-12:
        raise OriginSingularity("from_spherical at the origin")
    if abs(st) <= 1e-12:
        raise PolarSingularity("from_spherical on the polar axis")
    ct, cp, sp = math.cos(theta), math.cos(phi), math.sin(phi)
    rhat = np.array([st * cp, st * sp, ct])
    that = np.array([ct * cp, ct * sp, -st])
    phat = np.array([-sp, cp, 0.0])
    p = pr * rhat + (pth / r) * that + (pph / (r * st)) * phat
    return PhasePoint("cartesian", r * rhat, p, s.t)


def to_cartesian(s: PhasePoint) -> PhasePoint:
    if s.chart == "cartesian":
        return s
    if s.chart == "polar":
        return from_polar(s)
    if s.chart == "radial-angular":
        return from_spherical(s)
    raise InvalidParams(f"chart {s.chart!r} has no cartesian image")


def to_radial(s: PhasePoint) -> PhasePoint:
    """Cartesian 2D/3D -> polar/radial-angular; other charts pass through."""
    if s.chart != "cartesian":
        return s
    if s.n == 2:
        return to_polar(s)
    if s.n == 3:
        return to_spherical(s)
    raise InvalidParams("only 2D and 3D cartesian points have a radial chart here")


# ---------------------------------------------------------------------------
# root systems


def roots_A(N: int) -> np.ndarray:
    """Positive roots e_i - e_j (i < j) of A_{N-1}."""
    rows = []
    for i in range(N):
        for j in range(i + 1, N):
            v = np.zeros(N)
            v[i], v[j] = 1.0, -1.0
            rows.append(v)
    return np.array(rows)


def dihedral_mirrors(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit normals of the 2k mirror lines of the dihedral group of order 4k.

    The first class holds the lines at angles j pi/k (zeros of sin k phi), the
    second the lines at (2j+1) pi/(2k) (zeros of cos k phi).
    """
    a = np.array([[-math.sin(j * math.pi / k), math.cos(j * math.pi / k)] for j in range(k)])
    b = np.array([[-math.sin((2 * j + 1) * math.pi / (2 * k)), math.cos((2 * j + 1) * math.pi / (2 * k))]
                  for j in range(k)])
    return a, b


def coxeter_potential(roots: np.ndarray, couplings: np.ndarray, x: np.ndarray) -> float:
    """sum_alpha g_alpha^2 (alpha.alpha) / (2 (alpha.x)^2)."""
    ax = roots @ x
    return float(np.sum(couplings ** 2 * np.einsum("ij,ij->i", roots, roots) / (2 * ax ** 2)))


def dihedral_couplings(alpha: float, beta: float, k: int) -> np.ndarray:
    """Coxeter couplings reproducing k^2 alpha^2/sin^2 + k^2 beta^2/cos^2.

    With unit normals, g^2 (n.n)/(2 (n.x)^2) = alpha^2/(n.x)^2 needs g = sqrt(2) alpha.
    """
    return np.concatenate([np.full(k, math.sqrt(2) * alpha), np.full(k, math.sqrt(2) * beta)])


# ---------------------------------------------------------------------------
# models


class Model:
    """Common interface; concrete families below.

    ``radial_kind`` is None for conformal Hamiltonians, 'osc' or 'coul' when
    an omega^2 r^2/2 or -gamma/r term is present.
    """

    chart: str
    n: int
    radial_kind: Optional[str] = None
    omega: float = 0.0
    gamma: float = 0.0

    def __init__(self, spec: ModelSpec):
        self.spec = spec

    # scalar functions on raw arrays -------------------------------------
    def H(self, q, p) -> float:
        raise NotImplementedError

    def dH(self, q, p) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def wall_distance(self, q) -> float:
        raise NotImplementedError

    def cell(self, q):
        """Label of the connected component of the configuration domain holding q.

        A numerical step must not change it: crossing a singular wall in one
        step would otherwise go unnoticed.
        """
        return None

    def angular_energy(self, q, p) -> float:
        """Casimir (4 H0 K - D^2)/2 of the conformal part."""
        d = self.D(q, p)
        return (4 * self.H0(q, p) * self.K(q, p) - d * d) / 2

    def radial_V(self, r: float) -> float:
        if self.radial_kind == "osc":
            return 0.5 * self.omega ** 2 * r * r
        if self.radial_kind == "coul":
            return -self.gamma / r
        return 0.0

    def H0(self, q, p) -> float:
        """The conformal part H - V(r)."""
        return self.H(q, p) - self.radial_V(math.sqrt(2 * self.K(q, p)))

    def D(self, q, p) -> float:
        if self.chart == "cartesian":
            return float(np.dot(p, q))
        return float(q[0] * p[0])

    def K(self, q, p) -> float:
        if self.chart == "cartesian":
            return float(np.dot(q, q)) / 2
        return float(q[0] * q[0]) / 2

    # derived -------------------------------------------------------------
    @property
    def family(self) -> str:
        return self.spec.family

    @property
    def is_conformal(self) -> bool:
        return self.radial_kind is None

    def singular(self, q, p) -> bool:
        return self.wall_distance(q) < SINGULAR_DISTANCE

    def vector_field(self, y: np.ndarray) -> np.ndarray:
        n = self.n
        gq, gp = self.dH(y[:n], y[n:])
        return np.concatenate([gp, -gq])

    def hamiltonian(self) -> Observable:
        return Observable(self.H, self.dH, name="H", chart=self.chart, n=self.n, singular=self.singular)

    def conformal(self) -> "Model":
        """The model with its oscillator/Coulomb term removed."""
        return self

    def point(self, q, p, t=0.0) -> PhasePoint:
        return PhasePoint(self.chart, q, p, t)

    def __repr__(self):
        return f"{type(self).__name__}({self.spec.family}, {dict(self.spec.params)})"


class ConformalLine(Model):
    chart = "cartesian"
    n = 1

    def __init__(self, spec):
        super().__init__(spec)
        self.g = spec["g"]

    def H(self, q, p):
        x = q[0]
        return 0.5 * p[0] ** 2 + self.g ** 2 / (2 * x * x)

    def dH(self, q, p):
        x = q[0]
        return np.array([-self.g ** 2 / x ** 3]), np.array([p[0]])

    def wall_distance(self, q):
        return abs(q[0])

    def cell(self, q):
        return q[0] > 0

    def angular_energy(self, q, p):
        return 0.5 * self.g ** 2


class CoxeterModel(Model):
    """sum p^2/2 + sum_alpha g_alpha^2 (alpha.alpha)/(2 (alpha.x)^2) + omega^2 x^2/2."""

    chart = "cartesian"

    def __init__(self, spec, roots, couplings, omega=0.0):
        super().__init__(spec)
        self.roots = np.asarray(roots, dtype=float)
        self.couplings = np.asarray(couplings, dtype=float)
        self.n = self.roots.shape[1]
        self.omega = float(omega)
        self.radial_kind = "osc" if self.omega > 0 else None
        self._c = self.couplings ** 2 * np.einsum("ij,ij->i", self.roots, self.roots) / 2
        self._norm = np.linalg.norm(self.roots, axis=1)

    def potential(self, q):
        ax = self.roots @ q
        return float(np.sum(self._c / ax ** 2)) + 0.5 * self.omega ** 2 * float(q @ q)

    def H(self, q, p):
        return 0.5 * float(p @ p) + self.potential(q)

    def dH(self, q, p):
        ax = self.roots @ q
        gq = -2 * (self._c / ax ** 3) @ self.roots + self.omega ** 2 * q
        return gq, np.array(p, dtype=float)

    def wall_distance(self, q):
        return float(np.min(np.abs(self.roots @ q) / self._norm))

    def cell(self, q):
        return tuple(self.roots @ q > 0)

    def angular_energy(self, q, p):
        """J^2/2 + r^2 U(x), with J^2 = x^2 p^2 - (x.p)^2 and U the Coxeter part."""
        x2 = float(q @ q)
        xp = float(q @ p)
        ax = self.roots @ q
        return 0.5 * (x2 * float(p @ p) - xp * xp) + x2 * float(np.sum(self._c / ax ** 2))

    def conformal(self):
        if self.omega == 0:
            return self
        return CoxeterModel(self.spec, self.roots, self.couplings, 0.0)


class PoschlTellerMixin:
    """I_PT = p_phi^2/2 + k^2 alpha^2/sin^2(k phi) + k^2 beta^2/cos^2(k phi)."""

    def _init_pt(self, spec):
        self.k = spec["k"]
        self.alpha = spec["alpha"]
        self.beta = spec["beta"]
        self._A = self.k ** 2 * self.alpha ** 2
        self._B = self.k ** 2 * self.beta ** 2

    def I_pt(self, phi, pphi):
        s = math.sin(self.k * phi)
        c = math.cos(self.k * phi)
        return 0.5 * pphi * pphi + self._A / (s * s) + self._B / (c * c)

    def dI_pt(self, phi, pphi):
        k = self.k
        s = math.sin(k * phi)
        c = math.cos(k * phi)
        return -2 * k * self._A * c / s ** 3 + 2 * k * self._B * s / c ** 3, pphi

    def angle_wall_distance(self, phi):
        w = math.pi / (2 * self.k)
        return abs(phi - round(phi / w) * w)

    def angle_cell(self, phi):
        return math.floor(phi / (math.pi / (2 * self.k)))


class PoschlTeller(PoschlTellerMixin, Model):
    chart = "angular"
    n = 1

    def __init__(self, spec):
        super().__init__(spec)
        self._init_pt(spec)

    def H(self, q, p):
        return self.I_pt(q[0], p[0])

    def dH(self, q, p):
        dphi, dp = self.dI_pt(q[0], p[0])
        return np.array([dphi]), np.array([dp])

    def wall_distance(self, q):
        return self.angle_wall_distance(q[0])

    def cell(self, q):
        return self.angle_cell(q[0])

    def angular_energy(self, q, p):
        return self.I_pt(q[0], p[0])

    def D(self, q, p):
        raise InvalidParams("the bare Poschl-Teller chart has no radial generators")

    K = D


class PolarPT(PoschlTellerMixin, Model):
    """TTW (radial_kind 'osc'), PW ('coul') or their conformal part (None)."""

    chart = "polar"
    n = 2

    def __init__(self, spec, radial_kind=None, omega=0.0, gamma=0.0):
        super().__init__(spec)
        self._init_pt(spec)
        self.omega = float(omega)
        self.gamma = float(gamma)
        if radial_kind == "osc" and self.omega == 0:
            radial_kind = None
        if radial_kind == "coul" and self.gamma == 0:
            radial_kind = None
        self.radial_kind = radial_kind

    def H(self, q, p):
        r, phi = q[0], q[1]
        return 0.5 * p[0] ** 2 + self.I_pt(phi, p[1]) / (r * r) + self.radial_V(r)

    def dH(self, q, p):
        r, phi = q[0], q[1]
        I = self.I_pt(phi, p[1])
        dphi, dpp = self.dI_pt(phi, p[1])
        dr = -2 * I / r ** 3
        if self.radial_kind == "osc":
            dr += self.omega ** 2 * r
        elif self.radial_kind == "coul":
            dr += self.gamma / (r * r)
        return np.array([dr, dphi / (r * r)]), np.array([p[0], dpp / (r * r)])

    def vector_field(self, y):
        r, phi, pr, pp = y
        k = self.k
        s = math.sin(k * phi)
        c = math.cos(k * phi)
        I = 0.5 * pp * pp + self._A / (s * s) + self._B / (c * c)
        dphi = -2 * k * self._A * c / (s * s * s) + 2 * k * self._B * s / (c * c * c)
        r2 = r * r
        dr = -2 * I / (r2 * r)
        if self.radial_kind == "osc":
            dr += self.omega ** 2 * r
        elif self.radial_kind == "coul":
            dr += self.gamma / r2
        return np.array([pr, pp / r2, -dr, -dphi / r2])

    def wall_distance(self, q):
        return min(abs(q[0]), self.angle_wall_distance(q[1]))

    def cell(self, q):
        return q[0] > 0, self.angle_cell(q[1])

    def angular_energy(self, q, p):
        return self.I_pt(q[1], p[1])

    def H0(self, q, p):
        return 0.5 * p[0] ** 2 + self.I_pt(q[1], p[1]) / (q[0] * q[0])

    def conformal(self):
        if self.radial_kind is None:
            return self
        return PolarPT(self.spec, None)


class RadialFree(Model):
    """Oscillator or Coulomb in N = 2, 3 with a free-sphere angular part."""

    def __init__(self, spec, radial_kind, omega=0.0, gamma=0.0):
        super().__init__(spec)
        self.N = spec["N"]
        self.n = self.N
        self.chart = "polar" if self.N == 2 else "radial-angular"
        self.omega = float(omega)
        self.gamma = float(gamma)
        if (radial_kind == "osc" and self.omega == 0) or (radial_kind == "coul" and self.gamma == 0):
            radial_kind = None
        self.radial_kind = radial_kind

    def angular_energy(self, q, p):
        if self.N == 2:
            return 0.5 * p[1] ** 2
        st = math.sin(q[1])
        return 0.5 * (p[1] ** 2 + p[2] ** 2 / (st * st))

    def H(self, q, p):
        r = q[0]
        return 0.5 * p[0] ** 2 + self.angular_energy(q, p) / (r * r) + self.radial_V(r)

    def H0(self, q, p):
        return 0.5 * p[0] ** 2 + self.angular_energy(q, p) / (q[0] * q[0])

    def dH(self, q, p):
        r = q[0]
        I = self.angular_energy(q, p)
        dr = -2 * I / r ** 3
        if self.radial_kind == "osc":
            dr += self.omega ** 2 * r
        elif self.radial_kind == "coul":
            dr += self.gamma / (r * r)
        r2 = r * r
        if self.N == 2:
            return np.array([dr, 0.0]), np.array([p[0], p[1] / r2])
        st, ct = math.sin(q[1]), math.cos(q[1])
        dth = -p[2] ** 2 * ct / st ** 3
        return np.array([dr, dth / r2, 0.0]), np.array([p[0], p[1] / r2, p[2] / (st * st * r2)])

    def wall_distance(self, q):
        if self.N == 2:
            return abs(q[0])
        return min(abs(q[0]), abs(math.sin(q[1])))

    def cell(self, q):
        if self.N == 2:
            return q[0] > 0
        return q[0] > 0, math.floor(q[1] / math.pi)

    def conformal(self):
        if self.radial_kind is None:
            return self
        return RadialFree(self.spec, None)


def build(spec: ModelSpec) -> Model:
    """Instantiate the Hamiltonian for a ModelSpec in its native chart."""
    f = spec.family
    if f == "conformal-1d":
        return ConformalLine(spec)
    if f == "calogero-AN":
        # g^2 (alpha.alpha)/(2 (alpha.x)^2) with alpha.alpha = 2 gives g^2/(x_i - x_j)^2
        N = spec["N"]
        roots = roots_A(N)
        return CoxeterModel(spec, roots, np.full(len(roots), spec["g"]))
    if f == "dihedral-calogero":
        k = spec["k"]
        a, b = dihedral_mirrors(k)
        return CoxeterModel(spec, np.vstack([a, b]), dihedral_couplings(spec["alpha"], spec["beta"], k),
                            spec["omega"])
    if f in ("ttw", "ttw-detuned"):
        return PolarPT(spec, "osc", omega=spec["omega"])
    if f == "pw":
        return PolarPT(spec, "coul", gamma=spec["gamma"])
    if f == "poschl-teller":
        return PoschlTeller(spec)
    if f == "oscillator-nd":
        return RadialFree(spec, "osc", omega=spec["omega"])
    if f == "coulomb-nd":
        return RadialFree(spec, "coul", gamma=spec["gamma"])
    raise InvalidParams(f"unknown family {f!r}")


def model(family: str, **params) -> Model:
    return build(ModelSpec(family, params))


def hamiltonian(spec: ModelSpec) -> Observable:
    return build(spec).hamiltonian()


def dihedral_calogero(k: int, alpha: float, beta: float, omega: float = 0.0) -> Observable:
    """Cartesian 2D Hamiltonian of the dihedral Calogero(-oscillator) model."""
    return model("dihedral-calogero", k=k, alpha=alpha, beta=beta, omega=omega).hamiltonian()
