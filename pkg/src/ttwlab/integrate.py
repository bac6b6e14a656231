"""Symplectic integration of the catalog models and closed-orbit detection.

Both methods are implicit Runge-Kutta collocation schemes that remain
symplectic for non-separable Hamiltonians (the TTW/PW kinetic term
I_PT(phi, p_phi)/r^2 couples positions and momenta, which rules out leapfrog):

* ``implicit-midpoint``  order 2
* ``gauss-2stage``       order 4, 2-stage Gauss-Legendre

The stage equations are solved by fixed-point iteration.  When a step needs
more than ``max_sweeps`` sweeps, or a stage leaves the domain, the step is
split into two half steps; the macro step itself never changes, so the
composite map stays symplectic.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import EmptyTrajectory, NoRecurrence, NonConvergence, StepUnderflow, WallProximity
from .models import Model
from .phase import PhasePoint

METHODS = ("implicit-midpoint", "gauss-2stage")

_S3 = math.sqrt(3.0)
_GAUSS_A = np.array([[0.25, 0.25 - _S3 / 6], [0.25 + _S3 / 6, 0.25]])
_GAUSS_C = np.array([0.5 - _S3 / 6, 0.5 + _S3 / 6])


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "gauss-2stage"
    step: float = 1e-3
    tol: float = 1e-12
    max_steps: int = 50_000_000
    wall_margin: float = 1e-6
    max_sweeps: int = 25
    max_splits: int = 12
    sample_every: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown integrator method {self.method!r}")
        if not self.step > 0:
            raise ValueError("step must be > 0")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")

    @property
    def order(self) -> int:
        return 2 if self.method == "implicit-midpoint" else 4


@dataclass
class Trajectory:
    """Samples (t_i, y_i) with y = (q, p) in the model's chart."""

    model: Model
    t: np.ndarray
    y: np.ndarray
    reason: str = "time reached"
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def chart(self) -> str:
        return self.model.chart

    def point(self, i: int) -> PhasePoint:
        return PhasePoint.from_vector(self.model.chart, self.y[i], float(self.t[i]))

    def points(self) -> list[PhasePoint]:
        return [self.point(i) for i in range(len(self.t))]

    def energy(self) -> np.ndarray:
        n = self.model.n
        return np.array([self.model.H(y[:n], y[n:]) for y in self.y])

    def column_names(self) -> list[str]:
        return coordinate_names(self.model.chart, self.model.n)

    def to_csv(self, path, invariants: Optional[dict[str, Sequence]] = None) -> None:
        """Header t, q..., p..., E, then one column per invariant (complex -> .re/.im)."""
        names = ["t"] + self.column_names() + ["E"]
        cols = [self.t] + [self.y[:, i] for i in range(self.y.shape[1])] + [self.energy()]
        for key, vals in (invariants or {}).items():
            vals = np.asarray(vals)
            if np.iscomplexobj(vals):
                names += [f"{key}.re", f"{key}.im"]
                cols += [vals.real, vals.imag]
            else:
                names.append(key)
                cols.append(vals)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in zip(*cols):
                w.writerow([f"{float(v):.17g}" for v in row])


def coordinate_names(chart: str, n: int) -> list[str]:
    if chart == "polar":
        return ["r", "phi", "p_r", "p_phi"]
    if chart == "radial-angular":
        return ["r", "theta", "phi", "p_r", "p_theta", "p_phi"]
    if chart == "angular":
        return ["phi", "p_phi"]
    return [f"x{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]


class _Stepper:
    def __init__(self, model: Model, cfg: IntegratorConfig):
        self.f = model.vector_field
        self.model = model
        self.cfg = cfg
        self.sweeps = 0
        self.splits = 0
        self._guess = None
        self._cell = None

    def _ok(self, y) -> bool:
        q = y[: self.model.n]
        return (math.isfinite(float(y.sum())) and self.model.wall_distance(q) > 0
                and self.model.cell(q) == self._cell)

    def _try(self, y, h, guess):
        f = self.f
        self._cell = self.model.cell(y[: self.model.n])
        tol = self.cfg.tol * (1.0 + float(np.max(np.abs(y))))
        if self.cfg.method == "implicit-midpoint":
            Z = guess if guess is not None else h * f(y)
            for it in range(self.cfg.max_sweeps):
                ym = y + 0.5 * Z
                if not self._ok(ym):
                    return None, it
                Zn = h * f(ym)
                delta = float(np.max(np.abs(Zn - Z)))
                if not math.isfinite(delta):
                    return None, it
                Z = Zn
                if delta <= tol:
                    return ((y + Z, Z), it + 1) if self._ok(y + Z) else (None, it + 1)
            return None, self.cfg.max_sweeps
        # Gauss-Legendre 2 stage; Z holds the stage increments
        if guess is not None:
            Z1, Z2 = guess
        else:
            k0 = f(y)
            Z1, Z2 = h * _GAUSS_C[0] * k0, h * _GAUSS_C[1] * k0
        a = _GAUSS_A
        for it in range(self.cfg.max_sweeps):
            y1 = y + Z1
            y2 = y + Z2
            if not (self._ok(y1) and self._ok(y2)):
                return None, it
            k1 = f(y1)
            k2 = f(y2)
            N1 = h * (a[0, 0] * k1 + a[0, 1] * k2)
            N2 = h * (a[1, 0] * k1 + a[1, 1] * k2)
            delta = max(float(np.max(np.abs(N1 - Z1))), float(np.max(np.abs(N2 - Z2))))
            if not math.isfinite(delta):
                return None, it
            Z1, Z2 = N1, N2
            if delta <= tol:
                # y_{n+1} = y + h/2 (k1 + k2), with the converged stages
                k1 = f(y + Z1)
                k2 = f(y + Z2)
                yn = y + 0.5 * h * (k1 + k2)
                return ((yn, (Z1, Z2)), it + 1) if self._ok(yn) else (None, it + 1)
        return None, self.cfg.max_sweeps

    def step(self, y, h, depth=0):
        res, sweeps = self._try(y, h, self._guess if depth == 0 else None)
        self.sweeps += sweeps
        if res is not None:
            if depth == 0:
                self._guess = res[1]
            return res[0]
        if depth >= self.cfg.max_splits:
            if self.model.wall_distance(y[: self.model.n]) < math.sqrt(self.cfg.wall_margin):
                raise WallProximity(f"trajectory reached a singular set at y={y}")
            raise StepUnderflow(f"step split {depth} times without convergence at y={y}")
        self.splits += 1
        self._guess = None
        ymid = self.step(y, h / 2, depth + 1)
        return self.step(ymid, h / 2, depth + 1)


def integrate(model: Model, s0: PhasePoint, T: float, cfg: IntegratorConfig = IntegratorConfig()) -> Trajectory:
    """Integrate Hamilton's equations from s0 over a time span T (negative runs backward).

    The step is adjusted to T / ceil(|T| / cfg.step) so the last sample lands
    exactly on s0.t + T.
    """
    if s0.chart != model.chart:
        raise ValueError(f"initial point chart {s0.chart!r} does not match model chart {model.chart!r}")
    n = model.n
    if model.wall_distance(s0.q) < cfg.wall_margin:
        raise WallProximity(f"initial point within {cfg.wall_margin} of a singular set")
    nsteps = max(1, int(math.ceil(abs(T) / cfg.step - 1e-9)))
    if nsteps > cfg.max_steps:
        raise NonConvergence(f"{nsteps} steps exceed max_steps={cfg.max_steps}")
    h = T / nsteps
    y = s0.vector().astype(float)
    stepper = _Stepper(model, cfg)
    ts = [s0.t]
    ys = [y.copy()]
    for i in range(1, nsteps + 1):
        y = stepper.step(y, h)
        if model.wall_distance(y[:n]) < cfg.wall_margin:
            raise WallProximity(f"trajectory came within {cfg.wall_margin} of a singular set at t={s0.t + i * h}")
        if i % cfg.sample_every == 0 or i == nsteps:
            ts.append(s0.t + i * h)
            ys.append(y.copy())
    return Trajectory(model, np.array(ts), np.array(ys), "time reached",
                      {"steps": nsteps, "h": h, "sweeps": stepper.sweeps, "splits": stepper.splits,
                       "method": cfg.method})


def final_point(traj: Trajectory) -> PhasePoint:
    if len(traj) == 0:
        raise EmptyTrajectory("empty trajectory")
    return traj.point(len(traj) - 1)


@dataclass(frozen=True)
class PeriodEstimate:
    T: float
    residual: float
    meta: dict = field(default_factory=dict)


def detect_closure(model: Model, s0: PhasePoint, t_max: float, cfg: IntegratorConfig = IntegratorConfig(),
                   tol: float = 1e-4, t_min: float = 0.0) -> PeriodEstimate:
    """Smallest T > t_min with ||s(T) - s(0)|| < tol, refined by local minimization.

    The residual is the Euclidean distance in the model's chart coordinates.
    """
    cfg1 = IntegratorConfig(cfg.method, cfg.step, cfg.tol, cfg.max_steps, cfg.wall_margin, cfg.max_sweeps,
                            cfg.max_splits, 1)
    traj = integrate(model, s0, t_max, cfg1)
    y0 = s0.vector()
    d = np.linalg.norm(traj.y - y0, axis=1)
    # leave the neighbourhood of the start before looking for returns
    escape = max(10 * tol, 0.05 * float(d.max()))
    away = np.nonzero(d > escape)[0]
    if away.size == 0:
        raise NoRecurrence("trajectory never left the neighbourhood of its starting point")
    start = int(away[0])
    best = (math.inf, None)
    for i in range(max(start, 1), len(d) - 1):
        if not (d[i] <= d[i - 1] and d[i] <= d[i + 1]):
            continue
        if traj.t[i] - s0.t <= t_min or d[i] > 0.1 * escape + 10 * tol:
            continue
        base = traj.point(i - 1)
        span = float(traj.t[i + 1] - traj.t[i - 1])

        def dist(dt, base=base):
            if dt <= 0:
                return float(np.linalg.norm(base.vector() - y0))
            sub = IntegratorConfig(cfg.method, max(dt / 4, 1e-300), cfg.tol, cfg.max_steps, cfg.wall_margin,
                                   cfg.max_sweeps, cfg.max_splits, 1)
            tr = integrate(model, base, dt, sub)
            return float(np.linalg.norm(tr.y[-1] - y0))

        opt = minimize_scalar(dist, bounds=(0.0, span), method="bounded",
                              options={"xatol": 1e-12 * max(1.0, span)})
        T = float(traj.t[i - 1] + opt.x - s0.t)
        res = float(opt.fun)
        if res < best[0]:
            best = (res, T)
        if res < tol:
            return PeriodEstimate(T, res, {"samples": len(d), "coarse_index": i, "method": cfg.method})
    if best[1] is None:
        mins = [i for i in range(max(start, 1), len(d) - 1) if d[i] <= d[i - 1] and d[i] <= d[i + 1]]
        j = min(mins, key=lambda i: d[i]) if mins else len(d) - 1
        best = (float(d[j]), float(traj.t[j] - s0.t))
    raise NoRecurrence(f"no recurrence below {tol} within t_max={t_max}; closest approach {best[0]:.3e} "
                       f"at T={best[1]:.6g}")


def convergence_order(model: Model, s0: PhasePoint, T: float, steps: Sequence[float],
                      exact: Callable[[float], np.ndarray], method: str = "gauss-2stage",
                      component: Optional[Sequence[int]] = None) -> dict:
    """Global errors at time T for each step, and log2 error ratios between successive halvings."""
    errs = []
    for h in steps:
        tr = integrate(model, s0, T, IntegratorConfig(method, h, tol=1e-14, sample_every=10 ** 9))
        y = tr.y[-1]
        ref = np.asarray(exact(s0.t + T))
        if component is not None:
            y = y[list(component)]
        errs.append(float(np.max(np.abs(y - ref))))
    orders = [math.log(errs[i] / errs[i + 1]) / math.log(steps[i] / steps[i + 1]) for i in range(len(errs) - 1)]
    return {"steps": list(steps), "errors": errs, "orders": orders}


def radial_closed_form(model: Model, s0: PhasePoint) -> Callable[[float], float]:
    """Exact r(t) for p_r^2/2 + I/r^2 + omega^2 r^2/2 with conserved I.

    r^2 obeys (r^2)'' = 4H - 4 omega^2 r^2, so it is harmonic with frequency 2 omega.
    """
    w = model.omega
    H = model.H(s0.q, s0.p)
    r0, pr0 = s0.q[0], s0.p[0]
    rho_c = H / w ** 2

    def r_of_t(t):
        tau = t - s0.t
        rho = rho_c + (r0 * r0 - rho_c) * math.cos(2 * w * tau) + (r0 * pr0 / w) * math.sin(2 * w * tau)
        return math.sqrt(rho)
    return r_of_t
