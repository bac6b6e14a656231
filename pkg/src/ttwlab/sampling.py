"""Seeded, chart-aware random phase-space points.

Points stay a fixed fraction of the wedge width away from the Poschl-Teller
and Calogero walls, and away from r = 0 and the polar axis.
"""

from __future__ import annotations

import math

import numpy as np

from .models import CoxeterModel, Model, PoschlTellerMixin
from .phase import PhasePoint


def _momentum(rng, size, scale):
    return rng.normal(0.0, scale, size)


def _wedge_angle(rng, k, margin):
    width = math.pi / (2 * k)
    return width * (margin + (1 - 2 * margin) * rng.random())


def sample_point(m: Model, rng: np.random.Generator, margin: float = 0.1, bounded: bool = False,
                 p_scale: float = 1.0, r_range=(0.5, 2.5), max_tries: int = 1000) -> PhasePoint:
    """One random non-singular point of m.

    ``bounded`` rejects points with non-negative Coulomb energy.
    """
    for _ in range(max_tries):
        s = _draw(m, rng, margin, p_scale, r_range)
        if m.singular(s.q, s.p):
            continue
        if bounded and m.radial_kind == "coul" and not m.H(s.q, s.p) < 0:
            continue
        if m.angular_energy(s.q, s.p) <= 0:
            continue
        return s
    raise RuntimeError(f"could not sample a valid point for {m.family} in {max_tries} tries")


def _draw(m: Model, rng, margin, p_scale, r_range) -> PhasePoint:
    r = rng.uniform(*r_range)
    fam = m.family
    if fam == "conformal-1d":
        return PhasePoint("cartesian", [r], _momentum(rng, 1, p_scale))
    if fam == "calogero-AN":
        N = m.n
        gaps = rng.uniform(0.3, 1.5, N - 1)
        x = np.concatenate([[0.0], np.cumsum(gaps)])
        return PhasePoint("cartesian", x - x.mean(), _momentum(rng, N, p_scale))
    if isinstance(m, CoxeterModel):  # dihedral, Cartesian chart
        k = m.spec["k"]
        phi = _wedge_angle(rng, k, margin) + (math.pi / (2 * k)) * rng.integers(0, 4 * k)
        return PhasePoint("cartesian", [r * math.cos(phi), r * math.sin(phi)], _momentum(rng, 2, p_scale))
    if isinstance(m, PoschlTellerMixin):
        phi = _wedge_angle(rng, m.k, margin)
        if m.chart == "angular":
            return PhasePoint("angular", [phi], _momentum(rng, 1, p_scale))
        return PhasePoint("polar", [r, phi], _momentum(rng, 2, p_scale))
    # free sphere
    if m.n == 2:
        pphi = _away_from_zero(rng, p_scale)
        return PhasePoint("polar", [r, rng.uniform(0, 2 * math.pi)], [rng.normal(0, p_scale), pphi])
    th = rng.uniform(0.3, math.pi - 0.3)
    return PhasePoint("radial-angular", [r, th, rng.uniform(0, 2 * math.pi)],
                      [rng.normal(0, p_scale), rng.normal(0, p_scale), _away_from_zero(rng, p_scale)])


def _away_from_zero(rng, scale, floor=0.2):
    v = rng.normal(0, scale)
    return math.copysign(max(abs(v), floor * scale), v)


def sample_points(m: Model, count: int, seed: int = 0, **kw) -> list[PhasePoint]:
    rng = np.random.default_rng(seed)
    return [sample_point(m, rng, **kw) for _ in range(count)]
