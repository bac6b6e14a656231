import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from ttwlab import action_angle as aa
from ttwlab.errors import BranchUndefined, NoTurningPoints, PolarSingularity, UnboundedMotion
from ttwlab.integrate import IntegratorConfig, integrate
from ttwlab.models import model
from ttwlab.phase import PhasePoint, bracket_residual
from ttwlab.sampling import sample_points


def test_pt_action_examples():
    m = model("poschl-teller", k=1, alpha=1.0, beta=1.0)
    s = m.point([math.pi / 4], [0.0])
    assert m.angular_energy(s.q, s.p) == pytest.approx(4.0)
    assert aa.pt_action(m, s) == pytest.approx(math.sqrt(8))
    # I_PT = 18, k = 3 -> It = 2
    m3 = model("poschl-teller", k=3, alpha=0.2, beta=0.3)
    phi = 0.3
    V = 9 * (0.04 / math.sin(3 * phi) ** 2 + 0.09 / math.cos(3 * phi) ** 2)
    s = m3.point([phi], [math.sqrt(2 * (18 - V))])
    assert aa.pt_action(m3, s) == pytest.approx(2.0, abs=1e-12)


def test_pt_energy_reproduced():
    m = model("ttw", k=2, alpha=0.5, beta=0.7, omega=1.0)
    for s in sample_points(m, 50, seed=1):
        It = aa.pt_action(m, s)
        assert 4 * It ** 2 / 2 == pytest.approx(m.angular_energy(s.q, s.p), rel=1e-10)


def test_pt_aux_interval_contains_motion():
    m = model("poschl-teller", k=2, alpha=0.4, beta=0.9)
    for s in sample_points(m, 100, seed=2):
        a, b = aa.pt_aux(m, aa.pt_action(m, s))
        u = math.cos(4 * s.q[0])
        assert abs(u + b) <= a + 1e-12


def test_pt_angle_at_turning_point():
    m = model("poschl-teller", k=1, alpha=0.3, beta=0.5)
    E = 2.0
    It = math.sqrt(2 * E)
    a, b = aa.pt_aux(m, It)
    phi = math.acos(-b - a) / 2  # u + b = -a, p_phi = 0
    s = m.point([phi], [0.0])
    assert aa.pt_action(m, s) == pytest.approx(It, rel=1e-10)
    assert aa.pt_angle(m, s) == pytest.approx(math.pi / 4, abs=1e-7)


def test_pt_angle_relation_holds():
    m = model("poschl-teller", k=3, alpha=0.25, beta=0.6)
    for s in sample_points(m, 100, seed=3):
        c = aa.pt_chart(m, s)
        u = math.cos(6 * s.q[0])
        assert c.a * math.sin(-c.two_angle) == pytest.approx(u + c.b, abs=1e-12)
        assert c.a * math.cos(c.two_angle) == pytest.approx(s.p[0] * math.sin(6 * s.q[0]) / (3 * c.shifted_action),
                                                           abs=1e-12)
        assert 0 <= c.angle < math.pi


def test_pt_angle_undefined_at_well_bottom():
    m = model("poschl-teller", k=1, alpha=0.5, beta=0.5)
    with pytest.raises(BranchUndefined):
        aa.pt_angle(m, m.point([math.pi / 4], [0.0]))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_pt_canonical_pair_orientation(k):
    m = model("poschl-teller", k=k, alpha=0.3, beta=0.45)
    pts = sample_points(m, 100, seed=4)
    I, Phi = aa.pt_action_observable(m), aa.pt_angle_observable(m)
    assert bracket_residual((I, Phi), 1.0, pts, "fd").max < 1e-6
    L, Lam = aa.sqrt_2I_observable(m), aa.lambda_observable(m)
    assert bracket_residual((L, Lam), 1.0, pts, "fd").max < 1e-6


@pytest.mark.parametrize("k", [1, 2])
def test_pt_angle_advances_linearly(k):
    m = model("poschl-teller", k=k, alpha=0.3, beta=0.45)
    s0 = m.point([math.pi / (4 * k) + 0.1], [0.7])
    T = 2.3
    traj = integrate(m, s0, T, IntegratorConfig(step=1e-3))
    It = aa.pt_action(m, s0)
    assert aa.pt_action(m, traj.point(-1)) == pytest.approx(It, rel=1e-10)
    got = 2 * (aa.pt_angle(m, traj.point(-1)) - aa.pt_angle(m, s0))
    want = 2 * k * k * It * T
    assert abs((got - want + math.pi) % (2 * math.pi) - math.pi) < 1e-6


def test_lambda_examples():
    m1 = model("poschl-teller", k=1, alpha=0.3, beta=0.4)
    s = m1.point([0.6], [0.2])
    assert aa.lambda_var(m1, s) == aa.pt_angle(m1, s)
    m2 = model("poschl-teller", k=2, alpha=0.3, beta=0.4)
    s = m2.point([0.3], [0.2])
    assert aa.lambda_var(m2, s) == pytest.approx(aa.pt_angle(m2, s) / 2)


def test_libration_action_pins_shift():
    # the closed-loop action of one libration fixes It = 2 I_lib + sqrt(2) (alpha + beta)
    for k, al, be in [(1, 0.3, 0.5), (2, 0.7, 0.2), (3, 0.4, 0.4)]:
        m = model("poschl-teller", k=k, alpha=al, beta=be)
        bottom = k * k * (al + be) ** 2
        with pytest.raises(NoTurningPoints):
            aa.pt_libration_action(m, 0.9 * bottom)
        for E in (1.01 * bottom, 3 * bottom, 40 * bottom):
            It = math.sqrt(2 * E) / k
            I_lib = aa.pt_libration_action(m, E)
            assert It == pytest.approx(2 * I_lib + math.sqrt(2) * (al + be), rel=1e-8)


def test_frequency_ratio_integer():
    assert aa.frequency_ratio(model("ttw", k=3, alpha=1, beta=1, omega=1)) == 3.0
    assert aa.rational_ratio(3.0) == (3, 1)
    assert aa.rational_ratio(math.sqrt(5)) is None


def test_sphere_examples():
    s = PhasePoint("polar", [1.0, 0.3], [0.0, 1.5])
    c = aa.sphere_actions(2, s)
    assert c.actions[0] == 1.5 and c.angles[0] == pytest.approx(0.3)
    s = PhasePoint("radial-angular", [1.0, math.pi / 2, 0.4], [0.2, 0.0, 1.3])
    c = aa.sphere_actions(3, s)
    assert c.actions[1] == pytest.approx(0.0, abs=1e-14)
    assert math.sqrt(c.j[1]) == pytest.approx(1.3)
    with pytest.raises(PolarSingularity):
        aa.sphere_actions(3, PhasePoint("radial-angular", [1.0, 0.0, 0.4], [0.2, 0.1, 1.3]))


@pytest.mark.parametrize("N", [2, 3])
def test_sphere_chart_canonical(N):
    m = model("oscillator-nd", N=N, omega=1.0)
    pts = sample_points(m, 100, seed=5)
    I = [aa.sphere_action_observable(N, a, m.chart) for a in range(1, N)]
    P = [aa.sphere_angle_observable(N, a, m.chart) for a in range(1, N)]
    for a in range(N - 1):
        for b in range(N - 1):
            assert bracket_residual((I[a], P[b]), float(a == b), pts, "fd").max < 1e-6
    if N == 3:
        assert bracket_residual((I[0], I[1]), 0.0, pts, "fd").max < 1e-6
        assert bracket_residual((P[0], P[1]), 0.0, pts, "fd").max < 1e-6


def test_radial_action_examples():
    osc = model("oscillator-nd", N=2, omega=1.0)
    coul = model("coulomb-nd", N=2, gamma=1.0)
    assert aa.radial_action(osc, 3.0, 1.0).value == pytest.approx(1.0, rel=1e-8)
    assert aa.radial_action(coul, -1 / 8, 1.0).value == pytest.approx(1.0, rel=1e-8)
    # circular orbits
    assert aa.radial_action(osc, 2.0, 2.0).value == 0.0
    circ = aa.radial_action(coul, -0.5, 1.0)
    assert circ.value == 0.0 and circ.r_minus == pytest.approx(1.0)
    with pytest.raises(UnboundedMotion):
        aa.radial_action(coul, 0.1, 1.0)
    with pytest.raises(NoTurningPoints):
        aa.radial_action(osc, 1.0, 2.0)


def _period_integral(kind, E, L, c):
    # independent oracle: half the radial period from dr/dt, via the loop integral of p_r dr
    V = (lambda r: 0.5 * c * c * r * r) if kind == "osc" else (lambda r: -c / r)
    from scipy.integrate import quad
    from scipy.optimize import brentq
    f = lambda r: L * L / (2 * r * r) + V(r) - E  # noqa: E731
    r_star = L ** 2 / c if kind == "coul" else math.sqrt(L / c)
    rm = brentq(f, 1e-9, r_star)
    hi = r_star
    while f(hi) < 0:
        hi *= 2
    rp = brentq(f, r_star, hi)
    val, _ = quad(lambda r: math.sqrt(max(-2 * f(r), 0.0)), rm, rp, limit=200, epsabs=1e-13, epsrel=1e-13)
    return val / math.pi


@pytest.mark.parametrize("kind", ["osc", "coul"])
def test_radial_action_against_adaptive_quadrature(kind):
    m = model("oscillator-nd", N=2, omega=1.3) if kind == "osc" else model("coulomb-nd", N=2, gamma=0.8)
    c = 1.3 if kind == "osc" else 0.8
    rng = np.random.default_rng(9)
    for _ in range(10):
        L = rng.uniform(0.3, 2.0)
        I_r = rng.uniform(0.1, 2.0)
        E = aa.oscillator_energy(I_r, L, c) if kind == "osc" else aa.coulomb_energy(I_r, L, c)
        assert aa.radial_action(m, E, L).value == pytest.approx(_period_integral(kind, E, L, c), rel=1e-8)


def test_radial_action_loop_matches_flow():
    # (1/2 pi) loop integral of p_r dr over one solve_ivp radial period
    m = model("oscillator-nd", N=2, omega=1.0)
    L, E = 0.8, 2.5

    def rhs(t, y):
        r, pr = y
        return [pr, L * L / r ** 3 - r]
    pr0 = math.sqrt(2 * (E - L * L / 2 - 0.5))
    sol = solve_ivp(rhs, (0, math.pi), [1.0, pr0], rtol=1e-12, atol=1e-12, dense_output=True)
    ts = np.linspace(0, math.pi, 40001)  # radial period pi / omega
    r, pr = sol.sol(ts)
    drdt = np.array([rhs(0, y)[0] for y in zip(r, pr)])
    loop = np.trapezoid(pr * drdt, ts)
    assert aa.radial_action(m, E, L).value == pytest.approx(loop / (2 * math.pi), rel=1e-6)
