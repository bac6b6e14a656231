import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ttwlab.errors import InvalidParams, OriginSingularity, PolarSingularity, SingularPoint
from ttwlab.models import (
    ModelSpec,
    dihedral_mirrors,
    from_polar,
    from_spherical,
    model,
    to_polar,
    to_spherical,
)
from ttwlab.phase import PhasePoint
from ttwlab.sampling import sample_points


@pytest.mark.parametrize("family,params", [
    ("ttw", {"k": 0, "alpha": 1, "beta": 1, "omega": 1}),
    ("ttw", {"k": 1.5, "alpha": 1, "beta": 1, "omega": 1}),
    ("ttw", {"k": 1, "alpha": 0, "beta": 1, "omega": 1}),
    ("ttw", {"k": 1, "alpha": 1, "beta": 1}),
    ("pw", {"k": 1, "alpha": 1, "beta": 1, "gamma": -1}),
    ("calogero-AN", {"g": 1, "N": 1}),
    ("oscillator-nd", {"N": 4, "omega": 1}),
    ("nowhere", {}),
])
def test_spec_rejects_bad_params(family, params):
    with pytest.raises(InvalidParams):
        ModelSpec(family, params)


def test_spec_rejects_unknown_parameter():
    with pytest.raises(InvalidParams, match="does not use"):
        ModelSpec("conformal-1d", {"g": 1.0, "omega": 2.0})


def test_spec_roundtrip_dict():
    spec = ModelSpec("ttw", {"k": 2, "alpha": 0.5, "beta": 0.7, "omega": 1})
    assert ModelSpec.from_dict(spec.to_dict()) == spec
    assert spec["k"] == 2 and isinstance(spec["k"], int)


def test_ttw_energy_example():
    m = model("ttw", k=1, alpha=1.0, beta=1.0, omega=1.0)
    s = m.point([1.0, math.pi / 4], [0.0, 0.0])
    assert m.hamiltonian()(s) == pytest.approx(4.5, abs=1e-12)


def test_pw_energy_example():
    m = model("pw", k=1, alpha=1.0, beta=1.0, gamma=2.0)
    s = m.point([1.0, math.pi / 4], [0.0, 0.0])
    assert m.H(s.q, s.p) == pytest.approx(2.0, abs=1e-12)


def test_pt_walls_are_singular():
    m = model("ttw", k=2, alpha=0.5, beta=0.7, omega=1.0)
    with pytest.raises(SingularPoint):
        m.hamiltonian()(m.point([1.0, 0.0], [0.0, 0.0]))
    with pytest.raises(SingularPoint):
        m.hamiltonian()(m.point([1.0, math.pi / 4], [0.0, 0.0]))


def test_polar_map_examples():
    s = to_polar(PhasePoint("cartesian", [1.0, 0.0], [0.0, 1.0]))
    assert np.allclose(s.q, [1.0, 0.0], atol=1e-15)
    assert np.allclose(s.p, [0.0, 1.0], atol=1e-15)
    s = to_polar(PhasePoint("cartesian", [0.0, 2.0], [1.0, 0.0]))
    assert s.q[0] == pytest.approx(2.0) and s.q[1] == pytest.approx(math.pi / 2)
    assert s.p[1] == pytest.approx(-2.0)  # x p_y - y p_x
    with pytest.raises(OriginSingularity):
        to_polar(PhasePoint("cartesian", [0.0, 0.0], [1.0, 0.0]))


def test_spherical_pole_is_singular():
    with pytest.raises(PolarSingularity):
        to_spherical(PhasePoint("cartesian", [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]))


@settings(max_examples=80, deadline=None)
@given(st.floats(0.1, 5), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_polar_roundtrip(r, phi, pr, pphi):
    s = PhasePoint("polar", [r, phi % (2 * math.pi)], [pr, pphi])
    back = to_polar(from_polar(s))
    dphi = (back.q[1] - s.q[1] + math.pi) % (2 * math.pi) - math.pi
    assert back.q[0] == pytest.approx(r, rel=1e-12) and abs(dphi) < 1e-12
    assert np.allclose(back.p, s.p, atol=1e-12)


def test_spherical_roundtrip(rng):
    for _ in range(50):
        x = rng.normal(size=3)
        p = rng.normal(size=3)
        s = PhasePoint("cartesian", x, p)
        back = from_spherical(to_spherical(s))
        assert np.allclose(back.q, x, atol=1e-12) and np.allclose(back.p, p, atol=1e-12)


def test_polar_map_is_canonical(rng):
    # Hamiltonian vector fields agree across the chart map: H(x) and H(polar(x))
    m_c = model("dihedral-calogero", k=2, alpha=0.5, beta=0.7, omega=1.0)
    m_p = model("ttw", k=2, alpha=0.5, beta=0.7, omega=1.0)
    for s in sample_points(m_c, 20, seed=4):
        sp = to_polar(s)
        assert m_c.H(s.q, s.p) == pytest.approx(m_p.H(sp.q, sp.p), rel=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_dihedral_mirror_count(k):
    first, second = dihedral_mirrors(k)
    assert len(first) == len(second) == k
    normals = np.vstack([first, second])
    # 2k distinct lines, spaced pi/(2k) apart
    angles = np.sort(np.arctan2(normals[:, 1], normals[:, 0]) % math.pi)
    assert np.allclose(np.diff(angles), math.pi / (2 * k))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_dihedral_on_mirror_is_singular(k):
    m = model("dihedral-calogero", k=k, alpha=0.5, beta=0.7, omega=1.0)
    with pytest.raises(SingularPoint):
        m.hamiltonian()(PhasePoint("cartesian", [1.0, 0.0], [0.0, 0.0]))


def test_pt_potential_positive(rng):
    m = model("poschl-teller", k=3, alpha=0.2, beta=0.9)
    for s in sample_points(m, 200, seed=2):
        assert m.angular_energy(s.q, s.p) > 0


def test_conformal_scaling():
    # H0(lambda x, p / lambda) = H0(x, p) / lambda^2 for the inverse-square models
    for m in (model("calogero-AN", g=1.3, N=3), model("conformal-1d", g=0.7)):
        for s in sample_points(m, 10, seed=5):
            for lam in (0.5, 2.0, 3.7):
                assert m.H0(lam * s.q, s.p / lam) == pytest.approx(m.H0(s.q, s.p) / lam ** 2, rel=1e-12)


def test_analytic_gradient_matches_fd():
    for m in (model("calogero-AN", g=1.0, N=3), model("pw", k=2, alpha=0.3, beta=0.4, gamma=1.0),
              model("coulomb-nd", N=3, gamma=1.0), model("dihedral-calogero", k=3, alpha=0.4, beta=0.6, omega=1.2)):
        H = m.hamiltonian()
        for s in sample_points(m, 20, seed=6):
            aq, ap = H.gradient(s, "analytic")
            fq, fp = H.gradient(s, "fd")
            assert np.allclose(aq, fq, rtol=1e-6, atol=1e-6)
            assert np.allclose(ap, fp, rtol=1e-6, atol=1e-6)
