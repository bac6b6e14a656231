"""Acceptance criteria 1-12, one test each.

Every test records a one-line verdict that is printed in the terminal summary
(section "acceptance criteria"), whether or not the assertion holds.
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from ttwlab import action_angle as aa
from ttwlab import conserved as cs
from ttwlab.conformal import (
    casimir_residuals,
    conformal_algebra_residuals,
    inversion_residuals,
    killing_roundtrip_residual,
    klein_bracket_residual,
    klein_z,
)
from ttwlab.errors import NoRecurrence
from ttwlab.harness import config as cfgmod
from ttwlab.harness import runner
from ttwlab.harness.cli import main
from ttwlab.integrate import (
    IntegratorConfig,
    convergence_order,
    detect_closure,
    final_point,
    integrate,
    radial_closed_form,
)
from ttwlab.models import model, to_polar
from ttwlab.phase import bracket_residual, pointwise_residual, poisson_bracket
from ttwlab.sampling import sample_points

from conftest import record

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

CONFORMAL_CATALOG = {
    "1D": model("conformal-1d", g=1.0),
    "Calogero N=2": model("calogero-AN", g=1.0, N=2),
    "Calogero N=3": model("calogero-AN", g=0.8, N=3),
    "TTW-angular k=2": model("ttw", k=2, alpha=0.5, beta=0.7, omega=0.0),
    "PW-angular k=1": model("pw", k=1, alpha=0.3, beta=0.4, gamma=0.0),
}


def _fmt(x):
    return f"{x:.2e}"


def test_criterion_01_conformal_algebra():
    worst = {}
    for label, m in CONFORMAL_CATALOG.items():
        pts = sample_points(m, 100, seed=101)
        worst[label] = max(r.max for r in conformal_algebra_residuals(m, pts, "fd"))
    ok = max(worst.values()) < 1e-6
    record(1, ok, "conformal algebra, max residual " + ", ".join(f"{k} {_fmt(v)}" for k, v in worst.items()))
    assert ok, worst


def test_criterion_02_casimir():
    pointwise, bracket, fd_bracket = {}, {}, {}
    for label, m in CONFORMAL_CATALOG.items():
        pts = sample_points(m, 100, seed=102)
        reps = casimir_residuals(m, pts, method="analytic")
        pointwise[label] = reps[0].max
        bracket[label] = reps[1].max  # {I, H0}
        fd_bracket[label] = casimir_residuals(m, pts, method="fd")[1].max
    ok = max(pointwise.values()) < 1e-10 and max(bracket.values()) < 1e-6
    record(2, ok, f"4HK-D^2=2I max {_fmt(max(pointwise.values()))}; {{I,H0}} max {_fmt(max(bracket.values()))} "
                  f"(finite-difference gradients: {_fmt(max(fd_bracket.values()))})")
    assert ok


def test_criterion_03_klein_bracket():
    res, im_min = {}, math.inf
    for label, m in CONFORMAL_CATALOG.items():
        pts = sample_points(m, 100, seed=103)
        res[label] = klein_bracket_residual(m, pts).max
        im_min = min(im_min, min(klein_z(m, s).imag for s in pts))
    ok = max(res.values()) < 1e-6 and im_min > 0
    record(3, ok, f"{{z,zbar}} max residual {_fmt(max(res.values()))}, min Im z {im_min:.3g}")
    assert ok


def test_criterion_04_killing_and_inversion():
    rt = max(killing_roundtrip_residual(m, sample_points(m, 100, seed=104)).max for m in CONFORMAL_CATALOG.values())
    rng = np.random.default_rng(104)
    zs = rng.uniform(-3, 3, 100) + 1j * rng.uniform(0.05, 3, 100)
    inv = inversion_residuals(1.0, list(zs)).max
    ok = rt < 1e-12 and inv < 1e-12
    record(4, ok, f"Killing round trip {_fmt(rt)}, inversion {_fmt(inv)}")
    assert ok


def test_criterion_05_dihedral_equivalence():
    worst = {}
    for k in (1, 2, 3):
        dih = model("dihedral-calogero", k=k, alpha=0.5, beta=0.7, omega=1.0)
        ttw = model("ttw", k=k, alpha=0.5, beta=0.7, omega=1.0)
        pts = sample_points(dih, 1000, seed=105 + k)
        worst[k] = pointwise_residual(lambda s: dih.H(s.q, s.p), lambda s: ttw.H(to_polar(s).q, to_polar(s).p),
                                      pts).max
    ok = max(worst.values()) < 1e-12
    record(5, ok, "dihedral vs TTW energy, 1000 points: " + ", ".join(f"k={k} {_fmt(v)}" for k, v in worst.items()))
    assert ok


SCENARIOS = ["ttw_k1", "ttw_k2", "ttw_k3", "pw_k1", "pw_k2"]


@pytest.fixture(scope="module")
def scenario_runs():
    runs = {}
    for name in SCENARIOS:
        cfg = cfgmod.load(CONFIGS / f"{name}.json")
        m = runner.build_model(cfg)
        s0 = runner.initial_point(cfg, m)
        T = runner.span(cfg, m, s0)
        traj = integrate(m, s0, T, runner.integrator_config(cfg))
        runs[name] = (m, s0, T, traj)
    return runs


def test_criterion_06_conservation(scenario_runs):
    lines, ok = [], True
    for name, (m, s0, T, traj) in scenario_runs.items():
        periods = T / runner.radial_period(m, s0)
        consts = cs.ttw_constants(m) if m.family == "ttw" else cs.pw_constants(m)
        rep = cs.drift(traj, consts, 1e-8)
        printed = cs.ranada_ttw(m, printed=True) if m.family == "ttw" else cs.ranada_pw(m, printed=True)
        pr = cs.drift(traj, [printed])[printed.name].max_rel
        E = m.H(s0.q, s0.p)
        good = rep.passed and periods >= 10 - 1e-9 and (m.family == "ttw" or E < 0)
        ok &= good
        worst = max(rep.entries, key=lambda e: e.max_rel)
        lines.append(f"{name} {periods:.0f} periods worst {worst.name} {_fmt(worst.max_rel)}"
                     f" (printed form {printed.name} drifts {_fmt(pr)})")
    record(6, ok, "; ".join(lines))
    assert ok


def test_criterion_07_ranada_ratios(scenario_runs):
    lines, ok = [], True
    for name, (m, s0, T, traj) in scenario_runs.items():
        if m.family == "ttw":
            num, den, pref = cs.ranada_ttw(m), cs.m_ttw(m), cs.ranada_prefactor_ttw(m, s0)
        else:
            num, den, pref = cs.ranada_pw(m), cs.m_pw(m), cs.ranada_prefactor_pw(m, s0)
        rc = cs.ratio_report(traj, num, den, conj=True)
        rn = cs.ratio_report(traj, num, den, conj=False)
        derived_err = abs(rn.mean - pref["derived_vs_M2"]) / abs(pref["derived_vs_M2"])
        printed = pref["printed_vs_Mbar2"]
        mod_err = abs(abs(rc.mean) - abs(printed)) / abs(printed)
        ok &= rc.max_rel_dev < 1e-8 and rn.max_rel_dev < 1e-8
        lines.append(f"{name} conj {_fmt(rc.max_rel_dev)} plain {_fmt(rn.max_rel_dev)} derived prefactor "
                     f"err {_fmt(derived_err)}, |printed| err {_fmt(mod_err)}")
    record(7, ok, "; ".join(lines))
    assert ok


def test_criterion_08_cross_identities():
    osc = model("oscillator-nd", N=2, omega=1.0)
    coul = model("coulomb-nd", N=2, gamma=1.0)
    reps = cs.cross_identities(osc, coul, sample_points(osc, 100, seed=108),
                               sample_points(coul, 100, seed=109, bounded=True))
    keys = ("demkov", "runge_lenz", "abs_osc", "abs_coul")
    ok = all(reps[k].max < 1e-12 for k in keys)
    record(8, ok, ", ".join(f"{k} {_fmt(reps[k].max)}" for k in keys)
           + f" (printed Demkov {_fmt(reps['demkov_printed'].max)}, printed Runge-Lenz "
             f"{_fmt(reps['runge_lenz_printed'].max)})")
    assert ok


def test_criterion_09_action_angle():
    parts, ok = [], True
    for fam, kw in (("oscillator-nd", {"omega": 1.0}), ("coulomb-nd", {"gamma": 1.0})):
        m = model(fam, N=2, **kw)
        table = runner.radial_table(m, runner.random_rows(m, 50, 109))
        worst = max(r["error"] for r in table)
        ok &= all(r["status"] == "ok" for r in table) and worst < 1e-6
        parts.append(f"{fam} energy law {_fmt(worst)}")
    pt = model("ttw", k=2, alpha=0.5, beta=0.7, omega=1.0)
    pts = sample_points(pt, 100, seed=110)
    I, Phi = aa.pt_action_observable(pt), aa.pt_angle_observable(pt)
    literal = bracket_residual((Phi, I), 1.0, pts, "fd").max
    oriented = bracket_residual((I, Phi), 1.0, pts, "fd").max
    value = float(np.mean([poisson_bracket(Phi, I, s, "fd") for s in pts]))
    ok &= literal < 1e-6
    parts.append(f"PT {{Phi,I}} measured {value:+.9f} (relative residual vs +1 {_fmt(literal)}; "
                 f"{{I,Phi}}=1 residual {_fmt(oriented)})")
    for N in (2, 3):
        m = model("oscillator-nd", N=N, omega=1.0)
        chk = runner.sphere_chart_checks(m, sample_points(m, 100, seed=111))[0]
        ok &= chk["status"] == "pass"
        parts.append(f"sphere N={N} {_fmt(chk['metric'])}")
    record(9, ok, "; ".join(parts))
    assert literal < 1e-6, ("{Phi,I}=+1 with the flow-oriented angle; see analysis", literal, oriented)
    assert ok


def test_criterion_10_closure():
    parts, ok = [], True
    for k in (1, 2, 3):
        m = model("ttw", k=k, alpha=0.5, beta=0.7, omega=1.0)
        s0 = m.point([1.3, math.pi / (4 * k) + 0.05], [0.2, 0.4])
        cfg = IntegratorConfig(step=1e-3 / k)
        est = detect_closure(m, s0, 2.5 * math.pi, cfg)
        ok &= est.residual < 1e-4
        parts.append(f"k={k} T={est.T:.10f} residual {_fmt(est.residual)}")
    det = model("ttw-detuned", k=math.sqrt(5), alpha=0.5, beta=0.7, omega=1.0)
    try:
        detect_closure(det, det.point([1.3, 0.4], [0.2, 0.4]), 8.0, IntegratorConfig(step=2e-3))
        control = False
        parts.append("detuned control recurred")
    except NoRecurrence as exc:
        control = True
        parts.append("detuned k=sqrt5: " + str(exc).split("; ")[-1])
    ok &= control
    record(10, ok, "; ".join(parts))
    assert ok


def test_criterion_11_integrator_quality():
    m = model("ttw", k=1, alpha=0.5, beta=0.7, omega=1.0)
    s0 = m.point([1.3, math.pi / 4 + 0.05], [0.2, 0.4])
    cfg = IntegratorConfig()  # default step and tolerance
    traj = integrate(m, s0, 100 * math.pi, IntegratorConfig(sample_every=100))
    E = traj.energy()
    rel = np.abs(E - E[0]) / abs(E[0])
    tenth = len(rel) // 10
    early, late = rel[:tenth].max(), rel[-tenth:].max()
    lim = model("ttw", k=1, alpha=0.05, beta=0.05, omega=1.0)
    l0 = lim.point([1.0, math.pi / 4], [0.3, 0.5])
    exact = radial_closed_form(lim, l0)
    orders = convergence_order(lim, l0, math.pi, [0.02, 0.01, 0.005], lambda t: np.array([exact(t)]),
                               component=[0])["orders"]
    s1 = m.point([1.3, math.pi / 4 + 0.05], [0.2, 0.4])
    fwd = final_point(integrate(m, s1, 10.0, cfg))
    back = final_point(integrate(m, fwd, -10.0, cfg))
    rev = float(np.max(np.abs(back.vector() - s1.vector())))
    ok = rel.max() < 1e-7 and all(abs(o - 4) <= 0.2 for o in orders) and rev < 1e-9
    record(11, ok, f"100-period energy drift {_fmt(rel.max())} (first/last tenth {_fmt(early)}/{_fmt(late)}, "
                   f"h={cfg.step}); Gauss order " + "/".join(f"{o:.3f}" for o in orders)
           + f"; reversibility {_fmt(rev)}")
    assert ok


def test_criterion_12_adjudication_reports(tmp_path):
    parts, ok = [], True
    for name, suite, catalog in (("coulomb_2d", "coulomb-variants", "M_Coul[1]"),
                                 ("oscillator_3d", "oscillator-variants", "M_osc[1]")):
        blobs = []
        for run in ("a", "b"):
            cfg = json.loads((CONFIGS / f"{name}.json").read_text())
            cfg.setdefault("checks", {})["suites"] = [suite]
            cpath = tmp_path / f"{name}.json"
            cpath.write_text(json.dumps(cfg))
            out = tmp_path / f"{name}_{run}"
            code = main(["verify-algebra", "--config", str(cpath), "--out", str(out)])
            ok &= code == 0
            blobs.append((out / "report.verify-algebra.json").read_bytes())
        same = blobs[0] == blobs[1]
        rep = json.loads(blobs[0])
        verdict = next(c for c in rep["checks"] if c["name"] == f"{suite}:verdict")
        conserving = verdict["details"]["conserving_forms"]
        evidence = {c["name"]: c["metric"] for c in rep["checks"] if c["status"] == "measured"}
        ok &= same and verdict["status"] == "pass" and catalog in conserving
        parts.append(f"{suite}: conserving {conserving}, byte-identical {same}, drifts "
                     + ", ".join(f"{k.split(':', 1)[1]} {_fmt(v)}" for k, v in evidence.items()))
    record(12, ok, "; ".join(parts))
    assert ok
