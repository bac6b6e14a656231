"""Scenario execution: every CLI subcommand is a function cfg -> (checks, artifacts).

A check is a plain dict with keys name, status (pass | fail | measured),
metric, tol and details.  Nothing here touches the filesystem.
"""

from __future__ import annotations

import math
import re
from typing import Any, Mapping, Optional

import numpy as np

from .. import action_angle as aa
from .. import conformal as cf
from .. import conserved as cs
from ..errors import DomainViolation, NoRecurrence, NoTurningPoints, UnboundedMotion
from ..integrate import IntegratorConfig, Trajectory, detect_closure, integrate
from ..models import Model, PoschlTellerMixin, build, model as make_model, to_polar
from ..phase import PhasePoint, ResidualReport, bracket_residual, pointwise_residual
from ..sampling import sample_point, sample_points
from .config import model_spec

ALGEBRA_SUITES = ("conformal-algebra", "casimir", "klein-bracket", "killing-roundtrip", "inversion", "m-algebra",
                  "cross-identities", "dihedral-equivalence", "coulomb-variants", "oscillator-variants")


def check(name: str, status: str, metric: Any = None, tol: Optional[float] = None, **details) -> dict:
    return {"name": name, "status": status, "metric": metric, "tol": tol, "details": details}


def _residual_check(rep: ResidualReport, tol: float, name: Optional[str] = None) -> dict:
    return check(name or rep.name, "pass" if rep.passed(tol) else "fail", rep.max, tol, mean=rep.mean,
                 count=rep.count, worst_index=rep.worst_index)


def _num(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


# ---------------------------------------------------------------------------
# setup helpers


def build_model(cfg: Mapping) -> Model:
    return build(model_spec(cfg))


def points(cfg: Mapping, m: Model, seed: Optional[int] = None) -> list[PhasePoint]:
    pc = cfg["points"]
    sd = pc.get("seed", cfg["seed"]) if seed is None else seed
    return sample_points(m, pc["count"], sd, margin=pc["margin"], bounded=pc["bounded"], p_scale=pc["p_scale"])


def initial_point(cfg: Mapping, m: Model) -> PhasePoint:
    init = cfg.get("initial") or {"random": {}}
    if "random" in init:
        r = init["random"]
        rng = np.random.default_rng(r.get("seed", cfg["seed"]))
        return sample_point(m, rng, margin=r.get("margin", 0.1), bounded=r.get("bounded", True),
                            p_scale=r.get("p_scale", 1.0))
    return PhasePoint(init["chart"], init["q"], init["p"], init.get("t", 0.0))


def radial_period(m: Model, s: PhasePoint) -> float:
    if m.radial_kind == "osc":
        return math.pi / m.omega
    if m.radial_kind == "coul":
        E = m.H(s.q, s.p)
        if not E < 0:
            raise UnboundedMotion(f"Coulomb-type motion with E = {E} >= 0 has no period")
        return 2 * math.pi * m.gamma / (-2 * E) ** 1.5
    raise DomainViolation("a conformal model has no radial period; give integrator.T")


def integrator_config(cfg: Mapping, sample_every: Optional[int] = None) -> IntegratorConfig:
    ic = cfg["integrator"]
    return IntegratorConfig(ic["method"], ic["step"], ic["tol"], ic["max_steps"], ic["wall_margin"],
                            sample_every=sample_every or ic["sample_every"])


def span(cfg: Mapping, m: Model, s0: PhasePoint) -> float:
    ic = cfg["integrator"]
    if "T" in ic:
        return float(ic["T"])
    return ic.get("periods", 10) * radial_period(m, s0)


# ---------------------------------------------------------------------------
# constant catalog


def constant_catalog(m: Model) -> dict[str, cs.HiddenConstant]:
    out = {"H": cs.energy(m)}
    ang = cs.angular_energy(m)
    out[ang.name] = ang
    if isinstance(m, PoschlTellerMixin) and m.chart == "polar":
        if m.radial_kind == "osc":
            for c in (cs.m_ttw(m), cs.ranada_ttw(m), cs.ranada_ttw(m, printed=True)):
                out[c.name] = c
        elif m.radial_kind == "coul":
            for c in (cs.m_pw(m), cs.ranada_pw(m), cs.ranada_pw(m, printed=True)):
                out[c.name] = c
            for v in cs.COULOMB_VARIANTS:
                c = cs.m_pw(m, v)
                out[c.name] = c
        elif float(m.k).is_integer():
            c = cs.rational_power_constant(m, int(m.k), 1)
            out[c.name] = c
    elif m.chart in ("polar", "radial-angular") and m.family in ("oscillator-nd", "coulomb-nd"):
        for a in range(1, m.n):
            out[f"I{a}"] = cs.sphere_action(m, a)
            if m.radial_kind == "osc":
                for form in cs.OSCILLATOR_FORMS:
                    c = cs.m_osc_nd(m, a, form)
                    out[c.name] = c
            elif m.radial_kind == "coul":
                for v in cs.COULOMB_VARIANTS:
                    c = cs.m_coul_nd(m, a, v)
                    out[c.name] = c
    elif m.is_conformal and m.chart in ("polar", "radial-angular", "cartesian") and m.family != "dihedral-calogero":
        out["Casimir"] = cs.HiddenConstant("Casimir", m, lambda q, p, _: cf.casimir(m, PhasePoint(m.chart, q, p)))
    return out


def default_constants(m: Model) -> list[str]:
    cat = constant_catalog(m)
    wanted = {"ttw": ["H", "I_PT", "M_TTW", "R_TTW"], "pw": ["H", "I_PT", "M_PW", "R_PW"]}.get(m.family)
    return wanted or [n for n in cat if not is_variant(n)]


def is_variant(name: str) -> bool:
    """Printed or alternative forms carry a non-numeric tag, e.g. M_PW[8L] or R_TTW[printed]."""
    return re.search(r"\[(?!\d+\])[^\]]+\]", name) is not None


def select_constants(m: Model, names) -> list[cs.HiddenConstant]:
    cat = constant_catalog(m)
    out = []
    for n in names:
        if n not in cat:
            raise KeyError(f"constant {n!r} is not defined for {m.family}; available: {', '.join(cat)}")
        out.append(cat[n])
    return out


# ---------------------------------------------------------------------------
# subcommands


def run_simulate(cfg: Mapping) -> tuple[list[dict], dict]:
    """Integrate, evaluate drifts; returns checks and {'trajectory', 'invariants'}."""
    m = build_model(cfg)
    s0 = initial_point(cfg, m)
    T = span(cfg, m, s0)
    traj = integrate(m, s0, T, integrator_config(cfg))
    names = cfg["checks"].get("constants") or default_constants(m)
    consts = select_constants(m, names)
    tol = cfg["checks"]["tol"]
    rep = cs.drift(traj, consts, tol)
    checks = [check(f"drift:{e.name}", "pass" if e.passed else "fail", e.max_rel, tol, initial=_num(e.initial),
                    max_abs=e.max_abs, t_of_max=e.t_max) for e in rep.entries]
    checks.append(check("integration", "pass", T, None, steps=traj.stats["steps"], h=traj.stats["h"],
                        method=traj.stats["method"], splits=traj.stats["splits"],
                        initial={"chart": s0.chart, "q": s0.q.tolist(), "p": s0.p.tolist()}))
    if cfg["checks"].get("ratios", True):
        checks += _ratio_checks(m, traj, tol)
    invariants = {c.name: c.along(traj.y) for c in consts}
    return checks, {"trajectory": traj, "invariants": invariants}


def _ratio_checks(m: Model, traj: Trajectory, tol: float) -> list[dict]:
    if not (isinstance(m, PoschlTellerMixin) and m.chart == "polar" and m.radial_kind in ("osc", "coul")):
        return []
    s0 = traj.point(0)
    if m.radial_kind == "osc":
        num, den = cs.ranada_ttw(m), cs.m_ttw(m)
        pref = cs.ranada_prefactor_ttw(m, s0)
        label = "R_TTW"
    else:
        num, den = cs.ranada_pw(m), cs.m_pw(m)
        pref = cs.ranada_prefactor_pw(m, s0)
        label = "R_PW"
    out = []
    rb = cs.ratio_report(traj, num, den, conj=True, name=f"ratio:{label}/conj({den.name})^2")
    printed = pref["printed_vs_Mbar2"]
    out.append(check(rb.name, "pass" if rb.max_rel_dev < tol else "fail", rb.max_rel_dev, tol,
                     mean=_num(rb.mean), printed_prefactor=_num(complex(printed)),
                     abs_ratio_to_printed=abs(rb.mean) / abs(printed), skipped=rb.skipped,
                     printed_matches=bool(abs(rb.mean - printed) < 1e-6 * abs(printed))))
    r2 = cs.ratio_report(traj, num, den, conj=False, name=f"ratio:{label}/{den.name}^2")
    derived = pref["derived_vs_M2"]
    out.append(check(r2.name, "pass" if r2.max_rel_dev < tol else "fail", r2.max_rel_dev, tol,
                     mean=_num(r2.mean), derived_prefactor=_num(complex(derived)),
                     derived_rel_error=abs(r2.mean - derived) / abs(derived), skipped=r2.skipped))
    return out


def run_verify_invariants(cfg: Mapping) -> list[dict]:
    """Drift and ratio checks only; nothing is kept of the trajectory."""
    return run_simulate(cfg)[0]


def run_verify_algebra(cfg: Mapping, suites=None) -> list[dict]:
    m = build_model(cfg)
    suites = suites or cfg["checks"].get("suites") or applicable_suites(m)
    out = []
    for suite in suites:
        if suite not in ALGEBRA_SUITES:
            raise KeyError(f"unknown suite {suite!r}; known: {', '.join(ALGEBRA_SUITES)}")
        out += SUITES[suite](cfg, m)
    return out


def applicable_suites(m: Model) -> list[str]:
    s = []
    conf = m.conformal()
    if conf.chart != "angular" and m.family not in ("poschl-teller",):
        s += ["conformal-algebra", "casimir", "klein-bracket", "killing-roundtrip", "m-algebra"]
    if m.family == "conformal-1d":
        s.append("inversion")
    if m.family in ("ttw", "dihedral-calogero"):
        s.append("dihedral-equivalence")
    if m.family in ("oscillator-nd", "coulomb-nd") and m.n == 2:
        s.append("cross-identities")
    if m.family in ("coulomb-nd", "pw"):
        s.append("coulomb-variants")
    if m.family == "oscillator-nd":
        s.append("oscillator-variants")
    return s


def _conf_points(cfg, m):
    return points(cfg, m.conformal())


def suite_conformal(cfg, m):
    c = m.conformal()
    return [_residual_check(r, 1e-6, f"conformal:{r.name}") for r in cf.conformal_algebra_residuals(c, _conf_points(cfg, m))]


def suite_casimir(cfg, m):
    c = m.conformal()
    pts = _conf_points(cfg, m)
    reps = cf.casimir_residuals(c, pts, method="auto")
    fd = cf.casimir_residuals(c, pts, method="fd")
    out = [_residual_check(reps[0], 1e-10, f"casimir:{reps[0].name}")]
    for r, rf in zip(reps[1:], fd[1:]):
        chk = _residual_check(r, 1e-6, f"casimir:{r.name}")
        chk["details"]["fd_residual"] = rf.max
        out.append(chk)
    return out


def suite_klein(cfg, m):
    c = m.conformal()
    pts = _conf_points(cfg, m)
    imz = min(cf.klein_z(c, s).imag for s in pts)
    return [_residual_check(cf.klein_bracket_residual(c, pts), 1e-6, "klein:{z,zbar}"),
            check("klein:Im z > 0", "pass" if imz > 0 else "fail", imz, 0.0)]


def suite_killing(cfg, m):
    c = m.conformal()
    return [_residual_check(cf.killing_roundtrip_residual(c, _conf_points(cfg, m)), 1e-12, "killing:round trip")]


def suite_inversion(cfg, m):
    if m.family != "conformal-1d":
        return [check("inversion", "fail", None, None, reason="inversion map is one-dimensional only")]
    pts = _conf_points(cfg, m)
    zs = [cf.klein_z(m, s) for s in pts]
    return [_residual_check(cf.inversion_residuals(m.spec["g"], zs), 1e-12, "inversion:H0<->K, D->-D")]


def suite_m_algebra(cfg, m):
    c = m.conformal()
    out = []
    for ident in cf.m_algebra_residuals(c, _conf_points(cfg, m)):
        tol = 1e-6
        if ident.printed.passed(tol):
            status = "pass"
        elif ident.measured.passed(tol):
            status = "measured"
        else:
            status = "fail"
        out.append(check(f"m-algebra:{ident.name}", status, ident.printed.max, tol, printed_rhs=ident.printed_rhs,
                         printed_residual=ident.printed.max, measured_rhs=ident.measured_rhs,
                         measured_residual=ident.measured.max))
    return out


def suite_cross(cfg, m):
    if m.family == "oscillator-nd":
        mo = m
        mc = make_model("coulomb-nd", N=2, gamma=1.0)
    else:
        mc = m
        mo = make_model("oscillator-nd", N=2, omega=1.0)
    po = points(cfg, mo)
    pc = sample_points(mc, cfg["points"]["count"], cfg["points"].get("seed", cfg["seed"]) + 1, bounded=True)
    reps = cs.cross_identities(mo, mc, po, pc)
    out = [_residual_check(reps[k], 1e-12, f"cross:{reps[k].name}") for k in ("demkov", "runge_lenz", "abs_osc", "abs_coul")]
    for k in ("demkov_printed", "runge_lenz_printed"):
        r = reps[k]
        out.append(check(f"cross:{r.name}", "measured", r.max, 1e-12, holds=r.passed(1e-12)))
    return out


def suite_dihedral(cfg, m, count: int = 1000):
    p = m.spec.params
    ttw = make_model("ttw", **p)
    dih = make_model("dihedral-calogero", **p)
    pts = sample_points(dih, count, cfg["points"].get("seed", cfg["seed"]), margin=cfg["points"]["margin"])
    rep = pointwise_residual(lambda s: dih.H(s.q, s.p), lambda s: ttw.H(*_qp(to_polar(s))), pts,
                             "H_dihedral(x) = H_TTW(polar(x))")
    return [_residual_check(rep, 1e-12, "dihedral:" + rep.name)]


def _qp(s):
    return s.q, s.p


def _variant_run(cfg, m, consts, label, names):
    s0 = initial_point(cfg, m)
    T = span(cfg, m, s0)
    traj = integrate(m, s0, T, integrator_config(cfg))
    tol = cfg["checks"]["tol"]
    rep = cs.drift(traj, consts, tol)
    conserving = [e.name for e in rep.entries if e.passed]
    out = []
    for e, form in zip(rep.entries, names):
        out.append(check(f"{label}:{e.name}", "measured", e.max_rel, tol, form=form, conserved=e.passed))
    catalog_ok = rep.entries[0].passed
    out.append(check(f"{label}:verdict", "pass" if catalog_ok else "fail", conserving, tol,
                     conserving_forms=conserving, catalog_form=rep.entries[0].name, T=T))
    return out


def suite_coulomb_variants(cfg, m):
    if m.family == "pw":
        consts = [cs.m_pw(m, v) for v in cs.COULOMB_VARIANTS]
    elif m.family == "coulomb-nd":
        consts = [cs.m_coul_nd(m, a, v) for v in cs.COULOMB_VARIANTS for a in range(1, m.n)]
    else:
        return [check("coulomb-variants", "fail", None, None, reason=f"{m.family} has no Coulomb term")]
    forms = [cs.COULOMB_VARIANTS[v] for v in cs.COULOMB_VARIANTS for _ in range(1 if m.family == "pw" else m.n - 1)]
    return _variant_run(cfg, m, consts, "coulomb-variants", forms)


def suite_oscillator_variants(cfg, m):
    if m.family != "oscillator-nd":
        return [check("oscillator-variants", "fail", None, None, reason=f"{m.family} is not oscillator-nd")]
    consts = [cs.m_osc_nd(m, a, f) for f in cs.OSCILLATOR_FORMS for a in range(1, m.n)]
    forms = [cs.OSCILLATOR_FORMS[f] for f in cs.OSCILLATOR_FORMS for _ in range(1, m.n)]
    return _variant_run(cfg, m, consts, "oscillator-variants", forms)


SUITES = {
    "conformal-algebra": suite_conformal,
    "casimir": suite_casimir,
    "klein-bracket": suite_klein,
    "killing-roundtrip": suite_killing,
    "inversion": suite_inversion,
    "m-algebra": suite_m_algebra,
    "cross-identities": suite_cross,
    "dihedral-equivalence": suite_dihedral,
    "coulomb-variants": suite_coulomb_variants,
    "oscillator-variants": suite_oscillator_variants,
}


# ---------------------------------------------------------------------------
# action-angle


def radial_table(m: Model, rows) -> list[dict]:
    """(E, L, quadrature, closed form, error) per row; unbounded rows are marked, not fatal."""
    out = []
    for E, L in rows:
        row = {"E": E, "L": L}
        try:
            ra = aa.radial_action(m, E, L)
            closed = (aa.oscillator_radial_action_closed(E, L, m.omega) if m.radial_kind == "osc"
                      else aa.coulomb_radial_action_closed(E, L, m.gamma))
            row.update(I_r_quadrature=ra.value, I_r_closed=closed, error=abs(ra.value - closed),
                       r_minus=ra.r_minus, r_plus=ra.r_plus, nodes=ra.nodes, status="ok")
        except UnboundedMotion:
            row["status"] = "unbounded"
        except NoTurningPoints:
            row["status"] = "no-turning-points"
        out.append(row)
    return out


def random_rows(m: Model, count: int, seed: int) -> list[tuple[float, float]]:
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(count):
        L = float(rng.uniform(0.2, 3.0))
        I_r = float(rng.uniform(0.0, 3.0))
        E = aa.oscillator_energy(I_r, L, m.omega) if m.radial_kind == "osc" else aa.coulomb_energy(I_r, L, m.gamma)
        rows.append((E, L))
    return rows


def pt_chart_checks(m: Model, pts, tol=1e-6) -> list[dict]:
    It = aa.pt_action_observable(m)
    Phi = aa.pt_angle_observable(m)
    Lam = aa.lambda_observable(m)
    L = aa.sqrt_2I_observable(m)
    out = [_residual_check(bracket_residual((It, Phi), 1.0, pts, "fd", "{I,Phi}=1"), tol, "pt-chart:{I,Phi}=1"),
           _residual_check(bracket_residual((L, Lam), 1.0, pts, "fd", "{sqrt(2I),Lambda}=1"), tol,
                           "pt-chart:{sqrt(2I),Lambda}=1")]
    rev = bracket_residual((Phi, It), 1.0, pts, "fd")
    flip = bracket_residual((Phi, It), -1.0, pts, "fd")
    out.append(check("pt-chart:{Phi,I}=-1 (argument order reversed)", "measured", flip.max, tol,
                     residual_vs_plus_one=rev.max, residual_vs_minus_one=flip.max))
    pt_energy = pointwise_residual(lambda s: m.k ** 2 * It(s) ** 2 / 2, lambda s: m.angular_energy(s.q, s.p), pts,
                                   "k^2 It^2/2 = I_PT")
    out.append(_residual_check(pt_energy, 1e-10, "pt-chart:k^2 It^2/2 = I_PT"))
    return out


def sphere_chart_checks(m: Model, pts, tol=1e-6) -> list[dict]:
    N = m.n
    I = [aa.sphere_action_observable(N, a, m.chart) for a in range(1, N)]
    P = [aa.sphere_angle_observable(N, a, m.chart) for a in range(1, N)]
    worst = 0.0
    for a in range(N - 1):
        for b in range(N - 1):
            worst = max(worst, bracket_residual((I[a], P[b]), float(a == b), pts, "fd").max)
            if a < b:
                worst = max(worst, bracket_residual((I[a], I[b]), 0.0, pts, "fd").max,
                            bracket_residual((P[a], P[b]), 0.0, pts, "fd").max)
    cas = pointwise_residual(lambda s: aa.sphere_actions(N, s).casimir, lambda s: m.angular_energy(s.q, s.p), pts,
                             "(sum I_a)^2/2 = I")
    return [check(f"sphere-chart:N={N} canonical", "pass" if worst < tol else "fail", worst, tol),
            _residual_check(cas, 1e-10, f"sphere-chart:N={N} (sum I_a)^2/2 = I")]


def run_action_angle(cfg: Mapping) -> tuple[list[dict], list[dict]]:
    m = build_model(cfg)
    ac = cfg["action_angle"]
    tol = ac["tol"]
    checks: list[dict] = []
    table: list[dict] = []
    if m.radial_kind in ("osc", "coul"):
        rows = [(r["E"], r["L"]) for r in ac.get("rows", [])]
        rows += random_rows(m, ac["pairs"], ac.get("seed", cfg["seed"]))
        table = radial_table(m, rows)
        ok = [r for r in table if r["status"] == "ok"]
        worst = max((r["error"] for r in ok), default=0.0)
        checks.append(check("radial-action:energy law", "pass" if worst < tol else "fail", worst, tol,
                            rows=len(table), bounded=len(ok),
                            unbounded=sum(r["status"] != "ok" for r in table)))
    if isinstance(m, PoschlTellerMixin) and float(m.k).is_integer():
        checks += pt_chart_checks(m, points(cfg, m), tol)
    if m.family in ("oscillator-nd", "coulomb-nd"):
        for N in ((2, 3) if m.n == 3 else (2,)):
            mm = make_model(m.family, **{**m.spec.params, "N": N})
            checks += sphere_chart_checks(mm, points(cfg, mm), tol)
    return checks, table


# ---------------------------------------------------------------------------
# closure


def run_closure(cfg: Mapping) -> list[dict]:
    m = build_model(cfg)
    s0 = initial_point(cfg, m)
    cc = cfg["closure"]
    t_max = cc.get("t_max") or 2.5 * radial_period(m, s0)
    expect = cc["expect"]
    try:
        est = detect_closure(m, s0, t_max, integrator_config(cfg, 1), tol=cc["tol"], t_min=cc["t_min"])
    except NoRecurrence as exc:
        return [check("closure", "pass" if expect == "no-recurrence" else "fail", None, cc["tol"],
                      result="no recurrence", message=str(exc), t_max=t_max)]
    status = "pass" if expect == "recurrence" else "fail"
    return [check("closure", status, est.residual, cc["tol"], T=est.T, residual=est.residual, t_max=t_max,
                  result="recurrence")]
