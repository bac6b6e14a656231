"""ttwlab command line.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 numerical failure (wall proximity, non-convergence, step underflow).
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import sys
import time
from pathlib import Path

from ..errors import ConfigError, InvalidParams, NumericalFailure, TTWLabError
from . import config as config_mod
from . import report as rp
from . import runner

log = logging.getLogger("ttwlab")

COMMANDS = ("simulate", "verify-algebra", "verify-invariants", "action-angle", "closure", "report")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ttwlab", description="Superintegrable-model laboratory: "
                                 "conformal algebra, action-angle charts and hidden constants of motion.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=(name != "report"), help="run configuration (JSON)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--tol", type=float, help="override the drift tolerance checks.tol")
        if name == "report":
            p.add_argument("inputs", nargs="*", help="existing report JSON files to aggregate")
    return ap


def _load(args) -> dict:
    cfg = config_mod.load(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed: must be a non-negative integer")
        cfg["seed"] = args.seed
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigError("--tol: must be > 0")
        cfg["checks"]["tol"] = args.tol
    if args.out:
        cfg["output"]["dir"] = args.out
    return cfg


def _outdir(cfg) -> Path:
    d = Path(cfg["output"]["dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _report_name(cfg, command) -> str:
    name = cfg["output"]["report"]
    if command == "simulate":
        return name
    stem = Path(name).stem
    return f"{stem}.{command}.json"


def _finish(command, cfg, checks, t0, extra=None) -> int:
    rep = rp.build_report(command, _echo(cfg), checks, cfg["seed"], extra)
    path = rp.write(rep, _outdir(cfg) / _report_name(cfg, command), time.perf_counter() - t0)
    print(rp.table(rep["checks"]))
    print(f"{rep['summary']['status'].upper()}: {rep['summary']['pass']} pass, {rep['summary']['fail']} fail, "
          f"{rep['summary']['measured']} measured -> {path}")
    return rp.exit_code(rep)


def _echo(cfg) -> dict:
    out = copy.deepcopy(cfg)
    out.pop("output", None)  # paths do not affect results
    return out


def cmd_simulate(cfg) -> int:
    t0 = time.perf_counter()
    checks, art = runner.run_simulate(cfg)
    csv_path = _outdir(cfg) / cfg["output"]["trajectory"]
    art["trajectory"].to_csv(csv_path, art["invariants"])
    return _finish("simulate", cfg, checks, t0, {"trajectory_file": csv_path.name})


def cmd_verify_algebra(cfg) -> int:
    t0 = time.perf_counter()
    return _finish("verify-algebra", cfg, runner.run_verify_algebra(cfg), t0)


def cmd_verify_invariants(cfg) -> int:
    t0 = time.perf_counter()
    return _finish("verify-invariants", cfg, runner.run_verify_invariants(cfg), t0)


def cmd_action_angle(cfg) -> int:
    t0 = time.perf_counter()
    checks, table = runner.run_action_angle(cfg)
    if table:
        path = _outdir(cfg) / "radial_actions.csv"
        keys = ["E", "L", "I_r_quadrature", "I_r_closed", "error", "status"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(keys)
            for row in table:
                w.writerow([row.get(k, "") if not isinstance(row.get(k), float) else f"{row[k]:.17g}"
                            for k in keys])
    return _finish("action-angle", cfg, checks, t0, {"radial_table": table})


def cmd_closure(cfg) -> int:
    t0 = time.perf_counter()
    return _finish("closure", cfg, runner.run_closure(cfg), t0)


def cmd_report(args) -> int:
    """Aggregate existing reports, or run every suite that applies to --config."""
    t0 = time.perf_counter()
    if args.inputs:
        combined = []
        for path in args.inputs:
            try:
                rep = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"{path}: cannot read report ({exc})") from exc
            for c in rep.get("checks", []):
                c = dict(c)
                c["name"] = f"{rep.get('command', Path(path).stem)}/{c['name']}"
                combined.append(c)
        out = Path(args.out or ".")
        out.mkdir(parents=True, exist_ok=True)
        rep = rp.build_report("report", {"inputs": sorted(Path(p).name for p in args.inputs)}, combined, None)
        rp.write(rep, out / "summary.json", time.perf_counter() - t0)
        print(rp.table(rep["checks"]))
        return rp.exit_code(rep)
    if not args.config:
        raise ConfigError("report: give --config or one or more report files")
    cfg = _load(args)
    checks = [dict(c, name=f"verify-algebra/{c['name']}") for c in runner.run_verify_algebra(cfg)]
    m = runner.build_model(cfg)
    if m.radial_kind is not None:
        checks += [dict(c, name=f"verify-invariants/{c['name']}") for c in runner.run_verify_invariants(cfg)]
        checks += [dict(c, name=f"closure/{c['name']}") for c in runner.run_closure(cfg)]
    aa_checks, _ = runner.run_action_angle(cfg)
    checks += [dict(c, name=f"action-angle/{c['name']}") for c in aa_checks]
    return _finish("report", cfg, checks, t0)


HANDLERS = {
    "simulate": cmd_simulate,
    "verify-algebra": cmd_verify_algebra,
    "verify-invariants": cmd_verify_invariants,
    "action-angle": cmd_action_angle,
    "closure": cmd_closure,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "report":
            return cmd_report(args)
        cfg = _load(args)
        return HANDLERS[args.command](cfg)
    except (ConfigError, InvalidParams, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return rp.EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return rp.EXIT_NUMERICAL
    except TTWLabError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return rp.EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
