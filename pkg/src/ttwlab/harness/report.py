"""Deterministic JSON reports.

Reports are written with sorted keys and shortest round-trip floats.  Wall
clock goes to a sidecar ``<report>.timing.json`` so that the report itself is
byte-identical across runs with the same config and seed.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


def _clean(obj: Any) -> Any:
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(float(obj.real)), _clean(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def summarize(checks: Iterable[Mapping]) -> dict:
    checks = list(checks)
    counts = {s: sum(c["status"] == s for c in checks) for s in ("pass", "fail", "measured")}
    counts["status"] = "fail" if counts["fail"] else "pass"
    return counts


def build_report(command: str, cfg: Mapping, checks: list, seed: int, extra: Mapping | None = None) -> dict:
    names = [c["name"] for c in checks]
    dup = sorted({n for n in names if names.count(n) > 1})
    if dup:
        raise ValueError(f"duplicate check names in report: {dup}")
    rep = {"tool": "ttwlab", "command": command, "seed": seed, "config": cfg, "checks": checks,
           "summary": summarize(checks)}
    if extra:
        rep.update(extra)
    return _clean(rep)


def dumps(report: Mapping) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def write(report: Mapping, path, wall_clock: float | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(report))
    if wall_clock is not None:
        Path(str(path) + ".timing.json").write_text(json.dumps({"wall_clock_s": wall_clock}) + "\n")
    return path


def exit_code(report: Mapping) -> int:
    return EXIT_FAIL if report["summary"]["status"] == "fail" else EXIT_PASS


def table(checks: Iterable[Mapping]) -> str:
    rows = []
    for c in checks:
        m = c.get("metric")
        if isinstance(m, float):
            m = f"{m:.3e}"
        elif isinstance(m, list) and len(m) == 2 and all(isinstance(x, float) for x in m):
            m = f"{m[0]:.6g}{m[1]:+.6g}i"
        tol = c.get("tol")
        rows.append(f"{c['status']:<9} {c['name']:<58} {str(m):>14}  tol={tol}")
    return "\n".join(rows)
