"""Run configuration: JSON schema, defaults and validation."""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Mapping

import jsonschema

from ..errors import ConfigError, InvalidParams
from ..integrate import METHODS
from ..models import FAMILY_PARAMS, ModelSpec

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer", "minimum": 0}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ttwlab run configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "name": {"type": "string"},
        "seed": _INT,
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family", "params"],
            "properties": {
                "family": {"enum": sorted(FAMILY_PARAMS)},
                "params": {"type": "object", "additionalProperties": _NUM},
            },
        },
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "chart": {"enum": ["cartesian", "polar", "radial-angular", "angular"]},
                "q": {"type": "array", "items": _NUM, "minItems": 1},
                "p": {"type": "array", "items": _NUM, "minItems": 1},
                "t": _NUM,
                "random": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"seed": _INT, "margin": _POS, "bounded": {"type": "boolean"},
                                   "p_scale": _POS},
                },
            },
        },
        "points": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"count": {"type": "integer", "minimum": 1}, "seed": _INT, "margin": _POS,
                           "bounded": {"type": "boolean"}, "p_scale": _POS},
        },
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": list(METHODS)},
                "step": _POS,
                "tol": _POS,
                "T": {"type": "number"},
                "periods": _POS,
                "sample_every": {"type": "integer", "minimum": 1},
                "wall_margin": _POS,
                "max_steps": {"type": "integer", "minimum": 1},
            },
        },
        "checks": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "constants": {"type": "array", "items": {"type": "string"}},
                "suites": {"type": "array", "items": {"type": "string"}},
                "tol": _POS,
                "ratios": {"type": "boolean"},
            },
        },
        "closure": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"t_max": _POS, "tol": _POS, "t_min": {"type": "number", "minimum": 0},
                           "expect": {"enum": ["recurrence", "no-recurrence"]}},
        },
        "action_angle": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "pairs": {"type": "integer", "minimum": 0},
                "seed": _INT,
                "rows": {"type": "array", "items": {
                    "type": "object", "additionalProperties": False, "required": ["E", "L"],
                    "properties": {"E": _NUM, "L": _POS}}},
                "tol": _POS,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}, "trajectory": {"type": "string"},
                           "report": {"type": "string"}},
        },
    },
}

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "points": {"count": 100, "margin": 0.1, "bounded": False, "p_scale": 1.0},
    "integrator": {"method": "gauss-2stage", "step": 1e-3, "tol": 1e-12, "sample_every": 1,
                   "wall_margin": 1e-6, "max_steps": 50_000_000},
    "checks": {"tol": 1e-8, "ratios": True},
    "closure": {"tol": 1e-4, "t_min": 0.0, "expect": "recurrence"},
    "action_angle": {"pairs": 50, "tol": 1e-6},
    "output": {"dir": "out", "trajectory": "trajectory.csv", "report": "report.json"},
}


def _path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    return ".".join(parts) if parts else "<root>"


def _merge(base: dict, over: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, Mapping) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def validate(raw: Mapping) -> dict:
    """Validate a config mapping and return it with defaults filled in.

    Raises ConfigError naming the offending field.
    """
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        e = errors[0]
        raise ConfigError(f"{_path(e)}: {e.message}")
    try:
        spec = ModelSpec(raw["model"]["family"], dict(raw["model"]["params"]))
    except InvalidParams as exc:
        msg = str(exc)
        field = next((name for name in FAMILY_PARAMS.get(raw["model"]["family"], ()) if repr(name) in msg), None)
        where = f"model.params.{field}" if field else "model.params"
        raise ConfigError(f"{where}: {msg}") from exc
    cfg = _merge(DEFAULTS, raw)
    cfg["model"] = spec.to_dict()
    init = cfg.get("initial", {})
    if init and "random" not in init:
        missing = [f for f in ("chart", "q", "p") if f not in init]
        if missing:
            raise ConfigError(f"initial.{missing[0]}: required unless 'initial.random' is given")
        if len(init["q"]) != len(init["p"]):
            raise ConfigError("initial.p: must have the same length as initial.q")
    integ = cfg["integrator"]
    if "T" in integ and "periods" in integ:
        raise ConfigError("integrator.T: give either 'T' or 'periods', not both")
    return cfg


def load(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return validate(raw)


def model_spec(cfg: Mapping) -> ModelSpec:
    return ModelSpec.from_dict(cfg["model"])
