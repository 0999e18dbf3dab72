"""Experiment configuration documents (YAML or JSON, ``schema_version: 1``).

Layout::

    schema_version: 1
    command: bound            # optional, must match the sub-command when given
    eigensystem: {kind: polynomial, C: 1.0, alpha: 2.0}
    operator: {variant: fourier_truncation, n: 2}
    seed: 7                   # optional
    params: {...}             # command specific, see PARAM_SCHEMAS

Unknown keys anywhere are rejected, and every descriptor is validated
before any computation starts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .eigensystems import EigenSystem
from .errors import ConfigError, OpNormError
from .sampling_ops import SamplingOperator

__all__ = ["SCHEMA_VERSION", "COMMANDS", "PARAM_SCHEMAS", "ExperimentConfig", "load_config", "parse_config"]

SCHEMA_VERSION = 1
COMMANDS = ("bound", "oracle", "psi", "figures", "critical-radius", "random")
FIGURES = ("fig:sp:per", "fig:geom:fourier", "fig:proof:geom", "fig:1")
_TOP_KEYS = {"schema_version", "command", "eigensystem", "operator", "seed", "params"}

# name -> default; None means "derived from the operator/eigensystem" or "absent"
PARAM_SCHEMAS: dict[str, dict[str, Any]] = {
    "bound": {
        "eps_grid": None,
        "eps2_grid": None,
        "kinds": None,
        "p_candidates": None,
        "weak_p": None,
        "tail_method": "auto",
        "horizon": None,
        "rho_mode": "optimized",
        "rho2": None,
        "t_rtol": 1e-8,
    },
    "oracle": {
        "eps_grid": None,
        "eps2_grid": None,
        "N": None,
        "resolution": 1000,
        "p_candidates": None,
        "weak_p": None,
        "tail_method": "auto",
        "horizon": None,
        "t_rtol": 1e-8,
        "slack": 1e-6,
    },
    "psi": {"a": 1, "b": None, "tail_p": None, "tail_methods": ["trace", "linf", "block", "truncated_eig"], "horizon": None},
    "figures": {
        "figure": None,
        "n": None,
        "N": None,
        "samples": 360,
        "eps2_grid": None,
        "u2": 4.0,
        "v2": 1.0,
        "a2": 2.0,
        "d2": 0.5,
        "points": 101,
    },
    "critical-radius": {"n_grid": [100, 1000, 10000, 100000], "tol": 1e-13},
    "random": {
        "n_grid": [1000],
        "eps": None,
        "C_psi": None,
        "p_range": [8, 64],
        "c_sigma_grid": 256,
        "mc": None,
    },
}
_MC_KEYS = {"p", "n", "delta", "trials"}
_NEEDS_SYSTEM = {"bound", "oracle", "psi", "critical-radius", "random"}
_NEEDS_OPERATOR = {"bound", "oracle", "psi"}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    params: dict[str, Any]
    eigensystem: EigenSystem | None = None
    operator: SamplingOperator | None = None
    seed: int | None = None
    raw: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def sha256(self) -> str:
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True).encode()).hexdigest()


def _check_grid(name: str, value: Any) -> list[float]:
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ConfigError(f"params.{name} must be a list of numbers")
    if any(v < 0 for v in value):
        raise ConfigError(f"params.{name} entries must be nonnegative")
    return [float(v) for v in value]


def _validate_params(command: str, params: dict[str, Any], op: SamplingOperator | None, sys: EigenSystem | None) -> dict[str, Any]:
    schema = PARAM_SCHEMAS[command]
    unknown = set(params) - set(schema)
    if unknown:
        raise ConfigError(f"unknown params for {command!r}: {sorted(unknown)}")
    out = {**schema, **params}
    for key in ("eps_grid", "eps2_grid"):
        if key in schema and out[key] is not None:
            out[key] = _check_grid(key, out[key])
    if "eps_grid" in schema and out["eps_grid"] is not None and out["eps2_grid"] is not None:
        raise ConfigError("give at most one of params.eps_grid and params.eps2_grid")
    if command == "bound" and out["kinds"] is not None:
        bad = set(out["kinds"]) - {"strong", "weak", "fourier_exact"}
        if bad:
            raise ConfigError(f"unknown bound kinds {sorted(bad)}")
        if "fourier_exact" in out["kinds"] and op is not None and op.variant != "fourier_truncation":
            raise ConfigError("fourier_exact is only defined for the fourier_truncation operator")
    if command == "figures":
        if out["figure"] not in FIGURES:
            raise ConfigError(f"params.figure must be one of {FIGURES}, got {out['figure']!r}")
        if out["figure"] == "fig:proof:geom" and (op is None or sys is None):
            raise ConfigError("fig:proof:geom needs an operator and an eigensystem")
    if command == "random":
        if out["mc"] is not None:
            mcs = out["mc"] if isinstance(out["mc"], list) else [out["mc"]]
            for mc in mcs:
                if not isinstance(mc, dict) or set(mc) != _MC_KEYS:
                    raise ConfigError(f"each params.mc entry needs exactly the keys {sorted(_MC_KEYS)}")
            out["mc"] = mcs
        if not (isinstance(out["p_range"], list) and len(out["p_range"]) == 2):
            raise ConfigError("params.p_range must be [lo, hi]")
    if command in ("critical-radius", "random"):
        grid = out["n_grid"]
        if not isinstance(grid, list) or not all(isinstance(v, int) and v >= 1 for v in grid):
            raise ConfigError("params.n_grid must be a list of positive integers")
    return out


def parse_config(doc: Any, command: str) -> ExperimentConfig:
    """Validate a parsed document for ``command``; raises ``ConfigError``."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}")
    if "command" in doc and doc["command"] != command:
        raise ConfigError(f"config is for command {doc['command']!r}, not {command!r}")
    try:
        sys = EigenSystem.from_dict(doc["eigensystem"]) if "eigensystem" in doc else None
        op = SamplingOperator.from_dict(doc["operator"]) if "operator" in doc else None
    except ConfigError:
        raise
    except (OpNormError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid descriptor: {exc}") from None
    if command in _NEEDS_SYSTEM and sys is None:
        raise ConfigError(f"command {command!r} needs an 'eigensystem' descriptor")
    if command in _NEEDS_OPERATOR and op is None:
        raise ConfigError(f"command {command!r} needs an 'operator' descriptor")
    if op is not None and sys is not None and op.is_domain and sys.basis is None:
        raise ConfigError(f"operator {op.variant!r} needs eigenfunctions; kind {sys.kind!r} has none")
    seed = doc.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        raise ConfigError("seed must be a nonnegative integer")
    params = doc.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError("params must be a mapping")
    params = _validate_params(command, params, op, sys)
    return ExperimentConfig(command, params, sys, op, seed, doc)


def load_config(path: str | Path, command: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return parse_config(doc, command)
