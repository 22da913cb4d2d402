"""Study configuration files (YAML) with strict key checking.

A config file is a mapping whose keys must all belong to the schema of the
study it is used for; missing keys take the defaults below.  The ``problem``
entry is itself a mapping checked against the problem's own schema.
"""

from __future__ import annotations

import copy
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError

PROBLEM_SCHEMAS = {
    "kubo": {"a": 1.0, "epsilon": 1e-3, "y0": [1.0, 0.0]},
    "nonlinear-kubo": {"epsilon": 1e-3, "y0": [1.0, 0.0]},
    "nls": {"K_x": 64, "sigma": 2, "epsilon": 1e-2, "dealias": False},
}

_COMMON = {"seed": 0, "out_dir": "out", "threads": 1}

STUDY_SCHEMAS = {
    "weak-convergence": {
        **_COMMON,
        "problem": {"name": "kubo"},
        "methods": ["method-a", "method-b", "euler-limit"],
        "N_grid": [32, 64, 128, 256],
        "total_revolutions": 256,
        "trajectories": 100_000,
        "block_size": 5_000,
        "antithetic": True,
        "test_function": [2.0, 4.0],
        "reference": "closed-form",
        "reference_trajectories": None,
        "K_t": 8,
        "fp_tol": 1e-13,
        "fp_max_iters": 50,
        "oracle_dt": 1e-3,
        "oracle_bridge": True,
    },
    "norm-evolution": {
        **_COMMON,
        "problem": {"name": "nls"},
        "methods": ["euler-limit", "method-a", "method-b"],
        "N": 10,
        "m_steps": 150,
        "K_t": 64,
        "fp_tol": 1e-13,
        "fp_max_iters": 50,
        "blowup_threshold": 1e6,
        "snapshot_every": 0,
        "snapshot_points": 300,
    },
    "tn-clt": {
        **_COMMON,
        "N": 100,
        "samples": 10_000,
        "bins": 40,
        "sampler": "series",
    },
    "validate-moments": {
        **_COMMON,
        "N_values": [1, 4, 10],
        "paths": 2_000,
        "dt": 1e-4,
        "bridge": True,
        "block_size": 250,
        "z_fail": 5.0,
    },
    "simulate": {
        **_COMMON,
        "problem": {"name": "nonlinear-kubo"},
        "method": "method-b",
        "N": 4,
        "m_steps": 64,
        "K_t": 8,
        "fp_tol": 1e-13,
        "fp_max_iters": 50,
        "oracle_dt": 1e-3,
        "oracle_bridge": True,
    },
}


def _check_keys(given: dict, allowed: dict, where: str):
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}; allowed: {sorted(allowed)}")


def _merge_problem(raw: Any) -> dict:
    if not isinstance(raw, dict) or "name" not in raw:
        raise ConfigError("'problem' must be a mapping with a 'name' entry")
    name = raw["name"]
    if name not in PROBLEM_SCHEMAS:
        raise ConfigError(f"unknown problem {name!r}; expected one of {sorted(PROBLEM_SCHEMAS)}")
    schema = PROBLEM_SCHEMAS[name]
    rest = {k: v for k, v in raw.items() if k != "name"}
    _check_keys(rest, schema, f"problem {name!r}")
    return {"name": name, **copy.deepcopy(schema), **rest}


def resolve(study: str, raw: dict | None = None, **overrides) -> dict:
    """Defaults of ``study`` updated by ``raw`` then by non-None ``overrides``."""
    if study not in STUDY_SCHEMAS:
        raise ConfigError(f"unknown study {study!r}")
    raw = {} if raw is None else raw
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a mapping at top level")
    schema = STUDY_SCHEMAS[study]
    _check_keys(raw, schema, f"{study} config")
    cfg = copy.deepcopy(schema)
    cfg.update(copy.deepcopy(raw))
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if "problem" in schema:
        cfg["problem"] = _merge_problem(cfg["problem"])
    cfg["study"] = study
    return cfg


def load(path, study: str, **overrides) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} not found")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {str(path)!r}: {exc}") from exc
    return resolve(study, raw, **overrides)
