"""Experiment configuration: flat key-value documents, defaults, validation.

A config file is a flat YAML (or JSON) mapping whose keys are the long CLI
flag names with dashes or underscores, e.g.::

    family: critical
    alpha: -2
    env: gaussian
    beta: 1.0
    N: 64
    M: 96
    replicas: 200
    seed: 7

Command-line flags override file values, which override ``DEFAULTS``.
List-valued keys accept YAML lists or comma-separated strings.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from .environment import EnvironmentLaw
from .errors import ConfigError
from .walk_laws import IncrementLaw

SUBCOMMANDS = (
    "sample-walk", "entropy-check", "free-energy", "mean-w", "martingale-check",
    "size-bias-test", "coarse-grain-demo", "order-stats", "lemma-a1", "condition-c",
)

DEFAULTS: Dict[str, Any] = {
    # walk law
    "family": "critical", "alpha": -2.0, "a": 1.0, "b": 1.0, "m0": None, "k0": None,
    # environment
    "env": "gaussian", "p": 0.5, "atoms": None,
    # polymer
    "beta": [1.0], "N": [16], "M": 32, "replicas": 200, "seed": 0,
    # size bias
    "L": [2.0, 10.0], "N_grid": [8, 16, 32, 64],
    # order statistics
    "K": 2.0, "n_max": 10_000, "n_min": None, "identity_n": None, "R": 2000, "n_steps": 10,
    # condition (c)
    "gamma": 0.75, "n": [100, 1000, 10_000],
    # coarse graining
    "epsilon": 0.1, "samples": 2000,
    # lemma-a1 subcommand
    "beta_grid": [0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0], "threshold": 0.5,
    # sample-walk
    "cap": 10**9,
    # io
    "workers": 1, "out": None, "format": "jsonl",
}

LIST_KEYS = {"beta": float, "N": int, "L": float, "N_grid": int, "n": int, "beta_grid": float}
INT_KEYS = {"M", "replicas", "seed", "n_max", "n_min", "identity_n", "R", "n_steps", "samples",
            "workers", "m0", "cap"}
FLOAT_KEYS = {"alpha", "a", "b", "k0", "p", "K", "gamma", "epsilon", "threshold"}
# keys that never change data rows
IO_KEYS = {"workers", "out", "format", "config"}


def _canon_key(k: str) -> str:
    k = str(k).strip().replace("-", "_")
    if k in DEFAULTS:
        return k
    for known in DEFAULTS:
        if known.lower() == k.lower():
            return known
    return k


def _as_list(value, kind):
    if value is None:
        return None
    if isinstance(value, str):
        parts = [s for s in value.replace(";", ",").split(",") if s.strip()]
        return [kind(float(s)) if kind is int else kind(s) for s in parts]
    if isinstance(value, (list, tuple)):
        return [kind(v) for v in value]
    return [kind(value)]


def coerce(cfg: Dict[str, Any]) -> Dict[str, Any]:
    """Normalise key spelling and value types; raises ConfigError on bad values."""
    out: Dict[str, Any] = {}
    for k, v in cfg.items():
        key = _canon_key(k)
        try:
            if v is None:
                out[key] = None
            elif key in LIST_KEYS:
                out[key] = _as_list(v, LIST_KEYS[key])
            elif key in INT_KEYS:
                fv = float(v)
                if not fv.is_integer():
                    raise ValueError(f"{v!r} is not an integer")
                out[key] = int(fv)
            elif key in FLOAT_KEYS:
                out[key] = float(v)
            else:
                out[key] = v
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from exc
    return out


def load_config_file(path: str) -> Dict[str, Any]:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must be a flat key-value mapping")
    for k, v in data.items():
        if isinstance(v, dict):
            raise ConfigError(f"config key {k!r} is nested; the format is flat")
    return data


def resolve(file_cfg: Optional[Dict[str, Any]], cli_cfg: Dict[str, Any]) -> Dict[str, Any]:
    """DEFAULTS <- file <- command line (None on the command line means unset)."""
    merged = dict(DEFAULTS)
    merged.update(coerce(file_cfg or {}))
    merged.update({k: v for k, v in coerce(cli_cfg).items() if v is not None})
    return merged


def digest(cfg: Dict[str, Any], subcommand: str) -> str:
    data = {k: v for k, v in cfg.items() if k not in IO_KEYS}
    data["subcommand"] = subcommand
    blob = json.dumps(data, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def build_law(cfg: Dict[str, Any]) -> IncrementLaw:
    block = {"family": cfg["family"], "alpha": cfg["alpha"], "a": cfg["a"], "b": cfg["b"]}
    if cfg.get("m0") is not None:
        block["m0"] = cfg["m0"]
    if cfg.get("k0") is not None:
        block["k0"] = cfg["k0"]
    return IncrementLaw.from_config(block)


def build_env(cfg: Dict[str, Any]) -> EnvironmentLaw:
    return EnvironmentLaw.from_config({"variant": cfg["env"], "p": cfg["p"], "atoms": cfg["atoms"]})


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" or "info"
    key: str
    message: str

    def __str__(self):
        return f"{self.level}: {self.key}: {self.message}"


def validate(cfg: Optional[Dict[str, Any]], subcommand: Optional[str] = None) -> List[Diagnostic]:
    """Cross-field checks. Errors block a run; info lines summarise defaults."""
    raw = cfg or {}
    diags: List[Diagnostic] = []
    unknown = [k for k in raw if _canon_key(k) not in DEFAULTS and _canon_key(k) != "config"]
    for k in unknown:
        diags.append(Diagnostic("error", k, "unknown key"))
    try:
        c = resolve({k: v for k, v in raw.items() if k not in unknown}, {})
    except ConfigError as exc:
        return diags + [Diagnostic("error", "config", str(exc))]
    if not raw:
        summary = ", ".join(f"{k}={v}" for k, v in DEFAULTS.items() if v is not None)
        diags.append(Diagnostic("info", "defaults", summary))
    if subcommand is not None and subcommand not in SUBCOMMANDS:
        diags.append(Diagnostic("error", "subcommand", f"unknown subcommand {subcommand!r}"))

    law = env = None
    try:
        law = build_law(c)
    except (ValueError, TypeError) as exc:
        diags.append(Diagnostic("error", "family", str(exc)))
    try:
        env = build_env(c)
    except (ValueError, TypeError) as exc:
        diags.append(Diagnostic("error", "env", str(exc)))

    if c["M"] < 1:
        diags.append(Diagnostic("error", "M", "window half-width M must be >= 1"))
    if any(n < 1 for n in c["N"]):
        diags.append(Diagnostic("error", "N", "horizon N must be >= 1"))
    if any(b < 0 for b in c["beta"]):
        diags.append(Diagnostic("error", "beta", "beta must be nonnegative"))
    if c["workers"] < 1:
        diags.append(Diagnostic("error", "workers", "workers must be >= 1"))
    if c["format"] not in ("csv", "jsonl"):
        diags.append(Diagnostic("error", "format", "format must be csv or jsonl"))

    if subcommand in ("free-energy", "mean-w", "size-bias-test") and c["replicas"] < 2:
        diags.append(Diagnostic("error", "replicas", "need at least two replicas"))
    if subcommand == "coarse-grain-demo":
        if law is not None and law.is_nearest_neighbor:
            diags.append(Diagnostic("error", "family",
                                    "nearest_neighbor has no slowly varying profile for coarse graining"))
        if any(n < 3 for n in c["N"]):
            diags.append(Diagnostic("error", "N", "coarse graining needs N >= 3"))
        if c["samples"] < 200:
            diags.append(Diagnostic("error", "samples", "need at least 200 samples"))
        if not 0.0 < c["epsilon"] < 1.0:
            diags.append(Diagnostic("error", "epsilon", "epsilon must lie in (0, 1)"))
    if subcommand == "condition-c":
        if not c["gamma"] > 0.5:
            diags.append(Diagnostic("error", "gamma", "gamma must exceed 1/2"))
        if any(n < 3 for n in c["n"]):
            diags.append(Diagnostic("error", "n", "n must be >= 3"))
        if law is not None and law.is_nearest_neighbor:
            diags.append(Diagnostic("error", "family", "condition (c) needs a heavy-tailed law"))
    if subcommand == "martingale-check":
        if env is not None and not env.enumerable:
            diags.append(Diagnostic("error", "env", "martingale-check needs bernoulli or discrete env"))
        if c["M"] > 3 or max(c["N"]) > 4:
            diags.append(Diagnostic("error", "M", "martingale-check is limited to M <= 3, N <= 4"))
    if subcommand == "order-stats":
        if c["identity_n"] is not None and c["identity_n"] < 2:
            diags.append(Diagnostic("error", "identity_n", "identity needs n >= 2"))
        if c["identity_n"] is not None and c["replicas"] < 10_000:
            diags.append(Diagnostic("error", "replicas", "identity needs >= 10^4 replicas"))
        if c["n_max"] < 4:
            diags.append(Diagnostic("error", "n_max", "n_max must be >= 4"))
        if not c["K"] > 0:
            diags.append(Diagnostic("error", "K", "K must be positive"))
    if subcommand == "lemma-a1" and env is not None and not c["threshold"] < env.ess_sup:
        diags.append(Diagnostic("error", "threshold", "threshold must lie below the essential supremum"))
    if subcommand == "size-bias-test":
        grid = c["N_grid"]
        if any(b <= a for a, b in zip(grid, grid[1:])):
            diags.append(Diagnostic("error", "N_grid", "N_grid must be increasing"))
        if any(x <= 0 for x in c["L"]):
            diags.append(Diagnostic("error", "L", "thresholds must be positive"))
    for key in ("beta", "epsilon", "K", "gamma", "threshold"):
        vals = c[key] if isinstance(c[key], list) else [c[key]]
        if any(isinstance(v, float) and not math.isfinite(v) for v in vals):
            diags.append(Diagnostic("error", key, "must be finite"))
    return diags
