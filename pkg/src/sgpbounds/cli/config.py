"""Experiment configuration files.

Configs are YAML mappings. Version 1 keys::

    version: 1
    experiment: sweep          # fit | bounds | select | spectrum | sweep | compare | hyperopt
    kernel: {family: se, variance: 1.0, lengthscale: 1.0, dim: 1}
    data:
      source: synthetic        # or csv
      generator: gaussian      # or clustered
      N: [250, 500]            # a single int for non-sweep experiments
      D: 1
      beta2: 1.0
      noise: 0.1
      # csv only: path, target, and optional add_noise_std
    selectors: [{method: greedy}, {method: uniform, jitter: 1.0e-6}]
    M: [10, 20]                # or {rule: "c*log N", c: 4} / {rule: "c*(log N)^D", c: 1}
    seeds: [0, 1, 2]
    out: results

The ``spectrum`` experiment reads a ``spectrum`` section instead of
``data``; see ``runners.run_spectrum``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..kernels import KernelSpec

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "config_hash", "m_schedule"]

CONFIG_VERSION = 1
EXPERIMENTS = ("fit", "bounds", "select", "spectrum", "sweep", "compare", "hyperopt")
M_RULES = ("c*log N", "c*(log N)^D")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass
class ExperimentConfig:
    experiment: str
    kernel: KernelSpec | None
    data: dict
    selectors: list
    M: object
    seeds: list
    out: str = "results"
    spectrum: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    """Short SHA-256 of the canonical JSON form of a config mapping."""
    blob = json.dumps(raw, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _check_m(M):
    if isinstance(M, int):
        M = [M]
    if isinstance(M, list):
        if not M or not all(isinstance(m, int) and m >= 1 for m in M):
            raise ConfigError("M must be a list of integers >= 1")
        return M
    if isinstance(M, dict):
        if M.get("rule") not in M_RULES:
            raise ConfigError(f"M rule must be one of {M_RULES}")
        c = M.get("c")
        if not isinstance(c, (int, float)) or c <= 0:
            raise ConfigError("M rule needs a positive constant c")
        return dict(M)
    raise ConfigError("M must be an int, a list of ints or a rule mapping")


def m_schedule(M, N: int, D: int = 1) -> list:
    """Concrete inducing-set sizes for ``N`` points, capped at ``N``."""
    if isinstance(M, list):
        return [min(m, N) for m in M]
    base = math.log(N) if M["rule"] == "c*log N" else math.log(N) ** D
    return [min(N, max(1, math.ceil(M["c"] * base)))]


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    version = raw.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r}")
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
    try:
        kernel = KernelSpec.from_dict(raw["kernel"]) if "kernel" in raw else None
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad kernel section: {e}") from e
    if kernel is None and exp != "spectrum":
        raise ConfigError("a kernel section is required")
    seeds = raw.get("seeds", [0])
    if isinstance(seeds, int):
        seeds = [seeds]
    if not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("seeds must be a non-empty list of integers")
    data = dict(raw.get("data", {}))
    if exp != "spectrum":
        src = data.setdefault("source", "synthetic")
        if src not in ("synthetic", "csv"):
            raise ConfigError("data.source must be synthetic or csv")
        if src == "csv" and "path" not in data:
            raise ConfigError("csv data needs a path")
        if not (isinstance(data.get("noise"), (int, float)) and data["noise"] > 0):
            raise ConfigError("data.noise must be a positive number")
        if src == "synthetic":
            Ns = data.get("N")
            Ns = [Ns] if isinstance(Ns, int) else Ns
            if not Ns or not all(isinstance(n, int) and n >= 1 for n in Ns):
                raise ConfigError("data.N must be a positive int or list of them")
            data["N"] = Ns
    selectors = raw.get("selectors", [{"method": "greedy"}])
    if isinstance(selectors, dict):
        selectors = [selectors]
    if not all(isinstance(s, dict) and "method" in s for s in selectors):
        raise ConfigError("each selector needs a method")
    if exp == "compare" and len(selectors) < 2:
        raise ConfigError("compare needs at least two selectors")
    M = _check_m(raw.get("M", [10]))
    known = {"version", "experiment", "kernel", "data", "selectors", "M", "seeds", "out", "spectrum"}
    options = {k: v for k, v in raw.items() if k not in known}
    return ExperimentConfig(exp, kernel, data, selectors, M, seeds, raw.get("out", "results"),
                            dict(raw.get("spectrum", {})), options, raw)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    return parse_config(raw)
