"""Experiment configuration: a flat ``key = value`` file with dotted sections.

The file is TOML syntax restricted to one assignment per line, e.g.::

    experiment = "superconv"
    n_list = [10, 40, 160]
    family.profile = "default"

Every key has a default and unknown keys are rejected with their line number.
"""
from __future__ import annotations

import json
import re
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXPERIMENTS = ("superconv", "negmom", "fourthmoment", "breuer-major", "goe", "wishart", "counterexample")


class ConfigError(ValueError):
    pass


# dotted key -> (default, type check, description)
SCHEMA: dict = {
    "experiment": ("superconv", str, "one of " + ", ".join(EXPERIMENTS)),
    "seed": (0, int, "64-bit seed for every random stream"),
    "samples": (100_000, int, "Monte Carlo sample size per cell"),
    "n_list": ([10, 40, 160], list, "family sizes, one block of rows each"),
    "q_list": ([0, 1, 2], list, "derivative orders (superconv) or moment orders"),
    "output": ("chaoslab_out.csv", str, "CSV path, relative to the config file"),
    "workers": (1, int, "sampling threads; output does not depend on it"),
    "timing": (False, bool, "fill runtime_ms (makes output non-reproducible)"),
    "family.profile": ("default", str, "'default' (1/sqrt(2n)) or 'geometric'"),
    "family.ratio": (0.5, float, "ratio of the normalized geometric profile"),
    "negmom.tail_threshold": (1.0, float, "Hill tail index at or below which the mean is divergent"),
    "breuer.kind": ("ar1", str, "finite_range, ar1 or fgn"),
    "breuer.param": (0.5, float, "range, AR coefficient or Hurst index"),
    "breuer.poly": ([-1.0, 0.0, 1.0], list, "ascending power coefficients of P"),
    "goe.p": (2, int, "trace power"),
    "goe.method": ("tridiagonal", str, "'tridiagonal' or 'dense'"),
    "wishart.cols": (2, int, "number of columns p of B"),
}


def _check_type(key, value, typ):
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if typ is int and isinstance(value, bool):
        raise ConfigError(f"{key}: expected int, got bool")
    if not isinstance(value, typ):
        raise ConfigError(f"{key}: expected {typ.__name__}, got {type(value).__name__}")
    return value


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _line_of(text: str, key: str) -> int | None:
    parts = [re.escape(p) for p in key.split(".")]
    pat = re.compile(r"^\s*" + r"\s*\.\s*".join(parts) + r"\s*=")
    for no, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return no
    return None


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict = field(default_factory=dict)
    base_dir: str = "."

    def __getitem__(self, key):
        return self.values[key]

    @property
    def experiment(self) -> str:
        return self.values["experiment"]

    @property
    def output_path(self) -> Path:
        p = Path(self.values["output"])
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_dict(self) -> dict:
        return {k: self.values[k] for k in SCHEMA}

    def to_text(self) -> str:
        return "".join(f"{k} = {json.dumps(v)}\n" for k, v in self.to_dict().items())

    def replace(self, **updates) -> "ExperimentConfig":
        vals = dict(self.values)
        for k, v in updates.items():
            vals[k.replace("__", ".")] = v
        return build_config(vals, self.base_dir)


def build_config(raw: dict, base_dir: str = ".", text: str | None = None) -> ExperimentConfig:
    flat = _flatten(raw)
    errors = []
    vals = {k: (list(d) if isinstance(d, list) else d) for k, (d, _, _) in SCHEMA.items()}
    for key, value in flat.items():
        where = ""
        if text is not None:
            line = _line_of(text, key)
            where = f"line {line}: " if line else ""
        if key not in SCHEMA:
            errors.append(f"{where}unknown key '{key}'")
            continue
        try:
            vals[key] = _check_type(key, value, SCHEMA[key][1])
        except ConfigError as exc:
            errors.append(f"{where}{exc}")
    if vals["experiment"] not in EXPERIMENTS:
        errors.append(f"experiment: '{vals['experiment']}' is not one of {', '.join(EXPERIMENTS)}")
    for key in ("n_list", "q_list"):
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in vals[key]):
            errors.append(f"{key}: entries must be integers")
        elif not vals[key]:
            errors.append(f"{key}: must not be empty")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals["breuer.poly"]):
        errors.append("breuer.poly: entries must be numbers")
    else:
        vals["breuer.poly"] = [float(v) for v in vals["breuer.poly"]]
    if isinstance(vals["seed"], int) and not 0 <= vals["seed"] < 2**64:
        errors.append("seed: must be in [0, 2^64)")
    if isinstance(vals["samples"], int) and vals["samples"] < 1:
        errors.append("samples: must be >= 1")
    if isinstance(vals["workers"], int) and vals["workers"] < 1:
        errors.append("workers: must be >= 1")
    if errors:
        raise ConfigError("\n".join(errors))
    return ExperimentConfig(vals, str(base_dir))


def loads_config(text: str, base_dir: str = ".") -> ExperimentConfig:
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("["):
            raise ConfigError(f"line {no}: table headers are not allowed; use dotted keys")
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    return build_config(raw, base_dir, text)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return loads_config(path.read_text(), str(path.parent))


def config_from_sidecar(path) -> ExperimentConfig:
    data = json.loads(Path(path).read_text())
    return build_config(data["config"], str(Path(path).parent))
