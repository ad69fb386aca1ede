"""Run configuration files and report serialization.

A configuration file holds one ``key = value`` pair per line. Blank lines and
anything after ``#`` are ignored. Keys are the long command-line option names
with dashes written as underscores.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np

FORMATS = ("csv", "json", "text")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError(f"must be a positive integer, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise ValueError(f"must be >= 0, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0 or not math.isfinite(value):
        raise ValueError(f"must be a positive number, got {text}")
    return value


def _real(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"must be finite, got {text}")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise ValueError(f"must lie in (0, 1), got {text}")
    return value


def _format(text: str) -> str:
    if text not in FORMATS:
        raise ValueError(f"must be one of {', '.join(FORMATS)}")
    return text


# key -> parser. Numeric controls are positive by construction.
SCHEMA: dict[str, Any] = {
    "seed": _nonneg_int,
    "chunks": _positive_int,
    "reps": _positive_int,
    "jobs": _positive_int,
    "format": _format,
    "n": _positive_int,
    "n_max": _positive_int,
    "grid": _positive_int,
    "posterior_draws": _positive_int,
    "prior_draws": _positive_int,
    "bayes_reps": _positive_int,
    "mu0": _real,
    "mu_star": _real,
    "xbar": _real,
    "y": _real,
    "ynew": _real,
    "theta": _fraction,
    "sigma0": _positive_float,
    "tau0": _positive_float,
    "tau0sq": _positive_float,
    "alpha0": _positive_float,
    "beta0": str,  # a number for the binomial and quantile families, a CSV path for regpred
    "eta0": _positive_float,
    "gamma": _fraction,
    "delta": _positive_float,
    "c": _positive_float,
    "max_against": _positive_float,
    "max_favor": _positive_float,
    "family": str,
    "mode": str,
    "design": str,
    "beta0_csv": str,
    "sigma0_csv": str,
    "w": str,
    "theorems": str,
    "models": _positive_int,
    "trials": _positive_int,
    "bin_width": _positive_float,
    "sweep": str,
    "design_grid": _positive_int,
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def merged(self, overrides: Mapping[str, Any]) -> dict:
        """File values overlaid with every override that is not None."""
        out = dict(self.values)
        out.update({k: v for k, v in overrides.items() if v is not None})
        return out

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)


def parse_config(source, *, required: Iterable[str] = (), schema: Mapping[str, Any] = SCHEMA) -> RunConfig:
    """Parse configuration text, a path, or an open file."""
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, os.PathLike) or (isinstance(source, str) and "\n" not in source and "=" not in source and os.path.exists(source)):
        with open(source) as fh:
            text = fh.read()
    else:
        text = str(source)
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in schema:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        try:
            values[key] = schema[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
    missing = [k for k in required if k not in values]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    return RunConfig(values)


def emit_config(config: RunConfig | Mapping[str, Any]) -> str:
    values = config.values if isinstance(config, RunConfig) else config
    return "".join(f"{k} = {_scalar(v)}\n" for k, v in sorted(values.items()))


def _scalar(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def _jsonable(value):
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def emit_report(result, fmt: str = "csv") -> bytes:
    """Serialize a result: a mapping, or a sequence of row mappings sharing keys.

    Key order is kept as given, so identical inputs give identical bytes.
    """
    fmt = _format(fmt)
    rows = [result] if isinstance(result, Mapping) else list(result)
    if fmt == "json":
        body = _jsonable(result if isinstance(result, Mapping) else rows)
        return (json.dumps(body, indent=2) + "\n").encode()
    if not rows:
        return b""
    columns = list(rows[0].keys())
    for r in rows[1:]:
        columns.extend(k for k in r if k not in columns)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_scalar(r.get(c)) for c in columns])
        return buf.getvalue().encode()
    width = max(len(c) for c in columns)
    blocks = ["\n".join(f"{c:<{width}}  {_scalar(r.get(c))}" for c in columns if c in r) for r in rows]
    return ("\n\n".join(blocks) + "\n").encode()
