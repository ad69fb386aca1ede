"""Regenerate the reference tables and compare every cell with its stored value."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources

from .locnorm import LocationNormal, PredictionSetup, baseline_bias_against_pred
from .quantile import NormalGammaQuantile

TABLES = ("T1", "T2", "T3", "T4", "T5", "T6", "T7")
CAPTIONS = {
    "T1": "Bias against for the hypothesis",
    "T2": "Bias in favor of the hypothesis",
    "T3": "Average bias against",
    "T4": "Average bias in favor for estimation",
    "T5": "Expected half-widths (coverages)",
    "T6": "Coverage probabilities for Pl",
    "T7": "Baseline bias against values",
}
COLUMNS = ("row_key", "col_key", "value", "method", "stderr", "reference", "tolerance", "status")


@dataclass(frozen=True)
class Cell:
    row_key: str
    col_key: str
    value: float
    method: str
    stderr: float | None
    reference: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return abs(self.value - self.reference) <= self.tolerance + 1e-12

    def as_dict(self) -> dict:
        return {
            "row_key": self.row_key,
            "col_key": self.col_key,
            "value": round(self.value, 6),
            "method": self.method,
            "stderr": None if self.stderr is None else round(self.stderr, 6),
            "reference": self.reference,
            "tolerance": self.tolerance,
            "status": "pass" if self.ok else "FAIL",
        }


@dataclass(frozen=True)
class TableArtifact:
    table_id: str
    caption: str
    cells: tuple[Cell, ...]

    @property
    def failures(self) -> list[Cell]:
        return [c for c in self.cells if not c.ok]

    def rows(self) -> list[dict]:
        return [c.as_dict() for c in self.cells]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows():
            w.writerow({k: "" if v is None else v for k, v in r.items()})
        return buf.getvalue()


def reference_values() -> dict[str, list[tuple[str, str, float, float]]]:
    """Stored values keyed by table, in file order."""
    text = resources.files("relbelief").joinpath("data/reference_values.csv").read_text()
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    out: dict[str, list] = {t: [] for t in TABLES}
    for row in csv.DictReader(lines):
        out[row["table"]].append((row["row_key"], row["col_key"], float(row["value"]), float(row["tolerance"])))
    return out


def _keys(text: str) -> dict[str, str]:
    """'mu0=1;tau0=1;coverage' -> {'mu0': '1', 'tau0': '1', 'coverage': ''}."""
    out = {}
    for part in text.split(";"):
        k, _, val = part.partition("=")
        out[k] = val
    return out


def _ratio(text: str) -> float:
    num, _, den = text.partition("/")
    return float(num) / float(den) if den else float(num)


def _cell_value(table_id: str, row: dict, col: dict, seed: int, cache: dict, n_jobs: int):
    if table_id == "T7":
        return baseline_bias_against_pred(PredictionSetup(r=_ratio(row["r"]), y=float(col["y"]))), "closed-form", None
    n = int(row["n"])
    if table_id == "T6":
        if n not in cache:
            cache[n] = NormalGammaQuantile(n=n, gamma=0.95).coverage(seed=seed, n_jobs=n_jobs)
        rep = cache[n]
        if "frequentist" in col:
            return rep.frequentist, "monte-carlo", rep.worst.stderr
        return rep.bayesian, "monte-carlo", rep.average.stderr
    model = LocationNormal(n=n, mu0=float(col.get("mu0", 0.0)), tau0=float(col.get("tau0", 1.0)))
    if table_id == "T1":
        return float(model.bias_against(0.0)), "closed-form", None
    if table_id == "T2":
        if "delta" in col:
            return float(model.bias_favor_delta(0.0, float(col["delta"]))), "closed-form", None
        return model.bias_favor_unconditional(0.0), "quadrature", None
    if table_id == "T3":
        return model.avg_bias_against(), "quadrature", None
    if table_id == "T4":
        return model.avg_bias_favor(float(col["delta"])), "quadrature", None
    if table_id == "T5":
        half, cover = model.expected_halfwidth_and_coverage()
        return (cover if "coverage" in col else half), "quadrature", None
    raise ValueError(f"unknown table {table_id!r}")


def repro(table_id: str, seed: int = 0, *, n_jobs: int = 1) -> TableArtifact:
    """Recompute every cell of ``table_id``."""
    table_id = table_id.upper()
    if table_id not in TABLES:
        raise ValueError(f"table must be one of {', '.join(TABLES)}, got {table_id!r}")
    cache: dict = {}
    cells = []
    for row_key, col_key, ref, tol in reference_values()[table_id]:
        value, method, se = _cell_value(table_id, _keys(row_key), _keys(col_key), seed, cache, n_jobs)
        cells.append(Cell(row_key, col_key, float(value), method, se, ref, tol))
    return TableArtifact(table_id, CAPTIONS[table_id], tuple(cells))
