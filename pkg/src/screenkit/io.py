"""File formats shared by the CLI and the benchmark driver.

Design files are CSV with a header row ``x1,...,xd`` and one run per row.
Analysis reports are JSON objects with fields ``method``, ``selected``,
``statistics`` and ``metrics``. All CSV output uses '.' decimals and LF
line endings.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import Coding, Design, Metrics, ScreeningOutcome


def _format_value(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def write_design(design: Design, path: str | Path) -> None:
    path = Path(path)
    lines = [",".join(design.names)]
    for row in design.runs:
        lines.append(",".join(_format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", newline="\n")


def infer_coding(runs: np.ndarray) -> Coding:
    values = np.unique(runs)
    if np.isin(values, (-1.0, 1.0)).all():
        return Coding.TWO_LEVEL
    if np.isin(values, (-1.0, 0.0, 1.0)).all():
        return Coding.THREE_LEVEL
    if values.min() >= 0.0 and values.max() <= 1.0:
        return Coding.UNIT
    return Coding.SYMMETRIC


def read_design(path: str | Path, coding: Coding | None = None) -> Design:
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty design file")
    names = tuple(s.strip() for s in lines[0].split(","))
    rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
    runs = np.asarray(rows, dtype=float)
    if runs.ndim != 2 or runs.shape[1] != len(names):
        raise ValueError(f"{path}: rows do not match header width")
    return Design(runs, coding or infer_coding(runs), names, provenance=f"file:{path.name}")


def read_response(path: str | Path) -> np.ndarray:
    """Read a response vector from a one-column CSV (optional 'y' header)."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if lines and not _is_number(lines[0].split(",")[0]):
        lines = lines[1:]
    return np.asarray([float(ln.split(",")[0]) for ln in lines], dtype=float)


def write_response(y: Sequence[float], path: str | Path) -> None:
    lines = ["y"] + [repr(float(v)) for v in y]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def write_table_csv(path: str | Path, header: Sequence[str], rows: np.ndarray) -> None:
    """Plot-data tables: a header plus a 2-D float array."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def outcome_to_dict(outcome: ScreeningOutcome, method: str | None = None) -> dict:
    metrics = None
    if outcome.metrics is not None:
        metrics = {
            "sensitivity": outcome.metrics.sensitivity,
            "type_i": outcome.metrics.type_i,
            "fdr": outcome.metrics.fdr,
        }
    return {
        "method": method if method is not None else outcome.method,
        "selected": sorted(outcome.selected),
        "statistics": {k: list(v) for k, v in outcome.statistics.items()},
        "metrics": metrics,
    }


def write_report(outcome: ScreeningOutcome, path: str | Path, method: str | None = None,
                 extra: Mapping[str, object] | None = None) -> None:
    doc = outcome_to_dict(outcome, method)
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n", newline="\n")
