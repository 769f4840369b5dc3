"""Problem/result serialization and table emission.

Problems are stored as plain JSON with explicit ``p`` and ``d`` fields so
fixtures stay inspectable and diff-able; doubles survive the round trip
bit-exactly.  Tables (curve sweeps, residual traces, comparisons) are
emitted as CSV with stable column names, which is the plotting contract.
"""
from __future__ import annotations

import csv
import json
import sys
from typing import Any, Iterable, Optional

import numpy as np

from .problem import RDProblem

CURVE_COLUMNS = [
    "D",
    "R_nats",
    "R_bits",
    "lambda",
    "iterations",
    "converged",
    "r_psi",
    "r_phi",
    "r_lambda",
    "r_eta",
    "wall_time_s",
]

RESIDUAL_COLUMNS = ["iter", "r_psi", "r_phi", "r_lambda", "r_eta"]

COMPARE_COLUMNS = [
    "source",
    "D",
    "rate_as",
    "rate_ba",
    "abs_diff",
    "lambda_as",
    "lambda_ba",
    "t_as_mean",
    "t_as_median",
    "t_ba_mean",
    "t_ba_median",
    "speedup",
    "ba_search_steps",
    "as_iterations",
    "converged",
]


def problem_to_dict(problem: RDProblem) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "p": problem.p.tolist(),
        "d": problem.d.tolist(),
    }
    if problem.x_labels is not None:
        doc["x_labels"] = problem.x_labels.tolist()
    if problem.y_labels is not None:
        doc["y_labels"] = problem.y_labels.tolist()
    return doc


def problem_from_dict(doc: dict[str, Any]) -> RDProblem:
    try:
        p = np.asarray(doc["p"], dtype=float)
        d = np.asarray(doc["d"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed problem document: {exc}") from exc
    return RDProblem(
        p=p,
        d=d,
        x_labels=doc.get("x_labels"),
        y_labels=doc.get("y_labels"),
    )


def save_problem(problem: RDProblem, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(problem_to_dict(problem), handle, indent=2)
        handle.write("\n")


def load_problem(path: str) -> RDProblem:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError(f"{path} must contain a JSON object")
    return problem_from_dict(doc)


def _format_cell(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return value


def write_rows(
    rows: Iterable[dict[str, Any]],
    columns: list[str],
    path: Optional[str] = None,
    fmt: str = "csv",
) -> None:
    """Emit table rows to a file or stdout, as CSV or a JSON array."""
    rows = list(rows)
    if fmt == "json":
        write_json([{k: row.get(k) for k in columns} for row in rows], path)
        return
    handle = open(path, "w", newline="", encoding="utf-8") if path else sys.stdout
    try:
        writer = csv.DictWriter(handle, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _format_cell(row.get(k)) for k in columns})
    finally:
        if path:
            handle.close()


def write_json(doc: Any, path: Optional[str] = None) -> None:
    text = json.dumps(doc, indent=2, default=_json_default)
    if path:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _json_default(value: Any) -> Any:
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.bool_):
        return bool(value)
    raise TypeError(f"not JSON serializable: {type(value)!r}")
