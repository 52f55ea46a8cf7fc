"""Ranked evaluator tables and serialization of metric artifacts.

Tabular output is CSV with a header row; structured output is a single JSON
object that round-trips exactly. Floats print with 4 decimal places.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .benchmark import EvaluationScale
from .metrics import ConfusionMatrix, PairAccuracyGrid


class ReportError(ValueError):
    pass


@dataclass
class EvaluatorReport:
    evaluator: str
    per_aspect: dict[str, dict[str, float]]  # benchmark -> aspect -> value
    benchmark_averages: dict[str, float]
    overall: float
    rank: int = 0


def rank_evaluators(
    results: Mapping[str, Mapping[str, Mapping[str, float]]],
) -> list[EvaluatorReport]:
    """results: evaluator -> benchmark -> aspect -> value.

    Per-benchmark average is the unweighted mean over its aspects, overall the
    unweighted mean of benchmark averages. Descending sort; ties share the
    lower rank number and the next rank skips.
    """
    if not results:
        return []
    coverage = {
        evaluator: {
            bench: tuple(sorted(aspects)) for bench, aspects in benches.items()
        }
        for evaluator, benches in results.items()
    }
    reference = next(iter(coverage.values()))
    for evaluator, cov in coverage.items():
        if cov != reference:
            raise ReportError(
                f"evaluator {evaluator!r} covers different benchmarks/aspects"
            )
    reports = []
    for evaluator in sorted(results):
        benches = results[evaluator]
        averages = {
            bench: sum(aspects.values()) / len(aspects)
            for bench, aspects in benches.items()
        }
        overall = sum(averages.values()) / len(averages)
        reports.append(
            EvaluatorReport(
                evaluator,
                {bench: dict(aspects) for bench, aspects in benches.items()},
                averages,
                overall,
            )
        )
    reports.sort(key=lambda r: (-r.overall, r.evaluator))
    for position, report in enumerate(reports):
        if position > 0 and report.overall == reports[position - 1].overall:
            report.rank = reports[position - 1].rank
        else:
            report.rank = position + 1
    return reports


# ---------------------------------------------------------------------------
# Emission

_FLOAT_FMT = "{:.4f}"


def _reports_rows(reports: list[EvaluatorReport]) -> tuple[list[str], list[list]]:
    benches = sorted(reports[0].per_aspect) if reports else []
    header = ["evaluator"]
    for bench in benches:
        header.extend(f"{bench}/{a}" for a in sorted(reports[0].per_aspect[bench]))
        header.append(f"{bench}/avg")
    header.extend(["overall", "rank"])
    rows = []
    for r in reports:
        row: list = [r.evaluator]
        for bench in benches:
            aspects = r.per_aspect[bench]
            row.extend(_FLOAT_FMT.format(aspects[a]) for a in sorted(aspects))
            row.append(_FLOAT_FMT.format(r.benchmark_averages[bench]))
        row.append(_FLOAT_FMT.format(r.overall))
        row.append(r.rank)
        rows.append(row)
    return header, rows


def _confusion_rows(matrix: ConfusionMatrix) -> tuple[list[str], list[list]]:
    ratings = list(matrix.scale.ratings())
    header = ["pred\\gold"] + [str(r) for r in ratings]
    rows = []
    for p in ratings:
        rows.append([str(p)] + [matrix.count(p, g) for g in ratings])
    return header, rows


def _grid_rows(grid: PairAccuracyGrid) -> tuple[list[str], list[list]]:
    header = ["low_errors", "high_errors", "wins", "total", "accuracy"]
    rows = []
    for (low, high) in sorted(grid.cells):
        wins, total = grid.cells[(low, high)]
        rows.append([low, high, wins, total, _FLOAT_FMT.format(wins / total)])
    return header, rows


def _to_structured(obj) -> dict:
    if isinstance(obj, ConfusionMatrix):
        return {
            "type": "confusion_matrix",
            "scale_min": obj.scale.min_rating,
            "scale_max": obj.scale.max_rating,
            "counts": obj.counts.tolist(),
        }
    if isinstance(obj, PairAccuracyGrid):
        return {
            "type": "pair_accuracy_grid",
            "max_errors": obj.max_errors,
            "cells": [
                {"low_errors": low, "high_errors": high, "wins": w, "total": t}
                for (low, high), (w, t) in sorted(obj.cells.items())
            ],
        }
    if isinstance(obj, list) and all(isinstance(r, EvaluatorReport) for r in obj):
        return {
            "type": "evaluator_reports",
            "reports": [
                {
                    "evaluator": r.evaluator,
                    "per_aspect": r.per_aspect,
                    "benchmark_averages": r.benchmark_averages,
                    "overall": r.overall,
                    "rank": r.rank,
                }
                for r in obj
            ],
        }
    raise ReportError(f"cannot emit object of type {type(obj).__name__}")


def emit(obj, format: str, path: str | Path) -> None:
    """Write a report artifact as 'tabular' (CSV) or 'structured' (JSON)."""
    if format == "structured":
        Path(path).write_text(
            json.dumps(_to_structured(obj), sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        return
    if format != "tabular":
        raise ReportError(f"unknown format {format!r}")
    if isinstance(obj, ConfusionMatrix):
        header, rows = _confusion_rows(obj)
    elif isinstance(obj, PairAccuracyGrid):
        header, rows = _grid_rows(obj)
    elif isinstance(obj, list):
        header, rows = _reports_rows(obj)
    else:
        raise ReportError(f"cannot emit object of type {type(obj).__name__}")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buffer.getvalue(), encoding="utf-8")


def read_structured(path: str | Path):
    """Reconstruct an object written by emit(..., 'structured', ...)."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = data.get("type")
    if kind == "confusion_matrix":
        return ConfusionMatrix(
            EvaluationScale(data["scale_min"], data["scale_max"]),
            np.array(data["counts"], dtype=int),
        )
    if kind == "pair_accuracy_grid":
        return PairAccuracyGrid(
            data["max_errors"],
            {
                (c["low_errors"], c["high_errors"]): (c["wins"], c["total"])
                for c in data["cells"]
            },
        )
    if kind == "evaluator_reports":
        return [
            EvaluatorReport(
                r["evaluator"],
                r["per_aspect"],
                r["benchmark_averages"],
                r["overall"],
                r["rank"],
            )
            for r in data["reports"]
        ]
    raise ReportError(f"unknown structured artifact type {kind!r}")
