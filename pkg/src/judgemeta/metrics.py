"""Meta-evaluation metrics.

Two perspectives: closeness-weighted ordinal classification over coarse
ratings, and pairwise ranking accuracy over error-ordered target sequences.
Traditional correlation baselines are included for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .benchmark import EvaluationScale, Target


class DegenerateDistributionError(ValueError):
    """Class distribution makes the closeness weight undefined."""


class DegenerateInputError(ValueError):
    """Constant input where variance is required."""


# ---------------------------------------------------------------------------
# Ordinal classification


def prox(
    i: int,
    j: int,
    gold_counts: Mapping[int, int],
    total: int,
    log_base: float = 2.0,
) -> float:
    """Informational closeness between predicted class i and gold class j.

    -log((sum of gold counts over [min(i,j), max(i,j)] - counts[i]/2) / total).
    The half-count subtracted is that of the predicted class i.
    """
    if total <= 0:
        raise ValueError("total must be positive")
    a, b = min(i, j), max(i, j)
    mass = sum(gold_counts.get(k, 0) for k in range(a, b + 1))
    argument = (mass - gold_counts.get(i, 0) / 2) / total
    if argument <= 0:
        raise DegenerateDistributionError(
            f"closeness undefined for classes ({i}, {j}): log argument {argument}"
        )
    return -math.log(argument) / math.log(log_base)


def cem(
    gold: Sequence[int],
    pred: Sequence[int],
    scale: EvaluationScale,
    log_base: float = 2.0,
) -> float:
    """Closeness-weighted agreement between predicted and gold ratings.

    Equals 1 exactly when pred == gold; invariant to the log base. Cells with
    zero count contribute nothing even where the closeness weight is undefined.
    """
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} pred")
    if not gold:
        raise ValueError("empty input")
    for v in (*gold, *pred):
        if not scale.contains(v):
            raise ValueError(f"rating {v} outside scale {scale}")
    total = len(gold)
    gold_counts = {r: 0 for r in scale.ratings()}
    for g in gold:
        gold_counts[g] += 1
    # Aggregate identical cells so that perfect agreement sums the numerator
    # in exactly the denominator's order and the ratio is 1.0 to the last bit.
    cells: dict[tuple[int, int], int] = {}
    for g, p in zip(gold, pred):
        cells[(p, g)] = cells.get((p, g), 0) + 1
    numerator = 0.0
    for p, g in sorted(cells):
        numerator += cells[(p, g)] * prox(p, g, gold_counts, total, log_base)
    denominator = 0.0
    for r, count in gold_counts.items():
        if count:
            denominator += count * prox(r, r, gold_counts, total, log_base)
    if denominator == 0:
        raise DegenerateDistributionError("zero denominator: no informative class")
    return numerator / denominator


@dataclass
class ConfusionMatrix:
    """counts[pred][gold], indexed from scale.min_rating."""

    scale: EvaluationScale
    counts: np.ndarray

    def count(self, pred: int, gold: int) -> int:
        off = self.scale.min_rating
        return int(self.counts[pred - off, gold - off])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def gold_marginals(self) -> dict[int, int]:
        off = self.scale.min_rating
        return {
            r: int(self.counts[:, r - off].sum()) for r in self.scale.ratings()
        }


def confusion(
    gold: Sequence[int], pred: Sequence[int], scale: EvaluationScale
) -> ConfusionMatrix:
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} pred")
    counts = np.zeros((scale.levels, scale.levels), dtype=int)
    off = scale.min_rating
    for g, p in zip(gold, pred):
        if not scale.contains(g) or not scale.contains(p):
            raise ValueError(f"rating pair ({g}, {p}) outside scale {scale}")
        counts[p - off, g - off] += 1
    return ConfusionMatrix(scale, counts)


# ---------------------------------------------------------------------------
# Pairwise ranking accuracy

# Sequences are stored in ascending error-count order: index 0 is the
# pristine reference (best quality), so quality descends along the sequence.
# A correct evaluator gives strictly higher scores to earlier elements.


def _sequence_scores(
    sequences: Mapping[str, Sequence[Target]],
    scores: Mapping[str, float],
) -> dict[str, list[tuple[int, float]]]:
    out = {}
    for source_id, seq in sequences.items():
        if len(seq) < 2:
            raise ValueError(f"sequence {source_id!r} shorter than 2")
        pairs = []
        for t in seq:
            if t.id not in scores:
                raise ValueError(f"missing score for target {t.id!r}")
            pairs.append((t.provenance.error_count, scores[t.id]))
        out[source_id] = pairs
    return out


def adjacent_pairwise_accuracy(
    sequences: Mapping[str, Sequence[Target]],
    scores: Mapping[str, float],
) -> float:
    """Fraction of adjacent pairs where the lower-error target scores strictly
    higher. Ties count as failures."""
    scored = _sequence_scores(sequences, scores)
    wins = 0
    total = 0
    for pairs in scored.values():
        for (e_lo, s_lo), (e_hi, s_hi) in zip(pairs, pairs[1:]):
            total += 1
            if s_lo > s_hi:
                wins += 1
    return wins / total


@dataclass
class PairAccuracyGrid:
    """Win counts per (low_error_count, high_error_count) pair, low < high."""

    max_errors: int
    cells: dict[tuple[int, int], tuple[int, int]]  # (wins, total)

    def accuracy(self, low: int, high: int) -> float:
        wins, total = self.cells[(low, high)]
        return wins / total

    def offset_accuracy(self, k: int) -> float:
        """Aggregate accuracy over all cells whose error counts differ by k."""
        wins = total = 0
        for (low, high), (w, t) in self.cells.items():
            if high - low == k:
                wins += w
                total += t
        if total == 0:
            raise ValueError(f"no pairs at offset {k}")
        return wins / total


def pair_accuracy_grid(
    sequences: Mapping[str, Sequence[Target]],
    scores: Mapping[str, float],
) -> PairAccuracyGrid:
    scored = _sequence_scores(sequences, scores)
    cells: dict[tuple[int, int], list[int]] = {}
    max_errors = 0
    for pairs in scored.values():
        for a in range(len(pairs)):
            for b in range(a + 1, len(pairs)):
                e_lo, s_lo = pairs[a]
                e_hi, s_hi = pairs[b]
                max_errors = max(max_errors, e_hi)
                cell = cells.setdefault((e_lo, e_hi), [0, 0])
                cell[1] += 1
                if s_lo > s_hi:
                    cell[0] += 1
    return PairAccuracyGrid(
        max_errors, {key: (w, t) for key, (w, t) in cells.items()}
    )


# ---------------------------------------------------------------------------
# Correlation baselines


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) != len(ys):
        raise ValueError("length mismatch")
    if len(xs) < 2:
        raise ValueError("need at least 2 points")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    xd = x - x.mean()
    yd = y - y.mean()
    denom = math.sqrt(float(xd @ xd) * float(yd @ yd))
    if denom == 0:
        raise DegenerateInputError("constant input, correlation undefined")
    return float(xd @ yd) / denom


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation of fractional (average-tie) ranks."""
    if len(xs) != len(ys):
        raise ValueError("length mismatch")
    return pearson(rankdata(xs), rankdata(ys))


@dataclass
class GroupedCorrelation:
    value: float
    skipped_groups: int = 0


def grouped_correlation(
    groups: Sequence[tuple[Sequence[float], Sequence[float]]],
    method: str = "spearman",
    level: str = "input",
) -> GroupedCorrelation:
    """Correlation across per-source groups.

    input level: mean of per-group coefficients, skipping (and counting)
    groups where the coefficient is undefined. dataset level: one coefficient
    over the pooled lists.
    """
    fn = {"pearson": pearson, "spearman": spearman}[method]
    if level == "dataset":
        xs = [v for g in groups for v in g[0]]
        ys = [v for g in groups for v in g[1]]
        return GroupedCorrelation(fn(xs, ys))
    if level != "input":
        raise ValueError(f"unknown level {level!r}")
    values = []
    skipped = 0
    for xs, ys in groups:
        try:
            values.append(fn(xs, ys))
        except DegenerateInputError:
            skipped += 1
    if not values:
        raise DegenerateInputError("every group was degenerate")
    return GroupedCorrelation(sum(values) / len(values), skipped)
