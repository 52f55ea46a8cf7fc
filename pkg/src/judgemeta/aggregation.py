"""Aggregation of multi-annotator ratings and multi-sample judge outputs."""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

from .benchmark import EvaluationScale, HumanAnnotated, Target


def mean_aggregate(values: Sequence[float]) -> float:
    if not values:
        raise ValueError("cannot aggregate an empty list")
    return sum(values) / len(values)


def mode_aggregate(ratings: Sequence[int]) -> int:
    """Most frequent rating; ties broken toward the lowest rating."""
    if not ratings:
        raise ValueError("cannot aggregate an empty list")
    counts = Counter(ratings)
    best = max(counts.values())
    return min(r for r, c in counts.items() if c == best)


def consistency_filter(targets: Sequence[Target]) -> list[Target]:
    """Keep only targets whose annotators were unanimous, assigning that rating.

    All inputs must carry human-annotated provenance. Idempotent: the output
    passes the filter unchanged.
    """
    retained = []
    for t in targets:
        if not isinstance(t.provenance, HumanAnnotated):
            raise ValueError(f"target {t.id!r} is not human-annotated")
        ratings = t.provenance.ratings
        if ratings and len(set(ratings)) == 1:
            retained.append(t.with_rating(ratings[0]))
    return retained


def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def rescale_rating(r: int, src: EvaluationScale, dst: EvaluationScale) -> int:
    """Linearly map a rating between scales, rounding half away from zero."""
    if not src.contains(r):
        raise ValueError(f"rating {r} outside source scale {src}")
    span_src = src.max_rating - src.min_rating
    span_dst = dst.max_rating - dst.min_rating
    mapped = (r - src.min_rating) / span_src * span_dst + dst.min_rating
    return round_half_away(mapped)
