"""Anchor selection and pairwise rating estimation.

Anchors are existing targets on which human annotators and a strong judge
model agree; a few per rating act as reference points. New targets get a
rating by pairwise comparison against the anchor sets of each rating and its
neighbors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .aggregation import mean_aggregate, round_half_away
from .benchmark import (
    BenchmarkError,
    EvaluationScale,
    HumanAnnotated,
    Source,
    Target,
)

# (candidate, anchor, direction) -> 0 or 1, direction "succ" asks whether the
# candidate is strictly better, "prec" strictly worse. Both may be 0 (a tie)
# but never both 1.
Comparator = Callable[[Target, Target, str], int]


class InsufficientAnchorsError(ValueError):
    def __init__(self, shortfalls: dict[int, int]):
        self.shortfalls = shortfalls
        detail = ", ".join(
            f"rating {r}: {n} candidates" for r, n in sorted(shortfalls.items())
        )
        super().__init__(f"not enough anchor candidates ({detail})")


@dataclass(frozen=True)
class AnchorCandidate:
    target: Target  # human-annotated provenance
    llm_ratings: tuple[int, ...]

    @property
    def human_ratings(self) -> tuple[int, ...]:
        if not isinstance(self.target.provenance, HumanAnnotated):
            raise BenchmarkError(
                f"anchor candidate {self.target.id!r} is not human-annotated"
            )
        return self.target.provenance.ratings


@dataclass
class AnchorSet:
    rating: int
    members: list[AnchorCandidate]

    @property
    def anchors(self) -> list[Target]:
        return [m.target for m in self.members]


@dataclass
class AnchorSelectionConfig:
    per_rating_count: int = 5
    human_annotators: int = 3
    llm_samples: int = 10

    def __post_init__(self):
        if min(self.per_rating_count, self.human_annotators, self.llm_samples) < 1:
            raise ValueError("all anchor selection parameters must be positive")


def anchor_consistency_score(
    human_ratings: Sequence[int], llm_ratings: Sequence[float], r: int
) -> float:
    """Mean human deviation from r, plus mean judge deviation from r, plus the
    gap between the two means. Lower is better; 0 is perfect consistency."""
    if not human_ratings or not llm_ratings:
        raise ValueError("rating lists must be non-empty")
    human_dev = sum(abs(h - r) for h in human_ratings) / len(human_ratings)
    llm_dev = sum(abs(x - r) for x in llm_ratings) / len(llm_ratings)
    gap = abs(mean_aggregate(human_ratings) - mean_aggregate(llm_ratings))
    return human_dev + llm_dev + gap


def select_anchors(
    candidates: Sequence[AnchorCandidate],
    cfg: AnchorSelectionConfig,
    scale: EvaluationScale,
) -> dict[int, AnchorSet]:
    """Per rating, the most consistent candidates whose mean human rating
    rounds to that rating; ties broken by target id."""
    by_rating: dict[int, list[tuple[float, str, AnchorCandidate]]] = {
        r: [] for r in scale.ratings()
    }
    for cand in candidates:
        r = round_half_away(mean_aggregate(cand.human_ratings))
        if scale.contains(r):
            score = anchor_consistency_score(cand.human_ratings, cand.llm_ratings, r)
            by_rating[r].append((score, cand.target.id, cand))
    shortfalls = {
        r: len(pool)
        for r, pool in by_rating.items()
        if len(pool) < cfg.per_rating_count
    }
    if shortfalls:
        raise InsufficientAnchorsError(shortfalls)
    out = {}
    for r, pool in by_rating.items():
        pool.sort(key=lambda item: (item[0], item[1]))
        out[r] = AnchorSet(r, [cand for _, _, cand in pool[: cfg.per_rating_count]])
    return out


@dataclass
class RatingEstimate:
    rating: int
    scores: dict[int, float]
    comparisons: int = 0


class _CachingComparator:
    """Queries each (candidate, anchor, direction) at most once."""

    def __init__(self, comparator: Comparator):
        self.comparator = comparator
        self.cache: dict[tuple[str, str, str], int] = {}
        self.calls = 0

    def __call__(self, candidate: Target, anchor: Target, direction: str) -> int:
        key = (candidate.id, anchor.id, direction)
        if key not in self.cache:
            self.calls += 1
            value = self.comparator(candidate, anchor, direction)
            if value not in (0, 1):
                raise ValueError(f"comparator returned {value!r}, expected 0 or 1")
            self.cache[key] = value
        return self.cache[key]


def estimate_rating(
    candidate: Target,
    anchor_sets: Mapping[int, AnchorSet],
    comparator: Comparator,
    scale: EvaluationScale,
) -> RatingEstimate:
    """Argmax over ratings of: balance against the rating's own anchors, plus
    win rate over the rating below, plus loss rate to the rating above.

    Missing neighbor sets at the scale boundary contribute 0. Argmax ties
    break toward the lower rating.
    """
    for r in scale.ratings():
        if r not in anchor_sets or not anchor_sets[r].members:
            raise ValueError(f"missing anchor set for in-scale rating {r}")
    compare = _CachingComparator(comparator)
    scores: dict[int, float] = {}
    for r in scale.ratings():
        own = anchor_sets[r].anchors
        balance = sum(
            compare(candidate, a, "succ") - compare(candidate, a, "prec")
            for a in own
        )
        for a in own:
            if compare(candidate, a, "succ") and compare(candidate, a, "prec"):
                raise ValueError(
                    f"comparator asserted both orderings for anchor {a.id!r}"
                )
        score = -abs(balance) / len(own)
        if r - 1 in anchor_sets and scale.contains(r - 1):
            below = anchor_sets[r - 1].anchors
            score += sum(compare(candidate, a, "succ") for a in below) / len(below)
        if r + 1 in anchor_sets and scale.contains(r + 1):
            above = anchor_sets[r + 1].anchors
            score += sum(compare(candidate, a, "prec") for a in above) / len(above)
        scores[r] = score
    best = max(scores.values())
    rating = min(r for r, s in scores.items() if s == best)
    return RatingEstimate(rating, scores, compare.calls)


def calibrate_error_counts(
    pilot: Sequence[tuple[int, int]],
) -> dict[int, int]:
    """Advisory map rating -> error count from (error_count, estimated_rating)
    pilot runs: modal error count per rating, repaired so higher ratings get
    strictly fewer errors."""
    by_rating: dict[int, dict[int, int]] = {}
    for error_count, rating in pilot:
        by_rating.setdefault(rating, {}).setdefault(error_count, 0)
        by_rating[rating][error_count] += 1
    if len(by_rating) < 2:
        raise ValueError("pilot must cover at least 2 distinct ratings")
    modes = {}
    for rating, counts in by_rating.items():
        top = max(counts.values())
        modes[rating] = min(e for e, c in counts.items() if c == top)
    repaired = {}
    previous: int | None = None
    for rating in sorted(modes, reverse=True):
        count = modes[rating]
        if previous is not None and count <= previous:
            count = previous + 1
        repaired[rating] = count
        previous = count
    return dict(sorted(repaired.items()))


# ---------------------------------------------------------------------------
# Comparator backed by the judging harness


def make_judge_comparator(task, aspect, cfg, client, sources: Mapping[str, Source]):
    """Adapt order-swapped pairwise judging into the comparator contract.

    One debiased comparison per (candidate, anchor) pair serves both
    directions; anchors may come from a different source, in which case the
    candidate's source provides the prompt context.
    """
    from .judge import A_BETTER, B_BETTER, judge_compare

    verdict_cache: dict[tuple[str, str], str] = {}

    def comparator(candidate: Target, anchor: Target, direction: str) -> int:
        key = (candidate.id, anchor.id)
        if key not in verdict_cache:
            source = sources[candidate.source_id]
            anchor_for_prompt = anchor
            if anchor.source_id != candidate.source_id:
                from dataclasses import replace

                anchor_for_prompt = replace(anchor, source_id=candidate.source_id)
            out = judge_compare(
                candidate, anchor_for_prompt, source, aspect, task, cfg, client
            )
            verdict_cache[key] = out.aggregate
        verdict = verdict_cache[key]
        if direction == "succ":
            return 1 if verdict == A_BETTER else 0
        if direction == "prec":
            return 1 if verdict == B_BETTER else 0
        raise ValueError(f"unknown direction {direction!r}")

    return comparator


# ---------------------------------------------------------------------------
# Persistence: benchmark record shape plus anchor_rating / llm_ratings fields


def save_anchor_sets(
    anchor_sets: Mapping[int, AnchorSet],
    sources: Mapping[str, Source],
    task: str,
    aspect_name: str,
    scale: EvaluationScale,
    path: str | Path,
) -> None:
    header = {
        "task": task,
        "aspect": aspect_name,
        "scale_min": scale.min_rating,
        "scale_max": scale.max_rating,
        "kind": "anchors",
    }
    lines = [json.dumps(header, sort_keys=True)]
    for rating in sorted(anchor_sets):
        for member in anchor_sets[rating].members:
            t = member.target
            src = sources[t.source_id]
            record = {
                "source_id": t.source_id,
                "source_text": src.text,
                "addition": src.addition,
                "target_id": t.id,
                "target_text": t.text,
                "anchor_rating": rating,
                "human_ratings": list(member.human_ratings),
                "llm_ratings": list(member.llm_ratings),
                "error_count": None,
                "errors": None,
            }
            lines.append(json.dumps(record, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_anchor_sets(
    path: str | Path,
) -> tuple[dict[int, AnchorSet], dict[str, Source], dict]:
    raw_lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not raw_lines:
        raise BenchmarkError(f"{path}: empty anchor file")
    header = json.loads(raw_lines[0])
    if header.get("kind") != "anchors":
        raise BenchmarkError(f"{path}: not an anchor file")
    sources: dict[str, Source] = {}
    sets: dict[int, AnchorSet] = {}
    for raw in raw_lines[1:]:
        if not raw.strip():
            continue
        record = json.loads(raw)
        sid = record["source_id"]
        if sid not in sources:
            sources[sid] = Source(sid, record["source_text"], record.get("addition"))
        target = Target(
            record["target_id"],
            sid,
            record["target_text"],
            HumanAnnotated(tuple(record["human_ratings"])),
        )
        member = AnchorCandidate(target, tuple(record["llm_ratings"]))
        rating = record["anchor_rating"]
        sets.setdefault(rating, AnchorSet(rating, [])).members.append(member)
    return sets, sources, header
