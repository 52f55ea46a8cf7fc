"""Benchmark data model and line-delimited file formats.

A benchmark is always scoped to one (task, aspect) pair. Global benchmarks
hold rated target sets per source; local benchmarks hold quality-ordered
target sequences per source, where quality order is tracked through
cumulative error counts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Union


class BenchmarkError(ValueError):
    """Invalid benchmark structure or file contents."""


@dataclass(frozen=True)
class EvaluationScale:
    """Inclusive integer rating range, e.g. 1-5."""

    min_rating: int
    max_rating: int

    def __post_init__(self):
        if self.min_rating >= self.max_rating:
            raise BenchmarkError(
                f"scale min {self.min_rating} must be below max {self.max_rating}"
            )

    @property
    def levels(self) -> int:
        return self.max_rating - self.min_rating + 1

    def ratings(self) -> range:
        return range(self.min_rating, self.max_rating + 1)

    def contains(self, rating: int) -> bool:
        return self.min_rating <= rating <= self.max_rating


@dataclass(frozen=True)
class SubAspect:
    name: str
    description: str


@dataclass(frozen=True)
class Aspect:
    name: str
    abbreviation: str
    description: str
    sub_aspects: tuple[SubAspect, ...]
    scale: EvaluationScale

    def __post_init__(self):
        if len(self.sub_aspects) < 2:
            raise BenchmarkError(f"aspect {self.name!r} needs at least 2 sub-aspects")
        names = [s.name for s in self.sub_aspects]
        if len(set(names)) != len(names):
            raise BenchmarkError(f"duplicate sub-aspect names in {self.name!r}")

    def sub_aspect(self, name: str) -> SubAspect:
        for s in self.sub_aspects:
            if s.name == name:
                return s
        raise KeyError(f"unknown sub-aspect {name!r} in aspect {self.name!r}")


@dataclass(frozen=True)
class Source:
    id: str
    text: str
    addition: str | None = None  # the conditioning fact for dialogue tasks

    def __post_init__(self):
        if not self.text:
            raise BenchmarkError(f"source {self.id!r} has empty text")


@dataclass(frozen=True)
class HumanAnnotated:
    ratings: tuple[int, ...]


@dataclass(frozen=True)
class InjectedError:
    sub_aspect: str
    location: str


@dataclass(frozen=True)
class Constructed:
    error_count: int
    errors: tuple[InjectedError, ...]

    def __post_init__(self):
        if self.error_count != len(self.errors):
            raise BenchmarkError(
                f"error_count {self.error_count} != {len(self.errors)} recorded errors"
            )


Provenance = Union[HumanAnnotated, Constructed]


@dataclass(frozen=True)
class Target:
    id: str
    source_id: str
    text: str
    provenance: Provenance
    rating: int | None = None

    def with_rating(self, rating: int) -> "Target":
        return replace(self, rating=rating)


@dataclass
class GlobalBenchmark:
    task: str
    aspect: Aspect
    sources: list[Source]
    entries: dict[str, dict[int, list[Target]]] = field(default_factory=dict)

    def validate(self) -> None:
        _check_unique_sources(self.sources)
        source_ids = {s.id for s in self.sources}
        seen_targets: set[str] = set()
        for source_id, by_rating in self.entries.items():
            if source_id not in source_ids:
                raise BenchmarkError(f"entries reference unknown source {source_id!r}")
            for rating, targets in by_rating.items():
                if not self.aspect.scale.contains(rating):
                    raise BenchmarkError(
                        f"rating {rating} outside scale for source {source_id!r}"
                    )
                for t in targets:
                    if t.source_id != source_id:
                        raise BenchmarkError(
                            f"target {t.id!r} filed under source {source_id!r} "
                            f"but claims source {t.source_id!r}"
                        )
                    if t.id in seen_targets:
                        raise BenchmarkError(f"duplicate target id {t.id!r}")
                    seen_targets.add(t.id)
                    if isinstance(t.provenance, HumanAnnotated):
                        for h in t.provenance.ratings:
                            if not self.aspect.scale.contains(h):
                                raise BenchmarkError(
                                    f"target {t.id!r} has out-of-scale human rating {h}"
                                )

    def all_targets(self) -> list[tuple[int, Target]]:
        out = []
        for by_rating in self.entries.values():
            for rating, targets in sorted(by_rating.items()):
                out.extend((rating, t) for t in targets)
        return out


@dataclass
class LocalBenchmark:
    task: str
    aspect: Aspect
    sources: list[Source]
    sequences: dict[str, list[Target]] = field(default_factory=dict)

    def validate(self) -> None:
        _check_unique_sources(self.sources)
        source_ids = {s.id for s in self.sources}
        lengths = set()
        seen_targets: set[str] = set()
        for source_id, seq in self.sequences.items():
            if source_id not in source_ids:
                raise BenchmarkError(f"sequence for unknown source {source_id!r}")
            lengths.add(len(seq))
            for index, t in enumerate(seq):
                if t.source_id != source_id:
                    raise BenchmarkError(
                        f"target {t.id!r} in sequence {source_id!r} claims "
                        f"source {t.source_id!r}"
                    )
                if t.id in seen_targets:
                    raise BenchmarkError(f"duplicate target id {t.id!r}")
                seen_targets.add(t.id)
                if not isinstance(t.provenance, Constructed):
                    raise BenchmarkError(
                        f"target {t.id!r} in a local sequence must be constructed"
                    )
                if t.provenance.error_count != index:
                    raise BenchmarkError(
                        f"non-contiguous error_count at index {index} "
                        f"in sequence {source_id!r} (target {t.id!r})"
                    )
        if len(lengths) > 1:
            raise BenchmarkError(f"sequences have mixed lengths {sorted(lengths)}")

    @property
    def sequence_length(self) -> int:
        if not self.sequences:
            return 0
        return len(next(iter(self.sequences.values())))


def _check_unique_sources(sources: Iterable[Source]) -> None:
    seen: set[str] = set()
    for s in sources:
        if s.id in seen:
            raise BenchmarkError(f"duplicate source id {s.id!r}")
        seen.add(s.id)


# ---------------------------------------------------------------------------
# File format: first line is a header object, then one record per line.


def _provenance_fields(t: Target) -> dict:
    if isinstance(t.provenance, HumanAnnotated):
        return {
            "human_ratings": list(t.provenance.ratings),
            "error_count": None,
            "errors": None,
        }
    return {
        "human_ratings": None,
        "error_count": t.provenance.error_count,
        "errors": [
            {"sub_aspect": e.sub_aspect, "location": e.location}
            for e in t.provenance.errors
        ],
    }


def _provenance_from_record(record: dict, line: int) -> Provenance:
    if record.get("error_count") is not None:
        errors = tuple(
            InjectedError(e["sub_aspect"], e["location"])
            for e in (record.get("errors") or [])
        )
        try:
            return Constructed(record["error_count"], errors)
        except BenchmarkError as exc:
            raise BenchmarkError(f"line {line}: {exc}") from None
    if record.get("human_ratings") is not None:
        return HumanAnnotated(tuple(record["human_ratings"]))
    raise BenchmarkError(
        f"line {line}: record has neither human_ratings nor error_count"
    )


def save_benchmark(benchmark: GlobalBenchmark | LocalBenchmark, path: str | Path) -> None:
    """Write a benchmark to one file; refuses invalid structures before writing."""
    benchmark.validate()
    sources = {s.id: s for s in benchmark.sources}
    kind = "global" if isinstance(benchmark, GlobalBenchmark) else "local"
    header = {
        "task": benchmark.task,
        "aspect": benchmark.aspect.name,
        "scale_min": benchmark.aspect.scale.min_rating,
        "scale_max": benchmark.aspect.scale.max_rating,
        "kind": kind,
    }
    lines = [json.dumps(header, sort_keys=True)]
    if kind == "global":
        for source_id in sorted(benchmark.entries):
            by_rating = benchmark.entries[source_id]
            src = sources[source_id]
            for rating in sorted(by_rating):
                for t in by_rating[rating]:
                    record = {
                        "source_id": source_id,
                        "source_text": src.text,
                        "addition": src.addition,
                        "target_id": t.id,
                        "target_text": t.text,
                        "rating": rating,
                        **_provenance_fields(t),
                    }
                    lines.append(json.dumps(record, sort_keys=True))
    else:
        for source_id in sorted(benchmark.sequences):
            src = sources[source_id]
            for index, t in enumerate(benchmark.sequences[source_id]):
                record = {
                    "source_id": source_id,
                    "source_text": src.text,
                    "addition": src.addition,
                    "target_id": t.id,
                    "target_text": t.text,
                    "seq_index": index,
                    **_provenance_fields(t),
                }
                lines.append(json.dumps(record, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_benchmark(path: str | Path, kind: str) -> GlobalBenchmark | LocalBenchmark:
    """Load a benchmark file, rejecting the first invariant violation by line number."""
    from .registry import get_aspect

    if kind not in ("global", "local"):
        raise ValueError(f"kind must be 'global' or 'local', got {kind!r}")
    raw_lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not raw_lines:
        raise BenchmarkError(f"{path}: empty file, missing header")
    try:
        header = json.loads(raw_lines[0])
    except json.JSONDecodeError as exc:
        raise BenchmarkError(f"line 1: malformed header: {exc}") from None
    if header.get("kind") != kind:
        raise BenchmarkError(
            f"line 1: file declares kind {header.get('kind')!r}, expected {kind!r}"
        )
    scale = EvaluationScale(header["scale_min"], header["scale_max"])
    aspect = get_aspect(header["task"], header["aspect"], scale=scale)

    sources: dict[str, Source] = {}
    records = []
    for line_no, raw in enumerate(raw_lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise BenchmarkError(f"line {line_no}: malformed record: {exc}") from None
        source_id = record["source_id"]
        if source_id not in sources:
            sources[source_id] = Source(
                source_id, record["source_text"], record.get("addition")
            )
        records.append((line_no, record))

    if kind == "global":
        bench = GlobalBenchmark(header["task"], aspect, list(sources.values()))
        for line_no, record in records:
            rating = record.get("rating")
            target = Target(
                record["target_id"],
                record["source_id"],
                record["target_text"],
                _provenance_from_record(record, line_no),
                rating=rating,
            )
            if rating is None:
                raise BenchmarkError(
                    f"line {line_no}: global record for target "
                    f"{target.id!r} lacks a rating"
                )
            if not scale.contains(rating):
                raise BenchmarkError(
                    f"line {line_no}: rating {rating} outside scale "
                    f"{scale.min_rating}-{scale.max_rating} for target {target.id!r}"
                )
            bench.entries.setdefault(record["source_id"], {}).setdefault(
                rating, []
            ).append(target)
        bench.validate()
        return bench

    bench = LocalBenchmark(header["task"], aspect, list(sources.values()))
    by_source: dict[str, list[tuple[int, Target]]] = {}
    for line_no, record in records:
        target = Target(
            record["target_id"],
            record["source_id"],
            record["target_text"],
            _provenance_from_record(record, line_no),
        )
        by_source.setdefault(record["source_id"], []).append(
            (record["seq_index"], target)
        )
    for source_id, indexed in by_source.items():
        indexed.sort(key=lambda pair: pair[0])
        seq = [t for _, t in indexed]
        for position, t in enumerate(seq):
            if (
                isinstance(t.provenance, Constructed)
                and t.provenance.error_count != position
            ):
                raise BenchmarkError(
                    f"non-contiguous error_count at index {position} "
                    f"in sequence {source_id!r}"
                )
        bench.sequences[source_id] = seq
    bench.validate()
    return bench
