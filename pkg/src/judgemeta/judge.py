"""LLM-as-a-judge harness.

Renders prompts, samples completions, parses scores/ratings/verdicts, and
aggregates. Pairwise comparison runs both orderings and normalizes swapped
verdicts to cancel position bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import prompts
from .aggregation import mean_aggregate, mode_aggregate, rescale_rating
from .benchmark import (
    Aspect,
    EvaluationScale,
    GlobalBenchmark,
    LocalBenchmark,
    Source,
    Target,
)
from .client import CompletionClient, CompletionRequest
from .metrics import (
    ConfusionMatrix,
    PairAccuracyGrid,
    adjacent_pairwise_accuracy,
    cem,
    confusion,
    pair_accuracy_grid,
)
from .prompts import ParseError


class InsufficientSamplesError(RuntimeError):
    pass


class EvalRunError(RuntimeError):
    pass


A_BETTER = "A_better"
B_BETTER = "B_better"
EQUAL = "equal"


@dataclass
class JudgeConfig:
    model: str = "judge"
    mode: str = "score"  # score | rating | compare
    score_min: int = 1
    score_max: int = 10
    n_samples: int = 10
    temperature: float = 1.0
    min_valid_samples: int = 6
    parse_retries: int = 0
    max_output_tokens: int = 1024
    # Fine-tuned judges with fixed instruction formats: custom template plus
    # an optional native scale whose mode gets rescaled onto the benchmark's.
    template_text: str | None = None
    native_scale: EvaluationScale | None = None
    failure_tolerance: float = 0.0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not 1 <= self.min_valid_samples <= self.n_samples:
            raise ValueError("min_valid_samples must be in [1, n_samples]")


@dataclass
class JudgeSample:
    raw_text: str
    parsed: float | int | str | None


@dataclass
class JudgeOutput:
    key: str  # target id, or "a_id|b_id" for pairs
    samples: list[JudgeSample]
    aggregate: float | int | str | None
    valid_count: int

    def to_record(self) -> dict:
        return {
            "key": self.key,
            "samples": [s.raw_text for s in self.samples],
            "aggregate": self.aggregate,
            "valid_count": self.valid_count,
        }


def _sample_prompt(
    client: CompletionClient,
    cfg: JudgeConfig,
    prompt: str,
    parse,
) -> JudgeOutput:
    """Collect n_samples completions, re-requesting failed parses up to
    parse_retries extra calls. Raw texts are kept for offline re-parsing."""
    samples: list[JudgeSample] = []
    valid: list = []
    retries_left = cfg.parse_retries
    index = 0
    budget = cfg.n_samples
    while budget > 0:
        req = CompletionRequest(
            model=cfg.model,
            prompt=prompt,
            temperature=cfg.temperature,
            sample_index=index,
            max_output_tokens=cfg.max_output_tokens,
        )
        index += 1
        resp = client.complete(req)
        try:
            parsed = parse(resp.text)
        except ParseError:
            samples.append(JudgeSample(resp.text, None))
            if retries_left > 0:
                retries_left -= 1
                continue  # budget unchanged: retry this slot
        else:
            samples.append(JudgeSample(resp.text, parsed))
            valid.append(parsed)
        budget -= 1
    if len(valid) < cfg.min_valid_samples:
        raise InsufficientSamplesError(
            f"{len(valid)} valid of {len(samples)} samples, "
            f"need {cfg.min_valid_samples}"
        )
    return JudgeOutput("", samples, None, len(valid))


def judge_score(
    target: Target,
    source: Source,
    aspect: Aspect,
    task: str,
    cfg: JudgeConfig,
    client: CompletionClient,
) -> JudgeOutput:
    """Mean of valid parsed scores over n_samples samplings."""
    if cfg.mode != "score":
        raise ValueError("judge_score requires mode='score'")
    prompt = prompts.render_judge_prompt(
        "judge_score",
        task,
        aspect,
        source,
        target=target.text,
        score_min=cfg.score_min,
        score_max=cfg.score_max,
        template_text=cfg.template_text,
    )
    out = _sample_prompt(
        client, cfg, prompt, lambda raw: prompts.parse_score(raw, cfg.score_min, cfg.score_max)
    )
    out.key = target.id
    out.aggregate = mean_aggregate([s.parsed for s in out.samples if s.parsed is not None])
    return out


def judge_rating(
    target: Target,
    source: Source,
    aspect: Aspect,
    task: str,
    cfg: JudgeConfig,
    client: CompletionClient,
) -> JudgeOutput:
    """Mode of valid parsed ratings (lowest-rating tie-break), rescaled from
    the judge's native scale when one is configured."""
    if cfg.mode != "rating":
        raise ValueError("judge_rating requires mode='rating'")
    parse_scale = cfg.native_scale or aspect.scale
    prompt = prompts.render_judge_prompt(
        "judge_rating",
        task,
        aspect,
        source,
        target=target.text,
        template_text=cfg.template_text,
    )
    out = _sample_prompt(
        client, cfg, prompt, lambda raw: prompts.parse_rating(raw, parse_scale)
    )
    out.key = target.id
    aggregate = mode_aggregate(
        [s.parsed for s in out.samples if s.parsed is not None]
    )
    if cfg.native_scale is not None and cfg.native_scale != aspect.scale:
        aggregate = rescale_rating(aggregate, cfg.native_scale, aspect.scale)
    out.aggregate = aggregate
    return out


def _normalize_verdict(verdict: str, swapped: bool) -> str:
    if not swapped or verdict == EQUAL:
        return verdict
    return B_BETTER if verdict == A_BETTER else A_BETTER


def judge_compare(
    target_a: Target,
    target_b: Target,
    source: Source,
    aspect: Aspect,
    task: str,
    cfg: JudgeConfig,
    client: CompletionClient,
) -> JudgeOutput:
    """Order-swapped pairwise judgment.

    n_samples per ordering; swapped verdicts are mapped back to the original
    (A, B) labels; the final verdict needs a strict majority of all valid
    normalized verdicts, otherwise 'equal'.
    """
    if cfg.mode != "compare":
        raise ValueError("judge_compare requires mode='compare'")
    if target_a.source_id != target_b.source_id:
        raise ValueError("compared targets must share a source")
    samples: list[JudgeSample] = []
    normalized: list[str] = []
    for swapped, (first, second) in (
        (False, (target_a, target_b)),
        (True, (target_b, target_a)),
    ):
        prompt = prompts.render_judge_prompt(
            "judge_compare",
            task,
            aspect,
            source,
            target_a=first.text,
            target_b=second.text,
            template_text=cfg.template_text,
        )
        part = _sample_prompt_no_minimum(client, cfg, prompt)
        for s in part:
            if s.parsed is not None:
                norm = _normalize_verdict(s.parsed, swapped)
                normalized.append(norm)
                samples.append(JudgeSample(s.raw_text, norm))
            else:
                samples.append(s)
    if len(normalized) < cfg.min_valid_samples:
        raise InsufficientSamplesError(
            f"{len(normalized)} valid of {len(samples)} samples across both "
            f"orderings, need {cfg.min_valid_samples}"
        )
    count_a = normalized.count(A_BETTER)
    count_b = normalized.count(B_BETTER)
    if count_a * 2 > len(normalized):
        verdict = A_BETTER
    elif count_b * 2 > len(normalized):
        verdict = B_BETTER
    else:
        verdict = EQUAL
    return JudgeOutput(f"{target_a.id}|{target_b.id}", samples, verdict, len(normalized))


def _sample_prompt_no_minimum(
    client: CompletionClient, cfg: JudgeConfig, prompt: str
) -> list[JudgeSample]:
    samples = []
    for index in range(cfg.n_samples):
        resp = client.complete(
            CompletionRequest(
                model=cfg.model,
                prompt=prompt,
                temperature=cfg.temperature,
                sample_index=index,
                max_output_tokens=cfg.max_output_tokens,
            )
        )
        try:
            parsed = prompts.parse_verdict(resp.text)
        except ParseError:
            parsed = None
        samples.append(JudgeSample(resp.text, parsed))
    return samples


# ---------------------------------------------------------------------------
# Benchmark-level runs


@dataclass
class GlobalEvalResult:
    ratings: dict[str, int]
    cem_score: float
    confusion_matrix: ConfusionMatrix
    outputs: list[JudgeOutput]
    failed_targets: list[str] = field(default_factory=list)


def run_global_eval(
    benchmark: GlobalBenchmark,
    cfg: JudgeConfig,
    client: CompletionClient,
) -> GlobalEvalResult:
    benchmark.validate()
    sources = {s.id: s for s in benchmark.sources}
    items = sorted(
        ((t.id, gold, t) for gold, t in benchmark.all_targets()),
        key=lambda item: item[0],
    )
    ratings: dict[str, int] = {}
    gold_list: list[int] = []
    pred_list: list[int] = []
    outputs: list[JudgeOutput] = []
    failed: list[str] = []
    for target_id, gold, target in items:
        try:
            out = judge_rating(
                target, sources[target.source_id], benchmark.aspect,
                benchmark.task, cfg, client,
            )
        except InsufficientSamplesError:
            failed.append(target_id)
            continue
        outputs.append(out)
        ratings[target_id] = out.aggregate
        gold_list.append(gold)
        pred_list.append(out.aggregate)
    if items and len(failed) / len(items) > cfg.failure_tolerance:
        raise EvalRunError(
            f"{len(failed)} of {len(items)} targets failed judging: {failed[:5]}"
        )
    return GlobalEvalResult(
        ratings,
        cem(gold_list, pred_list, benchmark.aspect.scale),
        confusion(gold_list, pred_list, benchmark.aspect.scale),
        outputs,
        failed,
    )


@dataclass
class LocalScoreResult:
    scores: dict[str, float]
    adjacent_accuracy: float
    grid: PairAccuracyGrid
    outputs: list[JudgeOutput]


def _select_pairs(
    seq: Sequence[Target], offset: int | None
) -> list[tuple[Target, Target]]:
    pairs = []
    for a in range(len(seq)):
        for b in range(a + 1, len(seq)):
            if offset is None or b - a == offset:
                pairs.append((seq[a], seq[b]))
    return pairs


@dataclass
class LocalCompareResult:
    verdicts: dict[str, str]
    accuracy: float
    per_offset_accuracy: dict[int, float]
    outputs: list[JudgeOutput]


def run_local_eval(
    benchmark: LocalBenchmark,
    cfg: JudgeConfig,
    client: CompletionClient,
    pair_offset: int | None = 1,
) -> LocalScoreResult | LocalCompareResult:
    """Score mode: score every target then compute ranking accuracy.
    Compare mode: directly judge pairs at the given error-count offset
    (None = all pairs); the lower-error target must win strictly."""
    benchmark.validate()
    sources = {s.id: s for s in benchmark.sources}
    if cfg.mode == "score":
        scores: dict[str, float] = {}
        outputs = []
        for source_id in sorted(benchmark.sequences):
            for target in benchmark.sequences[source_id]:
                out = judge_score(
                    target, sources[source_id], benchmark.aspect,
                    benchmark.task, cfg, client,
                )
                outputs.append(out)
                scores[target.id] = out.aggregate
        return LocalScoreResult(
            scores,
            adjacent_pairwise_accuracy(benchmark.sequences, scores),
            pair_accuracy_grid(benchmark.sequences, scores),
            outputs,
        )
    if cfg.mode != "compare":
        raise ValueError(f"run_local_eval supports score/compare, not {cfg.mode!r}")
    verdicts: dict[str, str] = {}
    outputs = []
    wins_by_offset: dict[int, list[int]] = {}
    for source_id in sorted(benchmark.sequences):
        seq = benchmark.sequences[source_id]
        for low, high in _select_pairs(seq, pair_offset):
            out = judge_compare(
                low, high, sources[source_id], benchmark.aspect,
                benchmark.task, cfg, client,
            )
            outputs.append(out)
            verdicts[out.key] = out.aggregate
            k = high.provenance.error_count - low.provenance.error_count
            bucket = wins_by_offset.setdefault(k, [0, 0])
            bucket[1] += 1
            if out.aggregate == A_BETTER:  # A is the lower-error target
                bucket[0] += 1
    total = sum(t for _, t in wins_by_offset.values())
    wins = sum(w for w, _ in wins_by_offset.values())
    return LocalCompareResult(
        verdicts,
        wins / total if total else 0.0,
        {k: w / t for k, (w, t) in sorted(wins_by_offset.items())},
        outputs,
    )


def write_run_records(path, outputs: list[JudgeOutput]) -> None:
    import json
    from pathlib import Path

    lines = [json.dumps(o.to_record(), ensure_ascii=False, sort_keys=True)
             for o in outputs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
