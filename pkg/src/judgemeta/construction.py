"""Automatic benchmark construction.

References are sampled from a generator model and thinned by a greedy
diversity pass. Global benchmarks inject several errors at once and verify
each candidate's rating against the anchor sets; local benchmarks inject one
error per step, chaining each output into the next prompt.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from . import prompts
from .anchoring import AnchorSet, Comparator, estimate_rating
from .benchmark import (
    Aspect,
    Constructed,
    GlobalBenchmark,
    InjectedError,
    LocalBenchmark,
    Source,
    Target,
)
from .client import CompletionClient, CompletionRequest
from .prompts import ParseError


class ConstructionError(RuntimeError):
    pass


@dataclass
class ConstructionConfig:
    task: str
    aspect: str
    n_reference_samples: int = 10
    targets_per_rating: int = 2
    sequence_length: int = 4
    seed: int = 0
    generator_model: str = "generator"
    injector_model: str = "injector"
    comparator_model: str = "comparator"
    overgeneration_factor: int = 2
    retry_budget: int = 3
    reference_temperature: float = 1.0
    injection_temperature: float = 0.0
    max_output_tokens: int = 1024

    def __post_init__(self):
        if self.sequence_length < 2:
            raise ValueError("sequence_length must be >= 2")
        if self.targets_per_rating < 1:
            raise ValueError("targets_per_rating must be >= 1")


def rng_for_source(seed: int, source_id: str) -> random.Random:
    # Split streams per source so concurrent pipelines stay deterministic.
    return random.Random(f"{seed}:{source_id}")


def generate_references(
    source: Source, cfg: ConstructionConfig, client: CompletionClient
) -> list[str]:
    """n_reference_samples completions of the reference template; empty
    completions are dropped."""
    prompt = prompts.render_reference_prompt(cfg.task, source)
    texts = []
    for index in range(cfg.n_reference_samples):
        resp = client.complete(
            CompletionRequest(
                model=cfg.generator_model,
                prompt=prompt,
                temperature=cfg.reference_temperature,
                sample_index=index,
                max_output_tokens=cfg.max_output_tokens,
            )
        )
        if resp.text.strip():
            texts.append(resp.text.strip())
    if not texts:
        raise ConstructionError(f"all reference samples empty for {source.id!r}")
    return texts


def _word_trigrams(text: str) -> frozenset:
    words = text.lower().split()
    if len(words) < 3:
        return frozenset(words)
    return frozenset(tuple(words[i : i + 3]) for i in range(len(words) - 2))


def trigram_jaccard(a: str, b: str) -> float:
    sa, sb = _word_trigrams(a), _word_trigrams(b)
    if not sa and not sb:
        return 1.0
    union = len(sa | sb)
    return len(sa & sb) / union if union else 1.0


def select_diverse(candidates: Sequence[str], k: int) -> list[str]:
    """Greedy farthest-point selection under word-trigram Jaccard similarity.

    Seeds with the longest candidate, then repeatedly adds the candidate whose
    maximum similarity to the chosen set is smallest. Deterministic: ties
    break by input order.
    """
    if not 1 <= k <= len(candidates):
        raise ValueError(f"k={k} out of range for {len(candidates)} candidates")
    remaining = list(range(len(candidates)))
    seed = max(remaining, key=lambda i: (len(candidates[i]), -i))
    chosen = [seed]
    remaining.remove(seed)
    while len(chosen) < k:
        best = min(
            remaining,
            key=lambda i: (
                max(trigram_jaccard(candidates[i], candidates[c]) for c in chosen),
                i,
            ),
        )
        chosen.append(best)
        remaining.remove(best)
    return [candidates[i] for i in chosen]


def draw_subaspects(aspect: Aspect, count: int, rng: random.Random) -> list[str]:
    """Independent uniform draws with replacement over the aspect's sub-aspects."""
    if count < 1:
        raise ValueError("count must be >= 1")
    names = [s.name for s in aspect.sub_aspects]
    if not names:
        raise ValueError(f"aspect {aspect.name!r} has no sub-aspects")
    return [rng.choice(names) for _ in range(count)]


def _inject(
    prompt: str,
    n_errors: int,
    cfg: ConstructionConfig,
    client: CompletionClient,
) -> tuple[str, list[str]]:
    last_error: Exception | None = None
    for attempt in range(cfg.retry_budget + 1):
        resp = client.complete(
            CompletionRequest(
                model=cfg.injector_model,
                prompt=prompt,
                temperature=cfg.injection_temperature,
                sample_index=attempt,
                max_output_tokens=cfg.max_output_tokens,
            )
        )
        try:
            return prompts.parse_injection_output(resp.text, n_errors)
        except ParseError as exc:
            last_error = exc
    raise ConstructionError(f"injection failed after retries: {last_error}")


def inject_global(
    reference: str,
    sub_aspects: Sequence[str],
    source: Source,
    aspect: Aspect,
    cfg: ConstructionConfig,
    client: CompletionClient,
    target_id: str,
) -> Target:
    """Inject len(sub_aspects) errors at once into a reference."""
    descriptions = [
        f"{name}: {aspect.sub_aspect(name).description}" for name in sub_aspects
    ]
    prompt = prompts.render_inject_simultaneous_prompt(
        cfg.task, source, reference, descriptions
    )
    text, locations = _inject(prompt, len(sub_aspects), cfg, client)
    errors = tuple(
        InjectedError(name, loc) for name, loc in zip(sub_aspects, locations)
    )
    return Target(target_id, source.id, text, Constructed(len(errors), errors))


def build_local_sequence(
    reference: str,
    depth: int,
    aspect: Aspect,
    source: Source,
    cfg: ConstructionConfig,
    client: CompletionClient,
    rng: random.Random,
) -> list[Target]:
    """Iterative single-error chain: [reference, 1 error, ..., depth errors].

    Each step feeds the previous output verbatim into the prompt and extends
    the cumulative error list by one randomly drawn sub-aspect.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    sequence = [
        Target(f"{source.id}:e0", source.id, reference, Constructed(0, ()))
    ]
    errors: list[InjectedError] = []
    current = reference
    for step in range(1, depth + 1):
        name = draw_subaspects(aspect, 1, rng)[0]
        description = f"{name}: {aspect.sub_aspect(name).description}"
        prompt = prompts.render_inject_iterative_prompt(
            cfg.task, source, current, description
        )
        try:
            text, locations = _inject(prompt, 1, cfg, client)
        except ConstructionError as exc:
            raise ConstructionError(f"step {step}: {exc}") from None
        errors = errors + [InjectedError(name, locations[0])]
        sequence.append(
            Target(
                f"{source.id}:e{step}",
                source.id,
                text,
                Constructed(step, tuple(errors)),
            )
        )
        current = text
    return sequence


def assemble_local(
    sources: Sequence[Source],
    aspect: Aspect,
    cfg: ConstructionConfig,
    client: CompletionClient,
) -> LocalBenchmark:
    bench = LocalBenchmark(cfg.task, aspect, list(sources))
    for source in sources:
        rng = rng_for_source(cfg.seed, source.id)
        references = generate_references(source, cfg, client)
        reference = select_diverse(references, 1)[0]
        bench.sequences[source.id] = build_local_sequence(
            reference, cfg.sequence_length - 1, aspect, source, cfg, client, rng
        )
    bench.validate()
    return bench


@dataclass
class CoverageReport:
    """Slots the construction could not fill within the retry budget."""

    unfilled: list[dict] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.unfilled)


def assemble_global(
    sources: Sequence[Source],
    aspect: Aspect,
    cfg: ConstructionConfig,
    anchor_sets: Mapping[int, AnchorSet],
    comparator: Comparator,
    client: CompletionClient,
    calibration: Mapping[int, int] | None = None,
) -> tuple[GlobalBenchmark, CoverageReport]:
    """Fill j targets per (source, rating).

    The top rating's quota comes from pristine selected references. Lower
    ratings generate candidates at the calibrated error count, verify each
    with the rating estimator, and retry at error counts +/-1 until the
    budget runs out. Partial benchmarks are emitted with unfilled slots
    reported rather than failing the run.
    """
    scale = aspect.scale
    if calibration is None:
        # Fallback: one error per step below the top rating.
        calibration = {
            r: scale.max_rating - r for r in scale.ratings() if r != scale.max_rating
        }
    j = cfg.targets_per_rating
    bench = GlobalBenchmark(cfg.task, aspect, list(sources))
    report = CoverageReport()
    for source in sources:
        rng = rng_for_source(cfg.seed, source.id)
        references = generate_references(source, cfg, client)
        selected = select_diverse(references, min(j, len(references)))
        by_rating: dict[int, list[Target]] = {}

        top = scale.max_rating
        by_rating[top] = [
            Target(f"{source.id}:r{top}:{i}", source.id, text, Constructed(0, ()))
            for i, text in enumerate(selected[:j])
        ]
        if len(by_rating[top]) < j:
            report.unfilled.append(
                {"source": source.id, "rating": top,
                 "filled": len(by_rating[top]), "wanted": j}
            )

        reference = selected[0]
        for rating in scale.ratings():
            if rating == top:
                continue
            base_errors = max(1, calibration.get(rating, top - rating))
            accepted: list[Target] = []
            attempt = 0
            error_counts = [base_errors]
            for delta in range(1, cfg.retry_budget + 1):
                if base_errors + delta not in error_counts:
                    error_counts.append(base_errors + delta)
                if base_errors - delta >= 1:
                    error_counts.append(base_errors - delta)
            for n_errors in error_counts:
                if len(accepted) >= j:
                    break
                budget = cfg.overgeneration_factor * j
                for _ in range(budget):
                    if len(accepted) >= j:
                        break
                    sub_aspects = draw_subaspects(aspect, n_errors, rng)
                    candidate = inject_global(
                        reference,
                        sub_aspects,
                        source,
                        aspect,
                        cfg,
                        client,
                        f"{source.id}:r{rating}:{len(accepted)}.{attempt}",
                    )
                    attempt += 1
                    estimate = estimate_rating(candidate, anchor_sets, comparator, scale)
                    if estimate.rating == rating:
                        accepted.append(
                            Target(
                                f"{source.id}:r{rating}:{len(accepted)}",
                                source.id,
                                candidate.text,
                                candidate.provenance,
                            )
                        )
            by_rating[rating] = accepted
            if len(accepted) < j:
                report.unfilled.append(
                    {"source": source.id, "rating": rating,
                     "filled": len(accepted), "wanted": j}
                )
        bench.entries[source.id] = by_rating
    bench.validate()
    return bench, report
