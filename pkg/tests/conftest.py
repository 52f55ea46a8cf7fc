import re
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from judgemeta.benchmark import (
    Aspect,
    Constructed,
    EvaluationScale,
    GlobalBenchmark,
    HumanAnnotated,
    LocalBenchmark,
    Source,
    SubAspect,
    Target,
)
from judgemeta.client import ScriptedClient, ScriptRule
from judgemeta.registry import get_aspect


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        outcome = "PASS" if report.passed else "FAIL"
        name = report.nodeid.split("::")[-1]
        print(f"\n[{outcome}] {name}", flush=True)


@pytest.fixture
def coherence_aspect() -> Aspect:
    return get_aspect("summeval", "coherence")


@pytest.fixture
def small_aspect() -> Aspect:
    return Aspect(
        "coherence",
        "Coh",
        "overall coherence",
        (SubAspect("Flow", "flows well"), SubAspect("Clarity", "is clear")),
        EvaluationScale(1, 3),
    )


def make_sources(n: int, addition: bool = False) -> list[Source]:
    return [
        Source(f"s{i}", f"article text number {i}",
               f"fact {i}" if addition else None)
        for i in range(n)
    ]


def make_sequence(source_id: str, length: int, text=None) -> list[Target]:
    targets = []
    for e in range(length):
        body = text(source_id, e) if text else f"target {source_id} errs {e}"
        errors = tuple(
            __import__("judgemeta.benchmark", fromlist=["InjectedError"])
            .InjectedError("Flow", f"loc {i}")
            for i in range(e)
        )
        targets.append(Target(f"{source_id}:e{e}", source_id, body,
                              Constructed(e, errors)))
    return targets


def make_local_bench(aspect, n_sources=2, length=4) -> LocalBenchmark:
    sources = make_sources(n_sources)
    bench = LocalBenchmark("summeval", aspect, sources)
    for s in sources:
        bench.sequences[s.id] = make_sequence(s.id, length)
    bench.validate()
    return bench


def make_global_bench(aspect, n_sources=2, per_rating=1) -> GlobalBenchmark:
    sources = make_sources(n_sources)
    bench = GlobalBenchmark("summeval", aspect, sources)
    for s in sources:
        by_rating = {}
        for r in aspect.scale.ratings():
            by_rating[r] = [
                Target(
                    f"{s.id}:r{r}:{i}", s.id,
                    f"text {s.id} rating {r} copy {i}",
                    Constructed(0, ()),
                )
                for i in range(per_rating)
            ]
        bench.entries[s.id] = by_rating
    bench.validate()
    return bench


# ---------------------------------------------------------------------------
# Scripted clients keyed on the text slots inside rendered prompts.

_TARGET_SLOT = re.compile(
    r"(?:Summary|Response):\n(?P<body>.*?)\n\n### Your Evaluation", re.DOTALL
)
_PAIR_SLOT = re.compile(
    r"### (?:Summary|Response) A ###\n(?P<a>.*?)\n\n"
    r"### (?:Summary|Response) B ###\n(?P<b>.*?)\n\n### Your Evaluation",
    re.DOTALL,
)


def extract_target_text(prompt: str) -> str:
    match = _TARGET_SLOT.search(prompt)
    assert match, "prompt has no target slot"
    return match.group("body")


def extract_pair_texts(prompt: str) -> tuple[str, str]:
    match = _PAIR_SLOT.search(prompt)
    assert match, "prompt has no pair slots"
    return match.group("a"), match.group("b")


def scoring_client(score_by_text, fmt="Score: {}"):
    """Scripted scorer: looks the target text up in a score table."""

    def respond(req):
        return "Analysis: scripted.\n" + fmt.format(
            score_by_text[extract_target_text(req.prompt)]
        )

    return ScriptedClient([ScriptRule(respond, contains="### Your Evaluation")])


def rating_client(rating_by_text):
    return scoring_client(rating_by_text, fmt="Rating: {}")


def comparing_client(quality_by_text, equal_margin=0.0):
    """Scripted comparator: position-neutral verdicts from latent qualities."""

    def respond(req):
        a, b = extract_pair_texts(req.prompt)
        qa, qb = quality_by_text[a], quality_by_text[b]
        if qa - qb > equal_margin:
            return "Analysis: scripted.\nJudgment: A > B"
        if qb - qa > equal_margin:
            return "Analysis: scripted.\nJudgment: A < B"
        return "Analysis: scripted.\nJudgment: A = B"

    return ScriptedClient([ScriptRule(respond, contains="Judgment:")])


def err_count_comparing_client(marker="[err]"):
    """Comparator scripted on injected-error markers embedded in the texts."""

    def respond(req):
        a, b = extract_pair_texts(req.prompt)
        qa, qb = -a.count(marker), -b.count(marker)
        if qa > qb:
            return "Analysis: scripted.\nJudgment: A > B"
        if qb > qa:
            return "Analysis: scripted.\nJudgment: A < B"
        return "Analysis: scripted.\nJudgment: A = B"

    return ScriptedClient([ScriptRule(respond, contains="Judgment:")])


def first_position_biased_client():
    """Always prefers whichever target appears first."""
    return ScriptedClient(
        [ScriptRule("Analysis: biased.\nJudgment: A > B", contains="Judgment:")]
    )
