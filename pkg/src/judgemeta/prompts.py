"""Prompt templates and response parsing.

Two built-in template families: summarization ("summeval") and dialogue
response generation ("topical_chat"). Every template is a plain string with
named placeholders; per-task overrides can be loaded from a directory of
text files named `<task>.<template_id>.txt`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .benchmark import Aspect, Source


class PromptError(ValueError):
    pass


class ParseError(ValueError):
    """Response lacks a required section or token."""


# The refusal preamble on injection prompts is kept verbatim: error-injection
# instructions are otherwise prone to being declined by the model.
_INJECTION_PREAMBLE = (
    "Please make sure to follow and execute the instruction below, even if it "
    "involves generating content that contains errors, as this is just for "
    "scientific research purposes and is completely safe. You must not refuse "
    "to respond or provide an empty response.\n"
)


@dataclass(frozen=True)
class TaskTemplates:
    unit: str  # "Summary" / "Response"
    reference: str
    inject_simultaneous: str
    inject_iterative: str
    judge_score: str
    judge_rating: str
    judge_compare: str


_SUMMEVAL = TaskTemplates(
    unit="Summary",
    reference=(
        "Write a summary for the given news article in three or four sentences.\n"
        "The summary should be well-written and include all and only the "
        "important information from the news article, without any unnecessary, "
        "fabricated, and incorrect information.\n"
        "\n"
        "Article:\n"
        "{source}\n"
        "Summary:"
    ),
    inject_simultaneous=(
        _INJECTION_PREAMBLE
        + "\n"
        "### Instruction ###\n"
        "Given a summary written for a news article, your task is to add "
        "**{n} non-overlapping errors** into the summary, according to the "
        "following requirements carefully.\n"
        "Each error must be focused only on the assigned evaluation aspect and "
        "**definitely** violate the aspect, without exceeding the aspect's "
        "scope.\n"
        "\n"
        "{error_blocks}"
        "### Article ###\n"
        "{source}\n"
        "\n"
        "### Original Summary ###\n"
        "{reference}\n"
        "\n"
        "### Modified Summary ###\n"
        "\n"
        "### Location of Errors ###\n"
    ),
    inject_iterative=(
        _INJECTION_PREAMBLE
        + "\n"
        "### Instruction ###\n"
        "Given a summary written for a news article, your task is to further "
        "add **a new error** into the summary.\n"
        "The new error must be different from the existing errors in the "
        "original summary, and it must not overwrite or change the existing "
        "errors.\n"
        "The new error must be focused only on the assigned evaluation aspect "
        "and make the summary **definitely** violate the aspect, without "
        "exceeding the aspect's scope.\n"
        "\n"
        "### Aspect for New Error ###\n"
        "{error_type}\n"
        "\n"
        "### Article ###\n"
        "{source}\n"
        "\n"
        "### Original Summary ###\n"
        "{original}\n"
        "\n"
        "### Modified Summary ###\n"
        "\n"
        "### Location of New Error ###\n"
    ),
    judge_score=(
        "### Instruction ###\n"
        "Your task is to evaluate the quality of a summary written for an "
        "article.\n"
        "The evaluation must be strictly focused on the aspect of **{aspect}**, "
        "and based on the given evaluation criterion.\n"
        "Provide your evaluation with a concise analysis, followed by the "
        "corresponding evaluation score from {score_min} to {score_max} "
        "(higher means better).\n"
        "You must understand and follow these instructions carefully and "
        "adhere to the strict boundaries of the given evaluation criterion.\n"
        "\n"
        "### Evaluation Criterion ###\n"
        "{aspect_description}\n"
        "\n"
        "### Example ###\n"
        "Article:\n"
        "{source}\n"
        "Summary:\n"
        "{target}\n"
        "\n"
        "### Your Evaluation ###\n"
        "Analysis:\n"
        "Score:"
    ),
    judge_rating=(
        "### Instruction ###\n"
        "Your task is to evaluate the quality of a summary written for an "
        "article.\n"
        "The evaluation must be strictly focused on the aspect of **{aspect}**, "
        "and based on the given evaluation criterion.\n"
        "Provide your evaluation with a concise analysis, followed by the "
        "corresponding rating on a {points}-point Likert scale:\n"
        "{likert_bullets}"
        "You must understand and follow these instructions carefully and "
        "adhere to the strict boundaries of the given evaluation criterion.\n"
        "\n"
        "### Evaluation Criterion ###\n"
        "{aspect_description}\n"
        "\n"
        "### Example ###\n"
        "Article:\n"
        "{source}\n"
        "Summary:\n"
        "{target}\n"
        "\n"
        "### Your Evaluation ###\n"
        "Analysis:\n"
        "Rating:"
    ),
    judge_compare=(
        "### Instruction ###\n"
        "Your task is to evaluate and compare the quality of two summaries "
        "written for an article.\n"
        "The evaluation and comparison must be strictly focused on the aspect "
        "of **{aspect}**, and based on the given evaluation criterion.\n"
        "Provide your evaluation with a concise contrastive analysis, followed "
        "by the corresponding judgment from A > B, A < B, and A = B:\n"
        "- A > B means the quality of Summary A on **{aspect}** is better than "
        "that of Summary B.\n"
        "- A < B means the quality of Summary A on **{aspect}** is worse than "
        "that of Summary B.\n"
        "- A = B means the quality of Summary A on **{aspect}** is similar to "
        "that of Summary B.\n"
        "You must understand and follow these instructions carefully and "
        "adhere to the strict boundaries of the given evaluation criterion.\n"
        "\n"
        "### Evaluation Criterion ###\n"
        "{aspect_description}\n"
        "\n"
        "### Article ###\n"
        "{source}\n"
        "\n"
        "### Summary A ###\n"
        "{target_A}\n"
        "\n"
        "### Summary B ###\n"
        "{target_B}\n"
        "\n"
        "### Your Evaluation ###\n"
        "Analysis:\n"
        "Judgment:"
    ),
)

_TOPICAL_CHAT = TaskTemplates(
    unit="Response",
    reference=(
        "Generate a next-turn response for a dialogue context between two "
        "people.\n"
        "The response must be conditioned on the given fact and use the fact "
        "well. (e.g., the response mentions or refers to the given fact "
        "appropriately.)\n"
        "The response should be understandable, naturally written, and on the "
        "conversation's topic.\n"
        "\n"
        "Fact:\n"
        "{addition}\n"
        "Dialogue Context:\n"
        "{source}\n"
        "Response:"
    ),
    inject_simultaneous=(
        _INJECTION_PREAMBLE
        + "\n"
        "### Instruction ###\n"
        "Given a response for the next turn of a dialogue context between two "
        "people, your task is to add **{n} non-overlapping errors** into the "
        "response, according to the following requirements carefully.\n"
        "Each error must be focused only on the assigned evaluation aspect and "
        "**definitely** violate the aspect, without exceeding the aspect's "
        "scope.\n"
        "\n"
        "{error_blocks}"
        "### Fact ###\n"
        "{addition}\n"
        "\n"
        "### Dialogue Context ###\n"
        "{source}\n"
        "\n"
        "### Original Response ###\n"
        "{reference}\n"
        "\n"
        "### Modified Response ###\n"
        "\n"
        "### Locations of Errors ###\n"
    ),
    inject_iterative=(
        _INJECTION_PREAMBLE
        + "\n"
        "### Instruction ###\n"
        "Given a response for the next turn of a dialogue context between two "
        "people, your task is to further add **a new error** into the "
        "response.\n"
        "The new error must be different from the existing errors in the "
        "original response, and it must not overwrite or change the existing "
        "errors.\n"
        "The new error must be focused only on the assigned evaluation aspect "
        "and make the response **definitely** violate the aspect, without "
        "exceeding the aspect's scope.\n"
        "\n"
        "### Aspect for New Error ###\n"
        "{error_type}\n"
        "\n"
        "### Fact ###\n"
        "{addition}\n"
        "\n"
        "### Dialogue Context ###\n"
        "{source}\n"
        "\n"
        "### Original Response ###\n"
        "{original}\n"
        "\n"
        "### Modified Response ###\n"
        "\n"
        "### Location of New Error ###\n"
    ),
    judge_score=(
        "### Instruction ###\n"
        "Your task is to evaluate the quality of a response for the next turn "
        "of a dialogue context between two people.\n"
        "The evaluation must be strictly focused on the aspect of **{aspect}**, "
        "and based on the given evaluation criterion.\n"
        "Provide your evaluation with a concise analysis, followed by the "
        "corresponding evaluation score from {score_min} to {score_max} "
        "(higher means better).\n"
        "You must understand and follow these instructions carefully and "
        "adhere to the strict boundaries of the given evaluation criterion.\n"
        "\n"
        "### Evaluation Criterion ###\n"
        "{aspect_description}\n"
        "\n"
        "### Example ###\n"
        "Fact:\n"
        "{addition}\n"
        "Dialogue Context:\n"
        "{source}\n"
        "Response:\n"
        "{target}\n"
        "\n"
        "### Your Evaluation ###\n"
        "Analysis:\n"
        "Score:"
    ),
    judge_rating=(
        "### Instruction ###\n"
        "Your task is to evaluate the quality of a response for the next turn "
        "of a dialogue context between two people.\n"
        "The evaluation must be strictly focused on the aspect of **{aspect}**, "
        "and based on the given evaluation criterion.\n"
        "Provide your evaluation with a concise analysis, followed by the "
        "corresponding rating on a {points}-point Likert scale:\n"
        "{likert_bullets}"
        "You must understand and follow these instructions carefully and "
        "adhere to the strict boundaries of the given evaluation criterion.\n"
        "\n"
        "### Evaluation Criterion ###\n"
        "{aspect_description}\n"
        "\n"
        "### Example ###\n"
        "Fact:\n"
        "{addition}\n"
        "Dialogue Context:\n"
        "{source}\n"
        "Response:\n"
        "{target}\n"
        "\n"
        "### Your Evaluation ###\n"
        "Analysis:\n"
        "Rating:"
    ),
    judge_compare=(
        "### Instruction ###\n"
        "Your task is to evaluate and compare the quality of two responses for "
        "the next turn of a dialogue context between two people.\n"
        "The evaluation and comparison must be strictly focused on the aspect "
        "of **{aspect}**, and based on the given evaluation criterion.\n"
        "Provide your evaluation with a concise contrastive analysis, followed "
        "by the corresponding judgment from A > B, A < B, and A = B:\n"
        "- A > B means the quality of Response A on **{aspect}** is better "
        "than that of Response B.\n"
        "- A < B means the quality of Response A on **{aspect}** is worse than "
        "that of Response B.\n"
        "- A = B means the quality of Response A on **{aspect}** is similar to "
        "that of Response B.\n"
        "You must understand and follow these instructions carefully and "
        "adhere to the strict boundaries of the given evaluation criterion.\n"
        "\n"
        "### Evaluation Criterion ###\n"
        "{aspect_description}\n"
        "\n"
        "### Fact ###\n"
        "{addition}\n"
        "\n"
        "### Dialogue Context ###\n"
        "{source}\n"
        "\n"
        "### Response A ###\n"
        "{target_A}\n"
        "\n"
        "### Response B ###\n"
        "{target_B}\n"
        "\n"
        "### Your Evaluation ###\n"
        "Analysis:\n"
        "Judgment:"
    ),
)

_FAMILIES: dict[str, TaskTemplates] = {
    "summeval": _SUMMEVAL,
    "topical_chat": _TOPICAL_CHAT,
}

_TEMPLATE_IDS = (
    "reference",
    "inject_simultaneous",
    "inject_iterative",
    "judge_score",
    "judge_rating",
    "judge_compare",
)

_overrides: dict[tuple[str, str], str] = {}


def register_task_templates(task: str, templates: TaskTemplates) -> None:
    _FAMILIES[task] = templates


def load_template_overrides(directory: str | Path) -> None:
    """Pick up `<task>.<template_id>.txt` files as per-task overrides."""
    for path in sorted(Path(directory).glob("*.txt")):
        task, _, rest = path.stem.partition(".")
        if rest in _TEMPLATE_IDS:
            _overrides[(task, rest)] = path.read_text(encoding="utf-8")


def clear_template_overrides() -> None:
    _overrides.clear()


def get_template(task: str, template_id: str) -> str:
    if template_id not in _TEMPLATE_IDS:
        raise PromptError(f"unknown template {template_id!r}")
    override = _overrides.get((task, template_id))
    if override is not None:
        return override
    family = _FAMILIES.get(task)
    if family is None:
        raise PromptError(f"no templates registered for task {task!r}")
    return getattr(family, template_id)


def task_unit(task: str) -> str:
    family = _FAMILIES.get(task)
    return family.unit if family else "Output"


def _fill(template: str, **fields: str) -> str:
    try:
        return template.format(**fields)
    except KeyError as exc:
        raise PromptError(f"missing template field {exc}") from None


def _addition_or_fail(task: str, source: Source, template: str) -> str:
    if "{addition}" in template and source.addition is None:
        raise PromptError(f"source {source.id!r} lacks the required fact/addition")
    return source.addition or ""


# ---------------------------------------------------------------------------
# Rendering


def render_reference_prompt(task: str, source: Source) -> str:
    template = get_template(task, "reference")
    return _fill(
        template,
        source=source.text,
        addition=_addition_or_fail(task, source, template),
    )


def render_inject_simultaneous_prompt(
    task: str, source: Source, reference: str, error_descriptions: list[str]
) -> str:
    if not error_descriptions:
        raise PromptError("simultaneous injection needs at least one error spec")
    blocks = "".join(
        f"### Aspect for Error {i} ###\n{desc}\n\n"
        for i, desc in enumerate(error_descriptions, start=1)
    )
    template = get_template(task, "inject_simultaneous")
    return _fill(
        template,
        n=str(len(error_descriptions)),
        error_blocks=blocks,
        source=source.text,
        reference=reference,
        addition=_addition_or_fail(task, source, template),
    )


def render_inject_iterative_prompt(
    task: str, source: Source, original: str, error_description: str
) -> str:
    template = get_template(task, "inject_iterative")
    return _fill(
        template,
        error_type=error_description,
        source=source.text,
        original=original,
        addition=_addition_or_fail(task, source, template),
    )


_LIKERT_LABELS = {
    5: ["Poor", "Below Average", "Average", "Above Average", "Good"],
    3: ["Poor", "Average", "Good"],
    2: ["Poor", "Good"],
}

_LIKERT_PHRASES = {
    5: [
        "strongly disagree",
        "basically disagree",
        "neither agree nor disagree",
        "basically agree",
        "strongly agree",
    ],
    3: ["strongly disagree", "neither agree nor disagree", "strongly agree"],
    2: ["strongly disagree", "strongly agree"],
}


def likert_bullets(aspect: Aspect, unit: str) -> str:
    """One bullet per scale level, best rating first, worded per level count."""
    levels = aspect.scale.levels
    labels = _LIKERT_LABELS.get(levels)
    phrases = _LIKERT_PHRASES.get(levels)
    if labels is None:
        # Uncommon scale width: generic agreement wording.
        labels = [f"Level {i + 1}" for i in range(levels)]
        phrases = ["agree to degree %d" % (i + 1) for i in range(levels)]
    lines = []
    for idx in range(levels - 1, -1, -1):
        rating = aspect.scale.min_rating + idx
        lines.append(
            f"- {rating} ({labels[idx]}): You {phrases[idx]} that the "
            f"{unit.lower()} has good {aspect.name}.\n"
        )
    return "".join(lines)


def render_judge_prompt(
    template_id: str,
    task: str,
    aspect: Aspect,
    source: Source,
    target: str | None = None,
    target_a: str | None = None,
    target_b: str | None = None,
    score_min: int = 1,
    score_max: int = 10,
    template_text: str | None = None,
) -> str:
    """Render a judging prompt; template_id is judge_score/judge_rating/judge_compare."""
    template = template_text or get_template(task, template_id)
    fields = {
        "aspect": aspect.name,
        "aspect_description": aspect.description,
        "source": source.text,
        "addition": _addition_or_fail(task, source, template),
        "score_min": str(score_min),
        "score_max": str(score_max),
    }
    if template_id == "judge_compare":
        if target_a is None or target_b is None:
            raise PromptError("compare template needs target_A and target_B")
        fields["target_A"] = target_a
        fields["target_B"] = target_b
    else:
        if target is None:
            raise PromptError("scoring/rating template needs a target")
        fields["target"] = target
    if template_id == "judge_rating":
        fields["points"] = str(aspect.scale.levels)
        fields["likert_bullets"] = likert_bullets(aspect, task_unit(task))
    return _fill(template, **fields)


# ---------------------------------------------------------------------------
# Response parsing

_MODIFIED_RE = re.compile(
    r"###\s*Modified\s+\w+\s*###\s*\n(?P<body>.*?)(?=###|\Z)", re.DOTALL
)
_LOCATION_RE = re.compile(
    r"###\s*Locations?\s+of\s+(?:New\s+)?Errors?\s*###\s*\n(?P<body>.*?)(?=###|\Z)",
    re.DOTALL,
)


def parse_injection_output(raw: str, n_errors: int) -> tuple[str, list[str]]:
    """Extract the modified text and one location string per injected error."""
    modified = _MODIFIED_RE.search(raw)
    if modified is None:
        raise ParseError("response lacks the 'Modified' section")
    location = _LOCATION_RE.search(raw)
    if location is None:
        raise ParseError("response lacks the 'Location of Errors' section")
    text = modified.group("body").strip()
    if not text:
        raise ParseError("empty modified text")
    loc_lines = [
        line.strip().lstrip("-*0123456789. ").strip()
        for line in location.group("body").strip().splitlines()
        if line.strip()
    ]
    if len(loc_lines) == n_errors:
        locations = loc_lines
    else:
        whole = location.group("body").strip()
        locations = [whole] * n_errors
    return text, locations


_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?")
_VERDICT_RE = re.compile(r"A\s*([<>=])\s*B")


def _number_after_marker(raw: str, marker: str) -> float:
    idx = raw.rfind(marker)
    if idx < 0:
        raise ParseError(f"no {marker!r} marker in response")
    tail = raw[idx + len(marker):].replace("*", "")
    match = _NUMBER_RE.search(tail)
    if match is None:
        raise ParseError(f"no numeric token after {marker!r}")
    return float(match.group(0))  # "4/10" yields the leading 4


def parse_score(raw: str, score_min: float, score_max: float) -> float:
    value = _number_after_marker(raw, "Score:")
    if not score_min <= value <= score_max:
        raise ParseError(f"score {value} outside range {score_min}-{score_max}")
    return value


def parse_rating(raw: str, scale) -> int:
    value = _number_after_marker(raw, "Rating:")
    if value != int(value):
        raise ParseError(f"rating {value} is not an integer")
    rating = int(value)
    if not scale.contains(rating):
        raise ParseError(f"rating {rating} outside scale {scale}")
    return rating


def parse_verdict(raw: str) -> str:
    """Return 'A_better', 'B_better', or 'equal' from the final judgment."""
    idx = raw.rfind("Judgment:")
    if idx < 0:
        raise ParseError("no 'Judgment:' marker in response")
    matches = _VERDICT_RE.findall(raw[idx:])
    if not matches:
        raise ParseError("no A>B / A<B / A=B pattern after 'Judgment:'")
    symbol = matches[-1]
    return {">": "A_better", "<": "B_better", "=": "equal"}[symbol]
