"""Built-in registry of evaluation aspects and their fine-grained sub-aspects.

Ships criteria for the summarization task ("summeval", 4 aspects, rated 1-5)
and the dialogue-response task ("topical_chat", 5 aspects, mixed 0-1 and 1-3
scales). A user-supplied registry file can override or extend the built-ins.
"""

from __future__ import annotations

import json
from pathlib import Path

from .benchmark import Aspect, EvaluationScale, SubAspect


class RegistryError(KeyError):
    """Unknown task or aspect."""


_SUMMEVAL_SCALE = (1, 5)

_BUILTIN: dict[str, dict[str, dict]] = {
    "summeval": {
        "coherence": {
            "abbreviation": "Coh",
            "scale": _SUMMEVAL_SCALE,
            "description": (
                "Measure the quality of all sentences of the summary collectively, "
                "to fit together and sound naturally. Consider the quality of the "
                "summary as a whole."
            ),
            "sub_aspects": [
                (
                    "Logical Flow",
                    "The sentences in the summary are organized in a logical "
                    "sequence, ensuring smooth and clear transitions between points "
                    "of the summary in the given order.",
                ),
                (
                    "Thematic Consistency",
                    "The sentences in the summary revolve around a unified central "
                    "theme or topic, without unrelated or abrupt information that "
                    "disrupts continuity.",
                ),
                (
                    "Referential Clarity",
                    "The references (e.g., pronouns and anaphora) used in the "
                    "summary should be clear and unambiguous, without incorrect "
                    "references or cases that the referent does not appear before "
                    "being referred to.",
                ),
                (
                    "Sentence Connectivity",
                    "The presence of explicit or implicit connections (e.g., "
                    "conjunctions, adverbials) between sentences in the summary "
                    "should be proper and unconfusing.",
                ),
            ],
        },
        "consistency": {
            "abbreviation": "Con",
            "scale": _SUMMEVAL_SCALE,
            "description": (
                "Measure whether the facts in the summary are consistent with the "
                "facts in the article. Consider whether the summary does reproduce "
                "all facts accurately and does not make up untrue information."
            ),
            "sub_aspects": [
                (
                    "Factual Accuracy",
                    "Each fact stated in the summary accurately reflects the "
                    "corresponding fact from the news article, without distorted or "
                    "fabricated information.",
                ),
                (
                    "Logical Consistency",
                    "All the inferred, cause-and-effect, or temporal relationships "
                    "in the summary should be logically consistent with the "
                    "corresponding descriptions in the news article.",
                ),
                (
                    "Exclusion of Subjectivity",
                    "The summary must not contain subjective statements that do not "
                    "appear in the news article, such as reviews or speculations "
                    "about some events or entities.",
                ),
                (
                    "Entity Consistency",
                    "All entities (e.g., persons, organizations, locations, dates, "
                    "events, terms) mentioned in the summary should be consistent "
                    "with the corresponding descriptions in the news article "
                    "accurately.",
                ),
            ],
        },
        "fluency": {
            "abbreviation": "Flu",
            "scale": _SUMMEVAL_SCALE,
            "description": (
                "Measure the quality of individual sentences of the summary, "
                "whether they are well-written and grammatically correct. Consider "
                "the quality of individual sentences."
            ),
            "sub_aspects": [
                (
                    "Grammatical Correctness",
                    "The summary adheres to standard grammar rules without errors "
                    "in subject-verb agreement, capital letters, tense consistency, "
                    "or word order.",
                ),
                (
                    "Lexical Appropriateness",
                    "The wording and phrases in the summary are appropriate, "
                    "avoiding situations where their meanings are correct but their "
                    "usages are too complex or uncommon, which makes the summary "
                    "difficult to read.",
                ),
                (
                    "Spelling and Punctuation Accuracy",
                    "The summary has correct punctuation (e.g., periods, commas, "
                    "colons) and spellings of words.",
                ),
                (
                    "No Redundancy",
                    "The summary must not contain any redundant expressions, "
                    "avoiding unnecessary repetition (e.g., retelling the words or "
                    "phrases immediately).",
                ),
            ],
        },
        "relevance": {
            "abbreviation": "Rel",
            "scale": _SUMMEVAL_SCALE,
            "description": (
                "Measure how well the summary captures the key points of the "
                "article. Consider whether all and only the important aspects are "
                "contained in the summary."
            ),
            "sub_aspects": [
                (
                    "Coverage of Important Information",
                    "The summary contains all the key points and information from "
                    "the news article, without omission (e.g., removing some "
                    "essential details).",
                ),
                (
                    "Exclusion of Unimportant Information",
                    "The summary avoids including unimportant points and "
                    "information from the news article (e.g., correct but not "
                    "critical or necessary details for the core message of the "
                    "article).",
                ),
                (
                    "Topic Alignment",
                    "The summary remains focus on the primary topic of the news "
                    "article without introducing addtitional unrelated information.",
                ),
                (
                    "Context Preservation",
                    "The key points included in the summary correctly maintain the "
                    "necessary context and background from the news article for "
                    "understanding their meanings.",
                ),
            ],
        },
    },
    "topical_chat": {
        "understandability": {
            "abbreviation": "Und",
            "scale": (0, 1),
            "description": (
                "Is the response understandable given the previous dialogue "
                "context? (Not if it's on topic, but for example, if it uses "
                "pronouns, they should make sense.)"
            ),
            "sub_aspects": [
                (
                    "Logical Flow",
                    "The response is organized in a logical sequence, ensuring "
                    "smooth and clear transitions between points of the response "
                    "itself.",
                ),
                (
                    "Referential Clarity",
                    "The references (e.g., pronouns and anaphora) used in the "
                    "response should be clear and unambiguous, without incorrect "
                    "references or cases in which the referent does not appear "
                    "before being referred to.",
                ),
                (
                    "Expression Clarity",
                    "The response is free from ambiguous language and complex "
                    "sentences, being expressed in a straightforward manner without "
                    "any potential confusion.",
                ),
            ],
        },
        "naturalness": {
            "abbreviation": "Nat",
            "scale": (1, 3),
            "description": (
                "Does the response seem to be something that a person would "
                "naturally say?"
            ),
            "sub_aspects": [
                (
                    "Grammatical Correctness",
                    "The response adheres to standard grammar rules without errors "
                    "in subject-verb agreement, capital letters, tense consistency, "
                    "word order, or spellings.",
                ),
                (
                    "Lexical Appropriateness",
                    "The wording and tone of the response are appropriate, "
                    "avoiding situations where the meanings of the words are "
                    "correct but their usages are uncommon, or the tone is not "
                    "suitable given the previous dialogue context.",
                ),
                (
                    "No Redundancy",
                    "The response must not contain any redundant expressions, "
                    "avoiding unnecessary repetition (e.g., retelling the words or "
                    "phrases immediately).",
                ),
            ],
        },
        "context_maintenance": {
            "abbreviation": "MCtx",
            "scale": (1, 3),
            "description": (
                "Does the response serve as a valid continuation of the dialogue "
                "context (conversation history)?"
            ),
            "sub_aspects": [
                (
                    "Logical Consistency",
                    "The response should logically follow the dialogue context to "
                    "maintain a smooth continuity and have no contradictions with "
                    "prior statements or facts in the dialogue context.",
                ),
                (
                    "Topic Relevance",
                    "The response should be basically on the same topic as the "
                    "dialogue context, without containing unrelated or abrupt "
                    "content or drastically changing the topic.",
                ),
            ],
        },
        "interestingness": {
            "abbreviation": "Int",
            "scale": (1, 3),
            "description": "Is the response dull or interesting?",
            "sub_aspects": [
                (
                    "Content Novelty",
                    "The response introduces fresh, unexpected, or unique points "
                    "and perspectives, which are different from those within the "
                    "dialogue context, without just repeating the content that the "
                    "dialogue has mentioned.",
                ),
                (
                    "Emotional Appeal",
                    "The response evokes an emotional reaction, such as humor, "
                    "empathy, or excitement, helping to build a deeper emotional "
                    "connection with the speaker to encourage further interaction.",
                ),
                (
                    "Information Adequacy",
                    "The response should contain substantive viewpoints or "
                    "information and should not be empty, perfunctory, or filled "
                    "with clichés.",
                ),
            ],
        },
        "knowledge_use": {
            "abbreviation": "UK",
            "scale": (0, 1),
            "description": (
                "Given the fact that the response is conditioned on, how well does "
                "the response use that fact?"
            ),
            "sub_aspects": [
                (
                    "Fact Utilization Accuracy",
                    "The response should accurately and flawlessly use the "
                    "information from the given fact, and it must not contain "
                    "content that conflicts with or distorts and fabricates the "
                    "given fact.",
                ),
                (
                    "Fact Utilization Appropriateness",
                    "The response should use the information from the given fact "
                    "in a reasonable and appropriate manner, ensuring logical "
                    "coherence given the dialogue context, without awkwardly "
                    "inserting or abruptly mentioning the given fact.",
                ),
            ],
        },
    },
}

_overrides: dict[str, dict[str, list[SubAspect]]] = {}


def load_registry_override(path: str | Path) -> None:
    """Install a user registry file: {task: {aspect: [{"name","description"}]}}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    for task, aspects in data.items():
        for aspect_name, subs in aspects.items():
            _overrides.setdefault(task, {})[aspect_name] = [
                SubAspect(s["name"], s["description"]) for s in subs
            ]


def clear_registry_overrides() -> None:
    _overrides.clear()


def known_tasks() -> list[str]:
    return sorted(set(_BUILTIN) | set(_overrides))


def known_aspects(task: str) -> list[str]:
    builtin = _BUILTIN.get(task, {})
    extra = _overrides.get(task, {})
    if not builtin and not extra:
        raise RegistryError(f"unknown task {task!r}")
    return sorted(set(builtin) | set(extra))


def get_subaspects(task: str, aspect_name: str) -> list[SubAspect]:
    """Return the registered sub-aspects verbatim, overrides winning."""
    override = _overrides.get(task, {}).get(aspect_name)
    if override is not None:
        return list(override)
    try:
        entry = _BUILTIN[task][aspect_name]
    except KeyError:
        raise RegistryError(f"unknown task/aspect {task!r}/{aspect_name!r}") from None
    return [SubAspect(name, desc) for name, desc in entry["sub_aspects"]]


def get_aspect(
    task: str, aspect_name: str, scale: EvaluationScale | None = None
) -> Aspect:
    """Build the full Aspect, optionally pinning a caller-supplied scale."""
    entry = _BUILTIN.get(task, {}).get(aspect_name)
    subs = tuple(get_subaspects(task, aspect_name))
    if entry is None:
        if scale is None:
            raise RegistryError(
                f"aspect {task!r}/{aspect_name!r} is override-only; a scale is required"
            )
        return Aspect(aspect_name, aspect_name, aspect_name, subs, scale)
    if scale is None:
        scale = EvaluationScale(*entry["scale"])
    return Aspect(aspect_name, entry["abbreviation"], entry["description"], subs, scale)
