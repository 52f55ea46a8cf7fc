"""The judging harness: multi-sample scoring, rating with Likert prompts, and
order-swapped pairwise comparison that cancels position bias.

Scripted clients stand in for the model so the demo runs offline and
deterministically; the same calls work against an HttpClient.
"""

import re

from judgemeta import (
    EvaluationScale,
    JudgeConfig,
    ScriptRule,
    ScriptedClient,
    Source,
    Target,
    judge_compare,
    judge_rating,
    judge_score,
)
from judgemeta.benchmark import Constructed
from judgemeta.registry import get_aspect

aspect = get_aspect("summeval", "coherence", scale=EvaluationScale(1, 3))
source = Source("s0", "A short article about a harbor renovation.")
good = Target("good", "s0", "A clean, well-ordered summary.", Constructed(0, ()))
bad = Target("bad", "s0", "A summary [err] with [err] problems.", Constructed(0, ()))

_TARGET = re.compile(r"Summary:\n(.*?)\n\n### Your Evaluation", re.DOTALL)
_PAIR = re.compile(
    r"### Summary A ###\n(.*?)\n\n### Summary B ###\n(.*?)\n\n### Your",
    re.DOTALL,
)


def errors_in(text):
    return text.count("[err]")


def scorer(req):
    # a mildly noisy scorer: base quality plus a per-sample wobble
    base = 9 - 3 * errors_in(_TARGET.search(req.prompt).group(1))
    wobble = (-1, 0, 1)[req.sample_index % 3]
    return f"Analysis: demo.\nScore: {max(1, base + wobble)}"


def rater(req):
    rating = max(1, 3 - errors_in(_TARGET.search(req.prompt).group(1)))
    return f"Analysis: demo.\nRating: {rating}"


def fair_comparer(req):
    a, b = _PAIR.search(req.prompt).groups()
    if errors_in(a) < errors_in(b):
        return "Analysis: demo.\nJudgment: A > B"
    if errors_in(a) > errors_in(b):
        return "Analysis: demo.\nJudgment: A < B"
    return "Analysis: demo.\nJudgment: A = B"


print("== Direct scoring (mean of valid samples) ==")
cfg = JudgeConfig(mode="score", n_samples=6, min_valid_samples=4)
client = ScriptedClient([ScriptRule(scorer, contains="Score:")])
for target in (good, bad):
    out = judge_score(target, source, aspect, "summeval", cfg, client)
    print(f"  {target.id}: score {out.aggregate:.2f} "
          f"({out.valid_count}/{len(out.samples)} valid samples)")

print("\n== Likert rating (modal vote) ==")
cfg = JudgeConfig(mode="rating", n_samples=5, min_valid_samples=3)
client = ScriptedClient([ScriptRule(rater, contains="Rating:")])
for target in (good, bad):
    out = judge_rating(target, source, aspect, "summeval", cfg, client)
    print(f"  {target.id}: rating {out.aggregate}")

print("\n== Pairwise comparison with order swapping ==")
cfg = JudgeConfig(mode="compare", n_samples=3, min_valid_samples=2)
fair = ScriptedClient([ScriptRule(fair_comparer, contains="Judgment:")])
out = judge_compare(good, bad, source, aspect, "summeval", cfg, fair)
print(f"  fair judge: {out.key} -> {out.aggregate}")

# A judge that always prefers whichever text it sees first. Running both
# orderings and normalizing the swapped verdicts cancels the bias exactly.
biased = ScriptedClient(
    [ScriptRule("Analysis: demo.\nJudgment: A > B", contains="Judgment:")]
)
out = judge_compare(good, bad, source, aspect, "summeval", cfg, biased)
print(f"  position-biased judge, debiased verdict: {out.aggregate}")
