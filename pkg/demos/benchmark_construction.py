"""Automatic benchmark construction, driven by a fully scripted model.

The scripted client plays the generator (reference texts), the injector
(controlled error insertion marked with "[err]"), and the comparator used to
verify each candidate's rating against the anchor sets. Swap the scripted
client for an HttpClient to run the same pipeline against a live model.
"""

import re

from judgemeta import (
    AnchorCandidate,
    AnchorSet,
    ConstructionConfig,
    EvaluationScale,
    ScriptRule,
    ScriptedClient,
    Source,
    Target,
    assemble_global,
    assemble_local,
    save_benchmark,
)
from judgemeta.benchmark import HumanAnnotated
from judgemeta.registry import get_aspect

scale = EvaluationScale(1, 3)
aspect = get_aspect("summeval", "coherence", scale=scale)
sources = [
    Source("s0", "A storm moved through the valley overnight, downing lines."),
    Source("s1", "The council approved the new library budget on Tuesday."),
]

# --- scripted model -------------------------------------------------------

_ARTICLE = re.compile(r"Article:\n(.*?)\nSummary:", re.DOTALL)
_ORIGINAL = re.compile(r"### Original Summary ###\n(.*?)\n\n### Modified", re.DOTALL)
_N_ERRORS = re.compile(r"\*\*(\d+) non-overlapping")


def generate(req):
    topic = _ARTICLE.search(req.prompt).group(1).split()[1]
    return f"A summary about the {topic}, variant {req.sample_index}." + (
        " More detail." * req.sample_index
    )


def inject(req):
    original = _ORIGINAL.search(req.prompt).group(1)
    n_match = _N_ERRORS.search(req.prompt)
    n = int(n_match.group(1)) if n_match else 1
    body = original + " [err]" * n
    locations = "\n".join(f"{i + 1}. sentence {i + 1}" for i in range(n))
    return f"### Modified Summary ###\n{body}\n\n### Location of Errors ###\n{locations}\n"


client = ScriptedClient([
    ScriptRule(inject, contains="non-overlapping errors"),
    ScriptRule(inject, contains="a new error"),
    ScriptRule(generate, contains="Write a summary"),
])


def comparator(candidate, anchor, direction):
    """Rating verification: fewer injected errors means better quality."""
    delta = anchor.text.count("[err]") - candidate.text.count("[err]")
    if direction == "succ":
        return 1 if delta > 0 else 0
    return 1 if delta < 0 else 0


anchor_sets = {
    r: AnchorSet(r, [AnchorCandidate(
        Target(f"anchor{r}", "s0", ("reference anchor" + " [err]" * (3 - r)),
               HumanAnnotated((r, r, r))),
        (r, r),
    )])
    for r in scale.ratings()
}

# --- build both benchmarks ------------------------------------------------

cfg = ConstructionConfig(
    task="summeval", aspect="coherence",
    n_reference_samples=4, targets_per_rating=2, sequence_length=4, seed=0,
)

global_bench, coverage = assemble_global(
    sources, aspect, cfg, anchor_sets, comparator, client
)
print(f"global benchmark: {len(global_bench.sources)} sources, "
      f"partial={coverage.partial}")
for sid in sorted(global_bench.entries):
    for rating in sorted(global_bench.entries[sid], reverse=True):
        for t in global_bench.entries[sid][rating]:
            print(f"  {t.id}: rating {rating}, "
                  f"{t.provenance.error_count} injected errors")

local_bench = assemble_local(sources, aspect, cfg, client)
print(f"\nlocal benchmark: sequences of length {local_bench.sequence_length}")
for sid in sorted(local_bench.sequences):
    for t in local_bench.sequences[sid]:
        subs = [e.sub_aspect for e in t.provenance.errors]
        print(f"  {t.id}: {t.provenance.error_count} errors {subs}")

save_benchmark(global_bench, "/tmp/demo_global.jsonl")
save_benchmark(local_bench, "/tmp/demo_local.jsonl")
print("\nwrote /tmp/demo_global.jsonl and /tmp/demo_local.jsonl")
