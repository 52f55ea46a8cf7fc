"""Ranking evaluators across benchmarks and emitting report artifacts.

Per-benchmark averages are unweighted means over aspects; the overall score
is the unweighted mean of benchmark averages. Artifacts serialize to CSV for
eyeballing and to JSON for exact round-trips.
"""

import tempfile
from pathlib import Path

from judgemeta import EvaluationScale, confusion, emit, rank_evaluators
from judgemeta.report import read_structured

results = {
    "strong-judge": {
        "summ-global": {"coherence": 0.84, "consistency": 0.79,
                        "fluency": 0.88, "relevance": 0.81},
        "summ-local": {"coherence": 0.91, "consistency": 0.91,
                       "fluency": 0.91, "relevance": 0.86},
    },
    "small-judge": {
        "summ-global": {"coherence": 0.61, "consistency": 0.55,
                        "fluency": 0.68, "relevance": 0.59},
        "summ-local": {"coherence": 0.72, "consistency": 0.66,
                       "fluency": 0.70, "relevance": 0.64},
    },
    "overlap-metric": {
        "summ-global": {"coherence": 0.38, "consistency": 0.41,
                        "fluency": 0.35, "relevance": 0.47},
        "summ-local": {"coherence": 0.52, "consistency": 0.57,
                       "fluency": 0.49, "relevance": 0.58},
    },
}

reports = rank_evaluators(results)
print("== Leaderboard ==")
for r in reports:
    averages = ", ".join(f"{b}={v:.3f}" for b, v in sorted(r.benchmark_averages.items()))
    print(f"  #{r.rank} {r.evaluator}: overall {r.overall:.4f} ({averages})")

workdir = Path(tempfile.mkdtemp(prefix="judgemeta_demo_"))
emit(reports, "tabular", workdir / "leaderboard.csv")
emit(reports, "structured", workdir / "leaderboard.json")
print(f"\nwrote {workdir}/leaderboard.csv and .json")
print((workdir / "leaderboard.csv").read_text(), end="")

# Confusion matrices round-trip through the structured format exactly.
matrix = confusion([1, 2, 3, 3, 2], [1, 2, 3, 2, 2], EvaluationScale(1, 3))
emit(matrix, "structured", workdir / "confusion.json")
restored = read_structured(workdir / "confusion.json")
assert (restored.counts == matrix.counts).all()
print("\nconfusion matrix round-trip: exact")
