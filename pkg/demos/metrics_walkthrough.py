"""Walkthrough of the two meta-evaluation perspectives.

Global: coarse ratings scored as ordinal classification with the
closeness-weighted measure. Local: error-ordered sequences scored by strict
pairwise ranking accuracy. Runs entirely offline.
"""

from judgemeta import (
    EvaluationScale,
    adjacent_pairwise_accuracy,
    cem,
    confusion,
    pair_accuracy_grid,
    pearson,
    spearman,
)
from judgemeta.benchmark import Constructed, InjectedError, Target

scale = EvaluationScale(1, 5)

print("== Closeness-weighted ordinal agreement ==")
gold = [5, 4, 4, 3, 2, 1, 5, 3]
near = [5, 4, 3, 3, 2, 2, 5, 3]  # off-by-one mistakes
far = [1, 1, 1, 5, 5, 5, 1, 5]  # systematic inversions
print(f"  perfect prediction: {cem(gold, gold, scale):.4f}")
print(f"  near misses:        {cem(gold, near, scale):.4f}")
print(f"  inversions:         {cem(gold, far, scale):.4f}")

matrix = confusion(gold, near, scale)
print(f"  confusion total={matrix.total}, gold marginals={matrix.gold_marginals()}")

print()
print("== Local perspective: pairwise ranking accuracy ==")
# Two sources, each with a 4-long sequence: index k carries k injected errors.
sequences = {}
for sid in ("s0", "s1"):
    seq = []
    for k in range(4):
        errors = tuple(InjectedError("Logical Flow", f"spot {i}") for i in range(k))
        seq.append(Target(f"{sid}:e{k}", sid, f"text {sid} {k}", Constructed(k, errors)))
    sequences[sid] = seq

# An imperfect evaluator: mostly follows quality, but flips one adjacent pair.
scores = {f"s0:e{k}": 10.0 - 2 * k for k in range(4)}
scores.update({f"s1:e{k}": 10.0 - 2 * k for k in range(4)})
scores["s1:e1"], scores["s1:e2"] = scores["s1:e2"], scores["s1:e1"]

print(f"  adjacent accuracy: {adjacent_pairwise_accuracy(sequences, scores):.4f}")
grid = pair_accuracy_grid(sequences, scores)
for (low, high), (wins, total) in sorted(grid.cells.items()):
    print(f"  pair ({low} vs {high} errors): {wins}/{total} correct")
print(f"  accuracy by error-count gap: "
      + ", ".join(f"I({k})={grid.offset_accuracy(k):.2f}" for k in (1, 2, 3)))

print()
print("== Correlation baselines, for comparison ==")
human = [2.0, 3.5, 3.0, 4.5, 5.0]
metric = [0.3, 0.5, 0.45, 0.8, 0.9]
print(f"  pearson : {pearson(human, metric):.4f}")
print(f"  spearman: {spearman(human, metric):.4f}")
