"""Independent brute-force oracles, written directly from the defining
formulas and kept separate from the library implementations they check."""

import math
from itertools import combinations


def brute_force_cem(gold, pred, ratings, base=math.e):
    """Double-sum evaluation over the confusion grid, literal formula."""
    total = len(gold)
    counts = {r: sum(1 for g in gold if g == r) for r in ratings}
    cells = {}
    for g, p in zip(gold, pred):
        cells[(p, g)] = cells.get((p, g), 0) + 1

    def closeness(i, j):
        lo, hi = (i, j) if i <= j else (j, i)
        mass = sum(counts[k] for k in ratings if lo <= k <= hi)
        return -math.log((mass - counts[i] / 2) / total, base)

    numerator = sum(c * closeness(i, j) for (i, j), c in cells.items())
    denominator = sum(
        counts[i] * closeness(i, i) for i in ratings if counts[i] > 0
    )
    return numerator / denominator


def brute_force_pair_counts(sequences_scores):
    """sequences_scores: list of lists of (error_count, score) ascending by
    errors. Returns ({(low, high): (wins, total)}, adjacent_accuracy)."""
    cells = {}
    adjacent_wins = 0
    adjacent_total = 0
    for seq in sequences_scores:
        for (e1, s1), (e2, s2) in combinations(seq, 2):
            key = (e1, e2)
            wins, total = cells.get(key, (0, 0))
            cells[key] = (wins + (1 if s1 > s2 else 0), total + 1)
        for (e1, s1), (e2, s2) in zip(seq, seq[1:]):
            adjacent_total += 1
            if s1 > s2:
                adjacent_wins += 1
    return cells, adjacent_wins / adjacent_total


def brute_force_estimate(outcomes, ratings):
    """outcomes: {rating: [(f_succ, f_prec), ...]} per anchor. Literal
    evaluation of the three-term score followed by an explicit argmax with
    lower-rating tie-break."""
    scores = {}
    for r in ratings:
        own = outcomes[r]
        term = -abs(sum(s - p for s, p in own)) / len(own)
        if r - 1 in outcomes:
            below = outcomes[r - 1]
            term += sum(s for s, _ in below) / len(below)
        if r + 1 in outcomes:
            above = outcomes[r + 1]
            term += sum(p for _, p in above) / len(above)
        scores[r] = term
    best = max(scores.values())
    return min(r for r in ratings if scores[r] == best), scores
