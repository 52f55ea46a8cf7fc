"""Anchor-based rating estimation.

A handful of targets per rating, on which human annotators and a strong judge
agree, act as reference points. A new target is compared pairwise against the
anchors of each rating and its neighbors; the rating whose anchors it
balances against (while beating the rating below and losing to the rating
above) wins the argmax.
"""

from judgemeta import (
    AnchorCandidate,
    AnchorSelectionConfig,
    AnchorSet,
    EvaluationScale,
    Target,
    anchor_consistency_score,
    estimate_rating,
    select_anchors,
)
from judgemeta.anchoring import calibrate_error_counts
from judgemeta.benchmark import HumanAnnotated

scale = EvaluationScale(1, 3)

print("== Consistency-based anchor selection ==")
candidates = []
for rating in scale.ratings():
    # two clean candidates and one where the annotators wavered
    for i, human in enumerate([(rating,) * 3, (rating,) * 3,
                               (rating, rating, min(rating + 1, 3))]):
        target = Target(f"c{rating}.{i}", "s0", f"text {rating}.{i}",
                        HumanAnnotated(human))
        candidates.append(AnchorCandidate(target, (rating,) * 5))
        score = anchor_consistency_score(human, (rating,) * 5, rating)
        print(f"  {target.id}: humans={human} -> consistency score {score:.3f}")

anchor_sets = select_anchors(
    candidates, AnchorSelectionConfig(per_rating_count=2), scale
)
for rating in scale.ratings():
    ids = [a.id for a in anchor_sets[rating].anchors]
    print(f"  rating {rating} anchors: {ids}")

print("\n== Estimating a new target's rating ==")
# Latent quality on a 0-2 error scale: anchors for rating r carry 3-r errors.
anchor_errors = {f"c{r}.{i}": 3 - r for r in scale.ratings() for i in range(3)}


def comparator(candidate, anchor, direction):
    mine, theirs = 1, anchor_errors[anchor.id]  # candidate has 1 latent error
    if direction == "succ":
        return 1 if mine < theirs else 0
    return 1 if mine > theirs else 0


from judgemeta.benchmark import Constructed

candidate = Target("new", "s0", "a mid-quality target", Constructed(0, ()))
estimate = estimate_rating(candidate, anchor_sets, comparator, scale)
for rating, score in sorted(estimate.scores.items()):
    marker = " <-- argmax" if rating == estimate.rating else ""
    print(f"  score({rating}) = {score:+.2f}{marker}")
print(f"  estimated rating: {estimate.rating} "
      f"({estimate.comparisons} cached comparisons)")

print("\n== Calibrating error counts from a pilot run ==")
pilot = [(1, 2), (1, 2), (2, 2), (2, 1), (3, 1), (3, 1), (4, 1)]
calibration = calibrate_error_counts(pilot)
for rating, count in sorted(calibration.items(), reverse=True):
    print(f"  rating {rating}: inject {count} error(s)")
