"""One-to-one temporal matching of predictions to ground-truth events."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class MatchSet:
    pairs: tuple[tuple[int, int], ...]
    unmatched_predictions: tuple[int, ...]
    unmatched_references: tuple[int, ...]


def align_times(pred_times: Sequence[float], truth_times: Sequence[float], tolerance_s: float) -> MatchSet:
    """Maximum-cardinality matching with ``|t_pred - t_truth| <= tolerance_s``.

    Both inputs must be sorted. Each prediction, in time order, takes the
    earliest still-free reference inside its window. A reference that falls
    behind the current prediction's window is behind every later window too,
    so skipping it never costs a match; taking the earliest usable one
    leaves the most room for later predictions. That exchange argument
    gives maximum cardinality in linear time.
    """
    if tolerance_s <= 0:
        raise ValueError("tolerance_s must be positive")
    if any(b < a for a, b in zip(pred_times, pred_times[1:])) or any(
        b < a for a, b in zip(truth_times, truth_times[1:])
    ):
        raise ValueError("timestamps must be sorted")
    pairs = []
    unmatched_p = []
    unmatched_g = []
    j = 0
    for i, tp in enumerate(pred_times):
        while j < len(truth_times) and truth_times[j] < tp - tolerance_s:
            unmatched_g.append(j)
            j += 1
        if j < len(truth_times) and truth_times[j] <= tp + tolerance_s:
            pairs.append((i, j))
            j += 1
        else:
            unmatched_p.append(i)
    unmatched_g.extend(range(j, len(truth_times)))
    return MatchSet(tuple(pairs), tuple(unmatched_p), tuple(unmatched_g))


def align(pred, truth, tolerance_s: float) -> MatchSet:
    """Match a ``TimelinePrediction`` against one video's ``GroundTruthEvent`` list."""
    return align_times(
        [e.timestamp_s for e in pred.events], [g.timestamp_s for g in truth], tolerance_s
    )
