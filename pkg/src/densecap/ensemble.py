"""Multi-model confidence ensembling and grid search over model weights."""
from __future__ import annotations

import enum
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

from densecap.core import CaptionCandidate, GroundTruthEvent, PipelineConfig, TimelineEvent, TimelinePrediction
from densecap.errors import ConfigError, PreconditionError, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnsembleWeights:
    """Per-model multipliers applied to confidences before top-1 selection."""

    weights: Mapping[str, float]

    def __post_init__(self) -> None:
        w = dict(sorted((str(k), float(v)) for k, v in self.weights.items()))
        if not w:
            raise ConfigError("ensemble weights need at least one model")
        bad = [k for k, v in w.items() if not v > 0]
        if bad:
            raise ConfigError(f"weights must be positive: {bad}")
        object.__setattr__(self, "weights", w)

    def __getitem__(self, model_id: str) -> float:
        try:
            return self.weights[model_id]
        except KeyError:
            raise ConfigError(f"no ensemble weight for model {model_id!r}") from None

    @classmethod
    def anchored(cls, models: Sequence[str], weights: Mapping[str, float]) -> "EnsembleWeights":
        """Weights for ``models``; any model not listed gets the implicit 1.0."""
        return cls({m: weights.get(m, 1.0) for m in models} | dict(weights))

    def scaled(self, factor: float) -> "EnsembleWeights":
        return EnsembleWeights({k: v * factor for k, v in self.weights.items()})


class GroupEntry(NamedTuple):
    model_id: str
    caption: str
    confidence: float


@dataclass(frozen=True)
class TimestampGroup:
    video_id: str
    timestamp_s: float
    entries: tuple[GroupEntry, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValidationError("a timestamp group needs at least one entry")
        models = [e.model_id for e in self.entries]
        if len(set(models)) != len(models):
            raise ValidationError(f"duplicate model in group at {self.timestamp_s}s: {models}")

    @property
    def captions(self) -> list[str]:
        return [e.caption for e in self.entries]


class Selection(NamedTuple):
    model_id: str
    caption: str
    weighted_score: float


def group_by_timestamp(
    streams: Sequence[Sequence[CaptionCandidate]], tolerance_s: float = 0.0
) -> list[TimestampGroup]:
    """Greedy left-to-right clustering of candidates across model streams.

    A group is anchored at its earliest member; later candidates within
    ``tolerance_s`` of the anchor join it. When one model lands twice in a
    group the higher-confidence candidate wins (earlier on ties) and a
    warning is logged.
    """
    if tolerance_s < 0:
        raise ValueError("tolerance_s must be non-negative")
    for s in streams:
        if any(b.timestamp_s < a.timestamp_s for a, b in zip(s, s[1:])):
            raise PreconditionError("every stream must be sorted by timestamp")
    merged = sorted(
        (c for s in streams for c in s), key=lambda c: (c.timestamp_s, c.model_id)
    )
    video_ids = {c.video_id for c in merged}
    if len(video_ids) > 1:
        raise PreconditionError(f"streams span several videos: {sorted(video_ids)}")

    groups: list[TimestampGroup] = []
    anchor = None
    members: dict[str, CaptionCandidate] = {}

    def close() -> None:
        entries = tuple(
            GroupEntry(m, c.caption, c.confidence) for m, c in sorted(members.items())
        )
        groups.append(TimestampGroup(next(iter(members.values())).video_id, anchor, entries))

    for c in merged:
        if anchor is not None and c.timestamp_s - anchor > tolerance_s:
            close()
            anchor, members = None, {}
        if anchor is None:
            anchor = c.timestamp_s
        prev = members.get(c.model_id)
        if prev is not None:
            logger.warning(
                "model %s has two candidates in the group at %ss (%ss, %ss); keeping the more confident",
                c.model_id, anchor, prev.timestamp_s, c.timestamp_s,
            )
            if c.confidence <= prev.confidence:
                continue
        members[c.model_id] = c
    if members:
        close()
    return groups


def select_top1(group: TimestampGroup, w: EnsembleWeights) -> Selection:
    """Entry with the highest weighted confidence; ties go to the smallest model_id."""
    best = None
    for e in sorted(group.entries, key=lambda e: e.model_id):
        score = e.confidence * w[e.model_id]
        if best is None or score > best.weighted_score:
            best = Selection(e.model_id, e.caption, score)
    return best


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def ensemble_timelines(
    streams: Sequence[Sequence[CaptionCandidate]],
    w: EnsembleWeights,
    cfg: PipelineConfig,
    video_id: str | None = None,
) -> TimelinePrediction:
    """One event per timestamp group carrying the top-1 caption."""
    groups = group_by_timestamp(streams, cfg.grouping_tolerance_s)
    if video_id is None:
        video_id = groups[0].video_id if groups else ""
    events = []
    for g in groups:
        sel = select_top1(g, w)
        events.append(TimelineEvent(g.timestamp_s, sel.caption, _clamp01(sel.weighted_score)))
    return TimelinePrediction(video_id, tuple(events))


def ensemble_corpus(
    streams_by_video: Mapping[str, Sequence[Sequence[CaptionCandidate]]],
    w: EnsembleWeights,
    cfg: PipelineConfig,
) -> list[TimelinePrediction]:
    return [ensemble_timelines(streams_by_video[v], w, cfg, video_id=v) for v in sorted(streams_by_video)]


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------


class Objective(str, enum.Enum):
    METEOR = "meteor"
    CIDER = "cider"


class TraceRow(NamedTuple):
    weights: EnsembleWeights
    score: float


@dataclass(frozen=True)
class GridSearchResult:
    best_weights: EnsembleWeights
    best_score: float
    objective: Objective
    trace: tuple[TraceRow, ...]

    def to_dict(self) -> dict:
        return {
            "objective": self.objective.value,
            "best_weights": dict(self.best_weights.weights),
            "best_score": self.best_score,
            "trace": [{"weights": dict(r.weights.weights), "score": r.score} for r in self.trace],
        }


def grid_points(grid: Mapping[str, Sequence[float]]) -> list[EnsembleWeights]:
    """Cartesian product in lexicographic order: models sorted by id, values in given order."""
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("grid must list at least one weight per model")
    models = sorted(grid)
    return [
        EnsembleWeights(dict(zip(models, combo)))
        for combo in itertools.product(*(grid[m] for m in models))
    ]


def _score_point(args) -> float:
    from densecap.metrics import evaluate

    streams_by_video, truth, w, objective, cfg = args
    preds = ensemble_corpus(streams_by_video, w, cfg)
    report = evaluate(preds, truth, cfg)
    return report.cider if objective is Objective.CIDER else report.meteor


def grid_search_weights(
    streams_by_video: Mapping[str, Sequence[Sequence[CaptionCandidate]]],
    ground_truth: Sequence[GroundTruthEvent],
    grid: Mapping[str, Sequence[float]],
    objective: Objective | str = Objective.METEOR,
    cfg: PipelineConfig | None = None,
    max_workers: int = 1,
) -> GridSearchResult:
    """Score every weight combination on a dev set and keep the best.

    Ties keep the first combination in grid order. ``max_workers > 1``
    evaluates points in worker processes; the trace order is unchanged.
    """
    cfg = cfg or PipelineConfig()
    objective = Objective(objective)
    points = grid_points(grid)
    jobs = [(streams_by_video, ground_truth, w, objective, cfg) for w in points]
    if max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            scores = list(pool.map(_score_point, jobs))
    else:
        scores = [_score_point(j) for j in jobs]

    trace = tuple(TraceRow(w, s) for w, s in zip(points, scores))
    best = trace[0]
    for row in trace[1:]:
        if row.score > best.score:
            best = row
    return GridSearchResult(best.weights, best.score, objective, trace)
