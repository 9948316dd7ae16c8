"""Corpus evaluation: align per video, score matched captions, aggregate."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any, Sequence

from densecap.core import GroundTruthEvent, PipelineConfig, TimelinePrediction
from densecap.metrics.align import MatchSet, align
from densecap.metrics.cider import cider_scores
from densecap.metrics.meteor import VARIANT as METEOR_VARIANT, meteor_score
from densecap.text import normalize_caption


@dataclass(frozen=True)
class VideoScore:
    cider: float
    meteor: float
    matched: int
    total: int  # scored instances: matched + unmatched predictions + unmatched references
    num_predictions: int
    num_references: int
    cider_sum: float
    meteor_sum: float

    @property
    def prediction_coverage(self) -> float:
        return self.matched / self.num_predictions if self.num_predictions else 0.0

    @property
    def reference_coverage(self) -> float:
        return self.matched / self.num_references if self.num_references else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "cider": self.cider,
            "meteor": self.meteor,
            "matched": self.matched,
            "total": self.total,
            "num_predictions": self.num_predictions,
            "num_references": self.num_references,
            "prediction_coverage": self.prediction_coverage,
            "reference_coverage": self.reference_coverage,
        }


@dataclass(frozen=True)
class EvalReport:
    """Corpus scores are the instance-weighted mean of the per-video scores."""

    cider: float
    meteor: float
    per_video: dict[str, VideoScore]
    config_echo: dict[str, Any]
    matches: dict[str, MatchSet] = field(default_factory=dict, compare=False)
    ignored_videos: tuple[str, ...] = ()

    @property
    def instances(self) -> int:
        return sum(v.total for v in self.per_video.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "cider": self.cider,
            "meteor": self.meteor,
            "meteor_variant": METEOR_VARIANT,
            "cider_variant": "CIDEr-D (n=1..4, sigma=6, x10)",
            "instances": self.instances,
            "per_video": {k: v.to_dict() for k, v in sorted(self.per_video.items())},
            "ignored_videos": list(self.ignored_videos),
            "config": self.config_echo,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["video_id", "cider", "meteor", "matched", "total"])
        for vid, v in sorted(self.per_video.items()):
            w.writerow([vid, repr(v.cider), repr(v.meteor), v.matched, v.total])
        return buf.getvalue()


def evaluate(
    preds: Sequence[TimelinePrediction],
    truth: Sequence[GroundTruthEvent],
    cfg: PipelineConfig | None = None,
) -> EvalReport:
    """Score a prediction set against ground truth.

    Every ground-truth video is evaluated; a video absent from ``preds``
    counts as having no predictions. Unmatched predictions and unmatched
    references each add one zero-score instance. Prediction videos without
    ground truth are reported in ``ignored_videos`` and not scored.
    """
    cfg = cfg or PipelineConfig()
    truth_by_video: dict[str, list[GroundTruthEvent]] = {}
    for g in truth:
        truth_by_video.setdefault(g.video_id, []).append(g)
    pred_by_video = {p.video_id: p for p in preds}
    if len(pred_by_video) != len(preds):
        raise ValueError("duplicate video_id in predictions")
    if not set(pred_by_video) & set(truth_by_video):
        raise ValueError("predictions and ground truth share no video_id")

    # One CIDEr document per ground-truth event, built before scoring.
    videos = sorted(truth_by_video)
    cand_tokens, ref_tokens, owners = [], [], []
    meteor_vals = []
    matches = {}
    unmatched_pred = {}
    for vid in videos:
        refs = sorted(truth_by_video[vid], key=lambda g: g.timestamp_s)
        pred = pred_by_video.get(vid, TimelinePrediction(vid, ()))
        ms = align(pred, refs, cfg.matching_tolerance_s)
        matches[vid] = ms
        unmatched_pred[vid] = len(ms.unmatched_predictions)
        paired = dict((g, p) for p, g in ms.pairs)
        for gi, g in enumerate(refs):
            r = normalize_caption(g.reference)
            c = normalize_caption(pred.events[paired[gi]].caption) if gi in paired else []
            cand_tokens.append(c)
            ref_tokens.append([r])
            owners.append(vid)
            meteor_vals.append(meteor_score(c, [r]) if gi in paired else 0.0)

    cider_vals = cider_scores(cand_tokens, ref_tokens)

    sums = {vid: [0.0, 0.0] for vid in videos}
    for vid, cv, mv in zip(owners, cider_vals, meteor_vals):
        sums[vid][0] += cv
        sums[vid][1] += mv
    per_video = {}
    for vid in videos:
        n_ref = len(truth_by_video[vid])
        ms = matches[vid]
        total = n_ref + unmatched_pred[vid]
        cs, mt = sums[vid]
        per_video[vid] = VideoScore(
            cider=cs / total,
            meteor=mt / total,
            matched=len(ms.pairs),
            total=total,
            num_predictions=len(ms.pairs) + unmatched_pred[vid],
            num_references=n_ref,
            cider_sum=cs,
            meteor_sum=mt,
        )
    n = sum(v.total for v in per_video.values())
    return EvalReport(
        cider=sum(v.cider_sum for v in per_video.values()) / n,
        meteor=sum(v.meteor_sum for v in per_video.values()) / n,
        per_video=per_video,
        config_echo=cfg.to_dict(),
        matches=matches,
        ignored_videos=tuple(sorted(set(pred_by_video) - set(truth_by_video))),
    )
