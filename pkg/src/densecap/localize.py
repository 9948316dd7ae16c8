"""Single-model timeline cleanup: window anchors, central de-duplication,
confidence and background-score filters."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

from densecap.core import CaptionCandidate, DedupMode, PipelineConfig, Tiebreak
from densecap.errors import PreconditionError, ValidationError
from densecap.text import normalize_caption

# Seconds of context on each side of an annotated event; one frame per second.
HALF_WINDOW_S = 16.0
DEFAULT_WINDOW_S = 2 * HALF_WINDOW_S


@dataclass(frozen=True)
class WindowAnchor:
    video_id: str
    center_s: float
    size_s: float

    def __post_init__(self) -> None:
        if self.center_s < 0 or self.size_s <= 0:
            raise ValidationError(f"bad anchor center={self.center_s} size={self.size_s}")

    @property
    def start_s(self) -> float:
        return self.center_s - self.size_s / 2

    @property
    def end_s(self) -> float:
        return self.center_s + self.size_s / 2


def generate_anchors(video_duration_s: float, cfg: PipelineConfig, video_id: str = "") -> list[WindowAnchor]:
    """Sliding-window anchors for every configured window size.

    Centers start at ``w/2`` and advance by the stride while the window still
    fits inside the video. Output is ordered by (size, center).
    """
    if not video_duration_s > 0:
        raise ValueError(f"video duration must be positive, got {video_duration_s!r}")
    stride = cfg.window_stride_s
    anchors = []
    for size in sorted(set(cfg.window_sizes_s)):
        half = size / 2
        # integer stepping so centers don't accumulate float drift
        n = math.floor((video_duration_s - size) / stride + 1e-9) + 1 if size <= video_duration_s else 0
        anchors.extend(WindowAnchor(video_id, half + k * stride, size) for k in range(n))
    return anchors


# ---------------------------------------------------------------------------
# Central de-duplication
# ---------------------------------------------------------------------------


def caption_key(mode: DedupMode | str) -> Callable[[str], Hashable]:
    if DedupMode(mode) is DedupMode.EXACT:
        return lambda s: s
    return lambda s: tuple(normalize_caption(s))


def representative_index(run_length: int, tiebreak: Tiebreak | str = Tiebreak.EARLIER) -> int:
    """Index of the middle element of a run; even runs use the tie-break side."""
    if run_length < 1:
        raise ValueError("run must be non-empty")
    if Tiebreak(tiebreak) is Tiebreak.EARLIER:
        return (run_length - 1) // 2
    return run_length // 2


@dataclass(frozen=True)
class DuplicateRun:
    candidates: tuple[CaptionCandidate, ...]
    representative_index: int

    @property
    def representative(self) -> CaptionCandidate:
        return self.candidates[self.representative_index]


def _check_stream(stream: Sequence[CaptionCandidate]) -> None:
    if not stream:
        return
    key = (stream[0].video_id, stream[0].model_id)
    for a, b in zip(stream, stream[1:]):
        if (b.video_id, b.model_id) != key:
            raise PreconditionError(f"stream mixes {key} with {(b.video_id, b.model_id)}")
        if b.timestamp_s < a.timestamp_s:
            raise PreconditionError(f"stream {key} is not sorted by timestamp at {b.timestamp_s}s")


def find_runs(stream: Sequence[CaptionCandidate], cfg: PipelineConfig) -> list[DuplicateRun]:
    """Maximal contiguous runs of caption-equivalent candidates."""
    _check_stream(stream)
    key = caption_key(cfg.dedup_mode)
    runs: list[list[CaptionCandidate]] = []
    prev = None
    for c in stream:
        k = key(c.caption)
        if runs and k == prev:
            runs[-1].append(c)
        else:
            runs.append([c])
        prev = k
    return [
        DuplicateRun(tuple(r), representative_index(len(r), cfg.even_run_tiebreak)) for r in runs
    ]


def dedupe_central(stream: Sequence[CaptionCandidate], cfg: PipelineConfig) -> list[CaptionCandidate]:
    """Collapse each run of repeated captions to its middle candidate.

    The representative keeps its own timestamp and confidence.
    """
    return [run.representative for run in find_runs(stream, cfg)]


# ---------------------------------------------------------------------------
# Filters
# ---------------------------------------------------------------------------


def filter_confidence(stream: Sequence[CaptionCandidate], threshold: float) -> list[CaptionCandidate]:
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold!r}")
    return [c for c in stream if c.confidence >= threshold]


def fuse_background(scores: Sequence[float], weights: Sequence[float]) -> float:
    """Weighted mean of the filter-model scores."""
    if not scores or len(scores) != len(weights):
        raise ValueError(f"need equal-length non-empty lists, got {len(scores)} scores, {len(weights)} weights")
    if any(w <= 0 for w in weights):
        raise ValueError("weights must be positive")
    total = math.fsum(weights)
    fused = math.fsum(w * s for w, s in zip(weights, scores)) / total
    # rounding can push a hair outside the hull of the inputs
    return min(max(fused, min(scores)), max(scores))


def filter_background(stream: Sequence[CaptionCandidate], cfg: PipelineConfig) -> list[CaptionCandidate]:
    """Keep candidates whose fused background score reaches the threshold.

    A zero threshold keeps everything and does not require scores.
    """
    if cfg.background_threshold == 0.0:
        return list(stream)
    n = len(cfg.background_weights)
    kept = []
    for c in stream:
        if len(c.background_scores) != n:
            raise ValidationError(
                f"candidate {c.describe()} has {len(c.background_scores)} background scores, expected {n}"
            )
        if fuse_background(c.background_scores, cfg.background_weights) >= cfg.background_threshold:
            kept.append(c)
    return kept


def clean_stream(stream: Sequence[CaptionCandidate], cfg: PipelineConfig) -> dict[str, list[CaptionCandidate]]:
    """Run the three stages in order and return every intermediate result."""
    deduped = dedupe_central(stream, cfg)
    conf = filter_confidence(deduped, cfg.confidence_threshold)
    bg = filter_background(conf, cfg)
    return {"after_dedup": deduped, "after_confidence_filter": conf, "after_background_filter": bg}
