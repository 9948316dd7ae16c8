"""Domain value objects shared by every pipeline stage.

All types are frozen; validation happens at construction so that any object
that exists is valid.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple, Sequence

from densecap.errors import ConfigError, ValidationError


def _is_unit(x: float) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and 0.0 <= x <= 1.0


def _is_finite_number(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


@dataclass(frozen=True)
class CaptionCandidate:
    """One model's caption at one timestamp."""

    video_id: str
    model_id: str
    timestamp_s: float
    caption: str
    confidence: float
    background_scores: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.video_id, str) or not isinstance(self.model_id, str):
            raise ValidationError("video_id and model_id must be strings")
        if not _is_finite_number(self.timestamp_s) or self.timestamp_s < 0:
            raise ValidationError(f"timestamp_s must be >= 0, got {self.timestamp_s!r}")
        if not isinstance(self.caption, str) or not self.caption.strip():
            raise ValidationError("caption must be non-empty")
        if not _is_unit(self.confidence):
            raise ValidationError(f"confidence must be in [0, 1], got {self.confidence!r}")
        scores = tuple(self.background_scores)
        for s in scores:
            if not _is_unit(s):
                raise ValidationError(f"background score must be in [0, 1], got {s!r}")
        object.__setattr__(self, "background_scores", scores)

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "video_id": self.video_id,
            "model_id": self.model_id,
            "timestamp_s": self.timestamp_s,
            "caption": self.caption,
            "confidence": self.confidence,
        }
        if self.background_scores:
            rec["background_scores"] = list(self.background_scores)
        return rec

    def describe(self) -> str:
        return f"{self.video_id}/{self.model_id}@{self.timestamp_s}s"


class TimelineEvent(NamedTuple):
    timestamp_s: float
    caption: str
    confidence: float


@dataclass(frozen=True)
class TimelinePrediction:
    video_id: str
    events: tuple[TimelineEvent, ...] = ()

    def __post_init__(self) -> None:
        events = tuple(TimelineEvent(*e) for e in self.events)
        prev = None
        for ev in events:
            if not _is_finite_number(ev.timestamp_s) or ev.timestamp_s < 0:
                raise ValidationError(f"{self.video_id}: bad timestamp {ev.timestamp_s!r}")
            if prev is not None and ev.timestamp_s <= prev:
                raise ValidationError(
                    f"{self.video_id}: timestamps must be strictly increasing "
                    f"({prev} then {ev.timestamp_s})"
                )
            if not _is_unit(ev.confidence):
                raise ValidationError(f"{self.video_id}: confidence {ev.confidence!r} not in [0, 1]")
            prev = ev.timestamp_s
        object.__setattr__(self, "events", events)


@dataclass(frozen=True)
class GroundTruthEvent:
    video_id: str
    timestamp_s: float
    reference: str

    def __post_init__(self) -> None:
        if not _is_finite_number(self.timestamp_s) or self.timestamp_s < 0:
            raise ValidationError(f"timestamp_s must be >= 0, got {self.timestamp_s!r}")
        if not isinstance(self.reference, str) or not self.reference.strip():
            raise ValidationError("reference must be non-empty")


class DedupMode(str, enum.Enum):
    EXACT = "exact"
    NORMALIZED = "normalized"


class Tiebreak(str, enum.Enum):
    EARLIER = "earlier"
    LATER = "later"


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the post-model pipeline.

    Defaults: a single 32 s window (16 s either side of an event), the 0.875
    background threshold, equal weights over three filter-model scores.
    """

    window_sizes_s: tuple[float, ...] = (32.0,)
    window_stride_s: float = 1.0
    dedup_mode: DedupMode = DedupMode.NORMALIZED
    confidence_threshold: float = 0.0
    background_threshold: float = 0.875
    background_weights: tuple[float, ...] = (1.0, 1.0, 1.0)
    ensemble_weights: Mapping[str, float] = field(default_factory=dict)
    even_run_tiebreak: Tiebreak = Tiebreak.EARLIER
    matching_tolerance_s: float = 30.0
    grouping_tolerance_s: float = 0.0

    def __post_init__(self) -> None:
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        try:
            set_("dedup_mode", DedupMode(self.dedup_mode))
            set_("even_run_tiebreak", Tiebreak(self.even_run_tiebreak))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        set_("window_sizes_s", tuple(float(w) for w in self.window_sizes_s))
        set_("background_weights", tuple(float(w) for w in self.background_weights))
        set_("ensemble_weights", dict(sorted((str(k), float(v)) for k, v in self.ensemble_weights.items())))

        if not self.window_sizes_s or any(w <= 0 for w in self.window_sizes_s):
            raise ConfigError("window_sizes_s must be non-empty and positive")
        if self.window_stride_s <= 0:
            raise ConfigError("window_stride_s must be positive")
        for name in ("confidence_threshold", "background_threshold"):
            if not _is_unit(getattr(self, name)):
                raise ConfigError(f"{name} must be in [0, 1]")
        if not self.background_weights or any(w <= 0 for w in self.background_weights):
            raise ConfigError("background_weights must be non-empty and positive")
        if any(w <= 0 for w in self.ensemble_weights.values()):
            raise ConfigError("ensemble_weights must be positive")
        if self.matching_tolerance_s <= 0:
            raise ConfigError("matching_tolerance_s must be positive")
        if self.grouping_tolerance_s < 0:
            raise ConfigError("grouping_tolerance_s must be non-negative")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown pipeline fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict[str, Any]:
        return {
            "window_sizes_s": list(self.window_sizes_s),
            "window_stride_s": self.window_stride_s,
            "dedup_mode": self.dedup_mode.value,
            "confidence_threshold": self.confidence_threshold,
            "background_threshold": self.background_threshold,
            "background_weights": list(self.background_weights),
            "ensemble_weights": dict(self.ensemble_weights),
            "even_run_tiebreak": self.even_run_tiebreak.value,
            "matching_tolerance_s": self.matching_tolerance_s,
            "grouping_tolerance_s": self.grouping_tolerance_s,
        }

    def replace(self, **changes: Any) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)


def streams_by_key(
    candidates: Sequence[CaptionCandidate],
) -> dict[tuple[str, str], list[CaptionCandidate]]:
    """Split candidates into per-(video_id, model_id) streams sorted by time.

    Sorting is stable, so equal timestamps keep their input order. Keys come
    back in sorted order.
    """
    out: dict[tuple[str, str], list[CaptionCandidate]] = {}
    for c in candidates:
        out.setdefault((c.video_id, c.model_id), []).append(c)
    return {k: sorted(out[k], key=lambda c: c.timestamp_s) for k in sorted(out)}
