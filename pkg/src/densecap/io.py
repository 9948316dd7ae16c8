"""Line-delimited JSON readers/writers for candidates, predictions, ground truth."""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

from densecap.core import CaptionCandidate, GroundTruthEvent, TimelineEvent, TimelinePrediction
from densecap.errors import PreconditionError, ValidationError

_CANDIDATE_FIELDS = {"video_id", "model_id", "timestamp_s", "caption", "confidence", "background_scores"}


def dumps(obj: Any) -> str:
    """Deterministic one-line JSON."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jsonl(path: str | os.PathLike, records: Iterable[Any]) -> None:
    atomic_write_text(path, "".join(dumps(r) + "\n" for r in records))


def iter_jsonl(path: str | os.PathLike) -> Iterator[tuple[int, Any]]:
    """Yield ``(line_number, object)``; blank lines are skipped."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None


def file_digest(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Candidates
# ---------------------------------------------------------------------------


def candidate_from_record(rec: Any) -> CaptionCandidate:
    if not isinstance(rec, dict):
        raise ValidationError("record is not an object")
    missing = {"video_id", "model_id", "timestamp_s", "caption", "confidence"} - set(rec)
    if missing:
        raise ValidationError(f"missing fields {sorted(missing)}")
    extra = set(rec) - _CANDIDATE_FIELDS
    if extra:
        raise ValidationError(f"unknown fields {sorted(extra)}")
    scores = rec.get("background_scores") or ()
    if not isinstance(scores, (list, tuple)):
        raise ValidationError("background_scores must be a list")
    return CaptionCandidate(
        video_id=rec["video_id"],
        model_id=rec["model_id"],
        timestamp_s=rec["timestamp_s"],
        caption=rec["caption"],
        confidence=rec["confidence"],
        background_scores=tuple(scores),
    )


def ingest_candidates(
    path: str | os.PathLike, expected_models: set[str] | None = None
) -> list[CaptionCandidate]:
    """Read a candidate file, validating every line.

    Input order is preserved. Any invalid line raises ``ValidationError``
    naming the file and line number; nothing is silently dropped.
    """
    out = []
    for lineno, rec in iter_jsonl(path):
        try:
            cand = candidate_from_record(rec)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
        if expected_models is not None and cand.model_id not in expected_models:
            raise ValidationError(f"{path}:{lineno}: unknown model_id {cand.model_id!r}")
        out.append(cand)
    return out


def write_candidates(path: str | os.PathLike, candidates: Iterable[CaptionCandidate]) -> None:
    write_jsonl(path, (c.to_record() for c in candidates))


# ---------------------------------------------------------------------------
# Predictions
# ---------------------------------------------------------------------------


def prediction_to_record(pred: TimelinePrediction) -> dict[str, Any]:
    return {
        "video_id": pred.video_id,
        "predictions": [
            {"timestamp_s": e.timestamp_s, "caption": e.caption, "confidence": e.confidence}
            for e in pred.events
        ],
    }


def _check_sorted(pred: TimelinePrediction) -> None:
    ts = [e.timestamp_s for e in pred.events]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise PreconditionError(f"{pred.video_id}: events are not sorted by timestamp")


def write_timeline(pred: TimelinePrediction, path: str | os.PathLike) -> None:
    write_timelines([pred], path)


def write_timelines(preds: Sequence[TimelinePrediction], path: str | os.PathLike) -> None:
    for p in preds:
        _check_sorted(p)
    write_jsonl(path, (prediction_to_record(p) for p in preds))


def read_timelines(path: str | os.PathLike) -> list[TimelinePrediction]:
    out = []
    for lineno, rec in iter_jsonl(path):
        try:
            if not isinstance(rec, dict) or set(rec) != {"video_id", "predictions"}:
                raise ValidationError("expected fields video_id, predictions")
            events = []
            for p in rec["predictions"]:
                if set(p) != {"timestamp_s", "caption", "confidence"}:
                    raise ValidationError("prediction needs timestamp_s, caption, confidence")
                events.append(TimelineEvent(p["timestamp_s"], p["caption"], p["confidence"]))
            out.append(TimelinePrediction(rec["video_id"], tuple(events)))
        except (ValidationError, TypeError) as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
    return out


# ---------------------------------------------------------------------------
# Ground truth
# ---------------------------------------------------------------------------


def read_ground_truth(path: str | os.PathLike) -> list[GroundTruthEvent]:
    out = []
    for lineno, rec in iter_jsonl(path):
        try:
            if not isinstance(rec, dict) or set(rec) != {"video_id", "predictions"}:
                raise ValidationError("expected fields video_id, predictions")
            for p in rec["predictions"]:
                if set(p) != {"timestamp_s", "reference"}:
                    raise ValidationError("ground truth entry needs timestamp_s, reference")
                out.append(GroundTruthEvent(rec["video_id"], p["timestamp_s"], p["reference"]))
        except (ValidationError, TypeError) as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from None
    return out


def write_ground_truth(path: str | os.PathLike, events: Sequence[GroundTruthEvent]) -> None:
    by_video: dict[str, list[GroundTruthEvent]] = {}
    for e in events:
        by_video.setdefault(e.video_id, []).append(e)
    write_jsonl(
        path,
        (
            {
                "video_id": vid,
                "predictions": [
                    {"timestamp_s": e.timestamp_s, "reference": e.reference}
                    for e in sorted(by_video[vid], key=lambda e: e.timestamp_s)
                ],
            }
            for vid in sorted(by_video)
        ),
    )


# ---------------------------------------------------------------------------
# SoccerNet-style export
# ---------------------------------------------------------------------------


def game_time(timestamp_s: float, half_boundary_s: float) -> tuple[int, str]:
    """Map seconds-from-start to ``(half, "half - mm:ss")``."""
    half, t = (1, timestamp_s) if timestamp_s < half_boundary_s else (2, timestamp_s - half_boundary_s)
    secs = int(t)
    return half, f"{half} - {secs // 60:02d}:{secs % 60:02d}"


def export_soccernet(
    preds: Sequence[TimelinePrediction], out_dir: str | os.PathLike, half_boundary_s: float
) -> list[Path]:
    """Write one ``results_dense_captioning.json`` per video under ``out_dir/<video_id>/``."""
    if half_boundary_s <= 0:
        raise ValueError("half_boundary_s must be positive")
    written = []
    for pred in preds:
        items = []
        for e in pred.events:
            half, gt = game_time(e.timestamp_s, half_boundary_s)
            offset = e.timestamp_s if half == 1 else e.timestamp_s - half_boundary_s
            items.append(
                {
                    "gameTime": gt,
                    "label": "comments",
                    "position": str(int(round(offset * 1000))),
                    "half": str(half),
                    "confidence": e.confidence,
                    "comment": e.caption,
                }
            )
        path = Path(out_dir) / pred.video_id / "results_dense_captioning.json"
        atomic_write_text(path, json.dumps({"UrlLocal": pred.video_id, "predictions": items}, indent=2, ensure_ascii=False) + "\n")
        written.append(path)
    return written
