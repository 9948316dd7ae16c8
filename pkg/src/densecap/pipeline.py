"""End-to-end orchestration driven by a JSON run config."""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from densecap import __version__
from densecap.core import CaptionCandidate, PipelineConfig, TimelineEvent, TimelinePrediction, streams_by_key
from densecap.ensemble import EnsembleWeights, TimestampGroup, group_by_timestamp, select_top1
from densecap.errors import ConfigError
from densecap.io import (
    atomic_write_text,
    dumps,
    file_digest,
    ingest_candidates,
    read_ground_truth,
    write_timelines,
)
from densecap.llm import DEFAULT_TEMPLATE, TextGenerationClient, merge_groups
from densecap.localize import clean_stream
from densecap.metrics import evaluate

SCHEMA_VERSION = 1

PREDICTIONS_FILE = "predictions.jsonl"
MANIFEST_FILE = "manifest.json"
REPORT_FILE = "eval_report.json"
REPORT_CSV = "eval_report.csv"

STAGE_KEYS = ("ingested", "after_dedup", "after_confidence_filter", "after_background_filter")


@dataclass(frozen=True)
class LLMConfig:
    endpoint: str
    timeout_s: float = 30.0
    retries: int = 0
    max_tokens: int = 64
    temperature: float = 0.0
    prompt_template: str | None = None  # path; None uses the built-in template
    max_in_flight: int = 1


@dataclass(frozen=True)
class RunConfig:
    candidates: tuple[Path, ...]
    output_dir: Path
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    ground_truth: Path | None = None
    expected_models: frozenset[str] | None = None
    llm: LLMConfig | None = None

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base_dir: Path = Path(".")) -> "RunConfig":
        data = dict(data)
        version = data.pop("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
        known = {"candidates", "output_dir", "pipeline", "ground_truth", "expected_models", "llm"}
        if set(data) - known:
            raise ConfigError(f"unknown config keys: {sorted(set(data) - known)}")
        if "candidates" not in data or "output_dir" not in data:
            raise ConfigError("config needs 'candidates' and 'output_dir'")
        cands = data["candidates"]
        if isinstance(cands, str):
            cands = [cands]
        rel = lambda p: (base_dir / p) if p is not None else None  # noqa: E731
        llm = data.get("llm")
        if llm is not None:
            try:
                llm = LLMConfig(**llm)
            except TypeError as exc:
                raise ConfigError(f"llm: {exc}") from None
            if llm.prompt_template is not None:
                llm = LLMConfig(**{**llm.__dict__, "prompt_template": str(rel(llm.prompt_template))})
        models = data.get("expected_models")
        return cls(
            candidates=tuple(rel(p) for p in cands),
            output_dir=rel(data["output_dir"]),
            pipeline=PipelineConfig.from_dict(data.get("pipeline", {})),
            ground_truth=rel(data.get("ground_truth")),
            expected_models=frozenset(models) if models is not None else None,
            llm=llm,
        )


def load_config(path: str | os.PathLike, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Parse a run config; ``overrides`` replace pipeline fields one-for-one."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    if overrides:
        data["pipeline"] = {**data.get("pipeline", {}), **overrides}
    return RunConfig.from_dict(data, base_dir=path.parent)


# ---------------------------------------------------------------------------
# Pure stages
# ---------------------------------------------------------------------------


def clean_candidates(
    candidates: list[CaptionCandidate], cfg: PipelineConfig
) -> tuple[dict[tuple[str, str], list[CaptionCandidate]], dict[str, dict[str, int]]]:
    """Dedupe and filter every (video, model) stream; returns streams and per-model counts."""
    cleaned = {}
    counts: dict[str, dict[str, int]] = {}
    for key, stream in streams_by_key(candidates).items():
        stages = clean_stream(stream, cfg)
        cleaned[key] = stages["after_background_filter"]
        c = counts.setdefault(key[1], dict.fromkeys(STAGE_KEYS, 0))
        c["ingested"] += len(stream)
        for k in STAGE_KEYS[1:]:
            c[k] += len(stages[k])
    return cleaned, counts


def streams_per_video(
    cleaned: Mapping[tuple[str, str], list[CaptionCandidate]],
) -> dict[str, list[list[CaptionCandidate]]]:
    out: dict[str, list[list[CaptionCandidate]]] = {}
    for (vid, _model), stream in sorted(cleaned.items()):
        out.setdefault(vid, []).append(stream)
    return out


def resolve_weights(cfg: PipelineConfig, models) -> EnsembleWeights:
    """Configured weights; models without one get the implicit 1.0 anchor weight."""
    return EnsembleWeights.anchored(sorted(models), cfg.ensemble_weights)


def build_timelines(
    per_video: Mapping[str, list[list[CaptionCandidate]]],
    cfg: PipelineConfig,
    weights: EnsembleWeights,
    client: TextGenerationClient | None = None,
    template: str = DEFAULT_TEMPLATE,
    max_in_flight: int = 1,
) -> tuple[list[TimelinePrediction], int, int]:
    """Group, select (and optionally merge) per video; returns timelines, #groups, #merged."""
    preds = []
    n_groups = n_merged = 0
    for vid in sorted(per_video):
        groups: list[TimestampGroup] = group_by_timestamp(per_video[vid], cfg.grouping_tolerance_s)
        picks = [select_top1(g, weights) for g in groups]
        captions = [p.caption for p in picks]
        if client is not None:
            outcomes = merge_groups(groups, client, template, weights, max_in_flight)
            captions = [o.caption for o in outcomes]
            n_merged += sum(o.merged for o in outcomes)
        n_groups += len(groups)
        events = tuple(
            TimelineEvent(g.timestamp_s, cap, min(1.0, max(0.0, p.weighted_score)))
            for g, p, cap in zip(groups, picks, captions)
        )
        preds.append(TimelinePrediction(vid, events))
    return preds, n_groups, n_merged


# ---------------------------------------------------------------------------
# Orchestrator
# ---------------------------------------------------------------------------


@dataclass
class RunManifest:
    config_echo: dict[str, Any]
    input_digests: dict[str, str]
    stage_counts: dict[str, Any]
    timing_s: dict[str, float]
    tool_version: str = __version__

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool_version": self.tool_version,
            "config": self.config_echo,
            "input_digests": self.input_digests,
            "stage_counts": self.stage_counts,
            "timing": self.timing_s,
        }


class _Timer:
    def __init__(self):
        self.times: dict[str, float] = {}

    def stage(self, name: str):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                timer.times[name] = round(time.perf_counter() - self.t0, 6)

        return _Ctx()


def _digest_key(path: Path, taken: Mapping[str, str]) -> str:
    # base names keep manifests independent of where the run directory lives
    name = Path(path).name
    return name if name not in taken else str(path)


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"stage '{stage}' failed: {exc}")
        self.stage = stage
        self.cause = exc


def run_pipeline(config_path: str | os.PathLike, overrides: Mapping[str, Any] | None = None) -> RunManifest:
    """ingest → dedupe → confidence filter → background filter → ensemble → merge → write → evaluate."""
    rc = load_config(config_path, overrides)
    return execute(rc)


def execute(rc: RunConfig) -> RunManifest:
    cfg = rc.pipeline
    out_dir = rc.output_dir
    written: list[Path] = []
    timer = _Timer()
    stage = "ingest"
    try:
        with timer.stage("ingest"):
            candidates = []
            digests = {}
            for p in rc.candidates:
                candidates.extend(ingest_candidates(p, set(rc.expected_models) if rc.expected_models else None))
                digests[_digest_key(p, digests)] = file_digest(p)
            truth = None
            if rc.ground_truth is not None:
                truth = read_ground_truth(rc.ground_truth)
                digests[_digest_key(rc.ground_truth, digests)] = file_digest(rc.ground_truth)

        stage = "clean"
        with timer.stage("clean"):
            cleaned, counts = clean_candidates(candidates, cfg)

        stage = "ensemble"
        with timer.stage("ensemble"):
            client = None
            template = DEFAULT_TEMPLATE
            max_in_flight = 1
            if rc.llm is not None:
                client = TextGenerationClient(
                    rc.llm.endpoint, rc.llm.timeout_s, rc.llm.retries, rc.llm.max_tokens, rc.llm.temperature
                )
                max_in_flight = rc.llm.max_in_flight
                if rc.llm.prompt_template is not None:
                    template = Path(rc.llm.prompt_template).read_text(encoding="utf-8")
            weights = resolve_weights(cfg, {m for _, m in cleaned} or {"_"})
            preds, n_groups, n_merged = build_timelines(
                streams_per_video(cleaned), cfg, weights, client, template, max_in_flight
            )

        stage = "write"
        with timer.stage("write"):
            write_timelines(preds, out_dir / PREDICTIONS_FILE)
            written.append(out_dir / PREDICTIONS_FILE)

        if truth is not None:
            stage = "evaluate"
            with timer.stage("evaluate"):
                report = evaluate(preds, truth, cfg)
                atomic_write_text(out_dir / REPORT_FILE, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
                written.append(out_dir / REPORT_FILE)
                atomic_write_text(out_dir / REPORT_CSV, report.to_csv())
                written.append(out_dir / REPORT_CSV)

        manifest = RunManifest(
            config_echo=cfg.to_dict(),
            input_digests=digests,
            stage_counts={
                "per_model": {m: counts[m] for m in sorted(counts)},
                "groups": n_groups,
                "merged": n_merged,
                "events": sum(len(p.events) for p in preds),
            },
            timing_s=timer.times,
        )
        stage = "manifest"
        atomic_write_text(out_dir / MANIFEST_FILE, json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
        return manifest
    except Exception as exc:
        for p in written:
            if p.exists():
                p.unlink()
        raise StageError(stage, exc) from exc


def manifest_without_timing(path: str | os.PathLike) -> str:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    data.pop("timing", None)
    return dumps(data)
