"""``densecap`` command line.

Exit codes: 0 success, 1 validation, 2 I/O, 3 config/usage.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from densecap.core import DedupMode, PipelineConfig, Tiebreak, streams_by_key
from densecap.ensemble import Objective, ensemble_corpus, grid_search_weights
from densecap.errors import DensecapError
from densecap.io import (
    atomic_write_text,
    export_soccernet,
    ingest_candidates,
    read_ground_truth,
    read_timelines,
    write_candidates,
    write_timelines,
)
from densecap.localize import dedupe_central, filter_background, filter_confidence
from densecap.metrics import evaluate
from densecap.pipeline import StageError, resolve_weights, run_pipeline, streams_per_video

log = logging.getLogger("densecap")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_CONFIG = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _model_weights(text: str) -> dict[str, float]:
    """``a=1.0,b=0.85`` → {"a": 1.0, "b": 0.85}"""
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, sep, val = part.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected model=weight, got {part!r}")
        try:
            out[name.strip()] = float(val)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad weight in {part!r}") from None
    return out


def _grid_entry(text: str) -> tuple[str, list[float]]:
    """``model=w1,w2,...``"""
    name, sep, vals = text.partition("=")
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"expected model=w1,w2,..., got {text!r}")
    return name.strip(), _floats(vals)


def _cfg(**fields) -> PipelineConfig:
    return PipelineConfig(**{k: v for k, v in fields.items() if v is not None})


def _split_and_sort(cands):
    return [c for stream in streams_by_key(cands).values() for c in stream]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

# One flag per PipelineConfig field for `run` overrides.
_OVERRIDES = {
    "window_sizes_s": _floats,
    "window_stride_s": float,
    "dedup_mode": str,
    "confidence_threshold": float,
    "background_threshold": float,
    "background_weights": _floats,
    "ensemble_weights": _model_weights,
    "even_run_tiebreak": str,
    "matching_tolerance_s": float,
    "grouping_tolerance_s": float,
}


def cmd_run(args) -> int:
    overrides = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k) is not None}
    manifest = run_pipeline(args.config, overrides)
    print(json.dumps(manifest.stage_counts, sort_keys=True))
    return EXIT_OK


def cmd_ingest_check(args) -> int:
    models = set(args.models.split(",")) if args.models else None
    cands = ingest_candidates(args.input, models)
    by_model = {}
    for c in cands:
        by_model[c.model_id] = by_model.get(c.model_id, 0) + 1
    print(json.dumps({"records": len(cands), "per_model": dict(sorted(by_model.items()))}, sort_keys=True))
    return EXIT_OK


def cmd_dedupe(args) -> int:
    cfg = _cfg(dedup_mode=args.mode, even_run_tiebreak=args.tiebreak)
    cands = ingest_candidates(args.input)
    out = [c for stream in streams_by_key(cands).values() for c in dedupe_central(stream, cfg)]
    write_candidates(args.output, out)
    return EXIT_OK


def cmd_filter(args) -> int:
    cands = _split_and_sort(ingest_candidates(args.input))
    if args.background:
        cfg = _cfg(background_threshold=args.threshold, background_weights=args.background_weights)
        out = filter_background(cands, cfg)
    else:
        out = filter_confidence(cands, args.threshold)
    write_candidates(args.output, out)
    return EXIT_OK


def _ensemble_preds(cands, weights, grouping_tolerance):
    cfg = _cfg(ensemble_weights=weights, grouping_tolerance_s=grouping_tolerance)
    per_video = streams_per_video(streams_by_key(cands))
    models = {c.model_id for c in cands}
    return ensemble_corpus(per_video, resolve_weights(cfg, models or {"_"}), cfg)


def cmd_ensemble(args) -> int:
    cands = ingest_candidates(args.input)
    preds = _ensemble_preds(cands, args.weights or {}, args.grouping_tolerance)
    write_timelines(preds, args.output)
    return EXIT_OK


def cmd_grid_search(args) -> int:
    grid = dict(args.grid)
    cfg = _cfg(matching_tolerance_s=args.tolerance, grouping_tolerance_s=args.grouping_tolerance)
    cands = ingest_candidates(args.input)
    truth = read_ground_truth(args.truth)
    per_video = streams_per_video(streams_by_key(cands))
    result = grid_search_weights(per_video, truth, grid, args.objective, cfg, max_workers=args.workers)
    text = json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.output:
        atomic_write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _cfg(matching_tolerance_s=args.tolerance)
    report = evaluate(read_timelines(args.input), read_ground_truth(args.truth), cfg)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.output:
        atomic_write_text(args.output, text)
    else:
        sys.stdout.write(text)
    if args.csv:
        atomic_write_text(args.csv, report.to_csv())
    return EXIT_OK


def cmd_export_soccernet(args) -> int:
    paths = export_soccernet(read_timelines(args.input), args.out_dir, args.half_boundary)
    print(f"wrote {len(paths)} files under {args.out_dir}")
    return EXIT_OK


def cmd_stub_server(args) -> int:
    from densecap.llm import StubServer

    server = StubServer(fail=args.mode == "fail")
    with server:
        print(server.url, flush=True)
        try:
            while True:
                time.sleep(3600)
        except KeyboardInterrupt:
            pass
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="densecap", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("run", help="run the whole pipeline from a config file")
    s.add_argument("config", type=Path)
    for name, typ in _OVERRIDES.items():
        s.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("ingest-check", help="validate a candidate file")
    s.add_argument("--in", dest="input", type=Path, required=True)
    s.add_argument("--models", help="comma-separated list of allowed model ids")
    s.set_defaults(func=cmd_ingest_check)

    s = sub.add_parser("dedupe", help="central de-duplication per (video, model) stream")
    s.add_argument("--in", dest="input", type=Path, required=True)
    s.add_argument("--out", dest="output", type=Path, required=True)
    s.add_argument("--mode", choices=[m.value for m in DedupMode], default=None)
    s.add_argument("--tiebreak", choices=[t.value for t in Tiebreak], default=None)
    s.set_defaults(func=cmd_dedupe)

    s = sub.add_parser("filter", help="confidence or background-score threshold filter")
    s.add_argument("--in", dest="input", type=Path, required=True)
    s.add_argument("--out", dest="output", type=Path, required=True)
    s.add_argument("--threshold", type=float, required=True)
    s.add_argument("--background", action="store_true", help="filter on fused background scores")
    s.add_argument("--background-weights", type=_floats, default=None)
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("ensemble", help="weighted top-1 ensemble into a prediction file")
    s.add_argument("--in", dest="input", type=Path, required=True)
    s.add_argument("--out", dest="output", type=Path, required=True)
    s.add_argument("--weights", type=_model_weights, default=None)
    s.add_argument("--grouping-tolerance", type=float, default=None)
    s.set_defaults(func=cmd_ensemble)

    s = sub.add_parser("grid-search", help="grid search over ensemble weights")
    s.add_argument("--in", dest="input", type=Path, required=True)
    s.add_argument("--truth", type=Path, required=True)
    s.add_argument("--grid", type=_grid_entry, action="append", required=True)
    s.add_argument("--objective", choices=[o.value for o in Objective], default=Objective.METEOR.value)
    s.add_argument("--tolerance", type=float, default=None)
    s.add_argument("--grouping-tolerance", type=float, default=None)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", dest="output", type=Path, default=None)
    s.set_defaults(func=cmd_grid_search)

    s = sub.add_parser("evaluate", help="CIDEr-D / METEOR-s evaluation")
    s.add_argument("--in", dest="input", type=Path, required=True)
    s.add_argument("--truth", type=Path, required=True)
    s.add_argument("--tolerance", type=float, default=None)
    s.add_argument("--out", dest="output", type=Path, default=None)
    s.add_argument("--csv", type=Path, default=None)
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("export-soccernet", help="write SoccerNet-style result files")
    s.add_argument("--in", dest="input", type=Path, required=True)
    s.add_argument("--out-dir", type=Path, required=True)
    s.add_argument("--half-boundary", type=float, required=True)
    s.set_defaults(func=cmd_export_soccernet)

    s = sub.add_parser("stub-server", help="serve the text-generation stub for testing")
    s.add_argument("--mode", choices=["echo", "fail"], default="echo")
    s.set_defaults(func=cmd_stub_server)
    return p


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        return _exit_code(exc.cause)
    if isinstance(exc, DensecapError):
        return exc.exit_code
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_VALIDATION


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DensecapError, StageError, OSError, ValueError) as exc:
        print(f"densecap {args.command}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
