import json
from pathlib import Path

import pytest

from densecap.core import CaptionCandidate, GroundTruthEvent
from densecap.io import write_candidates, write_ground_truth

# Weights of the best-METEOR triple ensemble: Blip(ViT-Base) + Blip(ViT-Large)*0.85 + Blip-2*0.95
TABLE1_TRIPLE = {"blip-base": 1.0, "blip-large": 0.85, "blip2": 0.95}

# (timestamp, {model: (caption, confidence)})
HAND_GROUPS = [
    (10.0, {"blip-base": ("[PLAYER] scores a goal", 0.90),
            "blip-large": ("[PLAYER] ([TEAM]) scores", 0.95),
            "blip2": ("goal for [TEAM]", 0.92)}),
    (20.0, {"blip-base": ("corner kick for [TEAM]", 0.70),
            "blip-large": ("[TEAM] will have a chance to score from a corner kick", 0.90),
            "blip2": ("[TEAM] win a corner", 0.80)}),
    (30.0, {"blip-base": ("yellow card", 0.60),
            "blip-large": ("the referee shows a card", 0.70),
            "blip2": ("[PLAYER] ([TEAM]) is booked", 0.70)}),
    (40.0, {"blip-base": ("[PLAYER] is replaced by [PLAYER]", 0.85),
            "blip2": ("a substitution has been made", 0.90)}),
    (50.0, {"blip-base": ("shot goes wide", 0.50),
            "blip-large": ("[PLAYER] ([TEAM]) fires a shot wide of the post", 0.80),
            "blip2": ("[PLAYER] misses the target", 0.70)}),
]

# Winners worked out by hand from confidence * weight:
#   10s: 0.90 / 0.8075 / 0.874  -> blip-base
#   20s: 0.70 / 0.765  / 0.76   -> blip-large
#   30s: 0.60 / 0.595  / 0.665  -> blip2
#   40s: 0.85 / -      / 0.855  -> blip2
#   50s: 0.50 / 0.68   / 0.665  -> blip-large
HAND_WINNERS = ["blip-base", "blip-large", "blip2", "blip2", "blip-large"]

HAND_REFERENCES = [
    "[PLAYER] scores a goal",
    "[TEAM] will have a chance to score from a corner kick",
    "[PLAYER] ([TEAM]) is booked",
    "[PLAYER] is replaced by [PLAYER]",
    "[PLAYER] ([TEAM]) fires a shot wide of the post",
]


def hand_streams(video_id="match_1"):
    """One sorted stream per model, models in sorted order."""
    streams = {}
    for t, entries in HAND_GROUPS:
        for m, (cap, conf) in entries.items():
            streams.setdefault(m, []).append(
                CaptionCandidate(video_id, m, t, cap, conf, (0.95, 0.9, 0.92))
            )
    return [streams[m] for m in sorted(streams)]


def hand_truth(video_id="match_1"):
    return [GroundTruthEvent(video_id, t, ref) for (t, _), ref in zip(HAND_GROUPS, HAND_REFERENCES)]


def hand_candidates_with_runs(video_id="match_1"):
    """The hand fixture with every caption repeated at t-1, t, t+1 (case noise on the sides)."""
    out = []
    for stream in hand_streams(video_id):
        for c in stream:
            for d, text in ((-1, c.caption.upper()), (0, c.caption), (1, c.caption + ".")):
                out.append(CaptionCandidate(c.video_id, c.model_id, c.timestamp_s + d, text,
                                            c.confidence, c.background_scores))
    return out


def cand(t, caption="a caption", conf=0.9, model="m", video="v", bg=()):
    return CaptionCandidate(video, model, t, caption, conf, tuple(bg))


@pytest.fixture
def hand_fixture_files(tmp_path):
    cpath = tmp_path / "candidates.jsonl"
    gpath = tmp_path / "truth.jsonl"
    write_candidates(cpath, hand_candidates_with_runs())
    write_ground_truth(gpath, hand_truth())
    return cpath, gpath


def write_run_config(path: Path, **fields) -> Path:
    cfg = {"schema_version": 1, **fields}
    path.write_text(json.dumps(cfg, indent=2))
    return path


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """``criterion(n, title, ok, detail)`` records one acceptance line and asserts ``ok``."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def check(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
        lines.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
