"""Seeded synthetic candidate/ground-truth corpora for tests and experiments."""
from __future__ import annotations

import random
from dataclasses import dataclass

from densecap.core import CaptionCandidate, GroundTruthEvent

REFERENCE_TEMPLATES = (
    "[PLAYER] ([TEAM]) scores with a fine header from the edge of the box",
    "[COACH] has decided to introduce fresh legs, with [PLAYER] ([TEAM]) replacing [PLAYER]",
    "[TEAM] will have a chance to score from a corner kick",
    "[PLAYER] ([TEAM]) is shown a yellow card for a reckless challenge",
    "the referee blows the whistle and [PLAYER] ([TEAM]) is flagged offside",
    "[PLAYER] ([TEAM]) fires a shot from long range but it goes wide",
    "a substitution has been made. [PLAYER] is replaced by [PLAYER] ([TEAM])",
    "the ball goes out of play and [TEAM] will take a throw-in",
    "[PLAYER] ([TEAM]) commits a foul and the referee awards a free kick",
    "[PLAYER] ([TEAM]) makes a brilliant save to deny [PLAYER]",
)

NOISE_CAPTIONS = (
    "the crowd watches quietly as the camera pans across the stands",
    "a replay is shown of the earlier build up play",
    "fans in the stadium are waving flags",
    "players walk back to their positions slowly",
    "the broadcast shows a graphic with statistics",
)

_FILLER = ("quickly", "again", "today", "now", "there")


@dataclass(frozen=True)
class SyntheticCorpus:
    candidates: list[CaptionCandidate]
    ground_truth: list[GroundTruthEvent]
    models: tuple[str, ...]


def _corrupt(caption: str, rng: random.Random, n_edits: int) -> str:
    words = caption.split()
    for _ in range(n_edits):
        i = rng.randrange(len(words))
        if rng.random() < 0.5:
            words[i] = rng.choice(_FILLER)
        else:
            del words[i]
            if not words:
                words = [rng.choice(_FILLER)]
    return " ".join(words)


def make_corpus(
    seed: int = 0,
    n_videos: int = 3,
    events_per_video: int = 6,
    models: tuple[str, ...] = ("blip-base", "blip-large", "blip2"),
    noise_fraction: float = 0.3,
    run_length: int = 5,
    event_spacing_s: float = 120.0,
) -> SyntheticCorpus:
    """Events sit ``event_spacing_s`` apart; each model repeats its caption in
    a run of ``run_length`` one-second steps centered on the event. Noise
    candidates land halfway between events with low background scores and
    make up ``noise_fraction`` of all candidates.
    """
    rng = random.Random(seed)
    cands: list[CaptionCandidate] = []
    truth: list[GroundTruthEvent] = []
    half = run_length // 2
    for v in range(n_videos):
        vid = f"video_{v:03d}"
        for k in range(events_per_video):
            t = event_spacing_s / 2 + k * event_spacing_s
            ref = REFERENCE_TEMPLATES[rng.randrange(len(REFERENCE_TEMPLATES))]
            truth.append(GroundTruthEvent(vid, t, ref))
            for m in models:
                caption = _corrupt(ref, rng, rng.randint(0, 3))
                conf = round(rng.uniform(0.6, 0.99), 4)
                bg = tuple(round(rng.uniform(0.84, 1.0), 4) for _ in range(3))
                for d in range(-half, run_length - half):
                    text = caption if d % 2 == 0 else caption.upper() + "."
                    cands.append(CaptionCandidate(vid, m, t + d, text, conf, bg))
    n_signal = len(cands)
    n_noise = round(noise_fraction * n_signal / (1 - noise_fraction)) if noise_fraction < 1 else 0
    slots = [
        (f"video_{v:03d}", event_spacing_s * (k + 1) + rng.randint(-5, 5) * 0.5)
        for v in range(n_videos)
        for k in range(events_per_video - 1)
    ]
    for i in range(n_noise):
        vid, t = slots[i % len(slots)]
        t += (i // len(slots)) * 0.25
        cands.append(
            CaptionCandidate(
                vid,
                models[i % len(models)],
                t,
                NOISE_CAPTIONS[rng.randrange(len(NOISE_CAPTIONS))],
                round(rng.uniform(0.6, 0.99), 4),
                tuple(round(rng.uniform(0.4, 0.92), 4) for _ in range(3)),
            )
        )
    cands.sort(key=lambda c: (c.video_id, c.model_id, c.timestamp_s))
    return SyntheticCorpus(cands, truth, tuple(models))
