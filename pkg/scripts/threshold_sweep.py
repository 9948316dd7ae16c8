"""Sweep the background-filter threshold on synthetic corpora and print CIDEr/METEOR.

Includes the 0.87 / 0.875 / 0.88 settings. Absolute numbers are properties of
the synthetic generator only.
"""
import argparse

from densecap.core import PipelineConfig
from densecap.metrics import evaluate
from densecap.pipeline import build_timelines, clean_candidates, resolve_weights, streams_per_video
from densecap.synthetic import make_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--noise", type=float, default=0.3)
    ap.add_argument("--thresholds", type=float, nargs="+", default=[0.0, 0.8, 0.85, 0.87, 0.875, 0.88, 0.9])
    args = ap.parse_args()

    print(f"{'threshold':>9}  {'CIDEr':>8}  {'METEOR':>8}  {'events':>6}")
    for thr in args.thresholds:
        cider = meteor = events = 0.0
        for seed in range(args.seeds):
            corpus = make_corpus(seed, noise_fraction=args.noise)
            cfg = PipelineConfig(background_threshold=thr)
            cleaned, _ = clean_candidates(corpus.candidates, cfg)
            preds, _, _ = build_timelines(streams_per_video(cleaned), cfg, resolve_weights(cfg, corpus.models))
            rep = evaluate(preds, corpus.ground_truth, cfg)
            cider += rep.cider / args.seeds
            meteor += rep.meteor / args.seeds
            events += sum(len(p.events) for p in preds) / args.seeds
        print(f"{thr:>9.3f}  {cider:>8.3f}  {meteor:>8.4f}  {events:>6.1f}")


if __name__ == "__main__":
    main()
