"""Grid-search ensemble weights on a synthetic dev/test split.

Weights are picked on the dev seeds and re-scored on held-out seeds, which
shows how much of the dev gain survives.
"""
import argparse
from dataclasses import replace

from densecap.core import PipelineConfig
from densecap.ensemble import ensemble_corpus, grid_search_weights
from densecap.metrics import evaluate
from densecap.pipeline import clean_candidates, streams_per_video
from densecap.synthetic import make_corpus

GRID = {
    "blip-base": [1.0],
    "blip-large": [0.7, 0.82, 0.85, 0.95, 1.0],
    "blip2": [0.7, 0.82, 0.85, 0.95, 1.0],
}


def _split(seeds, cfg):
    per_video, truth = {}, []
    for seed in seeds:
        corpus = make_corpus(seed, noise_fraction=0.0)
        cleaned, _ = clean_candidates(corpus.candidates, cfg)
        for vid, streams in streams_per_video(cleaned).items():
            key = f"s{seed}/{vid}"
            per_video[key] = [[replace(c, video_id=key) for c in s] for s in streams]
        truth += [replace(g, video_id=f"s{seed}/{g.video_id}") for g in corpus.ground_truth]
    return per_video, truth


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--objective", choices=["meteor", "cider"], default="meteor")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = PipelineConfig(background_threshold=0.0)
    dev, dev_truth = _split(range(0, 4), cfg)
    test, test_truth = _split(range(100, 104), cfg)
    res = grid_search_weights(dev, dev_truth, GRID, args.objective, cfg, max_workers=args.workers)
    held_out = evaluate(ensemble_corpus(test, res.best_weights, cfg), test_truth, cfg)
    print(f"grid points: {len(res.trace)}")
    print(f"best weights: {res.best_weights.weights}")
    print(f"dev {args.objective}: {res.best_score:.4f}")
    print(f"held-out meteor {held_out.meteor:.4f}, cider {held_out.cider:.3f}")


if __name__ == "__main__":
    main()
