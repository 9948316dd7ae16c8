"""Write a synthetic candidate file, ground truth, and run config to a directory."""
import argparse
import json
from pathlib import Path

from densecap.io import write_candidates, write_ground_truth
from densecap.synthetic import make_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--videos", type=int, default=3)
    ap.add_argument("--events", type=int, default=6)
    ap.add_argument("--noise", type=float, default=0.3)
    args = ap.parse_args()

    corpus = make_corpus(args.seed, args.videos, args.events, noise_fraction=args.noise)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_candidates(args.out_dir / "candidates.jsonl", corpus.candidates)
    write_ground_truth(args.out_dir / "truth.jsonl", corpus.ground_truth)
    config = {
        "schema_version": 1,
        "candidates": ["candidates.jsonl"],
        "ground_truth": "truth.jsonl",
        "output_dir": "out",
        "pipeline": {
            "background_threshold": 0.875,
            "ensemble_weights": {"blip-base": 1.0, "blip-large": 0.85, "blip2": 0.95},
        },
    }
    (args.out_dir / "config.json").write_text(json.dumps(config, indent=2) + "\n")
    print(f"{len(corpus.candidates)} candidates, {len(corpus.ground_truth)} events -> {args.out_dir}")


if __name__ == "__main__":
    main()
