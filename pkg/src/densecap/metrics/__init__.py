from densecap.metrics.align import MatchSet, align, align_times
from densecap.metrics.cider import CiderD, NGramStats, cider_score, cider_scores
from densecap.metrics.evaluate import EvalReport, VideoScore, evaluate
from densecap.metrics.meteor import align_unigrams, meteor_score

__all__ = [
    "MatchSet", "align", "align_times", "CiderD", "NGramStats", "cider_score",
    "cider_scores", "EvalReport", "VideoScore", "evaluate", "align_unigrams", "meteor_score",
]
