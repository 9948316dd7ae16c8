"""CIDEr-D: TF-IDF weighted n-gram cosine with clipping and a length penalty."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

Tokens = Sequence[str]


def ngram_counts(tokens: Tokens, n_max: int = 4) -> Counter:
    counts: Counter = Counter()
    for n in range(1, n_max + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i : i + n])] += 1
    return counts


@dataclass
class NGramStats:
    """Document frequencies over a reference corpus (one document per instance)."""

    counts: Counter = field(default_factory=Counter)
    document_frequency: Counter = field(default_factory=Counter)
    corpus_size: int = 0

    @classmethod
    def from_references(cls, references: Sequence[Sequence[Tokens]], n_max: int = 4) -> "NGramStats":
        stats = cls()
        for refs in references:
            seen = set()
            for ref in refs:
                c = ngram_counts(ref, n_max)
                stats.counts.update(c)
                seen.update(c)
            stats.document_frequency.update(seen)
        stats.corpus_size = len(references)
        return stats

    def idf(self, gram: tuple[str, ...]) -> float:
        return math.log(float(self.corpus_size)) - math.log(max(1.0, float(self.document_frequency[gram])))


class CiderD:
    def __init__(self, stats: NGramStats, n_max: int = 4, sigma: float = 6.0):
        self.stats = stats
        self.n_max = n_max
        self.sigma = sigma

    def _vector(self, tokens: Tokens):
        vec = [dict() for _ in range(self.n_max)]
        norm = [0.0] * self.n_max
        for gram, tf in ngram_counts(tokens, self.n_max).items():
            n = len(gram) - 1
            v = tf * self.stats.idf(gram)
            vec[n][gram] = v
            norm[n] += v * v
        return vec, [math.sqrt(x) for x in norm], len(tokens)

    def _sim(self, hyp, ref) -> float:
        (vh, nh, lh), (vr, nr, lr) = hyp, ref
        penalty = math.exp(-((lh - lr) ** 2) / (2 * self.sigma**2))
        total = 0.0
        for n in range(self.n_max):
            dot = sum(min(v, vr[n][g]) * vr[n][g] for g, v in vh[n].items() if g in vr[n])
            if nh[n] != 0 and nr[n] != 0:
                dot /= nh[n] * nr[n]
            total += dot * penalty
        return total / self.n_max

    def score(self, candidate: Tokens, references: Sequence[Tokens]) -> float:
        if not references:
            raise ValueError("each instance needs at least one reference")
        hyp = self._vector(candidate)
        sims = [self._sim(hyp, self._vector(r)) for r in references]
        return 10.0 * sum(sims) / len(sims)


def cider_scores(
    candidates: Sequence[Tokens],
    references: Sequence[Sequence[Tokens]],
    n_max: int = 4,
    sigma: float = 6.0,
) -> list[float]:
    """Per-instance CIDEr-D; document frequencies come from ``references``."""
    if not candidates:
        raise ValueError("empty corpus")
    if len(candidates) != len(references):
        raise ValueError("candidates and references must be aligned")
    scorer = CiderD(NGramStats.from_references(references, n_max), n_max, sigma)
    return [scorer.score(c, refs) for c, refs in zip(candidates, references)]


def cider_score(candidates: Sequence[Tokens], references: Sequence[Sequence[Tokens]], **kw) -> float:
    """Corpus CIDEr-D: mean of the per-instance values."""
    scores = cider_scores(candidates, references, **kw)
    return sum(scores) / len(scores)
