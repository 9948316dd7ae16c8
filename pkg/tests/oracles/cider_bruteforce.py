"""Brute-force CIDEr-D, kept deliberately naive.

Everything is recomputed from raw token lists with plain loops; nothing is
shared with ``densecap.metrics``. Used only as a test oracle.
"""
import math


def _ngrams(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def _count(items):
    out = {}
    for it in items:
        out[it] = out.get(it, 0) + 1
    return out


def cider_d_bruteforce(candidates, references, n_max=4, sigma=6.0):
    """Per-instance CIDEr-D values, x10 scaled, IDF over the reference corpus."""
    num_docs = len(candidates)
    vocab_df = {}
    for refs in references:
        seen = []
        for ref in refs:
            for n in range(1, n_max + 1):
                for g in _ngrams(ref, n):
                    if g not in seen:
                        seen.append(g)
        for g in seen:
            vocab_df[g] = vocab_df.get(g, 0) + 1

    def idf(g):
        return math.log(num_docs) - math.log(max(1, vocab_df.get(g, 0)))

    def weighted(tokens, n):
        return {g: c * idf(g) for g, c in _count(_ngrams(tokens, n)).items()}

    scores = []
    for cand, refs in zip(candidates, references):
        total = 0.0
        for ref in refs:
            delta = len(cand) - len(ref)
            gauss = math.exp(-(delta * delta) / (2 * sigma * sigma))
            per_n = []
            for n in range(1, n_max + 1):
                vc = weighted(cand, n)
                vr = weighted(ref, n)
                num = 0.0
                for g in vc:
                    if g in vr:
                        num += min(vc[g], vr[g]) * vr[g]
                nc = math.sqrt(sum(v * v for v in vc.values()))
                nr = math.sqrt(sum(v * v for v in vr.values()))
                val = num / (nc * nr) if nc > 0 and nr > 0 else 0.0
                per_n.append(val * gauss)
            total += sum(per_n) / n_max
        scores.append(10.0 * total / len(refs))
    return scores
