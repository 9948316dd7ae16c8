"""METEOR-s: unigram alignment with exact and Porter-stem stages, no synonyms.

Not the official scorer. Alignment maximizes exact matches, then total
matches, then minimizes the number of chunks.
"""
from __future__ import annotations

from collections import Counter
from typing import NamedTuple, Sequence

from densecap.text import STEMMER_VERSION, stem

VARIANT = f"METEOR-s (exact+{STEMMER_VERSION} stem, no synonyms)"

ALPHA = 0.9  # recall weight: F = PR / (alpha*P + (1-alpha)*R) = 10PR/(R+9P)
GAMMA = 0.5
BETA = 3.0

# Search budget for chunk minimization; past it the best alignment found is kept.
_NODE_BUDGET = 200_000


class Alignment(NamedTuple):
    matches: int
    chunks: int
    pairs: tuple[tuple[int, int], ...]


def _max_matches(cand: Sequence[str], ref: Sequence[str]) -> tuple[int, int]:
    cc, rc = Counter(cand), Counter(ref)
    exact = sum(min(cc[t], rc[t]) for t in cc)
    left_c = Counter({stem(t): 0 for t in cc})
    left_r = Counter()
    for t in cc:
        left_c[stem(t)] += cc[t] - min(cc[t], rc[t])
    for t in rc:
        left_r[stem(t)] += rc[t] - min(cc[t], rc[t])
    return exact, exact + sum(min(left_c[s], left_r[s]) for s in left_c)


def count_chunks(pairs: Sequence[tuple[int, int]]) -> int:
    """Chunks in an alignment given as ``(cand_idx, ref_idx)`` sorted by cand_idx."""
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def align_unigrams(cand: Sequence[str], ref: Sequence[str]) -> Alignment:
    exact_target, total_target = _max_matches(cand, ref)
    if total_target == 0:
        return Alignment(0, 0, ())

    ref_stems = [stem(t) for t in ref]
    exact_opts, stem_opts = [], []
    for t in cand:
        st = stem(t)
        exact_opts.append([j for j, r in enumerate(ref) if r == t])
        stem_opts.append([j for j, r in enumerate(ref) if r != t and ref_stems[j] == st])
    n = len(cand)
    # suffix counts of positions that could still take a match, for pruning
    can_exact = [0] * (n + 1)
    can_any = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        can_exact[i] = can_exact[i + 1] + bool(exact_opts[i])
        can_any[i] = can_any[i + 1] + bool(exact_opts[i] or stem_opts[i])

    best_chunks = n + 1
    best_pairs: tuple = ()
    seen: dict = {}
    nodes = 0
    path: list[tuple[int, int]] = []

    def dfs(i: int, used: int, prev_j: int, exact: int, total: int, chunks: int) -> None:
        nonlocal best_chunks, best_pairs, nodes
        if chunks >= best_chunks or nodes > _NODE_BUDGET:
            return
        if exact + can_exact[i] < exact_target or total + can_any[i] < total_target:
            return
        if i == n:
            if exact == exact_target and total == total_target:
                best_chunks, best_pairs = chunks, tuple(path)
            return
        key = (i, used, prev_j, exact)
        if seen.get(key, n + 2) <= chunks:
            return
        seen[key] = chunks
        nodes += 1

        options = [(j, True) for j in exact_opts[i]] + [(j, False) for j in stem_opts[i]]
        # try the chunk-continuing option first so the incumbent is good early
        options.sort(key=lambda o: (o[0] != prev_j + 1, not o[1], o[0]))
        for j, is_exact in options:
            if used >> j & 1:
                continue
            if not is_exact and exact + can_exact[i + 1] < exact_target:
                continue
            path.append((i, j))
            new_chunk = prev_j < 0 or j != prev_j + 1
            dfs(i + 1, used | (1 << j), j, exact + is_exact, total + 1, chunks + new_chunk)
            path.pop()
        dfs(i + 1, used, -1, exact, total, chunks)

    dfs(0, 0, -1, 0, 0, 0)
    return Alignment(total_target, best_chunks, best_pairs)


def meteor_single(cand: Sequence[str], ref: Sequence[str]) -> float:
    if not cand or not ref:
        return 0.0
    al = align_unigrams(cand, ref)
    m = al.matches
    if m == 0:
        return 0.0
    precision = m / len(cand)
    recall = m / len(ref)
    fmean = precision * recall / (ALPHA * precision + (1 - ALPHA) * recall)
    penalty = GAMMA * (al.chunks / m) ** BETA
    return fmean * (1 - penalty)


def meteor_score(candidate: Sequence[str], references: Sequence[Sequence[str]]) -> float:
    """Best per-reference METEOR-s score; 0 for an empty candidate."""
    if not references:
        raise ValueError("need at least one reference")
    return max(meteor_single(candidate, r) for r in references)
