"""Caption tokenization and stemming."""
from __future__ import annotations

import re
from functools import lru_cache

# "[PLAYER]"-style anonymization placeholders survive as one token.
_TOKEN_RE = re.compile(r"\[\w+\]|\w+")


def normalize_caption(text: str) -> list[str]:
    """Lowercase, split on punctuation and whitespace, keep placeholders whole.

    >>> normalize_caption("[PLAYER] scores!")
    ['[player]', 'scores']
    """
    return _TOKEN_RE.findall(text.lower())


def is_placeholder(token: str) -> bool:
    return token.startswith("[") and token.endswith("]")


# ---------------------------------------------------------------------------
# Porter (1980) stemmer, original algorithm without later "Porter2" changes.
# ---------------------------------------------------------------------------

STEMMER_VERSION = "porter-1980"

_VOWELS = frozenset("aeiou")


def _is_cons(w: str, i: int) -> bool:
    ch = w[i]
    if ch in _VOWELS:
        return False
    if ch == "y":
        return i == 0 or not _is_cons(w, i - 1)
    return True


def _measure(stem: str) -> int:
    """Number of VC sequences in ``stem``."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        cons = _is_cons(stem, i)
        if cons and prev_vowel:
            m += 1
        prev_vowel = not cons
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_cons(stem, i) for i in range(len(stem)))


def _ends_double_cons(w: str) -> bool:
    return len(w) >= 2 and w[-1] == w[-2] and _is_cons(w, len(w) - 1)


def _cvc(w: str) -> bool:
    if len(w) < 3:
        return False
    n = len(w)
    return (
        _is_cons(w, n - 3)
        and not _is_cons(w, n - 2)
        and _is_cons(w, n - 1)
        and w[-1] not in "wxy"
    )


def _replace(w: str, suffix: str, repl: str, min_m: int) -> str | None:
    """Swap ``suffix`` for ``repl`` if the stem measure exceeds ``min_m``.

    Returns None when ``w`` lacks the suffix so callers can stop scanning.
    """
    if not w.endswith(suffix):
        return None
    stem = w[: len(w) - len(suffix)]
    if _measure(stem) > min_m:
        return stem + repl
    return w


_STEP2 = (
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
)
_STEP3 = (
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
)
_STEP4 = (
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
    "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
)


def _step1ab(w: str) -> str:
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif w.endswith("ss"):
        pass
    elif w.endswith("s"):
        w = w[:-1]

    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
        return w
    for suffix in ("ed", "ing"):
        if w.endswith(suffix) and _has_vowel(w[: -len(suffix)]):
            w = w[: -len(suffix)]
            if w.endswith(("at", "bl", "iz")):
                return w + "e"
            if _ends_double_cons(w) and w[-1] not in "lsz":
                return w[:-1]
            if _measure(w) == 1 and _cvc(w):
                return w + "e"
            return w
    return w


def _step1c(w: str) -> str:
    if w.endswith("y") and _has_vowel(w[:-1]):
        return w[:-1] + "i"
    return w


def _step_table(w: str, table) -> str:
    for suffix, repl in table:
        out = _replace(w, suffix, repl, 0)
        if out is not None:
            return out
    return w


def _step4(w: str) -> str:
    for suffix in _STEP4:
        if not w.endswith(suffix):
            continue
        stem = w[: -len(suffix)]
        if _measure(stem) <= 1:
            return w
        if suffix == "ion" and not stem.endswith(("s", "t")):
            return w
        return stem
    return w


def _step5(w: str) -> str:
    if w.endswith("e"):
        stem = w[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _cvc(stem)):
            w = stem
    if _measure(w) > 1 and _ends_double_cons(w) and w.endswith("l"):
        w = w[:-1]
    return w


@lru_cache(maxsize=65536)
def stem(token: str) -> str:
    """Porter stem of a lowercase token; placeholders and short words pass through."""
    if len(token) <= 2 or is_placeholder(token) or not token.isalpha():
        return token
    w = _step1ab(token)
    w = _step1c(w)
    w = _step_table(w, _STEP2)
    w = _step_table(w, _STEP3)
    w = _step4(w)
    return _step5(w)
