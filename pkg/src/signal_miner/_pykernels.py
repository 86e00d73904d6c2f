"""Pure-Python text kernels.

Reference implementation of the per-post scanning routines. The compiled
module ``_ckernels`` exposes the same functions with identical results; the
selection between the two happens in :mod:`signal_miner.kernels`.

All offsets are character offsets into the normalized text, end-exclusive.
Keyword hits are tuples ``(cls, word_start, word_end, phrase_start)`` where
``phrase_start`` is ``-1`` unless a negator phrase directly precedes the word.
"""

from __future__ import annotations

import unicodedata

_APOSTROPHES = {"’": "'", "ʼ": "'"}
# char -> replacement ("" drops it, " " marks whitespace); filled lazily
_char_cache: dict[str, str] = {}


def _classify(ch: str) -> str:
    if ch == "$" or ch == "'":
        return ch
    if ch in _APOSTROPHES:
        return _APOSTROPHES[ch]
    if ch.isspace():
        return " "
    if unicodedata.category(ch)[0] in "PSC":
        return ""
    return ch


def normalize(text: str) -> str:
    """Drop punctuation, symbols and control characters; collapse whitespace.

    ``$`` and apostrophes survive, letter case is untouched.
    """
    cache = _char_cache
    out = []
    for ch in text:
        rep = cache.get(ch)
        if rep is None:
            rep = cache[ch] = _classify(ch)
        out.append(rep)
    return " ".join("".join(out).split())


def token_spans(text: str) -> list[tuple[int, int]]:
    spans = []
    start = -1
    for i, ch in enumerate(text):
        if ch == " ":
            if start >= 0:
                spans.append((start, i))
                start = -1
        elif start < 0:
            start = i
    if start >= 0:
        spans.append((start, len(text)))
    return spans


def find_mentions(text: str, lookup: dict[str, str]) -> dict[str, list[tuple[int, int]]]:
    """Map each symbol to the spans of tokens that spell it.

    ``lookup`` maps an exact token (``"AAPL"``, ``"$AAPL"``) to its symbol.
    """
    found: dict[str, list[tuple[int, int]]] = {}
    for start, end in token_spans(text):
        symbol = lookup.get(text[start:end])
        if symbol is not None:
            found.setdefault(symbol, []).append((start, end))
    return found


def find_keywords(
    text: str,
    classes: dict[str, int],
    negators: tuple[tuple[str, ...], ...],
) -> list[tuple[int, int, int, int]]:
    """Locate class-word occurrences, case-insensitively on whole tokens.

    When several negator phrases end right before a word (``"not"`` and
    ``"do not"``), the phrase start is taken from the longest one.
    """
    spans = token_spans(text)
    lowered = [text[s:e].lower() for s, e in spans]
    hits = []
    for i, tok in enumerate(lowered):
        cls = classes.get(tok)
        if cls is None:
            continue
        phrase_start = -1
        for phrase in negators:
            k = len(phrase)
            if k <= i and tuple(lowered[i - k:i]) == phrase:
                s = spans[i - k][0]
                if phrase_start < 0 or s < phrase_start:
                    phrase_start = s
        hits.append((cls, spans[i][0], spans[i][1], phrase_start))
    return hits


def class_counts(keywords: list[tuple[int, int, int, int]], n_classes: int = 3) -> list[int]:
    """Occurrences per class minus the negated ones."""
    scores = [0] * n_classes
    for cls, _, _, phrase_start in keywords:
        if phrase_start < 0:
            scores[cls] += 1
    return scores


def _near(start: int, end: int, mentions: list[tuple[int, int]], window: int) -> bool:
    for m0, m1 in mentions:
        if end <= m0:
            gap = m0 - end
        elif m1 <= start:
            gap = start - m1
        else:
            gap = 0
        if gap <= window:
            return True
    return False


def proximity_counts(
    keywords: list[tuple[int, int, int, int]],
    mentions: list[tuple[int, int]],
    window: int,
    n_classes: int = 3,
) -> list[int]:
    """Like :func:`class_counts`, restricted to keywords near a mention.

    The word counts +1 if the word itself is within ``window`` characters of a
    mention; a negation counts -1 if the whole phrase is.
    """
    scores = [0] * n_classes
    for cls, w0, w1, phrase_start in keywords:
        if _near(w0, w1, mentions, window):
            scores[cls] += 1
        if phrase_start >= 0 and _near(phrase_start, w1, mentions, window):
            scores[cls] -= 1
    return scores
