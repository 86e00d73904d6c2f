# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled text kernels; same functions and results as ``_pykernels``."""

import unicodedata

# 0 keep, 1 drop, 2 whitespace; ASCII only, the rest goes through unicodedata
cdef unsigned char _ASCII[128]
cdef dict _wide_cache = {}


cdef void _init_ascii():
    cdef int c
    for c in range(128):
        ch = chr(c)
        if ch == "$" or ch == "'":
            _ASCII[c] = 0
        elif ch.isspace():
            _ASCII[c] = 2
        elif unicodedata.category(ch)[0] in "PSC":
            _ASCII[c] = 1
        else:
            _ASCII[c] = 0

_init_ascii()


cdef str _wide(Py_UCS4 ch):
    rep = _wide_cache.get(ch)
    if rep is None:
        s = chr(ch)
        if s == "’" or s == "ʼ":
            rep = "'"
        elif s.isspace():
            rep = " "
        elif unicodedata.category(s)[0] in "PSC":
            rep = ""
        else:
            rep = s
        _wide_cache[ch] = rep
    return rep


def normalize(str text):
    cdef list out = []
    cdef Py_ssize_t i, n = len(text)
    cdef bint pending_space = False
    cdef Py_UCS4 ch
    cdef unsigned char kind
    cdef str rep
    for i in range(n):
        ch = text[i]
        if ch < 128:
            kind = _ASCII[ch]
            if kind == 1:
                continue
            if kind == 2:
                pending_space = True
                continue
            if pending_space and out:
                out.append(" ")
            pending_space = False
            out.append(ch)
        else:
            rep = _wide(ch)
            if not rep:
                continue
            if rep == " ":
                pending_space = True
                continue
            if pending_space and out:
                out.append(" ")
            pending_space = False
            out.append(rep)
    return "".join(out)


def token_spans(str text):
    cdef list spans = []
    cdef Py_ssize_t i, n = len(text)
    cdef Py_ssize_t start = -1
    for i in range(n):
        if text[i] == u" ":
            if start >= 0:
                spans.append((start, i))
                start = -1
        elif start < 0:
            start = i
    if start >= 0:
        spans.append((start, n))
    return spans


def find_mentions(str text, dict lookup):
    cdef dict found = {}
    cdef Py_ssize_t start, end
    for start, end in token_spans(text):
        symbol = lookup.get(text[start:end])
        if symbol is not None:
            bucket = found.get(symbol)
            if bucket is None:
                found[symbol] = [(start, end)]
            else:
                bucket.append((start, end))
    return found


def find_keywords(str text, dict classes, tuple negators):
    cdef list spans = token_spans(text)
    cdef list lowered = [text[s:e].lower() for s, e in spans]
    cdef list hits = []
    cdef Py_ssize_t i, j, k, ntok = len(lowered)
    cdef Py_ssize_t phrase_start, s
    cdef bint match
    cdef tuple phrase
    for i in range(ntok):
        cls = classes.get(lowered[i])
        if cls is None:
            continue
        phrase_start = -1
        for phrase in negators:
            k = len(phrase)
            if k > i:
                continue
            match = True
            for j in range(k):
                if lowered[i - k + j] != phrase[j]:
                    match = False
                    break
            if match:
                s = (<tuple>spans[i - k])[0]
                if phrase_start < 0 or s < phrase_start:
                    phrase_start = s
        hits.append((cls, (<tuple>spans[i])[0], (<tuple>spans[i])[1], phrase_start))
    return hits


def class_counts(list keywords, int n_classes=3):
    cdef list scores = [0] * n_classes
    cdef int cls
    cdef Py_ssize_t phrase_start
    for cls, _, _, phrase_start in keywords:
        if phrase_start < 0:
            scores[cls] += 1
    return scores


cdef bint _near(Py_ssize_t start, Py_ssize_t end, list mentions, Py_ssize_t window):
    cdef Py_ssize_t m0, m1, gap
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


def proximity_counts(list keywords, list mentions, Py_ssize_t window, int n_classes=3):
    cdef list scores = [0] * n_classes
    cdef int cls
    cdef Py_ssize_t w0, w1, phrase_start
    for cls, w0, w1, phrase_start in keywords:
        if _near(w0, w1, mentions, window):
            scores[cls] += 1
        if phrase_start >= 0 and _near(phrase_start, w1, mentions, window):
            scores[cls] -= 1
    return scores
