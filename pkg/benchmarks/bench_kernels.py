"""Compare the compiled and pure-Python text kernels on a synthetic corpus.

    python3 benchmarks/bench_kernels.py [--posts 20000] [--repeat 3]

Both backends are imported directly, so the comparison does not depend on
which one ``signal_miner.kernels`` selected.
"""

from __future__ import annotations

import argparse
import random
import time

from signal_miner import _pykernels
from signal_miner.signals import load_lexicon
from signal_miner.tickers import TickerEntry, TickerUniverse

try:
    from signal_miner import _ckernels
except ImportError:
    _ckernels = None

WORDS = ("the", "stock", "is", "going", "up", "buy", "sell", "hold", "calls", "puts", "not", "do", "don't",
         "moon", "earnings", "yolo", "dip", "long", "short", "tendies", "apes", "strong", "now", "why")
SYMBOLS = ("AAPL", "MSFT", "TSLA", "GME", "AMC", "NVDA", "F", "ALL", "BRK.B", "PLTR")
NOISE = (",", ".", "!", "\u2019s", " \u2014 ", "\u200b", "$", "??", " :) ", "\t")


def corpus(n: int, seed: int = 7) -> list[str]:
    rnd = random.Random(seed)
    posts = []
    for _ in range(n):
        parts = []
        for _ in range(rnd.randint(20, 120)):
            r = rnd.random()
            if r < 0.08:
                parts.append(rnd.choice(("", "$")) + rnd.choice(SYMBOLS))
            else:
                parts.append(rnd.choice(WORDS))
            if rnd.random() < 0.15:
                parts.append(rnd.choice(NOISE))
        posts.append(" ".join(parts))
    return posts


def run(kern, raw: list[str], lookup, lexicon) -> dict[str, float]:
    timings = {}
    t = time.perf_counter()
    texts = [kern.normalize(x) for x in raw]
    timings["normalize"] = time.perf_counter() - t

    t = time.perf_counter()
    mentions = [kern.find_mentions(x, lookup) for x in texts]
    timings["find_mentions"] = time.perf_counter() - t

    t = time.perf_counter()
    keywords = [kern.find_keywords(x, lexicon.classes, lexicon.negators) for x in texts]
    timings["find_keywords"] = time.perf_counter() - t

    t = time.perf_counter()
    for kw, found in zip(keywords, mentions):
        kern.class_counts(kw)
        for spans in found.values():
            kern.proximity_counts(kw, spans, 20)
    timings["scoring"] = time.perf_counter() - t
    timings["total"] = sum(timings.values())
    return timings


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--posts", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    raw = corpus(args.posts)
    universe = TickerUniverse(tuple(TickerEntry(s, s, "x") for s in SYMBOLS), frozenset({"F", "ALL"}))
    lexicon = load_lexicon()
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])

    best: dict[str, dict[str, float]] = {}
    for name, kern in backends:
        runs = [run(kern, raw, universe.lookup, lexicon) for _ in range(args.repeat)]
        best[name] = {k: min(r[k] for r in runs) for k in runs[0]}

    if _ckernels is not None:
        sample = raw[:500]
        same = all(_ckernels.normalize(x) == _pykernels.normalize(x) for x in sample)
        print(f"backends agree on normalize for {len(sample)} posts: {same}")
    else:
        print("compiled kernels not built; timing the pure-Python backend only")

    print(f"{args.posts} posts, best of {args.repeat}")
    print(f"{'kernel':<14}" + "".join(f"{n:>12}" for n, _ in backends) + ("     speedup" if len(backends) > 1 else ""))
    for kernel in best["python"]:
        row = f"{kernel:<14}" + "".join(f"{best[n][kernel]:>11.3f}s" for n, _ in backends)
        if len(backends) > 1:
            row += f"{best['python'][kernel] / best['cython'][kernel]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
