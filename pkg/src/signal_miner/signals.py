"""Keyword scoring of posts and daily per-ticker consensus.

Each post mentioning a ticker gets a buy, hold and sell score: the number of
class keywords in the text minus the negated ones (``"don't buy"``). The
highest unique score decides the post's verdict. Per ticker and day, a
consensus buy requires buy posts to outnumber sell posts by more than 50%
(and vice versa for sell).
"""

from __future__ import annotations

import configparser
import csv
import datetime as dt
import enum
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from signal_miner import kernels
from signal_miner.errors import ConfigError
from signal_miner.ingest import CleanPost
from signal_miner.market import PriceSeries, below_moving_average
from signal_miner.tickers import TickerUniverse

PROXIMITY_WINDOW = 20


class Verdict(str, enum.Enum):
    BUY = "Buy"
    HOLD = "Hold"
    SELL = "Sell"
    UNKNOWN = "Unknown"

    def __str__(self) -> str:
        return self.value


# score-vector positions
CLASSES = (Verdict.BUY, Verdict.HOLD, Verdict.SELL)
_CLASS_INDEX = {v: i for i, v in enumerate(CLASSES)}


class Mode(str, enum.Enum):
    DEFAULT = "default"
    PROXIMITY = "proximity"


@dataclass(frozen=True)
class KeywordLexicon:
    buy: frozenset[str] = frozenset({"buy", "call", "calls"})
    hold: frozenset[str] = frozenset({"hold"})
    sell: frozenset[str] = frozenset({"sell", "put", "puts"})
    negators: tuple[tuple[str, ...], ...] = (("not",), ("don't",), ("do", "not"))

    def __post_init__(self):
        groups = (self.buy, self.hold, self.sell)
        for words in groups:
            for w in words:
                if w != w.lower() or not w or " " in w:
                    raise ConfigError(f"class keyword {w!r} must be a single lowercase token")
        if (self.buy & self.hold) or (self.buy & self.sell) or (self.hold & self.sell):
            raise ConfigError("keyword classes must be disjoint")
        for phrase in self.negators:
            if not phrase or any(t != t.lower() or not t for t in phrase):
                raise ConfigError(f"negator {' '.join(phrase)!r} must be lowercase tokens")
        classes = {w: i for i, words in enumerate(groups) for w in words}
        object.__setattr__(self, "classes", classes)

    def words(self, verdict: Verdict) -> frozenset[str]:
        return (self.buy, self.hold, self.sell)[_CLASS_INDEX[verdict]]


def load_lexicon(path: str | Path | None = None) -> KeywordLexicon:
    """Read a lexicon file with ``[buy]``, ``[hold]``, ``[sell]`` and ``[negators]`` sections.

    Without ``path`` the bundled default lexicon is read.
    """
    parser = configparser.ConfigParser(allow_no_value=True, delimiters=("=",), strict=False)
    parser.optionxform = str
    try:
        if path is None:
            parser.read_string(resources.files("signal_miner").joinpath("data/lexicon.txt").read_text("utf-8"))
        else:
            with open(path, "r", encoding="utf-8") as fh:
                parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"bad lexicon file: {exc}") from None
    missing = {"buy", "hold", "sell", "negators"} - set(parser.sections())
    if missing:
        raise ConfigError(f"lexicon lacks sections {sorted(missing)}")

    def entries(section):
        return [" ".join(k.lower().split()) for k in parser[section]]

    return KeywordLexicon(
        buy=frozenset(entries("buy")),
        hold=frozenset(entries("hold")),
        sell=frozenset(entries("sell")),
        negators=tuple(sorted({tuple(p.split()) for p in entries("negators")})),
    )


@dataclass(frozen=True, slots=True)
class PostSignal:
    post_id: str
    symbol: str
    date: dt.date
    verdict: Verdict | None
    scores: tuple[int, int, int]
    mentions: int = 1


@dataclass(frozen=True, slots=True)
class DailyConsensus:
    symbol: str
    date: dt.date
    buy_n: int
    hold_n: int
    sell_n: int
    mentions: int
    consensus: Verdict | None


@dataclass(frozen=True, slots=True)
class EnrichedDaily:
    daily: DailyConsensus
    total_posts: int
    mentions_ma3: float
    weekday: int
    below_ma30: bool | None
    below_ma90: bool | None


def class_score(text: str, verdict: Verdict, lexicon: KeywordLexicon) -> int:
    scores = kernels.class_counts(kernels.find_keywords(text, lexicon.classes, lexicon.negators))
    return scores[_CLASS_INDEX[verdict]]


def class_score_prox(
    text: str,
    symbol: str,
    verdict: Verdict,
    lexicon: KeywordLexicon,
    universe: TickerUniverse | None = None,
    window: int = PROXIMITY_WINDOW,
) -> int:
    """Score counting only keywords within ``window`` characters of a ``symbol`` mention.

    Without a universe, both ``SYM`` and ``$SYM`` spellings are mentions.
    """
    lookup = universe.lookup if universe is not None else {symbol: symbol, "$" + symbol: symbol}
    mentions = kernels.find_mentions(text, lookup).get(symbol, [])
    keywords = kernels.find_keywords(text, lexicon.classes, lexicon.negators)
    return kernels.proximity_counts(keywords, mentions, window)[_CLASS_INDEX[verdict]]


def verdict_from_scores(scores: Sequence[int]) -> Verdict | None:
    """Argmax verdict; ``None`` on a tie for the top or when nothing is positive."""
    top = max(scores)
    if top <= 0 or list(scores).count(top) > 1:
        return None
    return CLASSES[list(scores).index(top)]


def classify_post(
    post: CleanPost,
    symbol: str,
    lexicon: KeywordLexicon,
    mode: Mode | str = Mode.DEFAULT,
    universe: TickerUniverse | None = None,
    window: int = PROXIMITY_WINDOW,
) -> PostSignal:
    lookup = universe.lookup if universe is not None else {symbol: symbol, "$" + symbol: symbol}
    mentions = kernels.find_mentions(post.text, lookup).get(symbol, [])
    keywords = kernels.find_keywords(post.text, lexicon.classes, lexicon.negators)
    return _signal(post, symbol, mentions, keywords, Mode(mode), window)


def _signal(post, symbol, mentions, keywords, mode, window) -> PostSignal:
    if mode is Mode.PROXIMITY:
        scores = tuple(kernels.proximity_counts(keywords, mentions, window))
    else:
        scores = tuple(kernels.class_counts(keywords))
    return PostSignal(post.id, symbol, post.date, verdict_from_scores(scores), scores, len(mentions))


def _signals_for_posts(posts, universe, lexicon, mode, window) -> list[PostSignal]:
    out = []
    for post in posts:
        found = kernels.find_mentions(post.text, universe.lookup)
        if not found:
            continue
        keywords = kernels.find_keywords(post.text, lexicon.classes, lexicon.negators)
        for symbol in sorted(found):
            out.append(_signal(post, symbol, found[symbol], keywords, mode, window))
    return out


def extract_signals(
    posts: Sequence[CleanPost],
    universe: TickerUniverse,
    lexicon: KeywordLexicon,
    mode: Mode | str = Mode.DEFAULT,
    window: int = PROXIMITY_WINDOW,
    workers: int = 1,
    min_chunk: int = 32,
) -> list[PostSignal]:
    """One :class:`PostSignal` per (post, detected symbol), in input order.

    With ``workers > 1`` posts are scored in chunks on a process pool; chunk
    results are concatenated in submission order, so output is identical to
    the serial run.
    """
    mode = Mode(mode)
    chunk = max(min_chunk, math.ceil(len(posts) / (4 * max(workers, 1))))
    if workers <= 1 or len(posts) <= chunk:
        return _signals_for_posts(posts, universe, lexicon, mode, window)
    chunks = [posts[i:i + chunk] for i in range(0, len(posts), chunk)]
    out: list[PostSignal] = []
    with ProcessPoolExecutor(max_workers=min(workers, len(chunks))) as pool:
        futures = [pool.submit(_signals_for_posts, c, universe, lexicon, mode, window) for c in chunks]
        for fut in futures:
            out.extend(fut.result())
    return out


def consensus_verdict(buy_n: int, sell_n: int, min_posts: int = 1) -> Verdict | None:
    # buy_n > 1.5 * sell_n, in integers
    if 2 * buy_n > 3 * sell_n and buy_n >= min_posts:
        return Verdict.BUY
    if 2 * sell_n > 3 * buy_n and sell_n >= min_posts:
        return Verdict.SELL
    return None


def aggregate_daily(signals: Iterable[PostSignal], min_posts: int = 1) -> list[DailyConsensus]:
    """Count post verdicts per (symbol, date); rows sorted by symbol then date."""
    tally: dict[tuple[str, dt.date], list[int]] = defaultdict(lambda: [0, 0, 0, 0])
    for sig in signals:
        row = tally[(sig.symbol, sig.date)]
        if sig.verdict is not None:
            row[_CLASS_INDEX[sig.verdict]] += 1
        row[3] += sig.mentions
    return [
        DailyConsensus(symbol, day, b, h, s, m, consensus_verdict(b, s, min_posts))
        for (symbol, day), (b, h, s, m) in sorted(tally.items())
    ]


def enrich(
    daily: Sequence[DailyConsensus],
    prices: Mapping[str, PriceSeries],
    calendar: Mapping[dt.date, int],
) -> list[EnrichedDaily]:
    """Attach activity and moving-average features to each daily row.

    ``mentions_ma3`` averages mentions over the calendar days ``[d-2, d]``
    (days without a row count as zero) clipped to start at the symbol's first
    row, so the first day averages a single value.
    """
    by_symbol: dict[str, dict[dt.date, int]] = defaultdict(dict)
    for row in daily:
        by_symbol[row.symbol][row.date] = row.mentions
    first = {s: min(days) for s, days in by_symbol.items()}
    out = []
    for row in daily:
        mentions = by_symbol[row.symbol]
        start = max(first[row.symbol], row.date - dt.timedelta(days=2))
        span = (row.date - start).days + 1
        ma3 = sum(mentions.get(start + dt.timedelta(days=k), 0) for k in range(span)) / span
        series = prices.get(row.symbol)
        below30 = below_moving_average(series, row.date, 30) if series is not None else None
        below90 = below_moving_average(series, row.date, 90) if series is not None else None
        out.append(EnrichedDaily(row, calendar.get(row.date, 0), ma3, row.date.weekday(), below30, below90))
    return out


# -- CSV -------------------------------------------------------------------

CONSENSUS_HEADER = ("symbol", "date", "buy_n", "hold_n", "sell_n", "mentions", "consensus")
ENRICHED_HEADER = CONSENSUS_HEADER + ("total_posts", "mentions_ma3", "weekday", "below_ma30", "below_ma90")


def _verdict_cell(v: Verdict | None) -> str:
    return "None" if v is None else v.value


def _flag_cell(flag: bool | None) -> str:
    return "" if flag is None else str(int(flag))


def _consensus_cells(row: DailyConsensus) -> list[str]:
    return [row.symbol, row.date.isoformat(), str(row.buy_n), str(row.hold_n), str(row.sell_n),
            str(row.mentions), _verdict_cell(row.consensus)]


def write_consensus(rows: Iterable[DailyConsensus], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CONSENSUS_HEADER)
        for row in rows:
            writer.writerow(_consensus_cells(row))


def read_consensus(path: str | Path) -> list[DailyConsensus]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            consensus = None if rec["consensus"] in ("", "None") else Verdict(rec["consensus"])
            rows.append(DailyConsensus(
                rec["symbol"], dt.date.fromisoformat(rec["date"]), int(rec["buy_n"]), int(rec["hold_n"]),
                int(rec["sell_n"]), int(rec["mentions"]), consensus,
            ))
    return rows


def write_enriched(rows: Iterable[EnrichedDaily], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ENRICHED_HEADER)
        for row in rows:
            writer.writerow(_consensus_cells(row.daily) + [
                str(row.total_posts), f"{row.mentions_ma3:.3f}", str(row.weekday),
                _flag_cell(row.below_ma30), _flag_cell(row.below_ma90),
            ])
