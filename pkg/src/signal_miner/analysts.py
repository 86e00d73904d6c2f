"""Analyst recommendation events and rating-label standardization."""

from __future__ import annotations

import csv
import datetime as dt
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from signal_miner.errors import DataError
from signal_miner.signals import Verdict

log = logging.getLogger(__name__)

BUY_LABELS = (
    "Buy", "Overweight", "Outperform", "Strong Buy", "Positive", "Market Outperform", "Sector Outperform",
)
HOLD_LABELS = (
    "Neutral", "Hold", "Equal-Weight", "Market Perform", "Sector Perform", "In-Line", "Sector-Weight",
    "Peer Perform",
)
SELL_LABELS = ("Underweight", "Underperform", "Sell")


def _fold(label: str) -> str:
    # "Equal-Weight", "equal weight" and "EQUAL  WEIGHT" all fold to "equalweight"
    return "".join(label.replace("-", " ").casefold().split())


_LABELS = {
    **{_fold(x): Verdict.BUY for x in BUY_LABELS},
    **{_fold(x): Verdict.HOLD for x in HOLD_LABELS},
    **{_fold(x): Verdict.SELL for x in SELL_LABELS},
}


def standardize_label(raw: str | None) -> Verdict:
    """Map a rating label to Buy/Hold/Sell, or Unknown when unlisted.

    Case, hyphens and whitespace are ignored.
    """
    if not raw:
        return Verdict.UNKNOWN
    return _LABELS.get(_fold(raw), Verdict.UNKNOWN)


@dataclass(frozen=True, slots=True)
class AnalystRec:
    date: dt.date
    firm: str
    symbol: str
    raw_label: str
    verdict: Verdict


@dataclass
class RecLoad:
    recs: list[AnalystRec]
    malformed: int = 0
    collapsed: int = 0
    filtered: int = 0
    unknown: list[AnalystRec] = field(default_factory=list)

    def verdict_counts(self) -> Counter:
        return Counter(r.verdict for r in self.recs)


def load_recs(path: str | Path, firms_filter: Iterable[str] | None = None) -> RecLoad:
    """Read ``date,firm,symbol,label`` rows.

    Malformed rows are skipped and counted. Several rows for the same
    (date, firm, symbol) collapse to the last one in file order. Unknown
    labels stay in ``recs`` and are also listed in ``unknown``.
    """
    wanted = None if firms_filter is None else set(firms_filter)
    latest: dict[tuple[dt.date, str, str], AnalystRec] = {}
    order: dict[tuple[dt.date, str, str], int] = {}
    result = RecLoad([])
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"date", "firm", "symbol", "label"} - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"{path}: recommendations header lacks {sorted(missing)}")
        for row in reader:
            try:
                day = dt.date.fromisoformat((row["date"] or "").strip())
                firm = (row["firm"] or "").strip()
                symbol = (row["symbol"] or "").strip().upper()
                label = (row["label"] or "").strip()
                if not firm or not symbol:
                    raise ValueError("empty firm or symbol")
            except (ValueError, AttributeError) as exc:
                result.malformed += 1
                log.warning("%s:%d: skipping malformed row (%s)", path, reader.line_num, exc)
                continue
            if wanted is not None and firm not in wanted:
                result.filtered += 1
                continue
            key = (day, firm, symbol)
            if key in latest:
                result.collapsed += 1
                log.warning("%s:%d: repeated %s/%s on %s, keeping the later row", path, reader.line_num, firm, symbol, day)
            latest[key] = AnalystRec(day, firm, symbol, label, standardize_label(label))
            order.setdefault(key, len(order))
    result.recs = [latest[k] for k in sorted(latest, key=order.__getitem__)]
    result.unknown = [r for r in result.recs if r.verdict is Verdict.UNKNOWN]
    return result


def top_firms(recs: Iterable[AnalystRec], k: int = 20) -> list[str]:
    """Firms by descending recommendation count, ties broken by name."""
    if k < 1:
        raise ValueError("k must be >= 1")
    counts = Counter(r.firm for r in recs)
    return sorted(counts, key=lambda f: (-counts[f], f))[:k]


def read_firms(path: str | Path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip() and not line.lstrip().startswith("#")]


REC_HEADER = ("date", "firm", "symbol", "label", "verdict")


def write_recs(recs: Iterable[AnalystRec], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REC_HEADER)
        for r in recs:
            writer.writerow([r.date.isoformat(), r.firm, r.symbol, r.raw_label, r.verdict.value])


def read_recs(path: str | Path) -> list[AnalystRec]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return [
            AnalystRec(dt.date.fromisoformat(r["date"]), r["firm"], r["symbol"], r["label"], Verdict(r["verdict"]))
            for r in csv.DictReader(fh)
        ]
