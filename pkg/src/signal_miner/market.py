"""Daily price history and the price-derived quantities used by the backtests.

Moving-average windows count trading days (bars); return horizons count
calendar days and land on the first bar on or after the target date.
Undefined quantities are returned as ``None``.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from signal_miner.errors import DataError

PRICE_FIELDS = ("symbol", "date", "open", "high", "low", "close", "volume")


@dataclass(frozen=True, slots=True)
class PriceBar:
    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: int

    def check(self) -> None:
        prices = (self.open, self.high, self.low, self.close)
        if not all(math.isfinite(p) and p > 0 for p in prices):
            raise ValueError("prices must be positive and finite")
        if self.volume < 0:
            raise ValueError("volume must be non-negative")
        if self.low > self.high:
            raise ValueError("low > high")
        if self.low > min(self.open, self.close) or self.high < max(self.open, self.close):
            raise ValueError("open/close outside the low-high range")


class PriceSeries:
    """Date-sorted bars of one symbol, with numpy views for fast lookups."""

    def __init__(self, symbol: str, bars: Iterable[PriceBar]):
        bars = sorted(bars, key=lambda b: b.date)
        if not bars:
            raise DataError(f"{symbol}: empty price series")
        for prev, cur in zip(bars, bars[1:]):
            if prev.date == cur.date:
                raise DataError(f"{symbol}: duplicate bar for {cur.date}")
        self.symbol = symbol
        self.bars = tuple(bars)
        self.dates = np.array([b.date for b in bars], dtype="datetime64[D]")
        self.closes = np.array([b.close for b in bars], dtype=float)

    def __len__(self) -> int:
        return len(self.bars)

    def __repr__(self) -> str:
        return f"PriceSeries({self.symbol!r}, {len(self)} bars, {self.first_date}..{self.last_date})"

    @property
    def first_date(self) -> dt.date:
        return self.bars[0].date

    @property
    def last_date(self) -> dt.date:
        return self.bars[-1].date

    def index_on_or_after(self, day: dt.date) -> int | None:
        i = int(np.searchsorted(self.dates, np.datetime64(day, "D"), side="left"))
        return i if i < len(self.bars) else None

    def index_on_or_before(self, day: dt.date) -> int | None:
        i = int(np.searchsorted(self.dates, np.datetime64(day, "D"), side="right")) - 1
        return i if i >= 0 else None

    def mean_close(self, end_index: int, n: int) -> float | None:
        """Mean close of the ``n`` bars ending at ``end_index`` (inclusive)."""
        if n < 1:
            raise ValueError("window must be >= 1")
        if end_index < n - 1:
            return None
        # a direct window mean; running-sum differences lose exactness
        return float(self.closes[end_index + 1 - n:end_index + 1].mean())


def _parse_row(row: dict, line: int, path) -> tuple[str, PriceBar]:
    try:
        symbol = row["symbol"].strip()
        if not symbol:
            raise ValueError("empty symbol")
        bar = PriceBar(
            date=dt.date.fromisoformat(row["date"].strip()),
            open=float(row["open"]),
            high=float(row["high"]),
            low=float(row["low"]),
            close=float(row["close"]),
            volume=int(row["volume"]),
        )
        bar.check()
    except (ValueError, TypeError, AttributeError) as exc:
        raise DataError(f"{path}:{line}: bad price row ({exc})") from None
    return symbol, bar


def load_prices(path: str | Path) -> dict[str, PriceSeries]:
    """Read ``symbol,date,open,high,low,close,volume`` rows into sorted series.

    Any invariant violation or a repeated ``(symbol, date)`` raises
    :class:`DataError` naming the offending line.
    """
    by_symbol: dict[str, dict[dt.date, PriceBar]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(PRICE_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"{path}: price header lacks {sorted(missing)}")
        for row in reader:
            symbol, bar = _parse_row(row, reader.line_num, path)
            bars = by_symbol.setdefault(symbol, {})
            if bar.date in bars:
                raise DataError(f"{path}:{reader.line_num}: duplicate bar {symbol} {bar.date}")
            bars[bar.date] = bar
    return {s: PriceSeries(s, bars.values()) for s, bars in sorted(by_symbol.items())}


def effective_date(series: PriceSeries, day: dt.date) -> dt.date | None:
    i = series.index_on_or_after(day)
    return None if i is None else series.bars[i].date


def moving_average(series: PriceSeries, day: dt.date, n: int) -> float | None:
    """Mean close over the last ``n`` bars dated on or before ``day``."""
    if n < 1:
        raise ValueError("window must be >= 1")
    i = series.index_on_or_before(day)
    return None if i is None else series.mean_close(i, n)


def forward_return(series: PriceSeries, signal_date: dt.date, horizon: int) -> float | None:
    """Percent change from the signal's effective close to the close ``horizon`` days later."""
    i0 = series.index_on_or_after(signal_date)
    if i0 is None:
        return None
    i1 = series.index_on_or_after(signal_date + dt.timedelta(days=horizon))
    if i1 is None:
        return None
    return float(100.0 * (series.closes[i1] / series.closes[i0] - 1.0))


def forward_returns_from_bars(series: PriceSeries, start: dt.date, end: dt.date, horizon: int) -> np.ndarray:
    """Defined forward returns for every bar dated in ``[start, end]``."""
    lo = int(np.searchsorted(series.dates, np.datetime64(start, "D"), side="left"))
    hi = int(np.searchsorted(series.dates, np.datetime64(end, "D"), side="right"))
    if hi <= lo:
        return np.empty(0)
    targets = series.dates[lo:hi] + np.timedelta64(horizon, "D")
    exits = np.searchsorted(series.dates, targets, side="left")
    ok = exits < len(series)
    entry = series.closes[lo:hi][ok]
    return 100.0 * (series.closes[exits[ok]] / entry - 1.0)


def total_change(series: PriceSeries, start: dt.date, end: dt.date) -> float | None:
    """Close at ``end`` as a percentage of the close at ``start``."""
    i0 = series.index_on_or_after(start)
    i1 = series.index_on_or_after(end)
    if i0 is None or i1 is None:
        return None
    return float(100.0 * series.closes[i1] / series.closes[i0])


def median_3m_change(series: PriceSeries, window_start: dt.date, window_end: dt.date, horizon: int = 90) -> float | None:
    rets = forward_returns_from_bars(series, window_start, window_end, horizon)
    if rets.size == 0:
        return None
    return float(np.median(rets))


def below_moving_average(series: PriceSeries, day: dt.date, n: int) -> bool | None:
    """Whether the effective close of ``day`` sits strictly below its ``n``-bar MA.

    ``None`` when the effective date or the average is undefined.
    """
    i = series.index_on_or_after(day)
    if i is None:
        return None
    ma = series.mean_close(i, n)
    if ma is None:
        return None
    return bool(series.closes[i] < ma)
