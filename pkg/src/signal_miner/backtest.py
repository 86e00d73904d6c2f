"""Evaluate buy signals against price history.

Every function here is a pure fold over its inputs; signal order never
changes a result.
"""

from __future__ import annotations

import datetime as dt
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from signal_miner.analysts import AnalystRec
from signal_miner.market import (
    PriceSeries,
    below_moving_average,
    effective_date,
    forward_return,
    forward_returns_from_bars,
    median_3m_change,
    total_change,
)
from signal_miner.signals import DailyConsensus, Verdict
from signal_miner.tickers import TickerUniverse

HORIZONS = (7, 30, 90)
CONDITIONS = ("none", "ma30", "ma90")
HYPE_BOUNDARY = dt.date(2021, 1, 1)


class BuySignal(NamedTuple):
    source: str
    symbol: str
    date: dt.date


@dataclass(frozen=True)
class EvalReport:
    source: str
    condition: str
    horizon: int
    n_signals: int
    n_evaluable: int
    accuracy: float | None
    mean_return: float | None


@dataclass(frozen=True)
class TopSet:
    symbols: frozenset[str]
    by_total: tuple[str, ...]
    by_median: tuple[str, ...]
    total_cutoff: float | None
    median_cutoff: float | None
    window: tuple[dt.date, dt.date]


def _in_window(day: dt.date, window: tuple[dt.date, dt.date] | None) -> bool:
    return window is None or window[0] <= day <= window[1]


def wsb_signals(
    rows: Iterable[DailyConsensus], source: str = "WSB", window: tuple[dt.date, dt.date] | None = None
) -> list[BuySignal]:
    """One signal per (symbol, day) whose consensus is Buy."""
    return [
        BuySignal(source, r.symbol, r.date)
        for r in rows
        if r.consensus is Verdict.BUY and _in_window(r.date, window)
    ]


def analyst_signals(
    recs: Iterable[AnalystRec], window: tuple[dt.date, dt.date] | None = None
) -> dict[str, list[BuySignal]]:
    """Buy-verdict recommendation events grouped by firm."""
    out: dict[str, list[BuySignal]] = {}
    for r in recs:
        if r.verdict is Verdict.BUY and _in_window(r.date, window):
            out.setdefault(r.firm, []).append(BuySignal(r.firm, r.symbol, r.date))
    return out


def collect_signals(source: str, data, window: tuple[dt.date, dt.date] | None = None) -> list[BuySignal]:
    """Buy signals of one source from consensus rows or analyst recommendations."""
    data = list(data)
    if data and isinstance(data[0], AnalystRec):
        return analyst_signals([r for r in data if r.firm == source], window).get(source, [])
    return wsb_signals(data, source, window)


def apply_ma_condition(signals: Iterable[BuySignal], prices: Mapping[str, PriceSeries], n: int) -> list[BuySignal]:
    """Keep signals whose effective close is strictly below the ``n``-bar moving average."""
    kept = []
    for sig in signals:
        series = prices.get(sig.symbol)
        if series is not None and below_moving_average(series, sig.date, n):
            kept.append(sig)
    return kept


def condition_filter(signals: Sequence[BuySignal], prices: Mapping[str, PriceSeries], condition: str) -> list[BuySignal]:
    if condition == "none":
        return list(signals)
    if condition.startswith("ma") and condition[2:].isdigit():
        return apply_ma_condition(signals, prices, int(condition[2:]))
    raise ValueError(f"unknown condition {condition!r}")


def signal_returns(signals: Iterable[BuySignal], prices: Mapping[str, PriceSeries], horizon: int) -> list[float]:
    """Defined forward returns of the signals; undefined ones are left out."""
    out = []
    for sig in signals:
        series = prices.get(sig.symbol)
        if series is None:
            continue
        r = forward_return(series, sig.date, horizon)
        if r is not None:
            out.append(r)
    return out


def accuracy(signals: Iterable[BuySignal], prices: Mapping[str, PriceSeries], horizon: int) -> float | None:
    """Share of evaluable signals with a strictly positive forward return."""
    rets = signal_returns(signals, prices, horizon)
    if not rets:
        return None
    return sum(1 for r in rets if r > 0) / len(rets)


def mean_return(signals: Iterable[BuySignal], prices: Mapping[str, PriceSeries], horizon: int) -> float | None:
    rets = signal_returns(signals, prices, horizon)
    return math.fsum(rets) / len(rets) if rets else None


def evaluate(
    source: str,
    signals: Sequence[BuySignal],
    prices: Mapping[str, PriceSeries],
    horizons: Sequence[int] = HORIZONS,
    conditions: Sequence[str] = CONDITIONS,
) -> list[EvalReport]:
    reports = []
    for condition in conditions:
        subset = condition_filter(signals, prices, condition)
        for h in horizons:
            rets = signal_returns(subset, prices, h)
            acc = sum(1 for r in rets if r > 0) / len(rets) if rets else None
            mean = math.fsum(rets) / len(rets) if rets else None
            reports.append(EvalReport(source, condition, h, len(subset), len(rets), acc, mean))
    return reports


def _top_count(q: float, n: int) -> int:
    # guard against 0.15 * 20 == 3.0000000000000004
    return min(n, max(1, math.ceil(round(q * n, 9))))


def top_performers(
    prices: Mapping[str, PriceSeries],
    window: tuple[dt.date, dt.date],
    q: float = 0.15,
    universe: TickerUniverse | None = None,
    horizon: int = 90,
) -> TopSet:
    """Union of the top ``ceil(q*N)`` symbols by total change and by median 3-month change.

    ``N`` counts symbols whose series covers the window's first and last
    trading days, taken from the union calendar of all eligible series (so a
    window starting on a holiday still admits symbols listed that week).
    Ranking is descending with ties broken by symbol.
    """
    if not 0 < q <= 1:
        raise ValueError("quantile must be in (0, 1]")
    start, end = window
    eligible = {s: p for s, p in prices.items() if universe is None or s in universe}
    first_days = [effective_date(p, start) for p in eligible.values()]
    last_days = [p.bars[i].date for p in eligible.values() if (i := p.index_on_or_before(end)) is not None]
    first_days = [d for d in first_days if d is not None and d <= end]
    if not first_days or not last_days:
        raise ValueError("no symbol has price data covering the window")
    market_start, market_end = min(first_days), max(last_days)
    total: dict[str, float] = {}
    median: dict[str, float] = {}
    for symbol, series in eligible.items():
        if series.first_date > market_start or series.last_date < market_end:
            continue
        tc = total_change(series, start, end)
        if tc is None:
            continue
        total[symbol] = tc
        m = median_3m_change(series, start, end, horizon)
        if m is not None:
            median[symbol] = m
    if not total:
        raise ValueError("no symbol has price data covering the window")
    k = _top_count(q, len(total))
    by_total = tuple(sorted(total, key=lambda s: (-total[s], s))[:k])
    by_median = tuple(sorted(median, key=lambda s: (-median[s], s))[:k])
    return TopSet(
        symbols=frozenset(by_total) | frozenset(by_median),
        by_total=by_total,
        by_median=by_median,
        total_cutoff=total[by_total[-1]] if by_total else None,
        median_cutoff=median[by_median[-1]] if by_median else None,
        window=window,
    )


def detection_rate(signals: Iterable[BuySignal], top: TopSet) -> tuple[int, int]:
    """``(unique symbols recommended, how many of them are top performers)``."""
    recommended = {s.symbol for s in signals}
    return len(recommended), len(recommended & top.symbols)


def portfolio(signals: Iterable[BuySignal], k: int = 50) -> list[str]:
    """The ``k`` most frequently recommended symbols, ties broken by symbol."""
    counts = Counter(s.symbol for s in signals)
    return sorted(counts, key=lambda s: (-counts[s], s))[:k]


def portfolio_sectors(signals: Iterable[BuySignal], universe: TickerUniverse, k: int = 50) -> dict[str, int]:
    """Sector tally of the top-``k`` portfolio; symbols outside the universe are skipped."""
    tally: Counter = Counter()
    for symbol in portfolio([s for s in signals if s.symbol in universe], k):
        tally[universe.sector_of(symbol)] += 1
    return dict(sorted(tally.items()))


@dataclass(frozen=True)
class Period:
    label: str
    start: dt.date | None  # inclusive
    end: dt.date | None  # exclusive

    def contains(self, day: dt.date) -> bool:
        return (self.start is None or day >= self.start) and (self.end is None or day < self.end)


def make_periods(boundaries: Sequence[dt.date], labels: Sequence[str] | None = None) -> list[Period]:
    """Split the time line at sorted ``boundaries`` into ``len(boundaries) + 1`` periods.

    Default labels: ``pre-hype``/``post-hype`` around 2021-01-01 when that is
    the only boundary, otherwise ``before-<b0>``, ``<b0>..<b1>``, ``from-<bn>``.
    """
    bounds = list(boundaries)
    if bounds != sorted(bounds) or len(set(bounds)) != len(bounds):
        raise ValueError("period boundaries must be strictly increasing")
    edges = [None, *bounds, None]
    if labels is None:
        if bounds == [HYPE_BOUNDARY]:
            labels = ["pre-hype", "post-hype"]
        else:
            labels = []
            for lo, hi in zip(edges, edges[1:]):
                if lo is None:
                    labels.append(f"before-{hi.isoformat()}" if hi else "all")
                elif hi is None:
                    labels.append(f"from-{lo.isoformat()}")
                else:
                    labels.append(f"{lo.isoformat()}..{hi.isoformat()}")
    if len(labels) != len(edges) - 1:
        raise ValueError("need one label per period")
    return [Period(lab, lo, hi) for lab, lo, hi in zip(labels, edges, edges[1:])]


def period_split(
    signals: Iterable[BuySignal], boundaries: Sequence[dt.date], labels: Sequence[str] | None = None
) -> dict[str, list[BuySignal]]:
    """Partition signals by date; every period is present, possibly empty."""
    periods = make_periods(boundaries, labels)
    out: dict[str, list[BuySignal]] = {p.label: [] for p in periods}
    for sig in signals:
        for p in periods:
            if p.contains(sig.date):
                out[p.label].append(sig)
                break
    return out


def baseline_return(
    prices: Mapping[str, PriceSeries], start: dt.date, end: dt.date, horizon: int = 90
) -> float | None:
    """Mean forward return over every (symbol, bar date) with ``start <= date < end``."""
    last = end - dt.timedelta(days=1)
    parts = [forward_returns_from_bars(prices[s], start, last, horizon) for s in sorted(prices)]
    rets = np.concatenate(parts) if parts else np.empty(0)
    if rets.size == 0:
        return None
    return math.fsum(rets.tolist()) / rets.size
