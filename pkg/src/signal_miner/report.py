"""Serialize evaluation results: CSV tables and a Markdown summary."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

from signal_miner.backtest import EvalReport, TopSet

METRICS_HEADER = ("source", "condition", "horizon", "n_signals", "n_evaluable", "accuracy", "mean_return")
DETECTION_HEADER = ("source", "unique_recommended", "detected", "top_set_size")
NA = "n/a"


def fmt(value: float | None, digits: int = 3) -> str:
    if value is None:
        return NA
    text = f"{value:.{digits}f}"
    # no "-0.000"
    return text[1:] if text.startswith("-") and float(text) == 0 else text


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def metric_cells(r: EvalReport) -> list[str]:
    return [r.source, r.condition, str(r.horizon), str(r.n_signals), str(r.n_evaluable),
            fmt(r.accuracy), fmt(r.mean_return)]


def write_metrics(reports: Sequence[EvalReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(METRICS_HEADER)
        for r in reports:
            w.writerow(metric_cells(r))


def write_split_metrics(by_period: Mapping[str, Sequence[EvalReport]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(("period",) + METRICS_HEADER)
        for label, reports in by_period.items():
            for r in reports:
                w.writerow([label] + metric_cells(r))


def write_detection(rows: Sequence[tuple[str, int, int]], top: TopSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(DETECTION_HEADER)
        for source, unique, detected in rows:
            w.writerow([source, unique, detected, len(top.symbols)])


def write_sectors(matrix: Mapping[str, Mapping[str, int]], sectors: Sequence[str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["source", *sectors])
        for source, tally in matrix.items():
            w.writerow([source, *(tally.get(s, 0) for s in sectors)])


def write_top_stocks(
    scores: Mapping[str, tuple[float | None, float | None]], top: TopSet, path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["symbol", "total_change", "median_3m_change", "top_by_total", "top_by_median"])
        for symbol in sorted(scores):
            tc, med = scores[symbol]
            w.writerow([symbol, fmt(tc), fmt(med), int(symbol in top.by_total), int(symbol in top.by_median)])


def _label(source: str, condition: str) -> str:
    return source if condition == "none" else f"{source} ({condition.upper()})"


def metrics_table(reports: Sequence[EvalReport], horizons: Sequence[int]) -> list[str]:
    """Markdown table: one row per (source, condition), accuracy then mean return per horizon."""
    cells: dict[tuple[str, str], dict[int, EvalReport]] = {}
    for r in reports:
        cells.setdefault((r.source, r.condition), {})[r.horizon] = r
    # MA-conditioned rows of a source directly follow its unconditioned row
    head = ["Source"] + [f"Acc {h}d" for h in horizons] + [f"Chg % {h}d" for h in horizons] + ["n"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for (source, condition), by_h in cells.items():
        row = [_label(source, condition)]
        row += [fmt(by_h[h].accuracy) if h in by_h else NA for h in horizons]
        row += [fmt(by_h[h].mean_return) if h in by_h else NA for h in horizons]
        row.append(str(next(iter(by_h.values())).n_signals))
        lines.append("| " + " | ".join(row) + " |")
    return lines
