"""``signal-miner`` command line.

Every stage reads its inputs from files and writes its outputs to the output
directory, so stages can be run and inspected one at a time:

    ingest     posts dump          -> posts.jsonl, posts_per_day.csv
    signals    posts.jsonl         -> consensus[_proximity].csv (+ enriched)
    analysts   recommendations     -> recs.csv, analyst_exceptions.csv
    backtest   all of the above    -> metrics.csv, detection.csv, sectors.csv, summary.md
    top-stocks prices              -> top_stocks.csv
    portfolio  signals             -> sectors.csv

Exit status: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import sys
from pathlib import Path
from typing import Sequence

from signal_miner import __version__, kernels
from signal_miner.analysts import AnalystRec, load_recs, read_firms, read_recs, top_firms, write_recs
from signal_miner.backtest import (
    BuySignal,
    TopSet,
    analyst_signals,
    baseline_return,
    detection_rate,
    evaluate,
    make_periods,
    mean_return,
    period_split,
    portfolio,
    portfolio_sectors,
    top_performers,
    wsb_signals,
)
from signal_miner.config import RunConfig, UsageError, build_config, parse_settings, read_config_file
from signal_miner.errors import SignalMinerError
from signal_miner.ingest import ingest, read_clean_posts, read_posts_per_day, write_clean_posts, write_posts_per_day
from signal_miner.market import load_prices, median_3m_change, total_change
from signal_miner.report import (
    NA,
    fmt,
    metrics_table,
    write_detection,
    write_metrics,
    write_sectors,
    write_split_metrics,
    write_top_stocks,
)
from signal_miner.signals import (
    Mode,
    Verdict,
    aggregate_daily,
    enrich,
    extract_signals,
    load_lexicon,
    read_consensus,
    write_consensus,
    write_enriched,
)
from signal_miner.tickers import load_universe

log = logging.getLogger("signal_miner")

POSTS_CACHE = "posts.jsonl"
CALENDAR_CACHE = "posts_per_day.csv"
RECS_CACHE = "recs.csv"
Q1_2022 = (dt.date(2022, 1, 1), dt.date(2022, 4, 1))


def consensus_name(mode: Mode) -> str:
    return "consensus.csv" if mode is Mode.DEFAULT else f"consensus_{mode.value}.csv"


def wsb_source(mode: Mode) -> str:
    return "WSB" if mode is Mode.DEFAULT else "WSB-prox"


def _need(cfg: RunConfig, *keys: str) -> None:
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise UsageError("missing required input(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _out(cfg: RunConfig) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir


# -- stages ------------------------------------------------------------------

def run_ingest(cfg: RunConfig) -> str:
    _need(cfg, "posts")
    posts, stats = ingest(cfg.posts)
    out = _out(cfg)
    write_clean_posts(posts, out / POSTS_CACHE)
    write_posts_per_day(stats.posts_per_day, out / CALENDAR_CACHE)
    return stats.summary()


def _clean_posts(cfg: RunConfig):
    cache = cfg.out_dir / POSTS_CACHE
    if cache.exists():
        return read_clean_posts(cache)
    if cfg.posts is None:
        raise UsageError(f"no {cache}; run 'ingest' first or pass --posts")
    run_ingest(cfg)
    return read_clean_posts(cache)


def build_consensus(cfg: RunConfig, mode: Mode):
    universe = load_universe(cfg.universe, cfg.ambiguous)
    lexicon = load_lexicon(cfg.lexicon)
    posts = _clean_posts(cfg)
    signals = extract_signals(posts, universe, lexicon, mode, cfg.window, cfg.workers)
    return aggregate_daily(signals, cfg.min_posts)


def run_signals(cfg: RunConfig) -> str:
    _need(cfg, "universe")
    out = _out(cfg)
    path = out / consensus_name(cfg.mode)
    if _universe_is_empty(cfg.universe):
        log.warning("universe %s has no symbols; writing empty consensus", cfg.universe)
        write_consensus([], path)
        return f"0 consensus rows -> {path}"
    rows = build_consensus(cfg, cfg.mode)
    write_consensus(rows, path)
    n_buy = sum(r.consensus is Verdict.BUY for r in rows)
    n_sell = sum(r.consensus is Verdict.SELL for r in rows)
    msg = [f"{len(rows)} (symbol, day) rows, {n_buy} consensus Buy, {n_sell} consensus Sell -> {path}"]
    if cfg.prices is not None:
        calendar_path = out / CALENDAR_CACHE
        calendar = read_posts_per_day(calendar_path) if calendar_path.exists() else {}
        enriched_path = path.with_name(path.stem.replace("consensus", "enriched") + ".csv")
        write_enriched(enrich(rows, load_prices(cfg.prices), calendar), enriched_path)
        msg.append(f"enriched rows -> {enriched_path}")
    return "\n".join(msg)


def _universe_is_empty(path: Path) -> bool:
    with open(path, "r", encoding="utf-8") as fh:
        return sum(1 for line in fh if line.strip()) <= 1


def _analyst_recs(cfg: RunConfig):
    """Load recommendations; keep the listed firms, or the ``top_k`` busiest ones."""
    firms_filter = read_firms(cfg.firms) if cfg.firms is not None else None
    loaded = load_recs(cfg.analysts, firms_filter)
    firms = top_firms(loaded.recs, cfg.top_k if firms_filter is None else max(1, len(firms_filter)))
    chosen = set(firms)
    return [r for r in loaded.recs if r.firm in chosen], firms, loaded


def run_analysts(cfg: RunConfig) -> str:
    _need(cfg, "analysts")
    recs, firms, loaded = _analyst_recs(cfg)
    out = _out(cfg)
    write_recs(recs, out / RECS_CACHE)
    write_recs(loaded.unknown, out / "analyst_exceptions.csv")
    counts = loaded.verdict_counts()
    return (
        f"{len(loaded.recs)} recommendations: "
        + ", ".join(f"{counts.get(v, 0)} {v}" for v in Verdict)
        + f"; {loaded.malformed} malformed, {loaded.collapsed} same-day repeats collapsed\n"
        + f"firms ({len(firms)}): " + ", ".join(firms)
    )


def _firm_order(recs: list[AnalystRec]) -> list[str]:
    return top_firms(recs, max(1, len({r.firm for r in recs}))) if recs else []


def gather_sources(cfg: RunConfig) -> dict[str, list[BuySignal]]:
    """Buy signals inside the study window, per source, in report order."""
    sources: dict[str, list[BuySignal]] = {}
    have_posts = (cfg.out_dir / POSTS_CACHE).exists() or cfg.posts is not None
    for mode in (Mode.DEFAULT, Mode.PROXIMITY):
        path = cfg.out_dir / consensus_name(mode)
        if path.exists():
            rows = read_consensus(path)
        elif have_posts and cfg.universe is not None:
            rows = build_consensus(cfg, mode)
            write_consensus(rows, _out(cfg) / consensus_name(mode))
        else:
            continue
        sources[wsb_source(mode)] = wsb_signals(rows, wsb_source(mode), cfg.study_window)
    if not sources:
        raise UsageError("no WSB consensus available; run 'ingest' and 'signals' or pass --posts and --universe")
    recs: list[AnalystRec] | None = None
    if cfg.analysts is not None:
        recs = _analyst_recs(cfg)[0]
    elif (cfg.out_dir / RECS_CACHE).exists():
        recs = read_recs(cfg.out_dir / RECS_CACHE)
    if recs:
        by_firm = analyst_signals(recs, cfg.study_window)
        for firm in _firm_order(recs):
            sources[firm] = by_firm.get(firm, [])
    return sources


def run_backtest(cfg: RunConfig) -> str:
    _need(cfg, "prices", "universe")
    universe = load_universe(cfg.universe, cfg.ambiguous)
    prices = load_prices(cfg.prices)
    sources = gather_sources(cfg)
    out = _out(cfg)

    reports = []
    for name, sigs in sources.items():
        reports.extend(evaluate(name, sigs, prices, cfg.horizons, cfg.conditions))
    write_metrics(reports, out / "metrics.csv")

    top = top_performers(prices, cfg.study_window, cfg.quantile, universe)
    detection = [(name, *detection_rate(sigs, top)) for name, sigs in sources.items()]
    write_detection(detection, top, out / "detection.csv")

    matrix = {name: portfolio_sectors(sigs, universe, cfg.portfolio_k) for name, sigs in sources.items()}
    write_sectors(matrix, universe.sectors, out / "sectors.csv")

    periods = make_periods(cfg.split) if cfg.split else []
    split_reports = {p.label: [] for p in periods}
    for name, sigs in sources.items() if periods else ():
        for label, subset in period_split(sigs, cfg.split).items():
            split_reports[label].extend(evaluate(name, subset, prices, cfg.horizons, cfg.conditions))
    if periods:
        write_split_metrics(split_reports, out / "metrics_split.csv")

    summary = render_summary(cfg, sources, reports, detection, top, matrix, split_reports, prices)
    (out / "summary.md").write_text(summary, encoding="utf-8")
    n = sum(len(s) for s in sources.values())
    return f"{len(sources)} sources, {n} buy signals in window; reports written to {out}"


def _pct(value: float | None) -> str:
    return NA if value is None else fmt(value) + "%"


def render_summary(cfg, sources, reports, detection, top: TopSet, matrix, split_reports, prices) -> str:
    lines = [
        "# Buy-signal evaluation",
        "",
        f"Study window {cfg.start} to {cfg.end}. Sources: {', '.join(sources)}.",
        "",
        "## Accuracy and mean price change",
        "",
        *metrics_table(reports, cfg.horizons),
        "",
        "## Top performers",
        "",
        f"Top-set size {len(top.symbols)}. Top by total change: {', '.join(top.by_total) or '-'} "
        f"(cutoff {_pct(top.total_cutoff)} of initial value). Top by median 3-month change: "
        f"{', '.join(top.by_median) or '-'} (cutoff {_pct(top.median_cutoff)}).",
        "",
        "| Source | Unique recommended | Detected |",
        "|---|---|---|",
        *(f"| {name} | {unique} | {detected} |" for name, unique, detected in detection),
        "",
        "## Portfolio sectors",
        "",
    ]
    sectors = sorted({s for tally in matrix.values() for s in tally})
    lines.append("| Source | " + " | ".join(sectors) + " |")
    lines.append("|---|" + "---|" * len(sectors))
    for name, tally in matrix.items():
        lines.append(f"| {name} | " + " | ".join(str(tally.get(s, 0)) for s in sectors) + " |")
    short = [name for name, sigs in sources.items() if len(portfolio(sigs, cfg.portfolio_k)) < cfg.portfolio_k]
    if short:
        lines += ["", f"Fewer than {cfg.portfolio_k} distinct symbols (all used): {', '.join(short)}."]

    lines += ["", "## Market baseline", ""]
    q_start, q_end = Q1_2022
    base = baseline_return(prices, q_start, q_end, 90)
    lines.append(f"All-stock mean 90-day change for signals dated {q_start}..{q_end - dt.timedelta(days=1)}: "
                 f"{_pct(base)}.")
    lines.append("")
    lines.append("| Source | Mean 90-day change | n |")
    lines.append("|---|---|---|")
    for name, sigs in sources.items():
        in_q = [s for s in sigs if q_start <= s.date < q_end]
        lines.append(f"| {name} | {fmt(mean_return(in_q, prices, 90))} | {len(in_q)} |")

    for period in make_periods(cfg.split) if cfg.split else ():
        reps = split_reports[period.label]
        label = period.label
        lo = period.start.isoformat() if period.start else "start"
        hi = period.end.isoformat() if period.end else "end"
        lines += ["", f"## Period {label} ({lo} to {hi}, end exclusive)", "", *metrics_table(reps, cfg.horizons)]
        if period.start and period.end:
            lines.append("")
            lines.append(f"All-stock baseline 90-day change: {_pct(baseline_return(prices, period.start, period.end))}.")
    lines.append("")
    return "\n".join(lines)


def run_top_stocks(cfg: RunConfig) -> str:
    _need(cfg, "prices")
    prices = load_prices(cfg.prices)
    universe = load_universe(cfg.universe, cfg.ambiguous) if cfg.universe is not None else None
    top = top_performers(prices, cfg.study_window, cfg.quantile, universe)
    scores = {}
    for symbol, series in prices.items():
        if universe is not None and symbol not in universe:
            continue
        scores[symbol] = (total_change(series, cfg.start, cfg.end), median_3m_change(series, cfg.start, cfg.end))
    path = _out(cfg) / "top_stocks.csv"
    write_top_stocks(scores, top, path)
    return f"{len(top.symbols)} top performers: {', '.join(sorted(top.symbols))} -> {path}"


def run_portfolio(cfg: RunConfig) -> str:
    _need(cfg, "universe")
    universe = load_universe(cfg.universe, cfg.ambiguous)
    sources = gather_sources(cfg)
    matrix = {name: portfolio_sectors(sigs, universe, cfg.portfolio_k) for name, sigs in sources.items()}
    path = _out(cfg) / "sectors.csv"
    write_sectors(matrix, universe.sectors, path)
    return f"{len(matrix)} portfolios of up to {cfg.portfolio_k} symbols -> {path}"


COMMANDS = {
    "ingest": run_ingest,
    "signals": run_signals,
    "analysts": run_analysts,
    "backtest": run_backtest,
    "top-stocks": run_top_stocks,
    "portfolio": run_portfolio,
}


# -- argument parsing ----------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="flat key = value settings file")
    p.add_argument("--posts", help="submission dump (JSON Lines)")
    p.add_argument("--universe", help="ticker universe CSV")
    p.add_argument("--prices", help="daily price CSV")
    p.add_argument("--analysts", help="analyst recommendations CSV")
    p.add_argument("--lexicon", help="keyword lexicon file")
    p.add_argument("--ambiguous", help="ambiguous ticker list, one symbol per line")
    p.add_argument("--firms", help="firms to keep, one per line")
    p.add_argument("--out-dir", dest="out_dir", help="output directory (default: out)")
    p.add_argument("--start", help="study window start, YYYY-MM-DD")
    p.add_argument("--end", help="study window end, YYYY-MM-DD")
    p.add_argument("--mode", help="default | proximity")
    p.add_argument("--window", help="proximity window in characters (default 20)")
    p.add_argument("--min-posts", dest="min_posts", help="minimum posts behind a consensus (default 1)")
    p.add_argument("--top-k", dest="top_k", help="number of analyst firms to keep (default 20)")
    p.add_argument("--portfolio-k", dest="portfolio_k", help="portfolio size (default 50)")
    p.add_argument("--horizons", help="comma-separated calendar-day horizons (default 7,30,90)")
    p.add_argument("--conditions", help="comma-separated: none, ma30, ma90 (default all)")
    p.add_argument("--quantile", help="top-performer quantile (default 0.15)")
    p.add_argument("--split", help="comma-separated period boundaries, e.g. 2021-01-01")
    p.add_argument("--threads", help="worker processes (capped by SIGNAL_MINER_THREADS)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="signal-miner", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({kernels.BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    common = _common_flags()
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} stage")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose") and v is not None}
    file_settings = read_config_file(args.config) if args.config else {}
    return build_config(file_settings, parse_settings(flags))


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = config_from_args(args)
        print(COMMANDS[args.command](cfg))
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"signal-miner: error: {exc}", file=sys.stderr)
        return 2
    except (SignalMinerError, OSError, ValueError) as exc:
        print(f"signal-miner: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
