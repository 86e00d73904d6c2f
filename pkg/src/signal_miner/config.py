"""Run configuration: flat ``key = value`` files overridden by CLI flags."""

from __future__ import annotations

import configparser
import datetime as dt
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from signal_miner.signals import Mode


class UsageError(Exception):
    """Bad or missing run settings; the CLI exits with status 2."""


PATH_KEYS = ("posts", "universe", "prices", "analysts", "lexicon", "ambiguous", "firms", "out_dir")


@dataclass(frozen=True)
class RunConfig:
    posts: Path | None = None
    universe: Path | None = None
    prices: Path | None = None
    analysts: Path | None = None
    lexicon: Path | None = None
    ambiguous: Path | None = None
    firms: Path | None = None
    out_dir: Path = Path("out")
    start: dt.date = dt.date(2018, 1, 1)
    end: dt.date = dt.date(2022, 3, 22)
    mode: Mode = Mode.DEFAULT
    horizons: tuple[int, ...] = (7, 30, 90)
    conditions: tuple[str, ...] = ("none", "ma30", "ma90")
    quantile: float = 0.15
    split: tuple[dt.date, ...] = ()
    min_posts: int = 1
    top_k: int = 20
    portfolio_k: int = 50
    window: int = 20
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)

    def __post_init__(self):
        if not self.start < self.end:
            raise UsageError(f"study window start {self.start} must precede end {self.end}")
        if not self.horizons or any(h <= 0 for h in self.horizons):
            raise UsageError("horizons must be a non-empty list of positive day counts")
        for c in self.conditions:
            if c != "none" and not (c.startswith("ma") and c[2:].isdigit() and int(c[2:]) >= 1):
                raise UsageError(f"unknown condition {c!r} (expected none or maN, e.g. ma30)")
        if not self.conditions:
            raise UsageError("conditions must not be empty")
        if not 0 < self.quantile <= 1:
            raise UsageError("quantile must be in (0, 1]")
        if list(self.split) != sorted(set(self.split)):
            raise UsageError("split dates must be strictly increasing")
        for name in ("min_posts", "top_k", "portfolio_k", "threads"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be >= 1")
        if self.window < 0:
            raise UsageError("window must be >= 0")

    @property
    def study_window(self) -> tuple[dt.date, dt.date]:
        return self.start, self.end

    @property
    def workers(self) -> int:
        """Worker count after applying the ``SIGNAL_MINER_THREADS`` cap."""
        cap = os.environ.get("SIGNAL_MINER_THREADS")
        if not cap:
            return self.threads
        try:
            return max(1, min(self.threads, int(cap)))
        except ValueError:
            raise UsageError(f"SIGNAL_MINER_THREADS must be an integer, got {cap!r}") from None


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise UsageError(f"invalid date {text!r} (expected YYYY-MM-DD)") from None


def _int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise UsageError(f"invalid integer {text!r}") from None


def _csv(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _float(text: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise UsageError(f"invalid number {text!r}") from None


def _mode(text: str) -> Mode:
    try:
        return Mode(text.strip())
    except ValueError:
        raise UsageError(f"invalid mode {text!r} (expected default or proximity)") from None


_PARSERS = {
    **{k: lambda v: Path(v.strip()) for k in PATH_KEYS},
    "start": _date,
    "end": _date,
    "mode": _mode,
    "horizons": lambda v: tuple(_int(x) for x in _csv(v)),
    "conditions": lambda v: tuple(x.lower() for x in _csv(v)),
    "quantile": _float,
    "split": lambda v: tuple(_date(x) for x in _csv(v)),
    "min_posts": _int,
    "top_k": _int,
    "portfolio_k": _int,
    "window": _int,
    "threads": _int,
}


def parse_settings(raw: Mapping[str, str]) -> dict[str, Any]:
    """Convert string settings to typed values; unknown keys are a usage error."""
    out = {}
    for key, value in raw.items():
        key = key.strip().lower().replace("-", "_")
        if key not in _PARSERS:
            raise UsageError(f"unknown setting {key!r}")
        out[key] = _PARSERS[key](value)
    return out


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Read a flat ``key = value`` file; relative paths resolve against the file's directory."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    parser = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    try:
        parser.read_string("[run]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from None
    settings = parse_settings(dict(parser["run"]))
    for key in PATH_KEYS:
        if key in settings and not settings[key].is_absolute():
            settings[key] = path.parent / settings[key]
    return settings


def build_config(file_settings: Mapping[str, Any] | None = None, flag_settings: Mapping[str, Any] | None = None) -> RunConfig:
    """Defaults, then config-file values, then flags."""
    merged: dict[str, Any] = {}
    merged.update(file_settings or {})
    merged.update({k: v for k, v in (flag_settings or {}).items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    return replace(RunConfig(), **{k: v for k, v in merged.items() if k in known})
