"""Stock universe and ticker-mention detection."""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple

from signal_miner import kernels
from signal_miner.errors import ConfigError

log = logging.getLogger(__name__)

_SYMBOL_RE = re.compile(r"^[A-Z]+(?:\.[A-Z]+)?$")


class MentionCount(NamedTuple):
    symbol: str
    count: int


@dataclass(frozen=True)
class TickerEntry:
    symbol: str
    name: str
    sector: str


@dataclass(frozen=True)
class TickerUniverse:
    """Immutable stock list; ``lookup`` maps matchable tokens to symbols."""

    entries: tuple[TickerEntry, ...]
    ambiguous: frozenset[str]
    lookup: dict[str, str] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        symbols = [e.symbol for e in self.entries]
        if len(set(symbols)) != len(symbols):
            raise ConfigError("duplicate symbols in universe")
        for s in symbols:
            if not valid_symbol(s):
                raise ConfigError(f"invalid ticker symbol {s!r}")
        entries = tuple(sorted(self.entries, key=lambda e: e.symbol))
        ambiguous = frozenset(self.ambiguous & set(symbols)) | {s for s in symbols if len(s) == 1}
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "ambiguous", ambiguous)
        object.__setattr__(self, "lookup", _build_lookup(symbols, ambiguous))
        object.__setattr__(self, "_by_symbol", {e.symbol: e for e in entries})

    @property
    def symbols(self) -> list[str]:
        return [e.symbol for e in self.entries]

    @property
    def sectors(self) -> list[str]:
        return sorted({e.sector for e in self.entries})

    def sector_of(self, symbol: str) -> str:
        return self._by_symbol[symbol].sector

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._by_symbol

    def __len__(self) -> int:
        return len(self.entries)

    def is_ambiguous(self, symbol: str) -> bool:
        return symbol in self.ambiguous


def valid_symbol(symbol: str) -> bool:
    return bool(_SYMBOL_RE.match(symbol)) and 1 <= len(symbol.replace(".", "")) <= 5


def _build_lookup(symbols: Iterable[str], ambiguous: frozenset[str]) -> dict[str, str]:
    lookup: dict[str, str] = {}
    aliases: list[tuple[str, str]] = []
    for s in symbols:
        lookup["$" + s] = s
        if s not in ambiguous:
            lookup[s] = s
        if "." in s:
            bare = s.replace(".", "")
            aliases.append(("$" + bare, s))
            if s not in ambiguous:
                aliases.append((bare, s))
    # a dotless alias never shadows a real symbol
    for token, s in aliases:
        lookup.setdefault(token, s)
    return lookup


def read_symbol_list(path: str | Path) -> set[str]:
    """One symbol per line; blank lines and ``#`` comments ignored."""
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_symbol_lines(fh)


def default_ambiguous_words() -> set[str]:
    text = resources.files("signal_miner").joinpath("data/ambiguous.txt").read_text(encoding="utf-8")
    return _parse_symbol_lines(text.splitlines())


def _parse_symbol_lines(lines: Iterable[str]) -> set[str]:
    out = set()
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            out.add(line.upper())
    return out


def load_universe(path: str | Path, ambiguous_path: str | Path | None = None) -> TickerUniverse:
    """Load the universe CSV (``symbol,name,sector,ambiguous``).

    A symbol is ambiguous when its CSV flag is 1, when it has one character,
    or when it appears in the ambiguous-word list (``ambiguous_path``, or the
    bundled default list when not given).
    """
    entries = []
    flagged = set()
    seen = set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"symbol", "name", "sector", "ambiguous"} - set(reader.fieldnames or ())
        if missing:
            raise ConfigError(f"{path}: universe header lacks {sorted(missing)}")
        for row in reader:
            line = reader.line_num
            symbol = (row["symbol"] or "").strip()
            if not valid_symbol(symbol):
                raise ConfigError(f"{path}:{line}: invalid symbol {symbol!r}")
            if symbol in seen:
                raise ConfigError(f"{path}:{line}: duplicate symbol {symbol}")
            seen.add(symbol)
            flag = (row["ambiguous"] or "0").strip()
            if flag not in ("0", "1"):
                raise ConfigError(f"{path}:{line}: ambiguous must be 0 or 1, got {flag!r}")
            if flag == "1":
                flagged.add(symbol)
            entries.append(TickerEntry(symbol, (row["name"] or "").strip(), (row["sector"] or "").strip()))
    if not entries:
        raise ConfigError(f"{path}: universe is empty")
    words = read_symbol_list(ambiguous_path) if ambiguous_path else default_ambiguous_words()
    return TickerUniverse(tuple(entries), frozenset(flagged | (words & seen)))


def count_mentions(text: str, symbol: str, universe: TickerUniverse) -> int:
    return len(kernels.find_mentions(text, universe.lookup).get(symbol, ()))


def mention_spans(text: str, universe: TickerUniverse) -> dict[str, list[tuple[int, int]]]:
    return kernels.find_mentions(text, universe.lookup)


def detect_tickers(post, universe: TickerUniverse) -> list[MentionCount]:
    """Mention counts for every universe symbol found in ``post`` (a CleanPost or text)."""
    text = post if isinstance(post, str) else post.text
    found = kernels.find_mentions(text, universe.lookup)
    return [MentionCount(s, len(found[s])) for s in sorted(found)]
