"""Read Pushshift-style submission dumps and reduce them to clean, proactive posts."""

from __future__ import annotations

import datetime as dt
import enum
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from signal_miner import kernels

log = logging.getLogger(__name__)

PROACTIVE_FLAIRS = (
    "Discussion",
    "YOLO",
    "DD",
    "News",
    "Options",
    "Stocks",
    "Technical Analysis",
    "Fundamentals",
    "Chart",
    "Technicals",
    "Daily Discussion",
    "Futures",
)
REACTIVE_FLAIRS = ("Meme", "Gain", "Loss", "Shitpost", "Satire", "Storytime", "Donation")

_REMOVED_BODIES = ("[removed]", "[deleted]")


class FlairCategory(enum.Enum):
    PROACTIVE = "proactive"
    REACTIVE = "reactive"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class FlairClass:
    category: FlairCategory
    kind: str | None = None

    @property
    def is_proactive(self) -> bool:
        return self.category is FlairCategory.PROACTIVE


UNKNOWN_FLAIR = FlairClass(FlairCategory.UNKNOWN)
_FLAIR_LOOKUP = {
    **{k.casefold(): FlairClass(FlairCategory.PROACTIVE, k) for k in PROACTIVE_FLAIRS},
    **{k.casefold(): FlairClass(FlairCategory.REACTIVE, k) for k in REACTIVE_FLAIRS},
}


@dataclass(frozen=True, slots=True)
class RawSubmission:
    id: str
    created_utc: int
    title: str = ""
    selftext: str = ""
    link_flair_text: str | None = None
    score: int = 0
    removed_by_category: str | None = None

    @property
    def date(self) -> dt.date:
        return utc_date(self.created_utc)


@dataclass(frozen=True, slots=True)
class CleanPost:
    id: str
    date: dt.date
    text: str
    flair: FlairClass
    score: int = 0


def utc_date(timestamp: int) -> dt.date:
    return dt.datetime.fromtimestamp(timestamp, tz=dt.timezone.utc).date()


def _as_int(value) -> int:
    if isinstance(value, bool):
        raise ValueError("boolean is not an integer")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"non-integral value {value!r}")
        return int(value)
    if isinstance(value, str):
        return _as_int(float(value)) if "." in value else int(value)
    raise ValueError(f"not an integer: {value!r}")


def _opt_str(value) -> str | None:
    if value is None:
        return None
    if not isinstance(value, str):
        raise ValueError(f"not a string: {value!r}")
    return value or None


def parse_submission(obj: dict) -> RawSubmission:
    """Build a :class:`RawSubmission` from one decoded JSON object.

    Raises ``ValueError``/``KeyError``/``TypeError`` on missing or ill-typed
    required fields.
    """
    sub_id = obj["id"]
    if not isinstance(sub_id, str) or not sub_id:
        raise ValueError("id must be a non-empty string")
    created = _as_int(obj["created_utc"])
    if created <= 0:
        raise ValueError("created_utc must be positive")
    score = obj.get("score")
    return RawSubmission(
        id=sub_id,
        created_utc=created,
        title=_opt_str(obj.get("title")) or "",
        selftext=_opt_str(obj.get("selftext")) or "",
        link_flair_text=_opt_str(obj.get("link_flair_text")),
        score=0 if score is None else _as_int(score),
        removed_by_category=_opt_str(obj.get("removed_by_category")),
    )


class SubmissionReader:
    """Lazy iterator over a JSON Lines submission dump.

    Malformed lines and repeated ids are skipped and counted in
    :attr:`malformed` and :attr:`duplicates`; the counters are complete once
    iteration finishes. Opening an unreadable file raises ``OSError``.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.malformed = 0
        self.duplicates = 0

    def __iter__(self) -> Iterator[RawSubmission]:
        self.malformed = 0
        self.duplicates = 0
        seen: set[str] = set()
        with self.path.open("r", encoding="utf-8", errors="replace") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    if not isinstance(obj, dict):
                        raise ValueError("line is not a JSON object")
                    sub = parse_submission(obj)
                except (ValueError, KeyError, TypeError) as exc:
                    self.malformed += 1
                    log.warning("%s:%d: skipping malformed line (%s)", self.path, lineno, exc)
                    continue
                if sub.id in seen:
                    self.duplicates += 1
                    log.warning("%s:%d: skipping duplicate id %s", self.path, lineno, sub.id)
                    continue
                seen.add(sub.id)
                yield sub


def load_submissions(path: str | Path) -> SubmissionReader:
    return SubmissionReader(path)


def is_visible(sub: RawSubmission) -> bool:
    if sub.removed_by_category:
        return False
    return sub.selftext not in _REMOVED_BODIES


def classify_flair(flair_text: str | None) -> FlairClass:
    if not flair_text:
        return UNKNOWN_FLAIR
    return _FLAIR_LOOKUP.get(flair_text.strip().casefold(), UNKNOWN_FLAIR)


def normalize_text(title: str, selftext: str) -> str:
    """Join title and body with one space and normalize the result.

    >>> normalize_text("Buy $AAPL!!!", "")
    'Buy $AAPL'
    """
    return kernels.normalize(f"{title} {selftext}")


@dataclass
class IngestStats:
    read: int = 0
    malformed: int = 0
    duplicates: int = 0
    removed: int = 0
    reactive: int = 0
    unknown_flair: int = 0
    retained: int = 0
    posts_per_day: Counter = field(default_factory=Counter)

    def summary(self) -> str:
        return (
            f"{self.read} read, {self.retained} retained "
            f"(dropped: {self.removed} removed, {self.reactive} reactive, "
            f"{self.unknown_flair} unknown flair; skipped: {self.malformed} malformed, "
            f"{self.duplicates} duplicate)"
        )


def ingest(path: str | Path) -> tuple[list[CleanPost], IngestStats]:
    """Run the cleaning pipeline and keep per-reason drop counts.

    ``posts_per_day`` counts every loaded submission, visible or not, by UTC
    date. Posts come back sorted by ``(date, id)``.
    """
    stats = IngestStats()
    reader = load_submissions(path)
    posts = []
    for sub in reader:
        stats.read += 1
        day = sub.date
        stats.posts_per_day[day] += 1
        if not is_visible(sub):
            stats.removed += 1
            continue
        flair = classify_flair(sub.link_flair_text)
        if flair.category is FlairCategory.REACTIVE:
            stats.reactive += 1
            continue
        if flair.category is FlairCategory.UNKNOWN:
            stats.unknown_flair += 1
            continue
        posts.append(CleanPost(sub.id, day, normalize_text(sub.title, sub.selftext), flair, sub.score))
    stats.malformed = reader.malformed
    stats.duplicates = reader.duplicates
    stats.retained = len(posts)
    posts.sort(key=lambda p: (p.date, p.id))
    return posts, stats


def clean_pipeline(path: str | Path) -> list[CleanPost]:
    return ingest(path)[0]


# -- cache files -----------------------------------------------------------

def write_clean_posts(posts: list[CleanPost], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in posts:
            rec = {"id": p.id, "date": p.date.isoformat(), "flair": p.flair.kind, "score": p.score, "text": p.text}
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def read_clean_posts(path: str | Path) -> list[CleanPost]:
    posts = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            flair = classify_flair(rec["flair"])
            posts.append(CleanPost(rec["id"], dt.date.fromisoformat(rec["date"]), rec["text"], flair, rec["score"]))
    return posts


def write_posts_per_day(counts: Counter, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("date,posts\n")
        for day in sorted(counts):
            fh.write(f"{day.isoformat()},{counts[day]}\n")


def read_posts_per_day(path: str | Path) -> dict[dt.date, int]:
    counts = {}
    with open(path, "r", encoding="utf-8") as fh:
        next(fh, None)
        for line in fh:
            if line.strip():
                day, n = line.strip().split(",")
                counts[dt.date.fromisoformat(day)] = int(n)
    return counts
