"""Corpus streaming, author geolocation, admission policies, time partitions."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from datetime import datetime, time
from typing import IO, Iterable, Iterator, Optional, Union
from zoneinfo import ZoneInfo

from .errors import ConfigError
from .model import Author, Gazetteer, MicroPost

log = logging.getLogger(__name__)

# Rejection reason codes used by admit_post.
IS_RETWEET = "IS_RETWEET"
NO_LOCATION = "NO_LOCATION"
SHOUTING = "SHOUTING"
DUPLICATE = "DUPLICATE"


@dataclass(frozen=True)
class AdmissionPolicy:
    exclude_retweets: bool = False
    allow_retweets_by_located_accounts: bool = False
    reject_shouting: bool = True
    shouting_threshold: float = 0.9
    dedupe_within_issue: bool = True

    def __post_init__(self):
        if self.exclude_retweets and self.allow_retweets_by_located_accounts:
            raise ConfigError("BAD_POLICY", "exclude_retweets conflicts with "
                              "allow_retweets_by_located_accounts")
        if not 0.0 < self.shouting_threshold <= 1.0:
            raise ConfigError("BAD_POLICY", "shouting_threshold must be in (0,1]")


@dataclass(frozen=True)
class TimePartition:
    """Named local wall-clock window; end may wrap past midnight."""

    name: str
    start: time
    end: time

    def minutes(self) -> set[int]:
        """Minutes of the day covered, [start, end), wrapping at midnight."""
        a = self.start.hour * 60 + self.start.minute
        b = self.end.hour * 60 + self.end.minute
        if a == b:
            return set()
        if a < b:
            return set(range(a, b))
        return set(range(a, 24 * 60)) | set(range(0, b))

    def contains(self, local: datetime) -> bool:
        return local.hour * 60 + local.minute in self.minutes()


class PostStream:
    """Lazy JSON-Lines reader; malformed lines are skipped and counted."""

    def __init__(self, source: Union[IO[bytes], IO[str], Iterable[str]]):
        self._source = source
        self.skipped = 0

    def __iter__(self) -> Iterator[dict]:
        for lineno, line in enumerate(self._source, start=1):
            if isinstance(line, bytes):
                line = line.decode("utf-8", errors="replace")
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                self.skipped += 1
                log.warning("skipping malformed corpus line %d", lineno)
                continue
            if not isinstance(record, dict):
                self.skipped += 1
                log.warning("skipping non-object corpus line %d", lineno)
                continue
            yield record


def parse_post_stream(source) -> PostStream:
    """Stream raw records from a line-delimited corpus in file order."""
    return PostStream(source)


_FRAGMENT_SPLIT = re.compile(r"[,;/]")


def resolve_location(author: Author, gazetteer: Gazetteer) -> Optional[str]:
    """Match the self-reported location against the gazetteer.

    The profile string is split into fragments on commas, semicolons and
    slashes; the leftmost fragment with an alias hit wins.
    """
    for fragment in _FRAGMENT_SPLIT.split(author.self_reported_location):
        code = gazetteer.lookup(fragment)
        if code is not None:
            return code
    return None


def shouting_fraction(text: str) -> Optional[float]:
    """Uppercase fraction among cased letters; None when fewer than 10."""
    cased = [ch for ch in text if ch.isalpha() and (ch.isupper() or ch.islower())]
    if len(cased) < 10:
        return None
    upper = sum(1 for ch in cased if ch.isupper())
    return upper / len(cased)


_URL_RE = re.compile(r"https?://\S+|www\.\S+", re.IGNORECASE)
_WS_RE = re.compile(r"\s+")


def normalize_content(text: str) -> str:
    """Duplicate-content key: text with URLs removed and whitespace collapsed."""
    return _WS_RE.sub(" ", _URL_RE.sub("", text)).strip()


@dataclass(frozen=True)
class Admission:
    admitted: bool
    post: Optional[MicroPost] = None
    reason: Optional[str] = None


def admit_post(
    post: MicroPost,
    policy: AdmissionPolicy,
    gazetteer: Optional[Gazetteer] = None,
    seen_content: Optional[set[str]] = None,
) -> Admission:
    """Apply the enabled policy checks to one validated post.

    Posts must end up located: a retweet is admitted under
    allow_retweets_by_located_accounts when the retweeting account has a
    resolved location, which is then assigned to the post. ``seen_content``
    is the issue-scoped dedupe set; admitted keys are added to it.
    """
    if post.is_retweet and policy.exclude_retweets:
        return Admission(False, reason=IS_RETWEET)

    location = post.location
    if location is None and gazetteer is not None:
        location = resolve_location(post.author, gazetteer)
    if location is None:
        return Admission(False, reason=NO_LOCATION)

    if policy.reject_shouting:
        fraction = shouting_fraction(post.text)
        if fraction is not None and fraction >= policy.shouting_threshold:
            return Admission(False, reason=SHOUTING)

    if policy.dedupe_within_issue and seen_content is not None:
        key = normalize_content(post.text)
        if key in seen_content:
            return Admission(False, reason=DUPLICATE)
        seen_content.add(key)

    return Admission(True, post=post.with_location(location))


def validate_partitions(partitions: Iterable[TimePartition]) -> list[TimePartition]:
    parts = list(partitions)
    covered: set[int] = set()
    for part in parts:
        minutes = part.minutes()
        if covered & minutes:
            raise ConfigError("OVERLAPPING_PARTITIONS", part.name)
        covered |= minutes
    return parts


def partition_by_time(
    posts: Iterable[MicroPost],
    partitions: Iterable[TimePartition],
    tz: Union[str, ZoneInfo],
) -> tuple[dict[str, list[MicroPost]], int]:
    """Assign each post to the partition containing its local creation time.

    Returns (buckets, dropped); posts outside every window are dropped.
    """
    parts = validate_partitions(partitions)
    if isinstance(tz, str):
        tz = ZoneInfo(tz)
    buckets: dict[str, list[MicroPost]] = {p.name: [] for p in parts}
    dropped = 0
    for post in posts:
        local = datetime.fromtimestamp(post.created_at, tz)
        for part in parts:
            if part.contains(local):
                buckets[part.name].append(post)
                break
        else:
            dropped += 1
    return buckets, dropped


def load_partitions(path) -> tuple[list[TimePartition], str]:
    """JSON file: {"timezone": "...", "partitions": [{"name","start","end"}]}."""
    with open(path, encoding="utf-8") as fh:
        spec = json.load(fh)
    parts = [
        TimePartition(p["name"], time.fromisoformat(p["start"]), time.fromisoformat(p["end"]))
        for p in spec["partitions"]
    ]
    return validate_partitions(parts), spec.get("timezone", "UTC")


def load_policy(path) -> AdmissionPolicy:
    with open(path, encoding="utf-8") as fh:
        return AdmissionPolicy(**json.load(fh))
