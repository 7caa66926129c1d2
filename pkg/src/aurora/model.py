"""Core domain types: locations, authors, micro-posts, timelines.

All timestamps are POSIX seconds (UTC). Value types are frozen dataclasses
and safe to share across threads.
"""

from __future__ import annotations

import csv
import re
import unicodedata
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Iterable, Mapping, Optional

from .errors import ConfigError, ValidationError

MAX_TEXT_CHARS = 140

# Timeline selection methods. PM is the geo-sidelining selector, DIV the
# entropy-greedy baseline, POP the popularity top-s baseline.
METHODS = ("POP", "DIV", "PM")


class LocationRegistry:
    """Ordered set of location codes; index order drives stable color hues."""

    def __init__(self, entries: Iterable[tuple[str, str]]):
        self._codes: list[str] = []
        self._names: dict[str, str] = {}
        for code, name in entries:
            code = code.strip().upper()
            if not code:
                raise ConfigError("BAD_REGISTRY", "empty location code")
            if code in self._names:
                raise ConfigError("BAD_REGISTRY", f"duplicate location code {code}")
            self._codes.append(code)
            self._names[code] = name.strip()
        if len(self._codes) < 2:
            raise ConfigError("BAD_REGISTRY", "registry needs at least 2 locations")

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(self._codes)

    def __len__(self) -> int:
        return len(self._codes)

    def __contains__(self, code: str) -> bool:
        return code in self._names

    def __iter__(self):
        return iter(self._codes)

    def name_of(self, code: str) -> str:
        return self._names[code]

    def index_of(self, code: str) -> int:
        return self._codes.index(code)

    def require(self, code: str) -> str:
        if code not in self._names:
            raise ConfigError("UNKNOWN_LOCATION", code)
        return code


def chilean_regions() -> LocationRegistry:
    """The 15 first-level Chilean regions, north to south; RM is the capital."""
    return LocationRegistry([
        ("XV", "Arica y Parinacota"),
        ("I", "Tarapacá"),
        ("II", "Antofagasta"),
        ("III", "Atacama"),
        ("IV", "Coquimbo"),
        ("V", "Valparaíso"),
        ("RM", "Metropolitana de Santiago"),
        ("VI", "O'Higgins"),
        ("VII", "Maule"),
        ("VIII", "Biobío"),
        ("IX", "La Araucanía"),
        ("XIV", "Los Ríos"),
        ("X", "Los Lagos"),
        ("XI", "Aysén"),
        ("XII", "Magallanes"),
    ])


@dataclass(frozen=True)
class Author:
    id: str
    screen_name: str = ""
    self_reported_location: str = ""
    followers: int = 0
    friends: int = 0
    statuses: int = 0
    account_created_at: float = 0.0

    def __post_init__(self):
        if not self.id:
            raise ValidationError("MISSING_FIELD", "author.id")
        for name in ("followers", "friends", "statuses"):
            if getattr(self, name) < 0:
                raise ValidationError("NEGATIVE_COUNT", f"author.{name}")


@dataclass(frozen=True)
class MicroPost:
    id: str
    author: Author
    text: str
    created_at: float
    retweet_count: int = 0
    hashtags: frozenset[str] = frozenset()
    urls: frozenset[str] = frozenset()
    mentions: frozenset[str] = frozenset()
    reply_to: Optional[str] = None
    retweet_of: Optional[tuple[str, str]] = None  # (post id, author id)
    location: Optional[str] = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("MISSING_FIELD", "id")
        if len(self.text) > MAX_TEXT_CHARS:
            raise ValidationError("TEXT_TOO_LONG", f"{len(self.text)} chars")
        if self.retweet_count < 0:
            raise ValidationError("NEGATIVE_COUNT", "retweet_count")

    @property
    def is_retweet(self) -> bool:
        return self.retweet_of is not None

    def with_location(self, code: Optional[str]) -> "MicroPost":
        return replace(self, location=code)


@dataclass(frozen=True)
class Timeline:
    """A filtered list of posts produced by one selector at one instant."""

    posts: tuple[MicroPost, ...]
    method: str
    source_window: tuple[float, float]
    shortfall: bool = False
    relaxations: int = 0

    def __post_init__(self):
        ids = [p.id for p in self.posts]
        if len(set(ids)) != len(ids):
            raise ValidationError("DUPLICATE_POST", "timeline contains repeated post ids")
        if self.method not in METHODS:
            raise ValidationError("BAD_METHOD", self.method)

    def __len__(self) -> int:
        return len(self.posts)

    def locations(self) -> list[Optional[str]]:
        return [p.location for p in self.posts]


_WS_RE = re.compile(r"\s+")


def normalize_place(text: str) -> str:
    """Lowercase, strip diacritics (NFKD), collapse whitespace, trim.

    Idempotent; used for gazetteer aliases and lookups.
    """
    text = unicodedata.normalize("NFKD", text)
    text = "".join(ch for ch in text if not unicodedata.combining(ch))
    return _WS_RE.sub(" ", text.lower()).strip()


class Gazetteer:
    """Alias table mapping normalized free-text place names to location codes."""

    def __init__(self, aliases: Mapping[str, str], registry: LocationRegistry):
        self._aliases: dict[str, str] = {}
        for alias, code in aliases.items():
            registry.require(code.strip().upper())
            self._aliases[normalize_place(alias)] = code.strip().upper()

    def lookup(self, fragment: str) -> Optional[str]:
        return self._aliases.get(normalize_place(fragment))

    def __len__(self) -> int:
        return len(self._aliases)


class PopulationTable:
    """Population share per location; shares sum to 1 and cover the registry."""

    def __init__(self, shares: Mapping[str, float], registry: LocationRegistry):
        missing = [c for c in registry.codes if c not in shares]
        if missing:
            raise ConfigError("MISSING_POPULATION", ",".join(missing))
        total = 0.0
        self._shares: dict[str, float] = {}
        for code, share in shares.items():
            registry.require(code)
            if not 0.0 < share <= 1.0:
                raise ConfigError("BAD_SHARE", f"{code}={share}")
            self._shares[code] = float(share)
            total += share
        if abs(total - 1.0) > 1e-9:
            raise ConfigError("BAD_SHARE", f"shares sum to {total}, expected 1")

    def share(self, code: str) -> float:
        return self._shares[code]

    def __contains__(self, code: str) -> bool:
        return code in self._shares

    def items(self):
        return self._shares.items()


def _parse_timestamp(value) -> float:
    """Accept POSIX seconds or ISO-8601; returns POSIX seconds UTC."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
        try:
            dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
        except ValueError as exc:
            raise ValidationError("BAD_TIMESTAMP", value) from exc
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()
    raise ValidationError("BAD_TIMESTAMP", repr(value))


def _require(record: Mapping, key: str):
    if key not in record or record[key] in (None, ""):
        raise ValidationError("MISSING_FIELD", key)
    return record[key]


def validate_post(record: Mapping) -> MicroPost:
    """Build a MicroPost from one raw corpus record, or raise a reason-coded error.

    Total over inputs: every record yields a MicroPost or exactly one
    ValidationError (MISSING_FIELD, TEXT_TOO_LONG, BAD_TIMESTAMP, ...).
    """
    if not isinstance(record, Mapping):
        raise ValidationError("BAD_RECORD", "record is not an object")
    post_id = str(_require(record, "id"))
    raw_author = _require(record, "author")
    if not isinstance(raw_author, Mapping):
        raise ValidationError("MISSING_FIELD", "author")
    author = Author(
        id=str(_require(raw_author, "id")),
        screen_name=str(raw_author.get("screen_name", "")),
        self_reported_location=str(raw_author.get("location", "")),
        followers=int(raw_author.get("followers", 0)),
        friends=int(raw_author.get("friends", 0)),
        statuses=int(raw_author.get("statuses", 0)),
        account_created_at=_parse_timestamp(raw_author.get("created_at", 0.0)),
    )
    text = record.get("text")
    if text is None:
        raise ValidationError("MISSING_FIELD", "text")
    text = str(text)
    if len(text) > MAX_TEXT_CHARS:
        raise ValidationError("TEXT_TOO_LONG", f"{len(text)} chars")
    created_at = _parse_timestamp(_require(record, "created_at"))
    entities = record.get("entities") or {}
    retweeted = record.get("retweeted_status")
    retweet_of = None
    if retweeted:
        retweet_of = (str(_require(retweeted, "id")), str(_require(retweeted, "author_id")))
    return MicroPost(
        id=post_id,
        author=author,
        text=text,
        created_at=created_at,
        retweet_count=int(record.get("retweet_count", 0)),
        hashtags=frozenset(str(h) for h in entities.get("hashtags", [])),
        urls=frozenset(str(u) for u in entities.get("urls", [])),
        mentions=frozenset(str(m) for m in entities.get("mentions", [])),
        reply_to=(str(record["reply_to_author_id"]) if record.get("reply_to_author_id") else None),
        retweet_of=retweet_of,
        location=(str(record["location"]).upper() if record.get("location") else None),
    )


def post_to_record(post: MicroPost) -> dict:
    """Inverse of validate_post: serialize back to the corpus record shape."""
    record = {
        "id": post.id,
        "text": post.text,
        "created_at": post.created_at,
        "author": {
            "id": post.author.id,
            "screen_name": post.author.screen_name,
            "location": post.author.self_reported_location,
            "followers": post.author.followers,
            "friends": post.author.friends,
            "statuses": post.author.statuses,
            "created_at": post.author.account_created_at,
        },
        "retweet_count": post.retweet_count,
        "entities": {
            "hashtags": sorted(post.hashtags),
            "urls": sorted(post.urls),
            "mentions": sorted(post.mentions),
        },
    }
    if post.reply_to:
        record["reply_to_author_id"] = post.reply_to
    if post.retweet_of:
        record["retweeted_status"] = {"id": post.retweet_of[0], "author_id": post.retweet_of[1]}
    if post.location:
        record["location"] = post.location
    return record


def load_registry(path) -> LocationRegistry:
    """CSV with columns code,name (header optional)."""
    return LocationRegistry(_read_csv_pairs(path, ("code", "name")))


def load_population(path, registry: LocationRegistry) -> PopulationTable:
    """CSV with columns code,share."""
    shares = {code: float(share) for code, share in _read_csv_pairs(path, ("code", "share"))}
    return PopulationTable(shares, registry)


def load_gazetteer(path, registry: LocationRegistry) -> Gazetteer:
    """CSV with columns alias,code."""
    return Gazetteer(dict(_read_csv_pairs(path, ("alias", "code"))), registry)


def _read_csv_pairs(path, header: tuple[str, str]) -> list[tuple[str, str]]:
    pairs = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or row[0].startswith("#"):
                continue
            if i == 0 and tuple(c.strip().lower() for c in row[:2]) == header:
                continue
            if len(row) < 2:
                raise ConfigError("BAD_CSV", f"{path}:{i + 1}")
            pairs.append((row[0].strip(), row[1].strip()))
    return pairs
