"""The publication cycle of the announcement bot.

Per issue: two announcement posts (mentioning featured authors and featured
retweeters), then one retweet per minute cycling the issue without
repetition. Hourly at minute 45, one digest per active location links the
issue filtered to that location, attaching its top terms by tf-idf over the
trailing hour. Posts go through a pluggable transport; no real network
client ships.
"""

from __future__ import annotations

import json
import math
import random
import re
import time
import urllib.request
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional, Sequence

from .errors import BotError
from .model import LocationRegistry, MicroPost, MAX_TEXT_CHARS
from .service import Issue

ANNOUNCEMENT_OFFSETS_S = (0.0, 5.0)
RETWEET_INTERVAL_S = 60.0
DIGEST_MINUTE = 45
DIGEST_SECOND = 30  # staggered inside minute 45, clear of the retweet cadence
MAX_MENTIONS = 4

TWEETS_TEMPLATE = "Nueva edición con tweets destacados de {mentions} {link}"
RETWEETS_TEMPLATE = "Nueva edición con retweets destacados de {mentions} {link}"
DIGEST_TEMPLATE = "Lo más comentado en {name}: {terms} {link}"


@dataclass(frozen=True)
class BotPost:
    kind: str  # announcement_tweets | announcement_retweets | retweet | location_digest
    text: str
    link: str
    scheduled_at: float
    mentions: tuple[str, ...] = ()
    attachment: Optional[tuple[tuple[str, float], ...]] = None
    retweet_of: Optional[str] = None

    def __post_init__(self):
        if len(self.text) > MAX_TEXT_CHARS:
            raise BotError("TEXT_TOO_LONG", f"{len(self.text)} chars")

    def to_record(self) -> dict:
        record = {
            "kind": self.kind,
            "text": self.text,
            "link": self.link,
            "scheduled_at": self.scheduled_at,
            "mentions": list(self.mentions),
        }
        if self.attachment is not None:
            record["attachment"] = [[term, weight] for term, weight in self.attachment]
        if self.retweet_of is not None:
            record["retweet_of"] = self.retweet_of
        return record


def _compose(template: str, mentions: Sequence[str], link: str, **extra) -> tuple[str, tuple[str, ...]]:
    """Fill the template, dropping trailing mentions until the text fits 140 chars."""
    kept = list(mentions)
    while True:
        text = template.format(mentions=" ".join(f"@{m}" for m in kept), link=link, **extra)
        text = re.sub(r"\s+", " ", text).strip()
        if len(text) <= MAX_TEXT_CHARS or not kept:
            break
        kept.pop()
    if len(text) > MAX_TEXT_CHARS:
        text = text[: MAX_TEXT_CHARS - 1].rstrip() + "…"
    return text, tuple(kept)


def issue_url(url_base: str, issue_id: int, location: Optional[str] = None) -> str:
    url = f"{url_base.rstrip('/')}/timeline/{issue_id}"
    if location:
        url += f"#{location}"
    return url


def compose_announcements(issue: Issue, rng: random.Random, url_base: str,
                          scheduled_at: Optional[float] = None) -> list[BotPost]:
    """Two issue announcements: featured-tweet authors and featured-retweeters.

    Up to four distinct handles each, sampled uniformly; issues with fewer
    candidates mention what they have. Samples are drawn independently.
    """
    at = issue.generated_at if scheduled_at is None else scheduled_at
    posts = list(issue.served.posts)
    original_authors = sorted({p.author.screen_name or p.author.id
                               for p in posts if not p.is_retweet})
    retweet_authors = sorted({p.author.screen_name or p.author.id
                              for p in posts if p.is_retweet})
    link = issue_url(url_base, issue.id)
    out = []
    for template, handles, kind, offset in (
        (TWEETS_TEMPLATE, original_authors, "announcement_tweets", ANNOUNCEMENT_OFFSETS_S[0]),
        (RETWEETS_TEMPLATE, retweet_authors, "announcement_retweets", ANNOUNCEMENT_OFFSETS_S[1]),
    ):
        sample = sorted(rng.sample(handles, min(MAX_MENTIONS, len(handles))))
        text, kept = _compose(template, sample, link)
        out.append(BotPost(kind=kind, text=text, link=link,
                           scheduled_at=at + offset, mentions=kept))
    return out


def schedule_retweets(issue: Issue, period_s: float = 1800.0,
                      interval_s: float = RETWEET_INTERVAL_S,
                      start: Optional[float] = None) -> list[BotPost]:
    """One retweet per minute after the announcements, cycling the issue's
    posts without repetition until the next issue is due."""
    begin = issue.generated_at if start is None else start
    slots = int(period_s // interval_s) - 1  # minute 0 belongs to the announcements
    out = []
    for k, post in enumerate(issue.served.posts[:max(slots, 0)]):
        out.append(BotPost(
            kind="retweet",
            text="",
            link="",
            scheduled_at=begin + (k + 1) * interval_s,
            retweet_of=post.id,
        ))
    return out


# Spanish function words; enough to keep digests focused on content terms.
DEFAULT_STOPWORDS = frozenset("""
a al algo ante antes como con contra cual cuando de del desde donde dos durante
e el ella ellas ellos en entre era eran es esa esas ese eso esos esta estaba
estamos estan este esto estos fue fueron ha haber habia han hasta hay hoy la
las le les lo los mas me mi mia mientras muy nada ni no nos nosotros o os otra
otro para pero poco por porque que quien se sea segun ser si sin sobre son su
sus tambien te tiene tienen toda todas todo todos tras tu un una uno unos ya yo
""".split())

_TOKEN_RE = re.compile(r"[^\W\d_]+", re.UNICODE)
_URL_RE = re.compile(r"https?://\S+|www\.\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")


def tokenize(text: str, stopwords: frozenset[str] = DEFAULT_STOPWORDS) -> list[str]:
    text = _MENTION_RE.sub(" ", _URL_RE.sub(" ", text.lower()))
    return [t for t in _TOKEN_RE.findall(text) if len(t) >= 2 and t not in stopwords]


def tfidf_terms(location_posts: Sequence[MicroPost], all_posts: Sequence[MicroPost],
                k: int = 10, stopwords: frozenset[str] = DEFAULT_STOPWORDS) -> list[tuple[str, float]]:
    """Top-k terms of one location against per-location document aggregates.

    tf counts the term inside the location's posts; idf = ln(N/(1+df)) over
    the per-location aggregates of ``all_posts``, floored at zero so terms
    present everywhere rank by frequency instead of inverting the order.
    Ties break by frequency, then lexicographically.
    """
    if not location_posts:
        raise BotError("EMPTY_SET", "no posts for location")
    docs: dict[Optional[str], set[str]] = {}
    for post in all_posts:
        docs.setdefault(post.location, set()).update(tokenize(post.text, stopwords))
    n_docs = len(docs)
    df: dict[str, int] = {}
    for terms in docs.values():
        for term in terms:
            df[term] = df.get(term, 0) + 1

    tf: dict[str, int] = {}
    for post in location_posts:
        for term in tokenize(post.text, stopwords):
            tf[term] = tf.get(term, 0) + 1
    scored = [(term, count * max(0.0, math.log(n_docs / (1 + df.get(term, 0)))))
              for term, count in tf.items()]
    scored.sort(key=lambda ts: (-ts[1], -tf[ts[0]], ts[0]))
    return scored[:k]


def compose_location_digests(issue: Issue, hour_posts: Sequence[MicroPost],
                             registry: LocationRegistry, now: float, url_base: str,
                             k: int = 10,
                             stopwords: frozenset[str] = DEFAULT_STOPWORDS,
                             ) -> tuple[list[BotPost], int]:
    """One digest per registered location with activity in the trailing hour.

    Must run at minute 45 of the hour; locations without posts are omitted
    and counted. Digests are staggered one second apart from second 30 so no
    two bot posts share a scheduled_at.
    """
    if datetime.fromtimestamp(now, timezone.utc).minute != DIGEST_MINUTE:
        raise BotError("WRONG_MINUTE", f"digests run at minute {DIGEST_MINUTE}")
    by_location: dict[str, list[MicroPost]] = {}
    for post in hour_posts:
        if post.location:
            by_location.setdefault(post.location, []).append(post)
    out = []
    omitted = 0
    base = now - datetime.fromtimestamp(now, timezone.utc).second + DIGEST_SECOND
    for i, code in enumerate(registry.codes):
        posts = by_location.get(code)
        if not posts:
            omitted += 1
            continue
        terms = tfidf_terms(posts, hour_posts, k=k, stopwords=stopwords)
        link = issue_url(url_base, issue.id, location=code)
        text, _ = _compose(DIGEST_TEMPLATE, [], link,
                           name=registry.name_of(code),
                           terms=", ".join(t for t, _ in terms[:3]))
        out.append(BotPost(
            kind="location_digest",
            text=text,
            link=link,
            scheduled_at=base + i,
            attachment=tuple(terms),
        ))
    return out, omitted


def plan_cycle(issue: Issue, hour_posts: Sequence[MicroPost],
               registry: LocationRegistry, rng: random.Random, url_base: str,
               period_s: float = 1800.0) -> list[BotPost]:
    """All bot posts of one issue cycle, ordered by scheduled_at.

    Includes the hourly digests when an hh:45 instant falls inside the cycle.
    """
    posts = compose_announcements(issue, rng, url_base)
    posts += schedule_retweets(issue, period_s=period_s)
    start = issue.generated_at
    dt = datetime.fromtimestamp(start, timezone.utc)
    minute_offset = (DIGEST_MINUTE - dt.minute) % 60
    digest_at = start - dt.second - dt.microsecond / 1e6 + minute_offset * 60
    if digest_at < start:
        digest_at += 3600
    if start <= digest_at < start + period_s:
        digests, _ = compose_location_digests(issue, hour_posts, registry,
                                              now=digest_at, url_base=url_base)
        posts += digests
    posts.sort(key=lambda p: p.scheduled_at)
    seen = set()
    for post in posts:
        if post.scheduled_at in seen:
            raise BotError("SCHEDULE_COLLISION", f"{post.kind} at {post.scheduled_at}")
        seen.add(post.scheduled_at)
    return posts


class FileSink:
    """Dry-run transport: BotPosts as JSON Lines."""

    def __init__(self, path: str):
        self.path = path
        self._fh = open(path, "a", encoding="utf-8")

    def publish(self, post: BotPost) -> None:
        self._fh.write(json.dumps(post.to_record(), ensure_ascii=False) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


class MemorySink:
    """In-process transport for tests and demos."""

    def __init__(self):
        self.published: list[BotPost] = []

    def publish(self, post: BotPost) -> None:
        self.published.append(post)


class HttpTransport:
    """POSTs BotPost JSON to a stub endpoint, with bounded retry."""

    def __init__(self, url: str, retries: int = 3, backoff_s: float = 0.5):
        self.url = url
        self.retries = retries
        self.backoff_s = backoff_s

    def publish(self, post: BotPost) -> None:
        body = json.dumps(post.to_record()).encode("utf-8")
        request = urllib.request.Request(self.url, data=body,
                                         headers={"Content-Type": "application/json"})
        last_error = None
        for attempt in range(self.retries):
            try:
                with urllib.request.urlopen(request, timeout=10):
                    return
            except OSError as exc:
                last_error = exc
                time.sleep(self.backoff_s * (attempt + 1))
        raise BotError("TRANSPORT_FAILED", str(last_error))
