"""Issue generation service: scheduling, sticky conditions, event recording.

Issues are generated on a fixed grid (every half hour by default) from the
trailing ingestion window; the geo-diverse timeline is the served default
and the two baselines are kept alongside for research comparison. Sessions
are cookie-bound and keep their randomly assigned interface condition for
life. Every interaction lands in an append-only JSON Lines log whose
sequence numbers define the canonical event order.
"""

from __future__ import annotations

import bisect
import ipaddress
import json
import logging
import os
import random
import re
import threading
import time as time_mod
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .diversity import FilterConfig, derive_seed, generate_all
from .errors import FilterError, ServiceError
from .events import (CONDITIONS, EVENT_TYPES, TARGETED_EVENT_TYPES,
                     InteractionEvent)
from .model import LocationRegistry, MicroPost, PopulationTable, Timeline
from .treemap import LayoutTree, Rect, WeightSpec, layout_issue

log = logging.getLogger(__name__)

REFERENCE_VIEWPORT = Rect(0.0, 0.0, 1200.0, 800.0)

_MOBILE_UA = re.compile(r"mobile|android|iphone|ipad|ipod", re.IGNORECASE)


def classify_user_agent(user_agent: str) -> str:
    return "mobile" if _MOBILE_UA.search(user_agent or "") else "desktop"


@dataclass(frozen=True)
class Issue:
    id: int
    generated_at: float
    timelines: dict[str, Timeline]
    layout: LayoutTree

    @property
    def served(self) -> Timeline:
        return self.timelines["PM"]


@dataclass
class Session:
    session_id: str
    condition: str
    group: str
    created_at: float
    last_seen: float
    user_agent_class: str


class EventLog:
    """Append-only JSON Lines event sink with strictly increasing sequence numbers.

    Appends are serialized through one lock; the file is flushed per append
    and fsynced every ``fsync_every`` records (and on close).
    """

    def __init__(self, path: str, fsync_every: int = 32):
        self.path = path
        self._lock = threading.Lock()
        self._fsync_every = max(1, fsync_every)
        self._pending = 0
        self._seq = 0
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        try:
                            self._seq = max(self._seq, int(json.loads(line).get("seq", 0)))
                        except (json.JSONDecodeError, ValueError, AttributeError):
                            continue
        self._fh = open(path, "a", encoding="utf-8")

    def append(self, fields: dict) -> InteractionEvent:
        with self._lock:
            self._seq += 1
            event = InteractionEvent(seq=self._seq, **fields)
            self._fh.write(json.dumps(event.to_record(), ensure_ascii=False) + "\n")
            self._fh.flush()
            self._pending += 1
            if self._pending >= self._fsync_every:
                os.fsync(self._fh.fileno())
                self._pending = 0
            return event

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.flush()
                os.fsync(self._fh.fileno())
                self._fh.close()


class GeoDatabase:
    """IPv4 range lookup backed by a CSV of start_ip,end_ip,region_code rows."""

    def __init__(self, ranges: Iterable[tuple[str, str, str]]):
        rows = []
        for start, end, code in ranges:
            lo = int(ipaddress.IPv4Address(start))
            hi = int(ipaddress.IPv4Address(end))
            if hi < lo:
                lo, hi = hi, lo
            rows.append((lo, hi, code.strip().upper()))
        rows.sort()
        self._starts = [r[0] for r in rows]
        self._rows = rows

    @classmethod
    def from_csv(cls, path: str) -> "GeoDatabase":
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#") or line.lower().startswith("start_ip"):
                    continue
                start, end, code = [part.strip() for part in line.split(",")[:3]]
                rows.append((start, end, code))
        return cls(rows)

    def resolve(self, ip: str) -> Optional[str]:
        try:
            value = int(ipaddress.IPv4Address(ip))
        except (ipaddress.AddressValueError, ValueError):
            return None
        i = bisect.bisect_right(self._starts, value) - 1
        if i >= 0 and self._rows[i][0] <= value <= self._rows[i][1]:
            return self._rows[i][2]
        return None


def geolocate(ip: str, database: Optional[GeoDatabase], central: str = "RM") -> str:
    """Map an IP to the central-location group: RM, NOT-RM or UNKNOWN."""
    if database is None:
        return "UNKNOWN"
    code = database.resolve(ip)
    if code is None:
        return "UNKNOWN"
    return "RM" if code == central else "NOT-RM"


@dataclass
class ServiceSettings:
    period_s: int = 1800
    timeline_size: int = 30
    turns: int = 5
    seed: int = 0
    popular_quantile: float = 0.25
    condition_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    central_location: str = "RM"
    pool_window_s: int = 6 * 3600
    url_base: str = "http://localhost:8000"
    viewport: Rect = field(default_factory=lambda: REFERENCE_VIEWPORT)


class IssueService:
    """Owns issues, sessions and the event log; pure-Python, HTTP-agnostic."""

    def __init__(self, registry: LocationRegistry, population: PopulationTable,
                 event_log: EventLog, geo: Optional[GeoDatabase] = None,
                 settings: Optional[ServiceSettings] = None,
                 now: Callable[[], float] = time_mod.time):
        self.registry = registry
        self.population = population
        self.settings = settings or ServiceSettings()
        self.event_log = event_log
        self.geo = geo
        self.now = now
        self._rng = random.Random(self.settings.seed)
        self._sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()
        self._issues: dict[int, Issue] = {}
        self._issues_by_grid: dict[int, Issue] = {}
        self._issues_lock = threading.Lock()
        self._next_issue_id = 1
        self._post_locations: dict[str, Optional[str]] = {}
        self._weight_spec = WeightSpec(population=population)
        self.generation_gaps = 0

    # -- issues -------------------------------------------------------------

    def generate_issue(self, pool: Sequence[MicroPost], now: Optional[float] = None) -> Optional[Issue]:
        """Build and store the issue for the grid instant covering ``now``.

        Idempotent per grid instant. An empty pool records a gap and yields
        None; the next grid instant tries again.
        """
        instant = self.now() if now is None else now
        grid = int(instant - (instant % self.settings.period_s))
        with self._issues_lock:
            existing = self._issues_by_grid.get(grid)
            if existing is not None:
                return existing
            if not pool:
                self.generation_gaps += 1
                log.warning("issue generation skipped at %d: empty pool", grid)
                return None
            config = FilterConfig(
                size=self.settings.timeline_size,
                turns=self.settings.turns,
                seed=derive_seed(self.settings.seed, f"issue:{grid}"),
                popular_quantile=self.settings.popular_quantile,
            )
            try:
                timelines = generate_all(pool, config)
            except FilterError:
                self.generation_gaps += 1
                log.warning("issue generation failed at %d", grid)
                return None
            layout = layout_issue(timelines["PM"], self.settings.viewport,
                                  self._weight_spec, self.registry, now=float(grid))
            issue = Issue(id=self._next_issue_id, generated_at=float(grid),
                          timelines=timelines, layout=layout)
            self._next_issue_id += 1
            self._issues[issue.id] = issue
            self._issues_by_grid[grid] = issue
            for timeline in timelines.values():
                for post in timeline.posts:
                    self._post_locations[post.id] = post.location
            return issue

    def current_issue(self) -> Optional[Issue]:
        with self._issues_lock:
            if not self._issues:
                return None
            return self._issues[max(self._issues)]

    def get_issue(self, ref, loc: Optional[str] = None,
                  session_id: Optional[str] = None) -> dict:
        """Issue payload for the UI; a location code marks an initial filter
        and records the implicit location_filter event."""
        if ref == "current":
            issue = self.current_issue()
        else:
            try:
                issue = self._issues.get(int(ref))
            except (TypeError, ValueError):
                issue = None
        if issue is None:
            raise ServiceError("NOT_FOUND", str(ref))
        initial_filter = None
        if loc:
            code = loc.strip().upper()
            if code not in self.registry:
                raise ServiceError("BAD_LOCATION", loc)
            initial_filter = code
            if session_id is not None and self.session(session_id) is not None:
                self.record_event(session_id, "location_filter",
                                  issue_id=issue.id, target=code)
        return self._payload(issue, initial_filter, session_id)

    def _payload(self, issue: Issue, initial_filter: Optional[str],
                 session_id: Optional[str]) -> dict:
        session = self.session(session_id) if session_id else None
        timeline = issue.served
        return {
            "issue_id": issue.id,
            "generated_at": issue.generated_at,
            "condition": session.condition if session else None,
            "initial_filter": initial_filter,
            "locations": list(self.registry.codes),
            "posts": [
                {
                    "id": p.id,
                    "text": p.text,
                    "author_id": p.author.id,
                    "author": p.author.screen_name or p.author.id,
                    "created_at": p.created_at,
                    "retweet_count": p.retweet_count,
                    "location": p.location,
                    "urls": sorted(p.urls),
                }
                for p in timeline.posts
            ],
            "layout": issue.layout.to_dict(),
            "methods": {name: [p.id for p in tl.posts]
                        for name, tl in issue.timelines.items()},
        }

    # -- sessions -----------------------------------------------------------

    def session(self, session_id: Optional[str]) -> Optional[Session]:
        if not session_id:
            return None
        with self._sessions_lock:
            return self._sessions.get(session_id)

    def open_session(self, cookie: Optional[str], user_agent: str = "",
                     ip: str = "") -> tuple[Session, bool]:
        """Return the cookie's session, or assign a fresh condition and create one.

        The condition sticks for the session's whole life; a malformed or
        unknown cookie falls back to a new session.
        """
        existing = self.session(cookie)
        instant = self.now()
        if existing is not None:
            existing.last_seen = instant
            self.record_event(existing.session_id, "session_restored")
            return existing, False
        with self._sessions_lock:
            token = f"{self._rng.getrandbits(128):032x}"
            condition = self._rng.choices(CONDITIONS,
                                          weights=self.settings.condition_weights)[0]
            session = Session(
                session_id=token,
                condition=condition,
                group=geolocate(ip, self.geo, self.settings.central_location),
                created_at=instant,
                last_seen=instant,
                user_agent_class=classify_user_agent(user_agent),
            )
            self._sessions[token] = session
        self.event_log.append({
            "session_id": session.session_id,
            "event_type": "session_created",
            "server_ts": instant,
            "condition": session.condition,
            "group": session.group,
            "ua_class": session.user_agent_class,
        })
        return session, True

    # -- events -------------------------------------------------------------

    def record_event(self, session_id: str, event_type: str,
                     issue_id: Optional[int] = None, target: Optional[str] = None,
                     client_ts: Optional[float] = None) -> InteractionEvent:
        """Validate and append one event; the ack carries the sequence number."""
        session = self.session(session_id)
        if session is None:
            raise ServiceError("UNAUTHENTICATED", "unknown session")
        if event_type not in EVENT_TYPES:
            raise ServiceError("BAD_EVENT", f"unknown event_type {event_type!r}")
        location = None
        if event_type in TARGETED_EVENT_TYPES:
            if not target:
                raise ServiceError("BAD_EVENT", f"{event_type} requires a target")
            if event_type == "location_filter":
                code = target.strip().upper()
                if code not in self.registry:
                    raise ServiceError("BAD_EVENT", f"unknown location {target!r}")
                target = code
                location = code
            else:
                location = self._post_locations.get(target)
        session.last_seen = self.now()
        return self.event_log.append({
            "session_id": session_id,
            "event_type": event_type,
            "server_ts": self.now(),
            "issue_id": issue_id,
            "target": target,
            "location": location,
            "client_ts": client_ts,
        })


class IssueScheduler:
    """Background thread generating one issue per grid instant."""

    def __init__(self, service: IssueService,
                 pool_provider: Callable[[float], Sequence[MicroPost]]):
        self.service = service
        self.pool_provider = pool_provider
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def tick(self) -> Optional[Issue]:
        now = self.service.now()
        return self.service.generate_issue(self.pool_provider(now), now)

    def start(self) -> None:
        def run():
            self.tick()
            while not self._stop.is_set():
                now = self.service.now()
                period = self.service.settings.period_s
                wait = period - (now % period)
                if self._stop.wait(timeout=wait + 0.05):
                    break
                self.tick()

        self._thread = threading.Thread(target=run, name="issue-scheduler", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread:
            self._thread.join(timeout=5)


def trailing_pool(posts: Sequence[MicroPost], window_s: int) -> Callable[[float], list[MicroPost]]:
    """Pool provider over a static corpus: posts inside the trailing window."""
    ordered = sorted(posts, key=lambda p: p.created_at)

    def provider(now: float) -> list[MicroPost]:
        return [p for p in ordered if now - window_s <= p.created_at <= now]

    return provider
