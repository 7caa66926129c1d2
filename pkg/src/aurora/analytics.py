"""Derive per-user behavioral variables from event logs.

One user = one session lineage (the cookie persists across visits, so the
session id is the user key). Users are excluded when they are mobile,
script-disabled (no client events), not geolocatable, active under ten
seconds, or inside the top 5% of dwell time; the remaining users yield the
three dependent variables: distinct locations interacted with, whether any
location filter was used, and content events per active day.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Sequence

from .events import CLIENT_EVENT_TYPES, CONTENT_EVENT_TYPES, InteractionEvent

MIN_DWELL_SECONDS = 10.0
TOP_DWELL_FRACTION = 0.05


@dataclass(frozen=True)
class UserRecord:
    user_key: str
    group: str
    condition: str
    active_days: int
    dwell_seconds: float
    distinct_locations: int
    filter_likelihood: int
    content_events_per_day: float

    @property
    def location(self) -> str:
        """Alias so model formulas can say C(location) for the RM/NOT-RM group."""
        return self.group


def distinct_locations(events: Iterable[InteractionEvent]) -> int:
    """Number of different locations whose content the user touched."""
    return len({e.location for e in events
                if e.event_type in CONTENT_EVENT_TYPES and e.location})


def filter_likelihood(events: Iterable[InteractionEvent]) -> int:
    """1 iff the user ever filtered by location (URL-induced filters count)."""
    return 1 if any(e.event_type == "location_filter" for e in events) else 0


def content_events(events: Iterable[InteractionEvent], active_days: int,
                   include_retweet_clicks: bool = True) -> float:
    """Content interactions normalized by the number of distinct active days."""
    kinds = CONTENT_EVENT_TYPES if include_retweet_clicks \
        else CONTENT_EVENT_TYPES - {"retweet_click"}
    count = sum(1 for e in events if e.event_type in kinds)
    return count / max(active_days, 1)


def _utc_day(ts: float) -> str:
    return datetime.fromtimestamp(ts, timezone.utc).strftime("%Y-%m-%d")


def dwell_seconds(events: Sequence[InteractionEvent]) -> float:
    """Active time summed per calendar day (first to last event of each day)."""
    by_day: dict[str, list[float]] = {}
    for e in events:
        by_day.setdefault(_utc_day(e.server_ts), []).append(e.server_ts)
    return sum(max(ts) - min(ts) for ts in by_day.values())


def active_days(events: Sequence[InteractionEvent]) -> int:
    return max(1, len({_utc_day(e.server_ts) for e in events}))


def sessionize_and_filter(events: Iterable[InteractionEvent],
                          include_retweet_clicks: bool = True) -> list[UserRecord]:
    """Group events into users, apply the exclusion rules, compute variables.

    Deterministic over replays of the same log: users come out sorted by key,
    and the top-dwell cut uses (dwell, key) ordering.
    """
    by_user: dict[str, list[InteractionEvent]] = {}
    for event in events:
        by_user.setdefault(event.session_id, []).append(event)

    survivors: list[tuple[str, list[InteractionEvent], float, str, str]] = []
    for key in sorted(by_user):
        user_events = sorted(by_user[key], key=lambda e: e.seq)
        meta = next((e for e in user_events if e.condition), None)
        condition = meta.condition if meta else None
        group = next((e.group for e in user_events if e.group), None)
        ua = next((e.ua_class for e in user_events if e.ua_class), "desktop")
        if ua == "mobile":
            continue
        if group not in ("RM", "NOT-RM"):
            continue
        if condition is None:
            continue
        if not any(e.event_type in CLIENT_EVENT_TYPES for e in user_events):
            continue
        dwell = dwell_seconds(user_events)
        if dwell < MIN_DWELL_SECONDS:
            continue
        survivors.append((key, user_events, dwell, condition, group))

    cut = int(TOP_DWELL_FRACTION * len(survivors))
    if cut:
        ranked = sorted(survivors, key=lambda item: (-item[2], item[0]))
        dropped = {item[0] for item in ranked[:cut]}
        survivors = [item for item in survivors if item[0] not in dropped]

    records = []
    for key, user_events, dwell, condition, group in survivors:
        days = active_days(user_events)
        records.append(UserRecord(
            user_key=key,
            group=group,
            condition=condition,
            active_days=days,
            dwell_seconds=dwell,
            distinct_locations=distinct_locations(user_events),
            filter_likelihood=filter_likelihood(user_events),
            content_events_per_day=content_events(user_events, days, include_retweet_clicks),
        ))
    return records


def interpolated_median(scores: Sequence[float]) -> float:
    """Grouped median over unit-width ordinal categories.

    Within the median category the value is refined linearly:
    (m - 0.5) + (n/2 - F)/f with F the count strictly below the category and
    f the count at it. When the plain median falls between categories or the
    median category is empty, the plain median is returned as is.
    """
    values = sorted(scores)
    if not values:
        raise ValueError("interpolated_median of an empty sequence")
    med = statistics.median(values)
    if float(med) != int(med):
        return float(med)
    m = int(med)
    below = sum(1 for v in values if v < m)
    at = sum(1 for v in values if v == m)
    if at == 0:
        return float(med)
    return (m - 0.5) + (len(values) / 2.0 - below) / at
