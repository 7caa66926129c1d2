"""Interaction event taxonomy and the JSON Lines log record shape.

The event log is the single source of truth for behavioral analysis:
replaying the file reconstructs the analytics inputs exactly, so session
metadata (condition, geo group, user-agent class) is embedded in the
session_created record rather than kept in a side table.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import IO, Iterator, Optional, Union

EVENT_TYPES = frozenset({
    "session_created",
    "session_restored",
    "timeline_loaded",
    "ui_loaded",
    "ping",
    "location_filter",
    "post_detail",
    "link_click",
    "reply_click",
    "retweet_click",
    "favorite_click",
    "follow_click",
})

# Events only a scripted client can emit; sessions without any of these are
# treated as script-disabled and excluded from analysis.
CLIENT_EVENT_TYPES = EVENT_TYPES - {"session_created", "session_restored"}

# Direct engagement with a post or its author.
CONTENT_EVENT_TYPES = frozenset({
    "link_click", "post_detail", "favorite_click", "reply_click",
    "retweet_click", "follow_click",
})

# Events that must name a post or location.
TARGETED_EVENT_TYPES = frozenset({
    "location_filter", "post_detail", "link_click", "reply_click",
    "retweet_click", "favorite_click", "follow_click",
})

CONDITIONS = ("baseline", "clustered", "treemap")
GROUPS = ("RM", "NOT-RM", "UNKNOWN")


@dataclass(frozen=True)
class InteractionEvent:
    seq: int
    session_id: str
    event_type: str
    server_ts: float
    issue_id: Optional[int] = None
    target: Optional[str] = None
    location: Optional[str] = None
    client_ts: Optional[float] = None
    condition: Optional[str] = None
    group: Optional[str] = None
    ua_class: Optional[str] = None

    def to_record(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def event_from_record(record: dict) -> InteractionEvent:
    return InteractionEvent(
        seq=int(record["seq"]),
        session_id=str(record["session_id"]),
        event_type=str(record["event_type"]),
        server_ts=float(record["server_ts"]),
        issue_id=record.get("issue_id"),
        target=record.get("target"),
        location=record.get("location"),
        client_ts=record.get("client_ts"),
        condition=record.get("condition"),
        group=record.get("group"),
        ua_class=record.get("ua_class"),
    )


def replay_events(source: Union[str, IO[str]]) -> Iterator[InteractionEvent]:
    """Read a JSON Lines event log in sequence order; corrupt lines are skipped."""
    if isinstance(source, str):
        with open(source, encoding="utf-8") as fh:
            yield from replay_events(fh)
        return
    for line in source:
        line = line.strip()
        if not line:
            continue
        try:
            yield event_from_record(json.loads(line))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            continue
