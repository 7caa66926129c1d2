"""Walk through the platform end to end, in process.

Spins the HTTP app over an in-memory service, generates one issue on the
half-hour grid, simulates a browsing session with its event stream, and
plans the announcement bot's cycle for the same issue.
"""

import random
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from aurora.bot import plan_cycle
from aurora.events import replay_events
from aurora.model import chilean_regions
from aurora.service import (EventLog, GeoDatabase, IssueService,
                            ServiceSettings)
from aurora.synthetic import make_pool, skewed_population
from aurora.webapi import create_app

workdir = Path(tempfile.mkdtemp(prefix="aurora-demo-"))
registry = chilean_regions()
service = IssueService(
    registry,
    skewed_population(registry),
    EventLog(str(workdir / "events.jsonl")),
    GeoDatabase([("10.0.0.0", "10.0.0.255", "RM"),
                 ("10.0.1.0", "10.0.1.255", "V")]),
    ServiceSettings(seed=5),
)

pool = make_pool(n_posts=1200, seed=17)
grid_instant = 1_412_166_600.0  # on the half-hour grid
issue = service.generate_issue(pool, now=grid_instant)
print(f"issue {issue.id}: {len(issue.served)} posts, "
      f"{len(issue.layout.groups)} location groups")

client = TestClient(create_app(service))

page = client.get("/timeline/current")
print(f"GET /timeline/current -> {page.status_code}, "
      f"cookie set: {'at_session' in page.cookies}")

me = client.get("/api/session").json()
print(f"assigned condition: {me['condition']}, geo group: {me['group']}")

payload = client.get("/api/issue/current", params={"loc": "V"}).json()
print(f"payload: {len(payload['posts'])} posts, initial filter {payload['initial_filter']}")

first_post = payload["posts"][0]
for event_type, extra in (
    ("ui_loaded", {}),
    ("timeline_loaded", {}),
    ("ping", {}),
    ("post_detail", {"target": first_post["id"]}),
    ("favorite_click", {"target": first_post["id"]}),
):
    ack = client.post("/api/events", json={"event_type": event_type,
                                           "issue_id": payload["issue_id"], **extra})
    print(f"  {event_type}: seq {ack.json()['seq']}")

service.event_log.close()
logged = list(replay_events(str(workdir / "events.jsonl")))
print(f"event log holds {len(logged)} events, last type {logged[-1].event_type!r}")

plan = plan_cycle(issue, pool, registry, random.Random(2),
                  "http://aurora.example", period_s=1800.0)
print(f"\nbot cycle: {len(plan)} posts")
for post in plan[:4]:
    label = post.text if post.text else f"(retweet of {post.retweet_of})"
    print(f"  t+{post.scheduled_at - issue.generated_at:5.0f}s {post.kind:22} {label[:70]}")
print("  ...")
