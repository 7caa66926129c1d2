"""Command-line entry points.

Subcommands mirror the pipeline: ingest, filter, centrality, layout, serve,
analyze, bot. File formats are JSON Lines for posts/timelines/events and
CSV for the location registry, population shares, and gazetteer.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from typing import Optional

import numpy as np

from . import analytics, bot, centrality, diversity, ingestion, model, regression
from .synthetic import author_location_index, skewed_population
from .errors import AuroraError
from .service import (EventLog, GeoDatabase, Issue, IssueScheduler, IssueService,
                      ServiceSettings, trailing_pool)
from .treemap import Rect, WeightSpec, layout_issue

log = logging.getLogger(__name__)


def _load_posts(path: str) -> list[model.MicroPost]:
    posts = []
    with open(path, encoding="utf-8") as fh:
        for record in ingestion.parse_post_stream(fh):
            posts.append(model.validate_post(record))
    return posts


def _write_posts(path: str, posts) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for post in posts:
            fh.write(json.dumps(model.post_to_record(post), ensure_ascii=False) + "\n")


def _registry_from_codes(codes) -> model.LocationRegistry:
    return model.LocationRegistry([(c, c) for c in codes])


def _load_registry_or_derive(registry_path: Optional[str], codes) -> model.LocationRegistry:
    if registry_path:
        return model.load_registry(registry_path)
    return _registry_from_codes(sorted(set(codes)))


def cmd_ingest(args) -> int:
    codes = [code for _, code in model._read_csv_pairs(args.gazetteer, ("alias", "code"))]
    registry = _load_registry_or_derive(args.registry, codes)
    gazetteer = model.load_gazetteer(args.gazetteer, registry)
    policy = ingestion.load_policy(args.policy) if args.policy else ingestion.AdmissionPolicy()
    partitions, tz = ingestion.load_partitions(args.partitions)

    admitted = []
    rejected: dict[str, int] = {}
    invalid = 0
    # Content dedupe is issue-scoped and happens at selection time, so the
    # prepared pools keep duplicates (seen_content stays None here).
    with open(args.corpus, encoding="utf-8") as fh:
        stream = ingestion.parse_post_stream(fh)
        for record in stream:
            try:
                post = model.validate_post(record)
            except AuroraError as exc:
                invalid += 1
                log.debug("invalid record: %s", exc)
                continue
            result = ingestion.admit_post(post, policy, gazetteer)
            if result.admitted:
                admitted.append(result.post)
            else:
                rejected[result.reason] = rejected.get(result.reason, 0) + 1

    buckets, dropped = ingestion.partition_by_time(admitted, partitions, tz)
    os.makedirs(args.out, exist_ok=True)
    for name, posts in buckets.items():
        _write_posts(os.path.join(args.out, f"{name}.jsonl"), posts)
    summary = {
        "admitted": len(admitted),
        "rejected": rejected,
        "invalid": invalid,
        "malformed_lines": stream.skipped,
        "outside_partitions": dropped,
        "partitions": {name: len(posts) for name, posts in buckets.items()},
    }
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_filter(args) -> int:
    pool = _load_posts(args.pool)
    config = diversity.FilterConfig(size=args.size, turns=args.turns, seed=args.seed,
                                    popular_quantile=args.quantile)
    method = args.method.lower()
    if method == "pop":
        timeline = diversity.select_pop(pool, args.size, args.seed)
    elif method == "div":
        timeline = diversity.select_div(pool, config)
    elif method == "pm":
        timeline = diversity.select_pm(pool, config)
    else:
        raise AuroraError("BAD_METHOD", args.method)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({
            "method": timeline.method,
            "size": len(timeline),
            "seed": args.seed,
            "source_window": list(timeline.source_window),
            "shortfall": timeline.shortfall,
            "relaxations": timeline.relaxations,
        }) + "\n")
        for post in timeline.posts:
            fh.write(json.dumps({"id": post.id, "location": post.location}) + "\n")
    print(f"{timeline.method}: {len(timeline)} posts -> {args.out}")
    return 0


def cmd_centrality(args) -> int:
    posts = _load_posts(args.posts)
    shares = {code: float(share)
              for code, share in model._read_csv_pairs(args.population, ("code", "share"))}
    registry = _load_registry_or_derive(args.registry, shares)
    population = model.PopulationTable(shares, registry)
    graph = centrality.build_interaction_graph(posts, author_location_index(posts),
                                               nodes=registry.codes)
    total = graph.total_weight()
    if total <= 0:
        raise AuroraError("EMPTY_SET", "no interactions found")
    expected = centrality.expected_graph(population, total, nodes=registry.codes)
    report = centrality.compare_centralities(graph, expected)
    payload = {"observed": report.observed, "expected": report.expected,
               "delta": report.delta, "dropped_targets": graph.dropped_targets}
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    print(f"centrality report -> {args.out}")
    return 0


def cmd_layout(args) -> int:
    pool = {p.id: p for p in _load_posts(args.pool)}
    with open(args.timeline, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        ids = [json.loads(line)["id"] for line in fh if line.strip()]
    posts = tuple(pool[i] for i in ids)
    timeline = model.Timeline(posts=posts, method=header.get("method", "PM"),
                              source_window=tuple(header["source_window"]))
    shares = {code: float(share)
              for code, share in model._read_csv_pairs(args.population, ("code", "share"))}
    registry = _load_registry_or_derive(args.registry, shares)
    population = model.PopulationTable(shares, registry)
    now = args.now if args.now is not None else timeline.source_window[1]
    tree = layout_issue(timeline, Rect(0, 0, args.width, args.height),
                        WeightSpec(population=population), registry, now=now)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(tree.to_dict(), fh, indent=2)
    print(f"layout ({tree.leaf_count()} leaves) -> {args.out}")
    return 0


def _build_service(config: dict) -> tuple[IssueService, Optional[str]]:
    registry = model.load_registry(config["registry"])
    population = model.load_population(config["population"], registry)
    geo = GeoDatabase.from_csv(config["geo_db"]) if config.get("geo_db") else None
    settings = ServiceSettings(
        period_s=int(config.get("period_s", 1800)),
        timeline_size=int(config.get("size", 30)),
        turns=int(config.get("turns", 5)),
        seed=int(config.get("seed", 0)),
        condition_weights=tuple(config.get("condition_weights", (1.0, 1.0, 1.0))),
        central_location=config.get("central", "RM"),
        pool_window_s=int(config.get("pool_window_s", 6 * 3600)),
        url_base=config.get("url_base", "http://localhost:8000"),
    )
    event_log = EventLog(config.get("event_log", "events.jsonl"))
    service = IssueService(registry, population, event_log, geo, settings)
    return service, config.get("static_dir")


def cmd_serve(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        config = json.load(fh)
    service, static_dir = _build_service(config)
    posts = _load_posts(config["corpus"])
    policy = ingestion.AdmissionPolicy(**config.get("policy", {"allow_retweets_by_located_accounts": True}))
    gazetteer = model.load_gazetteer(config["gazetteer"], service.registry) \
        if config.get("gazetteer") else None
    admitted = []
    for post in posts:
        result = ingestion.admit_post(post, policy, gazetteer)
        if result.admitted:
            admitted.append(result.post)
    scheduler = IssueScheduler(service, trailing_pool(admitted, service.settings.pool_window_s))
    scheduler.tick()
    scheduler.start()

    from .webapi import create_app
    import uvicorn
    app = create_app(service, static_dir=static_dir)
    host, _, port = config.get("bind", "127.0.0.1:8000").partition(":")
    try:
        uvicorn.run(app, host=host, port=int(port or 8000))
    finally:
        scheduler.stop()
        service.event_log.close()
    return 0


def cmd_analyze(args) -> int:
    from .events import replay_events
    users = analytics.sessionize_and_filter(replay_events(args.events))
    if not users:
        raise AuroraError("EMPTY_SET", "no users survive the exclusion rules")
    formula = regression.parse_formula(args.formula)
    design = regression.build_design(users, formula)
    y = design.response
    if y is None:
        raise AuroraError("BAD_FORMULA", f"unknown response {formula.response!r}")
    if args.model == "ordinal":
        fit = regression.fit_ordinal(y, design)
    elif args.model == "logit":
        fit = regression.fit_logit(y, design)
    elif args.model == "nb":
        fit = regression.fit_nb(np.round(y), design)
    else:
        raise AuroraError("BAD_MODEL", args.model)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(fit.to_dict(), fh, indent=2)
    print(f"{fit.family}: ll={fit.log_likelihood:.2f} aic={fit.aic:.2f} -> {args.out}")
    return 0


def cmd_bot(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        config = json.load(fh)
    pool = _load_posts(config["pool"])
    registry = model.load_registry(config["registry"]) if config.get("registry") \
        else _registry_from_codes(sorted({p.location for p in pool if p.location}))
    shares = config.get("population")
    population = model.load_population(shares, registry) if shares \
        else skewed_population(registry, central=registry.codes[0], central_share=0.5)
    period = int(config.get("period_s", 1800))
    start = float(config.get("start", max(p.created_at for p in pool)))
    grid = start - (start % period)
    filter_config = diversity.FilterConfig(size=int(config.get("size", 30)),
                                           turns=int(config.get("turns", 5)),
                                           seed=int(config.get("seed", 0)))
    timelines = diversity.generate_all(pool, filter_config)
    layout = layout_issue(timelines["PM"], Rect(0, 0, 1200, 800),
                          WeightSpec(population=population), registry, now=grid)
    issue = Issue(id=int(config.get("issue_id", 1)), generated_at=grid,
                  timelines=timelines, layout=layout)
    hour_posts = [p for p in pool if grid - 3600 <= p.created_at <= grid + period]
    plan = bot.plan_cycle(issue, hour_posts, registry,
                          rng=random.Random(int(config.get("seed", 0))),
                          url_base=config.get("url_base", "http://localhost:8000"),
                          period_s=period)
    sink = bot.FileSink(args.dry_run)
    for post in plan:
        sink.publish(post)
    sink.close()
    print(f"{len(plan)} bot posts -> {args.dry_run}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aurora",
                                     description="diversity-aware timeline toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate, geolocate and partition a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gazetteer", required=True)
    p.add_argument("--policy", default=None)
    p.add_argument("--partitions", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--registry", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("filter", help="build one filtered timeline")
    p.add_argument("--pool", required=True)
    p.add_argument("--method", required=True, choices=["pm", "div", "pop"])
    p.add_argument("--size", type=int, default=30)
    p.add_argument("--turns", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quantile", type=float, default=0.25)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("centrality", help="observed vs expected location centrality")
    p.add_argument("--posts", required=True)
    p.add_argument("--population", required=True)
    p.add_argument("--registry", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_centrality)

    p = sub.add_parser("layout", help="treemap geometry for a timeline")
    p.add_argument("--timeline", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--population", required=True)
    p.add_argument("--registry", default=None)
    p.add_argument("--width", type=float, required=True)
    p.add_argument("--height", type=float, required=True)
    p.add_argument("--now", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("serve", help="run the issue service")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("analyze", help="fit a regression on logged events")
    p.add_argument("--events", required=True)
    p.add_argument("--model", required=True, choices=["ordinal", "nb", "logit"])
    p.add_argument("--formula", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bot", help="plan one publication cycle")
    p.add_argument("--config", required=True)
    p.add_argument("--dry-run", dest="dry_run", required=True)
    p.set_defaults(func=cmd_bot)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AuroraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
