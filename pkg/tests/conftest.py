from __future__ import annotations

import itertools

import pytest

from aurora.model import (Author, Gazetteer, LocationRegistry, MicroPost,
                          PopulationTable, chilean_regions)

_ids = itertools.count()


def make_post(
    post_id=None,
    location="RM",
    retweets=0,
    created=1_000_000.0,
    text="hola mundo",
    hashtags=(),
    urls=(),
    mentions=(),
    reply_to=None,
    retweet_of=None,
    author_id=None,
    followers=0,
    friends=0,
    statuses=0,
    author_location="",
) -> MicroPost:
    n = next(_ids)
    author = Author(
        id=author_id or f"a{n:05d}",
        screen_name=f"user{n:05d}",
        self_reported_location=author_location,
        followers=followers,
        friends=friends,
        statuses=statuses,
    )
    return MicroPost(
        id=post_id or f"p{n:05d}",
        author=author,
        text=text,
        created_at=created,
        retweet_count=retweets,
        hashtags=frozenset(hashtags),
        urls=frozenset(urls),
        mentions=frozenset(mentions),
        reply_to=reply_to,
        retweet_of=retweet_of,
        location=location,
    )


@pytest.fixture
def registry() -> LocationRegistry:
    return chilean_regions()


@pytest.fixture
def ab_registry() -> LocationRegistry:
    return LocationRegistry([("A", "Alpha"), ("B", "Beta")])


@pytest.fixture
def uniform_population(registry) -> PopulationTable:
    share = 1.0 / len(registry)
    shares = dict.fromkeys(registry.codes, share)
    shares[registry.codes[0]] += 1.0 - sum(shares.values())
    return PopulationTable(shares, registry)


@pytest.fixture
def gazetteer(registry) -> Gazetteer:
    return Gazetteer(
        {
            "santiago": "RM",
            "region metropolitana": "RM",
            "valparaiso": "V",
            "temuco": "IX",
            "antofagasta": "II",
            "chile": "RM",
        },
        registry,
    )
