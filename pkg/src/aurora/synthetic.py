"""Deterministic synthetic corpora for tests and demos.

The study's source dataset is not redistributable, so demos and tests run
on generated fixtures: location-skewed posts with heavy-tailed popularity,
a hashtag vocabulary, and author profiles with varying connectivity.
"""

from __future__ import annotations

import random
from typing import Optional, Sequence

from .model import Author, LocationRegistry, MicroPost, PopulationTable, chilean_regions

WORDS = (
    "elecciones voto urna region candidato alcalde concejal debate resultado "
    "participacion ciudad comuna norte sur costa cordillera puerto mina salmon "
    "cobre turismo sequia lluvia puente camino hospital escuela feria mercado "
    "congreso reforma salud transporte cultura festival teatro banda partido "
    "recuento mesa votacion escrutinio campana propuesta vecinos barrio plaza"
).split()

HASHTAGS = ("municipales", "tudecides", "votaciones", "chile", "recuento",
            "eleccion", "comuna", "debate")


def skewed_population(registry: LocationRegistry, central: str = "RM",
                      central_share: float = 0.4) -> PopulationTable:
    """Population table with the central location holding ``central_share``."""
    rest = (1.0 - central_share) / (len(registry) - 1)
    shares = {code: (central_share if code == central else rest) for code in registry.codes}
    # Absorb rounding residue into the central share.
    shares[central] += 1.0 - sum(shares.values())
    return PopulationTable(shares, registry)


def make_author(rng: random.Random, index: int, location: str) -> Author:
    scale = rng.choice((1, 1, 1, 10, 10, 100, 1000))
    return Author(
        id=f"u{index:05d}",
        screen_name=f"user{index:05d}",
        self_reported_location=location,
        followers=rng.randrange(0, 10 * scale),
        friends=rng.randrange(0, 5 * scale),
        statuses=rng.randrange(0, 50 * scale),
        account_created_at=1_200_000_000.0 + rng.randrange(0, 200_000_000),
    )


def make_pool(
    n_posts: int = 2000,
    seed: int = 0,
    registry: Optional[LocationRegistry] = None,
    window: tuple[float, float] = (1_412_000_000.0, 1_412_021_600.0),
    central: str = "RM",
    central_weight: float = 4.0,
    retweet_fraction: float = 0.0,
    n_authors: Optional[int] = None,
) -> list[MicroPost]:
    """Location-skewed synthetic pool; deterministic for a given seed."""
    rng = random.Random(seed)
    registry = registry or chilean_regions()
    codes = list(registry.codes)
    weights = [central_weight if c == central else 1.0 for c in codes]
    n_authors = n_authors or max(2, n_posts // 3)
    authors = [make_author(rng, i, rng.choices(codes, weights)[0]) for i in range(n_authors)]
    start, end = window
    posts = []
    for i in range(n_posts):
        author = rng.choice(authors)
        text = " ".join(rng.choice(WORDS) for _ in range(rng.randrange(4, 12)))
        hashtags = frozenset(rng.sample(HASHTAGS, rng.randrange(0, 3)))
        urls = frozenset({f"http://example.cl/{i}"} if rng.random() < 0.3 else ())
        retweet_of = None
        if rng.random() < retweet_fraction:
            retweet_of = (f"t{rng.randrange(10**6):06d}", f"x{rng.randrange(10**4):04d}")
        posts.append(MicroPost(
            id=f"p{i:06d}",
            author=author,
            text=text[:140],
            created_at=start + rng.random() * (end - start),
            retweet_count=int(rng.paretovariate(1.2)) - 1,
            hashtags=hashtags,
            urls=urls,
            mentions=frozenset(a.id for a in rng.sample(authors, rng.randrange(0, 2))),
            reply_to=(rng.choice(authors).id if rng.random() < 0.15 else None),
            retweet_of=retweet_of,
            location=author.self_reported_location,
        ))
    return posts


def author_location_index(posts: Sequence[MicroPost]) -> dict[str, str]:
    """Author id to location map derived from a located post set."""
    index: dict[str, str] = {}
    for post in posts:
        if post.location:
            index.setdefault(post.author.id, post.location)
    return index
