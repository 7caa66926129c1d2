"""Timeline selection: popularity top-s, entropy-greedy, and geo-sidelining.

Three selectors share one greedy core. The geo-diverse selector excludes a
location for a fixed number of turns after one of its posts is picked, so
consecutive windows of turns+1 posts span turns+1 distinct locations.
"""

from __future__ import annotations

import math
import random
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import FilterError
from .ingestion import normalize_content
from .model import MicroPost, Timeline

# Tolerance for entropy ties: candidates within EPS of the best attainable
# entropy all count as maximizers.
ENTROPY_EPS = 1e-12

NO_HASHTAG = "∅"
AGE_BUCKETS = 6

FEATURE_FIELDS = (
    "has_link",
    "hashtag_bucket",
    "connectivity_bucket",
    "experience_bucket",
    "age_bucket",
    "popularity_bucket",
)


@dataclass(frozen=True)
class FeatureVector:
    has_link: int
    hashtag_bucket: str
    connectivity_bucket: str
    experience_bucket: str
    age_bucket: int
    popularity_bucket: str

    def as_tuple(self) -> tuple:
        return (self.has_link, self.hashtag_bucket, self.connectivity_bucket,
                self.experience_bucket, self.age_bucket, self.popularity_bucket)


@dataclass(frozen=True)
class FilterConfig:
    size: int = 30
    turns: int = 5
    seed: int = 0
    popular_quantile: float = 0.25
    dedupe_authors: bool = True
    dedupe_content: bool = True

    def __post_init__(self):
        if self.size < 1:
            raise FilterError("BAD_CONFIG", "size must be >= 1")
        if self.turns < 0:
            raise FilterError("BAD_CONFIG", "turns must be >= 0")
        if not 0.0 < self.popular_quantile <= 1.0:
            raise FilterError("BAD_CONFIG", "popular_quantile must be in (0,1]")


def _count_bucket(n: int) -> str:
    # log10 buckets: 0, 1-9, 10-99, 100-999, 1000+
    if n <= 0:
        return "0"
    if n < 10:
        return "1-9"
    if n < 100:
        return "10-99"
    if n < 1000:
        return "100-999"
    return "1000+"


def extract_features(post: MicroPost, window: tuple[float, float]) -> FeatureVector:
    """Bucketize one post's content features relative to the pool window."""
    start, end = window
    span = end - start
    if span > 0:
        age_bucket = min(int((post.created_at - start) / span * AGE_BUCKETS), AGE_BUCKETS - 1)
        age_bucket = max(age_bucket, 0)
    else:
        age_bucket = 0
    hashtags = [h.lower() for h in post.hashtags]
    return FeatureVector(
        has_link=1 if post.urls else 0,
        hashtag_bucket=min(hashtags) if hashtags else NO_HASHTAG,
        connectivity_bucket=_count_bucket(post.author.followers + post.author.friends),
        experience_bucket=_count_bucket(post.author.statuses),
        age_bucket=age_bucket,
        popularity_bucket=_count_bucket(post.retweet_count),
    )


def pool_window(pool: Sequence[MicroPost]) -> tuple[float, float]:
    times = [p.created_at for p in pool]
    return (min(times), max(times))


def timeline_entropy(features: Iterable[FeatureVector]) -> float:
    """Sum over features of the Shannon entropy of its empirical distribution, in bits."""
    vectors = list(features)
    if not vectors:
        raise FilterError("EMPTY_SET", "entropy of an empty set")
    n = len(vectors)
    total = 0.0
    for i in range(len(FEATURE_FIELDS)):
        counts = Counter(v.as_tuple()[i] for v in vectors)
        total -= sum(c / n * math.log2(c / n) for c in counts.values())
    return total


def max_entr(
    candidate: FeatureVector,
    timeline: Sequence[FeatureVector],
    pool: Sequence[FeatureVector],
    eps: float = ENTROPY_EPS,
) -> bool:
    """True iff adding the candidate attains the best entropy reachable from the pool."""
    best = max(timeline_entropy(list(timeline) + [c]) for c in pool)
    return timeline_entropy(list(timeline) + [candidate]) >= best - eps


def most_popular(posts: Sequence[MicroPost]) -> list[MicroPost]:
    """All posts whose retweet count equals the maximum."""
    if not posts:
        raise FilterError("EMPTY_SET", "most_popular of an empty set")
    top = max(p.retweet_count for p in posts)
    return [p for p in posts if p.retweet_count == top]


def popular(posts: Sequence[MicroPost], quantile: float = 0.25) -> list[MicroPost]:
    """Posts at or above the (1-quantile) empirical quantile of retweet counts."""
    if not posts:
        raise FilterError("EMPTY_SET", "popular of an empty set")
    if not 0.0 < quantile <= 1.0:
        raise FilterError("BAD_CONFIG", "quantile must be in (0,1]")
    counts = np.array([p.retweet_count for p in posts], dtype=float)
    threshold = np.quantile(counts, 1.0 - quantile)
    return [p for p in posts if p.retweet_count >= threshold]


def select_pop(pool: Sequence[MicroPost], size: int, seed: int = 0,
               window: Optional[tuple[float, float]] = None) -> Timeline:
    """Top-``size`` posts by retweet count; ties prefer newer, then smaller id."""
    if not pool:
        raise FilterError("EMPTY_SET", "empty pool")
    ranked = sorted(pool, key=lambda p: (-p.retweet_count, -p.created_at, p.id))
    picked = ranked[:size]
    return Timeline(
        posts=tuple(picked),
        method="POP",
        source_window=window or pool_window(pool),
        shortfall=len(picked) < size,
    )


def select_div(pool: Sequence[MicroPost], config: FilterConfig,
               window: Optional[tuple[float, float]] = None) -> Timeline:
    """Entropy-greedy selection without geographic constraints."""
    return _greedy_select(pool, config, turns=0, method="DIV", window=window)


def select_pm(pool: Sequence[MicroPost], config: FilterConfig,
              window: Optional[tuple[float, float]] = None) -> Timeline:
    """Entropy-greedy selection with location sidelining (the geo-diverse method)."""
    for post in pool:
        if post.location is None:
            raise FilterError("UNLOCATED_POST", post.id)
    return _greedy_select(pool, config, turns=config.turns, method="PM", window=window)


def generate_all(pool: Sequence[MicroPost], config: FilterConfig,
                 window: Optional[tuple[float, float]] = None) -> dict[str, Timeline]:
    """Run the three selectors on one pool with independently derived seed streams."""
    return {
        "POP": select_pop(pool, config.size, derive_seed(config.seed, "pop"), window=window),
        "DIV": select_div(pool, replace(config, seed=derive_seed(config.seed, "div")), window=window),
        "PM": select_pm(pool, replace(config, seed=derive_seed(config.seed, "pm")), window=window),
    }


def derive_seed(seed: int, stream: str) -> int:
    """Split one run seed into per-selector streams (stable across processes)."""
    return random.Random(f"{seed}:{stream}").getrandbits(63)


class _EntropyState:
    """Incremental per-feature histograms of the growing timeline.

    Keeps S_f = sum_v c_v*log2(c_v) per feature so the entropy of the
    timeline plus any one candidate is an O(1) lookup per feature.
    """

    def __init__(self, codes: np.ndarray, alphabet_sizes: Sequence[int]):
        self.codes = codes  # (n_posts, n_features) int
        self.counts = [np.zeros(k, dtype=np.int64) for k in alphabet_sizes]
        self.sums = np.zeros(len(alphabet_sizes))
        self.n = 0

    @staticmethod
    def _xlogx(c: np.ndarray) -> np.ndarray:
        out = np.zeros_like(c, dtype=float)
        mask = c > 0
        out[mask] = c[mask] * np.log2(c[mask])
        return out

    def add(self, idx: int) -> None:
        for f in range(self.codes.shape[1]):
            v = self.codes[idx, f]
            c = self.counts[f][v]
            if c > 0:
                self.sums[f] -= c * math.log2(c)
            self.counts[f][v] = c + 1
            self.sums[f] += (c + 1) * math.log2(c + 1)
        self.n += 1

    def entropies_with(self, candidates: np.ndarray) -> np.ndarray:
        """Total entropy of timeline+{c} for each candidate index, in bits."""
        m = self.n + 1
        total = np.zeros(len(candidates))
        for f in range(self.codes.shape[1]):
            c = self.counts[f][self.codes[candidates, f]].astype(float)
            new_sum = self.sums[f] - self._xlogx(c) + self._xlogx(c + 1.0)
            total += math.log2(m) - new_sum / m
        return total


def _encode_features(features: Sequence[FeatureVector]) -> tuple[np.ndarray, list[int]]:
    n_fields = len(FEATURE_FIELDS)
    codes = np.zeros((len(features), n_fields), dtype=np.int64)
    sizes = []
    for f in range(n_fields):
        mapping: dict = {}
        for i, feat in enumerate(features):
            value = feat.as_tuple()[f]
            codes[i, f] = mapping.setdefault(value, len(mapping))
        sizes.append(max(len(mapping), 1))
    return codes, sizes


def _greedy_select(pool: Sequence[MicroPost], config: FilterConfig, turns: int,
                   method: str, window: Optional[tuple[float, float]]) -> Timeline:
    if not pool:
        raise FilterError("EMPTY_SET", "empty pool")
    rng = random.Random(config.seed)
    window = window or pool_window(pool)
    features = [extract_features(p, window) for p in pool]
    codes, sizes = _encode_features(features)
    retweets = np.array([p.retweet_count for p in pool], dtype=float)

    # Location codes as small ints; unlocated posts share one pseudo-location.
    loc_index: dict[Optional[str], int] = {}
    loc_codes = np.array([loc_index.setdefault(p.location, len(loc_index)) for p in pool])
    sideline = np.zeros(len(loc_index), dtype=np.int64)

    available = np.ones(len(pool), dtype=bool)
    author_of: dict[str, list[int]] = defaultdict(list)
    content_of: dict[str, list[int]] = defaultdict(list)
    for i, p in enumerate(pool):
        author_of[p.author.id].append(i)
        content_of[normalize_content(p.text)].append(i)

    state = _EntropyState(codes, sizes)
    selected: list[int] = []
    relaxations = 0
    shortfall = False

    def take(idx: int, counter_value: int) -> None:
        selected.append(idx)
        available[idx] = False
        if config.dedupe_authors:
            for j in author_of[pool[idx].author.id]:
                available[j] = False
        if config.dedupe_content:
            for j in content_of[normalize_content(pool[idx].text)]:
                available[j] = False
        sideline[loc_codes[idx]] = counter_value
        state.add(idx)

    # Seed pick: uniform among the most retweeted posts of the whole pool.
    top = np.flatnonzero(retweets == retweets.max())
    take(int(rng.choice(list(top))), turns)

    while len(selected) < config.size:
        base = np.flatnonzero(available)
        if len(base) == 0:
            shortfall = True
            break
        eligible = base[sideline[loc_codes[base]] <= 0]
        while len(eligible) == 0:
            # All remaining locations are sidelined: advance the clock.
            sideline -= 1
            relaxations += 1
            eligible = base[sideline[loc_codes[base]] <= 0]
        gains = state.entropies_with(eligible)
        candidates = eligible[gains >= gains.max() - ENTROPY_EPS]
        threshold = np.quantile(retweets[candidates], 1.0 - config.popular_quantile)
        pool_choices = candidates[retweets[candidates] >= threshold]
        take(int(rng.choice(list(pool_choices))), turns + 1)
        sideline -= 1

    return Timeline(
        posts=tuple(pool[i] for i in selected),
        method=method,
        source_window=window,
        shortfall=shortfall or len(selected) < config.size,
        relaxations=relaxations,
    )
