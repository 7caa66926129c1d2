"""Squarified treemap geometry for issues.

Two-level layout: location groups tile the viewport, post leaves tile their
group. Leaf area grows with retweets and author connectivity and shrinks
with the location's population share, so sparsely populated locations get a
fair share of screen space. Color encodes location (hue, by registry index)
and recency (saturation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .errors import LayoutError
from .model import LocationRegistry, MicroPost, PopulationTable, Timeline

MIN_SATURATION = 0.3
SATURATION_FADE = 0.7


@dataclass(frozen=True)
class Rect:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise LayoutError("BAD_RECT", f"{self.w}x{self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def aspect(self) -> float:
        return max(self.w / self.h, self.h / self.w)

    def contains(self, other: "Rect", tol: float = 1e-9) -> bool:
        return (other.x >= self.x - tol and other.y >= self.y - tol
                and other.x + other.w <= self.x + self.w + tol
                and other.y + other.h <= self.y + self.h + tol)


@dataclass(frozen=True)
class LayoutLeaf:
    post_id: str
    rect: Rect
    hue: float
    saturation: float


@dataclass(frozen=True)
class LayoutGroup:
    location: str
    rect: Rect
    leaves: tuple[LayoutLeaf, ...]


@dataclass(frozen=True)
class LayoutTree:
    viewport: Rect
    groups: tuple[LayoutGroup, ...]

    def leaf_count(self) -> int:
        return sum(len(g.leaves) for g in self.groups)

    def to_dict(self) -> dict:
        return {
            "viewport": _rect_dict(self.viewport),
            "groups": [
                {
                    "location": g.location,
                    "rect": _rect_dict(g.rect),
                    "leaves": [
                        {
                            "post_id": leaf.post_id,
                            "rect": _rect_dict(leaf.rect),
                            "hue": leaf.hue,
                            "saturation": leaf.saturation,
                        }
                        for leaf in g.leaves
                    ],
                }
                for g in self.groups
            ],
        }


def _rect_dict(r: Rect) -> dict:
    return {"x": r.x, "y": r.y, "w": r.w, "h": r.h}


def layout_tree_from_dict(data: dict) -> LayoutTree:
    def rect(d):
        return Rect(d["x"], d["y"], d["w"], d["h"])

    return LayoutTree(
        viewport=rect(data["viewport"]),
        groups=tuple(
            LayoutGroup(
                location=g["location"],
                rect=rect(g["rect"]),
                leaves=tuple(
                    LayoutLeaf(leaf["post_id"], rect(leaf["rect"]), leaf["hue"], leaf["saturation"])
                    for leaf in g["leaves"]
                ),
            )
            for g in data["groups"]
        ),
    )


@dataclass(frozen=True)
class WeightSpec:
    """Leaf weight = (1 + retweet_term(rt) + connectivity_term(fo+fr)) / population share."""

    population: PopulationTable
    retweet_term: Callable[[int], float] = field(default=lambda n: float(n))
    connectivity_term: Callable[[int], float] = field(default=lambda n: math.log10(1 + n))


def leaf_weight(post: MicroPost, spec: WeightSpec) -> float:
    if post.location is None or post.location not in spec.population:
        raise LayoutError("MISSING_POPULATION", post.id)
    base = 1.0 + spec.retweet_term(post.retweet_count) \
        + spec.connectivity_term(post.author.followers + post.author.friends)
    return base / spec.population.share(post.location)


def worst_ratio(areas: Sequence[float], side: float) -> float:
    """Worst aspect ratio of a row of areas laid along a side of given length."""
    if not areas:
        raise LayoutError("EMPTY_ROW")
    total = sum(areas)
    sq = side * side
    return max(sq * max(areas) / (total * total), total * total / (sq * min(areas)))


def squarify(weights: Sequence[float], rect: Rect) -> list[Rect]:
    """Tile ``rect`` with one rectangle per weight, areas proportional to weights.

    Weights are processed in descending order (stable among ties); each row
    grows along the shorter side of the remaining space while its worst
    aspect ratio does not worsen. Returned rects follow the input order.
    """
    for w in weights:
        if w <= 0:
            raise LayoutError("BAD_WEIGHT", str(w))
    if not weights:
        return []
    total = sum(weights)
    scale = rect.area / total
    order = sorted(range(len(weights)), key=lambda i: -weights[i])
    items = [(i, weights[i] * scale) for i in order]
    out: list[Optional[Rect]] = [None] * len(weights)
    _layout(items, rect.x, rect.y, rect.w, rect.h, out)
    return [r for r in out]  # type: ignore[return-value]


def _layout(items: list[tuple[int, float]], x: float, y: float,
            w: float, h: float, out: list) -> None:
    if not items:
        return
    side = min(w, h)
    row = [items[0]]
    rest = items[1:]
    areas = [items[0][1]]
    while rest:
        candidate = areas + [rest[0][1]]
        if worst_ratio(candidate, side) <= worst_ratio(areas, side):
            row.append(rest.pop(0))
            areas.append(row[-1][1])
        else:
            break
    row_sum = sum(areas)
    if w >= h:
        # Column along the left edge.
        thickness = w if not rest else row_sum / h
        cy = y
        for k, (idx, area) in enumerate(row):
            extent = (y + h - cy) if k == len(row) - 1 else area / thickness
            out[idx] = Rect(x, cy, thickness, extent)
            cy += extent
        _layout(rest, x + thickness, y, w - thickness, h, out)
    else:
        # Strip along the top edge.
        thickness = h if not rest else row_sum / w
        cx = x
        for k, (idx, area) in enumerate(row):
            extent = (x + w - cx) if k == len(row) - 1 else area / thickness
            out[idx] = Rect(cx, y, extent, thickness)
            cx += extent
        _layout(rest, x, y + thickness, w, h - thickness, out)


def recency_saturation(created_at: float, now: float, window_length: float) -> float:
    """Linear fade from 1.0 (fresh) to 0.3 (one issue window old), clamped."""
    if window_length <= 0:
        return 1.0
    age = now - created_at
    return min(1.0, max(MIN_SATURATION, 1.0 - SATURATION_FADE * (age / window_length)))


def location_hue(code: str, registry: LocationRegistry) -> float:
    return 360.0 * registry.index_of(code) / len(registry)


def layout_issue(timeline: Timeline, viewport: Rect, spec: WeightSpec,
                 registry: LocationRegistry, now: float) -> LayoutTree:
    """Two-level squarified layout of a timeline: groups by location, then leaves."""
    if not timeline.posts:
        raise LayoutError("EMPTY_SET", "cannot lay out an empty timeline")
    by_location: dict[str, list[tuple[MicroPost, float]]] = {}
    for post in timeline.posts:
        if post.location is None:
            raise LayoutError("MISSING_POPULATION", post.id)
        by_location.setdefault(post.location, []).append((post, leaf_weight(post, spec)))

    # Groups weigh the sum of their leaves; ties break on the location code.
    group_items = sorted(
        ((code, sum(w for _, w in pairs)) for code, pairs in by_location.items()),
        key=lambda cw: (-cw[1], cw[0]),
    )
    group_rects = squarify([w for _, w in group_items], viewport)

    window_len = timeline.source_window[1] - timeline.source_window[0]
    groups = []
    for (code, _), group_rect in zip(group_items, group_rects):
        pairs = sorted(by_location[code], key=lambda pw: (-pw[1], pw[0].id))
        leaf_rects = squarify([w for _, w in pairs], group_rect)
        hue = location_hue(code, registry)
        leaves = tuple(
            LayoutLeaf(
                post_id=post.id,
                rect=leaf_rect,
                hue=hue,
                saturation=recency_saturation(post.created_at, now, window_len),
            )
            for (post, _), leaf_rect in zip(pairs, leaf_rects)
        )
        groups.append(LayoutGroup(location=code, rect=group_rect, leaves=leaves))
    return LayoutTree(viewport=viewport, groups=tuple(groups))
