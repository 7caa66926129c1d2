"""Lay a filtered timeline out as a squarified treemap and draw it.

Leaf area rewards retweets and author connectivity but divides by the
location's population share, so small regions stay visible. Hue encodes the
location, saturation fades with post age. Writes treemap_demo.png.
"""

import colorsys

import matplotlib

matplotlib.use("Agg")
import matplotlib.patches as patches
import matplotlib.pyplot as plt

from aurora.diversity import FilterConfig, select_pm
from aurora.model import chilean_regions
from aurora.synthetic import make_pool, skewed_population
from aurora.treemap import Rect, WeightSpec, layout_issue

registry = chilean_regions()
population = skewed_population(registry, central="RM", central_share=0.4)

pool = make_pool(n_posts=1500, seed=3)
timeline = select_pm(pool, FilterConfig(size=30, turns=5, seed=1))
print(f"timeline: {len(timeline)} posts over "
      f"{len(set(timeline.locations()))} locations")

viewport = Rect(0, 0, 1200, 800)
tree = layout_issue(timeline, viewport, WeightSpec(population=population),
                    registry, now=timeline.source_window[1])

figure, axis = plt.subplots(figsize=(12, 8))
for group in tree.groups:
    for leaf in group.leaves:
        r, g, b = colorsys.hsv_to_rgb(leaf.hue / 360.0, leaf.saturation, 0.9)
        axis.add_patch(patches.Rectangle(
            (leaf.rect.x, leaf.rect.y), leaf.rect.w, leaf.rect.h,
            facecolor=(r, g, b), edgecolor="white", linewidth=2))
    axis.add_patch(patches.Rectangle(
        (group.rect.x, group.rect.y), group.rect.w, group.rect.h,
        fill=False, edgecolor="black", linewidth=1.5))
    axis.text(group.rect.x + 6, group.rect.y + 20, group.location,
              fontsize=11, weight="bold")

axis.set_xlim(0, viewport.w)
axis.set_ylim(viewport.h, 0)
axis.set_aspect("equal")
axis.axis("off")
figure.tight_layout()
figure.savefig("treemap_demo.png", dpi=110)
print("wrote treemap_demo.png")

worst = max(leaf.rect.aspect for group in tree.groups for leaf in group.leaves)
print(f"worst leaf aspect ratio: {worst:.2f}")
areas = {g.location: g.rect.area / viewport.area for g in tree.groups}
print("area shares:", {k: round(v, 3) for k, v in sorted(areas.items())})
