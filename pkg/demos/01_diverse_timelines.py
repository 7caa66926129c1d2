"""Build one pool of synthetic posts and filter it three ways.

The popularity baseline keeps whatever retweet counts favor, the
entropy-greedy baseline spreads content features, and the geo-diverse
selector additionally sidelines each location for five turns after a pick,
which is what guarantees location coverage.
"""

from collections import Counter

from aurora.diversity import (FilterConfig, extract_features, generate_all,
                              pool_window, timeline_entropy)
from aurora.synthetic import make_pool

pool = make_pool(n_posts=2000, seed=7, central_weight=6.0)
window = pool_window(pool)
print(f"pool: {len(pool)} posts, {len({p.location for p in pool})} locations")
print(f"share of RM posts: {sum(p.location == 'RM' for p in pool) / len(pool):.0%}")
print()

config = FilterConfig(size=30, turns=5, seed=42)
timelines = generate_all(pool, config)

for method in ("POP", "DIV", "PM"):
    timeline = timelines[method]
    features = [extract_features(p, window) for p in timeline.posts]
    coverage = Counter(p.location for p in timeline.posts)
    print(f"{method}: entropy {timeline_entropy(features):6.3f} bits, "
          f"{len(coverage)} locations, "
          f"largest share {max(coverage.values())}/{len(timeline)}")

print()
pm = timelines["PM"]
print("geo-diverse pick order (first 12):", " ".join(pm.locations()[:12]))
print("every window of 6 consecutive picks holds 6 distinct locations:",
      all(len(set(pm.locations()[i:i + 6])) == 6
          for i in range(len(pm) - 5)))
