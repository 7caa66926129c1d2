"""Fit the behavioral models on a synthetic interaction log.

Generates users whose engagement depends on their interface condition
(treemap users browse more locations and filter more often), derives the
per-user variables from the event log, then fits the count and binary
models and reports odds ratios with Wald intervals.
"""

import itertools
import random

import numpy as np

from aurora.analytics import sessionize_and_filter
from aurora.events import InteractionEvent
from aurora.regression import (build_design, fit_logit, fit_nb, lr_test,
                               odds_ratio, parse_formula)

rng = random.Random(99)
seq = itertools.count(1)
T0 = 1_412_121_600.0
events = []


def emit(session, event_type, ts, **fields):
    events.append(InteractionEvent(seq=next(seq), session_id=session,
                                   event_type=event_type, server_ts=ts, **fields))


LOCATIONS = ("RM", "V", "IX", "VIII", "II", "X")
for i in range(900):
    key = f"u{i:04d}"
    condition = ("baseline", "clustered", "treemap")[i % 3]
    group = "RM" if rng.random() < 0.6 else "NOT-RM"
    start = T0 + 3600 + i * 90.0
    emit(key, "session_created", start, condition=condition, group=group,
         ua_class="desktop")
    emit(key, "ui_loaded", start)
    emit(key, "ping", start + rng.uniform(15, 600))
    # Planted effects: the treemap roughly doubles content engagement and
    # filter usage.
    boost = 2.0 if condition == "treemap" else 1.0
    n_content = np.random.default_rng(i).poisson(1.2 * boost)
    for j in range(n_content):
        emit(key, "post_detail", start + 20 + j, target=f"t{i}-{j}",
             location=rng.choice(LOCATIONS))
    if rng.random() < (0.5 if condition == "treemap" else 0.3):
        emit(key, "location_filter", start + 10, target=rng.choice(LOCATIONS),
             location=rng.choice(LOCATIONS))

users = sessionize_and_filter(events)
print(f"{len(users)} users survive the exclusion rules")
print({c: sum(1 for u in users if u.condition == c)
       for c in ("baseline", "clustered", "treemap")})

print("\ndistinct locations (negative binomial):")
formula = parse_formula("distinct_locations ~ C(condition) x C(location)")
design = build_design(users, formula)
full = fit_nb(design.response, design)
reduced_design = build_design(users, parse_formula(
    "distinct_locations ~ C(condition) + C(location)"))
reduced = fit_nb(reduced_design.response, reduced_design)
interaction = lr_test(full, reduced)
print(f"  interaction LR p = {interaction.p_value:.3f} "
      f"({'keep' if interaction.p_value < 0.05 else 'drop'} interaction terms)")
fit = full if interaction.p_value < 0.05 else reduced
for column in fit.coefficients:
    if column == "intercept":
        continue
    ratio, (low, high) = odds_ratio(fit, column)
    print(f"  {column:32} beta {fit.coefficients[column]:+6.3f} "
          f"OR {ratio:5.2f} [{low:4.2f}, {high:4.2f}]")
print(f"  log-likelihood {fit.log_likelihood:.2f}, AIC {fit.aic:.2f}, "
      f"dispersion {fit.dispersion:.2f}, cond. H {fit.hessian_condition_number:.0f}")

print("\nfilter likelihood (logit):")
design = build_design(users, parse_formula("filter_likelihood ~ C(condition) + C(location)"))
fit = fit_logit(design.response, design)
for column in fit.coefficients:
    if column == "intercept":
        continue
    ratio, (low, high) = odds_ratio(fit, column)
    print(f"  {column:32} beta {fit.coefficients[column]:+6.3f} "
          f"OR {ratio:5.2f} [{low:4.2f}, {high:4.2f}]")
