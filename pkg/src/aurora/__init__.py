"""Diversity-aware micro-blog timelines.

Subpackages cover the pipeline end to end: corpus types and validation
(model), streaming and admission (ingestion), the three timeline selectors
(diversity), centralization analysis (centrality), treemap geometry
(treemap), the scheduled issue service and HTTP API (service, webapi), the
announcement bot (bot), and behavioral statistics (analytics, regression).
"""

__version__ = "0.1.0"
