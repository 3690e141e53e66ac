"""Attribute-preference features for temporal link prediction.

Builds per-node preferences for attribute values from neighborhood
composition, turns them into dyad features, and predicts link formation
and dissolution across network snapshots with an in-house classifier
suite. See the README for the CLI pipeline.
"""

__version__ = "0.1.0"

from .graph import BEHAVIORAL, COGNITIVE, Snapshot, common_neighbors, edge_weight, within_hops
from .schema import AttributeSchema, SemesterCalendar

__all__ = [
    "__version__",
    "AttributeSchema",
    "SemesterCalendar",
    "Snapshot",
    "BEHAVIORAL",
    "COGNITIVE",
    "edge_weight",
    "common_neighbors",
    "within_hops",
]
