"""Per-node preferences for attribute values inferred from neighborhoods.

A node's preference for an attribute value compares the number of its
neighbors holding that value against the count expected from the
population share of the value. The gap is expressed as a z-score under a
binomial null and mapped through the standard normal CDF, yielding a score
in [0, 1]: 0.5 means the neighborhood matches the population, higher means
over-representation, lower means under-representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .graph import Snapshot, check_kind
from .schema import AttributeSchema

# Differences this small between the observed and expected neighbor count
# are float artifacts of n * (j/n); snapping them preserves the exact-0.5
# neutrality cases and perturbs the CDF by far less than 1e-7.
_NEUTRAL_SNAP = 1e-9

TREND_INCREASE = "increase"
TREND_DECREASE = "decrease"
TREND_UNCHANGED = "unchanged"
DEFAULT_TREND_EPSILON = 0.05


def standard_normal_cdf(z: float) -> float:
    """CDF of the standard normal distribution."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def preference_from_counts(held: float, n_neighbors: int, share: float) -> float:
    """Preference score from raw counts.

    ``held`` is the number of neighbors holding the value, ``n_neighbors``
    the node's total neighbor count, ``share`` the population share of the
    value. Degenerate cases (no neighbors, share 0 or 1) carry no evidence
    and return the neutral 0.5.
    """
    if n_neighbors <= 0 or share <= 0.0 or share >= 1.0:
        return 0.5
    mu = n_neighbors * share
    diff = held - mu
    if abs(diff) <= _NEUTRAL_SNAP:
        return 0.5
    sigma = math.sqrt(n_neighbors * share * (1.0 - share))
    return standard_normal_cdf(diff / sigma)


@dataclass(frozen=True)
class ValueDistribution:
    """Population share of each attribute value among nodes holding the attribute."""

    shares: dict[str, dict[str, float]]
    holders: dict[str, int]

    def share(self, attribute: str, value: str) -> float:
        return self.shares[attribute][value]


def value_distribution(snapshot: Snapshot, schema: AttributeSchema) -> ValueDistribution:
    """Share of nodes holding each value, per attribute.

    Nodes missing an attribute are excluded from both numerator and
    denominator; an attribute held by no node at all is an error.
    """
    shares: dict[str, dict[str, float]] = {}
    holders: dict[str, int] = {}
    for attribute in schema.names:
        counts = {value: 0 for value in schema.values_of(attribute)}
        total = 0
        for attrs in snapshot.nodes.values():
            value = attrs.get(attribute)
            if value is not None:
                counts[value] += 1
                total += 1
        if total == 0:
            raise ValueError(
                f"attribute {attribute!r} is assigned to no node in semester {snapshot.semester}")
        shares[attribute] = {value: count / total for value, count in counts.items()}
        holders[attribute] = total
    return ValueDistribution(shares=shares, holders=holders)


def node_preference(node: str, attribute: str, value: str, snapshot: Snapshot,
                    kind: str, dist: ValueDistribution) -> float:
    """Preference of ``node`` for ``value`` based on its neighborhood in ``kind``."""
    neighbors = snapshot.neighbors(kind, node)
    held = sum(1 for other in neighbors if snapshot.nodes[other].get(attribute) == value)
    return preference_from_counts(held, len(neighbors), dist.share(attribute, value))


@dataclass
class PreferenceTable:
    """All node preferences for one snapshot and network.

    ``preferences[node][attribute][value]`` is the CDF-normalized score;
    ``neighbor_counts`` records the neighbor count each score was computed
    from, and ``node_values`` the nodes' own attribute assignments (used by
    downstream feature construction).
    """

    network: str
    semester: int
    schema: AttributeSchema
    preferences: dict[str, dict[str, dict[str, float]]]
    neighbor_counts: dict[str, int]
    node_values: dict[str, dict[str, str]]

    def preference(self, node: str, attribute: str, value: str) -> float:
        return self.preferences[node][attribute][value]

    def value_of(self, node: str, attribute: str) -> str | None:
        return self.node_values.get(node, {}).get(attribute)

    def to_dict(self) -> dict:
        return {
            "network": self.network,
            "semester": self.semester,
            "preferences": self.preferences,
            "neighbor_counts": self.neighbor_counts,
        }


def compute_preferences(snapshot: Snapshot, kind: str, schema: AttributeSchema,
                        dist: ValueDistribution | None = None) -> PreferenceTable:
    """Preference of every node for every attribute value."""
    check_kind(kind)
    if dist is None:
        dist = value_distribution(snapshot, schema)
    preferences: dict[str, dict[str, dict[str, float]]] = {}
    neighbor_counts: dict[str, int] = {}
    for node in sorted(snapshot.nodes):
        neighbors = snapshot.neighbors(kind, node)
        neighbor_counts[node] = len(neighbors)
        by_attr: dict[str, dict[str, float]] = {}
        for attribute in schema.names:
            tally = {value: 0 for value in schema.values_of(attribute)}
            for other in neighbors:
                value = snapshot.nodes[other].get(attribute)
                if value is not None:
                    tally[value] += 1
            by_attr[attribute] = {
                value: preference_from_counts(tally[value], len(neighbors),
                                              dist.share(attribute, value))
                for value in schema.values_of(attribute)
            }
        preferences[node] = by_attr
    node_values = {node: dict(attrs) for node, attrs in snapshot.nodes.items()}
    return PreferenceTable(network=kind, semester=snapshot.semester, schema=schema,
                           preferences=preferences, neighbor_counts=neighbor_counts,
                           node_values=node_values)


@dataclass
class PreferenceMatrix:
    """Mean preference of nodes holding a row value for each column value.

    ``means[i][j]`` averages, over nodes holding ``row_values[i]``, their
    preference for ``values[j]``. ``ratios`` carries the companion
    observed/expected neighbor-count ratio used for figure-style reporting
    (None where the expected count is zero or no node has neighbors); it
    never feeds the ML pipeline.
    """

    attribute: str
    network: str
    semester: int
    values: tuple[str, ...]
    row_values: tuple[str, ...]
    row_holders: tuple[int, ...]
    means: list[list[float]]
    ratios: list[list[float | None]]

    def mean(self, row_value: str, col_value: str) -> float:
        return self.means[self.row_values.index(row_value)][self.values.index(col_value)]

    def to_dict(self) -> dict:
        return {
            "attribute": self.attribute,
            "network": self.network,
            "semester": self.semester,
            "values": list(self.values),
            "row_values": list(self.row_values),
            "row_holders": list(self.row_holders),
            "means": self.means,
            "ratios": self.ratios,
        }


def average_preference_matrix(prefs: PreferenceTable, snapshot: Snapshot,
                              attribute: str) -> PreferenceMatrix:
    """Group mean preferences by the holders' own value; rows for unheld values are absent."""
    schema = prefs.schema
    if attribute not in schema:
        raise KeyError(f"unknown attribute {attribute!r}")
    values = schema.values_of(attribute)
    dist = value_distribution(snapshot, schema)
    groups: dict[str, list[str]] = {value: [] for value in values}
    for node in sorted(snapshot.nodes):
        own = snapshot.nodes[node].get(attribute)
        if own is not None:
            groups[own].append(node)

    row_values, row_holders, means, ratios = [], [], [], []
    for row_value in values:
        members = groups[row_value]
        if not members:
            continue
        row_values.append(row_value)
        row_holders.append(len(members))
        mean_row: list[float] = []
        ratio_row: list[float | None] = []
        for col_value in values:
            mean_row.append(math.fsum(prefs.preference(node, attribute, col_value)
                                      for node in members) / len(members))
            share = dist.share(attribute, col_value)
            samples = []
            for node in members:
                n = prefs.neighbor_counts[node]
                if n == 0 or share == 0.0:
                    continue
                held = sum(1 for other in snapshot.neighbors(prefs.network, node)
                           if snapshot.nodes[other].get(attribute) == col_value)
                samples.append(held / (n * share))
            ratio_row.append(math.fsum(samples) / len(samples) if samples else None)
        means.append(mean_row)
        ratios.append(ratio_row)
    return PreferenceMatrix(attribute=attribute, network=prefs.network,
                            semester=prefs.semester, values=values,
                            row_values=tuple(row_values), row_holders=tuple(row_holders),
                            means=means, ratios=ratios)


@dataclass(frozen=True)
class TrendMark:
    attribute: str
    from_semester: int
    to_semester: int
    row_value: str
    col_value: str
    mark: str  # increase / decrease / unchanged


def trend_marks(matrices: Mapping[int, PreferenceMatrix],
                epsilon: float = DEFAULT_TREND_EPSILON) -> list[TrendMark]:
    """Classify cell changes between consecutive semesters.

    A change larger than ``epsilon`` in preference units is an increase,
    smaller than ``-epsilon`` a decrease, anything else unchanged. Cells
    whose row value is unheld in either semester are skipped.
    """
    if len(matrices) < 2:
        raise ValueError("trend marks need matrices for at least 2 semesters")
    semesters = sorted(matrices)
    attribute = matrices[semesters[0]].attribute
    marks = []
    for earlier, later in zip(semesters, semesters[1:]):
        first, second = matrices[earlier], matrices[later]
        if first.attribute != attribute or second.attribute != attribute:
            raise ValueError("trend marks require matrices for a single attribute")
        for row_value in first.row_values:
            if row_value not in second.row_values:
                continue
            for col_value in first.values:
                delta = second.mean(row_value, col_value) - first.mean(row_value, col_value)
                if delta > epsilon:
                    mark = TREND_INCREASE
                elif delta < -epsilon:
                    mark = TREND_DECREASE
                else:
                    mark = TREND_UNCHANGED
                marks.append(TrendMark(attribute=attribute, from_semester=earlier,
                                       to_semester=later, row_value=row_value,
                                       col_value=col_value, mark=mark))
    return marks
