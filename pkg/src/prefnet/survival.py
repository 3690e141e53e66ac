"""Strong/weak edge classification and longitudinal survival statistics.

An edge is strong when its endpoints agree on more than a threshold
fraction of their comparable attributes (exact value equality). Survival
tracks whether an edge present in one semester is still present in the
next, reported separately for strong and weak edges, together with the
strong-edge share per semester and its trend among edges that are at
least one semester old.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .graph import Snapshot, check_kind
from .schema import AttributeSchema


def agreement_fraction(u: str, v: str, snapshot: Snapshot, schema: AttributeSchema) -> float:
    """Fraction of schema attributes on which the two nodes hold identical values.

    Attributes missing for either node are excluded from both numerator and
    denominator; a dyad with no comparable attribute is an error.
    """
    equal = comparable = 0
    attrs_u = snapshot.nodes[u]
    attrs_v = snapshot.nodes[v]
    for attribute in schema.names:
        value_u = attrs_u.get(attribute)
        value_v = attrs_v.get(attribute)
        if value_u is None or value_v is None:
            continue
        comparable += 1
        if value_u == value_v:
            equal += 1
    if comparable == 0:
        raise ValueError(f"dyad ({u}, {v}) has no comparable attributes")
    return equal / comparable


@dataclass
class TransitionStats:
    """Edge survival from one semester into the next, split by strength."""

    semester: int
    next_semester: int
    strong_edges: int
    weak_edges: int
    strong_survivors: int
    weak_survivors: int

    @property
    def strong_rate(self) -> float | None:
        return self.strong_survivors / self.strong_edges if self.strong_edges else None

    @property
    def weak_rate(self) -> float | None:
        return self.weak_survivors / self.weak_edges if self.weak_edges else None

    def to_dict(self) -> dict:
        return {
            "semester": self.semester,
            "next_semester": self.next_semester,
            "strong_edges": self.strong_edges,
            "weak_edges": self.weak_edges,
            "strong_survivors": self.strong_survivors,
            "weak_survivors": self.weak_survivors,
            "strong_rate": self.strong_rate,
            "weak_rate": self.weak_rate,
        }


@dataclass
class SemesterShare:
    semester: int
    strong: int
    total: int

    @property
    def fraction(self) -> float | None:
        return self.strong / self.total if self.total else None

    def to_dict(self) -> dict:
        return {"semester": self.semester, "strong": self.strong, "total": self.total,
                "fraction": self.fraction}


@dataclass
class SurvivalReport:
    threshold: float
    network: str
    transitions: list[TransitionStats]
    strong_shares: list[SemesterShare]            # all edges, per semester
    aged_strong_shares: list[SemesterShare]       # edges also present one semester earlier
    excluded_dyads: int                           # no comparable attributes

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "network": self.network,
            "transitions": [t.to_dict() for t in self.transitions],
            "strong_shares": [s.to_dict() for s in self.strong_shares],
            "aged_strong_shares": [s.to_dict() for s in self.aged_strong_shares],
            "excluded_dyads": self.excluded_dyads,
        }


def survival_rates(snapshots: Sequence[Snapshot], kind: str, threshold: float,
                   schema: AttributeSchema) -> SurvivalReport:
    """Survival and strength statistics over consecutive snapshots."""
    check_kind(kind)
    if len(snapshots) < 2:
        raise ValueError("survival analysis needs at least 2 snapshots")
    ordered = sorted(snapshots, key=lambda s: s.semester)

    strong_by_sem: dict[int, set] = {}
    edges_by_sem: dict[int, set] = {}
    excluded = 0
    shares = []
    for snap in ordered:
        edges = set(snap.edge_set(kind))
        strong = set()
        usable = 0
        for u, v in edges:
            try:
                fraction = agreement_fraction(u, v, snap, schema)
            except ValueError:
                excluded += 1
                continue
            usable += 1
            if fraction > threshold:
                strong.add((u, v))
        edges_by_sem[snap.semester] = edges
        strong_by_sem[snap.semester] = strong
        shares.append(SemesterShare(semester=snap.semester, strong=len(strong), total=usable))

    transitions = []
    for current, following in zip(ordered, ordered[1:]):
        nxt = set(following.edge_set(kind))
        strong = strong_by_sem[current.semester]
        weak = {e for e in edges_by_sem[current.semester] - strong
                if _comparable(e, current, schema)}
        transitions.append(TransitionStats(
            semester=current.semester, next_semester=following.semester,
            strong_edges=len(strong), weak_edges=len(weak),
            strong_survivors=sum(1 for e in strong if e in nxt),
            weak_survivors=sum(1 for e in weak if e in nxt)))

    aged = []
    for previous, current in zip(ordered, ordered[1:]):
        old_edges = {e for e in edges_by_sem[current.semester]
                     if e in edges_by_sem[previous.semester] and _comparable(e, current, schema)}
        aged.append(SemesterShare(
            semester=current.semester,
            strong=sum(1 for e in old_edges if e in strong_by_sem[current.semester]),
            total=len(old_edges)))

    return SurvivalReport(threshold=threshold, network=kind, transitions=transitions,
                          strong_shares=shares, aged_strong_shares=aged,
                          excluded_dyads=excluded)


def _comparable(edge: tuple[str, str], snapshot: Snapshot, schema: AttributeSchema) -> bool:
    u, v = edge
    return any(snapshot.nodes[u].get(a) is not None and snapshot.nodes[v].get(a) is not None
               for a in schema.names)


def sweep_threshold(snapshots: Sequence[Snapshot], kind: str, grid: Sequence[float],
                    schema: AttributeSchema) -> list[SurvivalReport]:
    """Survival reports across a grid of strength thresholds."""
    grid = list(grid)
    if not grid:
        raise ValueError("threshold grid is empty")
    return [survival_rates(snapshots, kind, t, schema) for t in grid]
