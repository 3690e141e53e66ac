from __future__ import annotations

import pytest

from prefnet.graph import Snapshot
from prefnet.schema import AttributeDef, AttributeSchema, Semester, SemesterCalendar


@pytest.fixture
def politics_schema() -> AttributeSchema:
    return AttributeSchema(attributes=(
        AttributeDef("political_views", ("conservative", "moderate", "liberal")),
        AttributeDef("greek_life", ("member", "nonmember")),
    ))


@pytest.fixture
def calendar() -> SemesterCalendar:
    # four ~120-day windows with breaks, epoch-second bounds
    day = 86400
    semesters = []
    start = 1_312_000_000
    for idx in range(1, 5):
        semesters.append(Semester(index=idx, start=start, end=start + 120 * day))
        start += 150 * day
    return SemesterCalendar(semesters=tuple(semesters))


def make_snapshot(semester: int, attrs: dict, behavioral=None, cognitive=None) -> Snapshot:
    return Snapshot(
        semester=semester,
        nodes={node: dict(values) for node, values in attrs.items()},
        behavioral_edges=dict(behavioral or {}),
        cognitive_edges=set(cognitive or ()),
    )


@pytest.fixture
def triangle_snapshot() -> Snapshot:
    attrs = {
        "a": {"political_views": "liberal", "greek_life": "member"},
        "b": {"political_views": "liberal", "greek_life": "nonmember"},
        "c": {"political_views": "moderate", "greek_life": "member"},
    }
    edges = {("a", "b"): 23, ("b", "c"): 10, ("a", "c"): 1}
    cognitive = {("a", "b")}
    return make_snapshot(1, attrs, edges, cognitive)
