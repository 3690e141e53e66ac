"""Attribute schema and semester calendar types.

The schema fixes the universe of node attributes and their finite value
sets; the calendar fixes the semester windows that slice the event log
into snapshots. Both are loaded from the same JSON input file.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParseError


@dataclass(frozen=True)
class AttributeDef:
    name: str
    values: tuple[str, ...]


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered attributes, each with an ordered set of >= 2 distinct values."""

    attributes: tuple[AttributeDef, ...]
    _by_name: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        if not self.attributes:
            raise ParseError("schema declares no attributes")
        seen: set[str] = set()
        for attr in self.attributes:
            if attr.name in seen:
                raise ParseError(f"duplicate attribute {attr.name!r} in schema")
            seen.add(attr.name)
            if len(attr.values) < 2:
                raise ParseError(f"attribute {attr.name!r} has fewer than 2 values")
            if len(set(attr.values)) != len(attr.values):
                raise ParseError(f"attribute {attr.name!r} lists a duplicate value")
        object.__setattr__(self, "_by_name", {a.name: a for a in self.attributes})

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def values_of(self, name: str) -> tuple[str, ...]:
        try:
            return self._by_name[name].values
        except KeyError:
            raise KeyError(f"unknown attribute {name!r}") from None

    def has_value(self, name: str, value: str) -> bool:
        attr = self._by_name.get(name)
        return attr is not None and value in attr.values

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def to_mapping(self) -> dict[str, list[str]]:
        return {a.name: list(a.values) for a in self.attributes}


@dataclass(frozen=True)
class Semester:
    index: int
    start: int  # UTC epoch seconds, inclusive
    end: int    # UTC epoch seconds, exclusive


@dataclass(frozen=True)
class SemesterCalendar:
    """Chronologically ordered, non-overlapping semester windows."""

    semesters: tuple[Semester, ...]

    def __post_init__(self):
        if not self.semesters:
            raise ParseError("calendar declares no semesters")
        prev = None
        for sem in self.semesters:
            if sem.end <= sem.start:
                raise ParseError(f"semester {sem.index} ends before it starts")
            if prev is not None:
                if sem.index <= prev.index:
                    raise ParseError("semester indices must be strictly increasing")
                if sem.start < prev.end:
                    raise ParseError(f"semester {sem.index} overlaps semester {prev.index}")
            prev = sem

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(s.index for s in self.semesters)

    def semester_of(self, timestamp: int) -> int | None:
        """Semester index containing the timestamp, or None if outside all windows."""
        for sem in self.semesters:
            if sem.start <= timestamp < sem.end:
                return sem.index
        return None

    def to_list(self) -> list[dict[str, int]]:
        return [{"index": s.index, "start": s.start, "end": s.end} for s in self.semesters]
