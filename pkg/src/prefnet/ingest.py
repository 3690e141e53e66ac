"""Parsers for the raw input files and snapshot assembly.

Input formats (UTF-8, header rows required for CSV):

* ``events.csv``: ``timestamp,sender,receiver,kind,duration`` with kind in
  {call, text}; timestamps are UTC epoch seconds.
* ``nominations.csv``: ``semester,ego,alter``.
* ``attributes.csv``: ``semester,node,attribute,value``.
* ``schema.json``: one object mapping each attribute name to its ordered
  value array, plus the reserved key ``"calendar"`` holding an array of
  ``{index, start, end}`` semester windows.

Snapshots serialize to a documented JSON form (see :func:`save_snapshots`)
that round-trips exactly.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import MissingInputError, ParseError
from .graph import Snapshot, edge_weight, node_pair
from .schema import AttributeDef, AttributeSchema, Semester, SemesterCalendar

log = logging.getLogger(__name__)

MAX_NOMINATIONS_PER_EGO = 20
EVENT_KINDS = ("call", "text")
CALENDAR_KEY = "calendar"


@dataclass(frozen=True)
class CommEvent:
    timestamp: int
    sender: str
    receiver: str
    kind: str  # "call" or "text"
    duration: int  # seconds for calls, characters for texts; informational


@dataclass(frozen=True)
class Nomination:
    semester: int
    ego: str
    alter: str


@dataclass(frozen=True)
class AttributeRecord:
    semester: int
    node: str
    attribute: str
    value: str


@dataclass
class IngestWarnings:
    """Counters for rows dropped without aborting the parse."""

    events_outside_window: int = 0
    self_loop_events: int = 0
    self_nominations: int = 0
    nodes_without_attributes: int = 0
    dropped_node_ids: set = field(default_factory=set)

    def as_dict(self) -> dict[str, int]:
        return {
            "events_outside_window": self.events_outside_window,
            "self_loop_events": self.self_loop_events,
            "self_nominations": self.self_nominations,
            "nodes_without_attributes": self.nodes_without_attributes,
        }


def _open_rows(path: str | Path, expected_header: Sequence[str]):
    path = Path(path)
    if not path.exists():
        raise MissingInputError(str(path))
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty", path=str(path)) from None
        if [h.strip() for h in header] != list(expected_header):
            raise ParseError(
                f"expected header {','.join(expected_header)!r}, found {','.join(header)!r}",
                path=str(path), line=1)
        yield from ((lineno, row) for lineno, row in enumerate(reader, start=2))


def parse_schema(path: str | Path) -> AttributeSchema:
    """Read the attribute universe from schema.json (file order preserved)."""
    raw = _load_schema_json(path)
    attributes = []
    for name, values in raw.items():
        if name == CALENDAR_KEY:
            continue
        if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
            raise ParseError(f"attribute {name!r} must map to an array of strings",
                             path=str(path))
        attributes.append(AttributeDef(name=name, values=tuple(values)))
    if not attributes:
        raise ParseError("schema declares no attributes", path=str(path))
    try:
        return AttributeSchema(attributes=tuple(attributes))
    except ParseError as exc:
        raise ParseError(str(exc), path=str(path)) from None


def parse_calendar(path: str | Path) -> SemesterCalendar:
    """Read the semester calendar from the same schema.json file."""
    raw = _load_schema_json(path)
    entries = raw.get(CALENDAR_KEY)
    if not isinstance(entries, list) or not entries:
        raise ParseError(f"missing or empty {CALENDAR_KEY!r} array", path=str(path))
    semesters = []
    for entry in entries:
        try:
            semesters.append(Semester(index=int(entry["index"]),
                                      start=int(entry["start"]),
                                      end=int(entry["end"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad calendar entry {entry!r}: {exc}", path=str(path)) from None
    try:
        return SemesterCalendar(semesters=tuple(semesters))
    except ParseError as exc:
        raise ParseError(str(exc), path=str(path)) from None


def _load_schema_json(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MissingInputError(str(path))

    def reject_duplicates(pairs):
        # json.loads would silently keep the last duplicate key
        seen = set()
        for key, _ in pairs:
            if key in seen:
                raise ParseError(f"attribute {key!r} appears twice", path=str(path))
            seen.add(key)
        return dict(pairs)

    try:
        raw = json.loads(path.read_text(encoding="utf-8"),
                         object_pairs_hook=reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", path=str(path)) from None
    if not isinstance(raw, dict):
        raise ParseError("schema.json must hold a JSON object", path=str(path))
    return raw


def parse_events(path: str | Path, calendar: SemesterCalendar,
                 warnings: IngestWarnings | None = None) -> list[CommEvent]:
    """Parse the communication log; output sorted by timestamp.

    Self-loop rows are rejected and counted; events outside every semester
    window are dropped and counted. Any other malformed row is an error.
    """
    warnings = warnings if warnings is not None else IngestWarnings()
    events = []
    for lineno, row in _open_rows(path, ("timestamp", "sender", "receiver", "kind", "duration")):
        if len(row) != 5:
            raise ParseError(f"expected 5 fields, found {len(row)}", path=str(path), line=lineno)
        ts_raw, sender, receiver, kind, duration_raw = (f.strip() for f in row)
        try:
            timestamp = int(ts_raw)
            duration = int(duration_raw)
        except ValueError:
            raise ParseError("timestamp and duration must be integers",
                             path=str(path), line=lineno) from None
        if duration < 0:
            raise ParseError("duration must be non-negative", path=str(path), line=lineno)
        if kind not in EVENT_KINDS:
            raise ParseError(f"kind must be one of {EVENT_KINDS}, found {kind!r}",
                             path=str(path), line=lineno)
        if not sender or not receiver:
            raise ParseError("sender and receiver must be non-empty", path=str(path), line=lineno)
        if sender == receiver:
            warnings.self_loop_events += 1
            continue
        if calendar.semester_of(timestamp) is None:
            warnings.events_outside_window += 1
            continue
        events.append(CommEvent(timestamp, sender, receiver, kind, duration))
    events.sort(key=lambda e: e.timestamp)
    if warnings.self_loop_events or warnings.events_outside_window:
        log.warning("dropped %d self-loop and %d out-of-window event rows",
                    warnings.self_loop_events, warnings.events_outside_window)
    return events


def parse_nominations(path: str | Path, calendar: SemesterCalendar | None = None,
                      warnings: IngestWarnings | None = None) -> list[Nomination]:
    """Parse friendship nominations; an ego listing > 20 alters in one semester is an error."""
    warnings = warnings if warnings is not None else IngestWarnings()
    nominations = []
    per_ego: dict[tuple[int, str], int] = {}
    for lineno, row in _open_rows(path, ("semester", "ego", "alter")):
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, found {len(row)}", path=str(path), line=lineno)
        sem_raw, ego, alter = (f.strip() for f in row)
        try:
            semester = int(sem_raw)
        except ValueError:
            raise ParseError("semester must be an integer", path=str(path), line=lineno) from None
        if calendar is not None and semester not in calendar.indices:
            raise ParseError(f"semester {semester} is not in the calendar",
                             path=str(path), line=lineno)
        if not ego or not alter:
            raise ParseError("ego and alter must be non-empty", path=str(path), line=lineno)
        if ego == alter:
            warnings.self_nominations += 1
            continue
        key = (semester, ego)
        per_ego[key] = per_ego.get(key, 0) + 1
        if per_ego[key] > MAX_NOMINATIONS_PER_EGO:
            raise ParseError(
                f"ego {ego!r} lists more than {MAX_NOMINATIONS_PER_EGO} alters in semester {semester}",
                path=str(path), line=lineno)
        nominations.append(Nomination(semester, ego, alter))
    return nominations


def parse_attributes(path: str | Path, schema: AttributeSchema,
                     warnings: IngestWarnings | None = None) -> list[AttributeRecord]:
    """Parse survey attribute records, validating every (attribute, value) against the schema."""
    records = []
    for lineno, row in _open_rows(path, ("semester", "node", "attribute", "value")):
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, found {len(row)}", path=str(path), line=lineno)
        sem_raw, node, attribute, value = (f.strip() for f in row)
        try:
            semester = int(sem_raw)
        except ValueError:
            raise ParseError("semester must be an integer", path=str(path), line=lineno) from None
        if not node:
            raise ParseError("node must be non-empty", path=str(path), line=lineno)
        if attribute not in schema:
            raise ParseError(f"unknown attribute {attribute!r}", path=str(path), line=lineno)
        if not schema.has_value(attribute, value):
            raise ParseError(f"value {value!r} is not in the schema for attribute {attribute!r}",
                             path=str(path), line=lineno)
        records.append(AttributeRecord(semester, node, attribute, value))
    return records


def build_snapshots(events: Iterable[CommEvent],
                    nominations: Iterable[Nomination],
                    attr_records: Iterable[AttributeRecord],
                    calendar: SemesterCalendar,
                    schema: AttributeSchema,
                    *,
                    mutual_nominations: bool = False,
                    warnings: IngestWarnings | None = None) -> list[Snapshot]:
    """Assemble one snapshot per calendar semester.

    A node joins a snapshot once it has at least one effective attribute
    value; values carry forward from the most recent earlier semester when a
    semester's record is missing. Edges are kept only between such nodes;
    other endpoints are dropped and counted. Cognitive edges are undirected:
    by default a single nomination in either direction creates the edge, and
    ``mutual_nominations=True`` requires both directions.
    """
    warnings = warnings if warnings is not None else IngestWarnings()

    history: dict[str, dict[str, dict[int, str]]] = {}
    for rec in attr_records:
        history.setdefault(rec.node, {}).setdefault(rec.attribute, {})[rec.semester] = rec.value

    def effective_attrs(node: str, semester: int) -> dict[str, str]:
        values = {}
        for attribute, by_sem in history.get(node, {}).items():
            eligible = [s for s in by_sem if s <= semester]
            if eligible:
                values[attribute] = by_sem[max(eligible)]
        return values

    events_by_sem: dict[int, list[CommEvent]] = {idx: [] for idx in calendar.indices}
    for event in events:
        idx = calendar.semester_of(event.timestamp)
        if idx is None:
            warnings.events_outside_window += 1
            continue
        events_by_sem[idx].append(event)

    noms_by_sem: dict[int, list[Nomination]] = {idx: [] for idx in calendar.indices}
    for nom in nominations:
        if nom.semester in noms_by_sem:
            noms_by_sem[nom.semester].append(nom)

    snapshots = []
    for idx in calendar.indices:
        nodes = {}
        for node in history:
            values = effective_attrs(node, idx)
            if values:
                nodes[node] = values

        def known(node: str) -> bool:
            if node in nodes:
                return True
            warnings.dropped_node_ids.add(node)
            return False

        counts: dict[tuple[str, str], list[int]] = {}
        for event in events_by_sem[idx]:
            if not (known(event.sender) and known(event.receiver)):
                continue
            pair = node_pair(event.sender, event.receiver)
            calls_texts = counts.setdefault(pair, [0, 0])
            calls_texts[0 if event.kind == "call" else 1] += 1
        behavioral = {pair: edge_weight(calls, texts)
                      for pair, (calls, texts) in counts.items()}

        directed = set()
        for nom in noms_by_sem[idx]:
            if known(nom.ego) and known(nom.alter):
                directed.add((nom.ego, nom.alter))
        cognitive = set()
        for ego, alter in directed:
            if mutual_nominations and (alter, ego) not in directed:
                continue
            cognitive.add(node_pair(ego, alter))

        snapshots.append(Snapshot(semester=idx, nodes=nodes,
                                  behavioral_edges=behavioral,
                                  cognitive_edges=cognitive))

    warnings.nodes_without_attributes = len(warnings.dropped_node_ids)
    if warnings.nodes_without_attributes:
        log.warning("excluded %d node(s) with no attribute history",
                    warnings.nodes_without_attributes)
    return snapshots


def load_inputs(events_path, nominations_path, attributes_path, schema_path,
                *, mutual_nominations: bool = False,
                warnings: IngestWarnings | None = None) -> list[Snapshot]:
    """Parse all four input files and assemble the snapshot sequence."""
    warnings = warnings if warnings is not None else IngestWarnings()
    schema = parse_schema(schema_path)
    calendar = parse_calendar(schema_path)
    events = parse_events(events_path, calendar, warnings)
    nominations = parse_nominations(nominations_path, calendar, warnings)
    records = parse_attributes(attributes_path, schema, warnings)
    return build_snapshots(events, nominations, records, calendar, schema,
                           mutual_nominations=mutual_nominations, warnings=warnings)


# -- snapshot serialization --------------------------------------------------

def snapshot_to_dict(snapshot: Snapshot) -> dict:
    return {
        "semester": snapshot.semester,
        "nodes": {node: dict(sorted(attrs.items()))
                  for node, attrs in sorted(snapshot.nodes.items())},
        "behavioral_edges": [[u, v, w] for (u, v), w in sorted(snapshot.behavioral_edges.items())],
        "cognitive_edges": [[u, v] for u, v in sorted(snapshot.cognitive_edges)],
    }


def snapshot_from_dict(data: dict) -> Snapshot:
    return Snapshot(
        semester=int(data["semester"]),
        nodes={node: dict(attrs) for node, attrs in data["nodes"].items()},
        behavioral_edges={(u, v): int(w) for u, v, w in data["behavioral_edges"]},
        cognitive_edges={(u, v) for u, v in data["cognitive_edges"]},
    )


def save_snapshots(snapshots: Sequence[Snapshot], path: str | Path,
                   schema: AttributeSchema | None = None) -> None:
    """Write snapshots (optionally with the schema embedded) as canonical JSON."""
    payload: dict = {"snapshots": [snapshot_to_dict(s) for s in snapshots]}
    if schema is not None:
        # a list of pairs, not an object: attribute order must survive sort_keys
        payload["schema"] = [[a.name, list(a.values)] for a in schema.attributes]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_snapshots(path: str | Path) -> list[Snapshot]:
    snapshots, _ = load_snapshot_file(path)
    return snapshots


def load_snapshot_file(path: str | Path) -> tuple[list[Snapshot], AttributeSchema | None]:
    """Snapshots plus the embedded schema, when the file carries one."""
    path = Path(path)
    if not path.exists():
        raise MissingInputError(str(path))
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        snapshots = [snapshot_from_dict(entry) for entry in payload["snapshots"]]
        schema = None
        if "schema" in payload:
            schema = AttributeSchema(attributes=tuple(
                AttributeDef(name=name, values=tuple(values))
                for name, values in payload["schema"]))
        return snapshots, schema
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad snapshot file: {exc}", path=str(path)) from None
