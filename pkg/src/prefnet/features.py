"""Dyad feature vectors and labeled datasets for the prediction tasks.

Each dyad gets one agreement score per schema attribute plus a common
neighbor count. Agreement combines the two nodes' preferences for each
other's value, either multiplicatively (equal preference) or by taking the
minimum. Formation datasets are built over currently absent dyads within a
hop limit; dissolution datasets over currently existing edges.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError
from .graph import (BEHAVIORAL, Snapshot, check_kind, common_neighbors,
                    node_pair)
from .preference import PreferenceTable, compute_preferences
from .schema import AttributeSchema

EQUAL_PREFERENCE = "equal_preference"
MINIMUM_PREFERENCE = "minimum_preference"
COMBINATION_METHODS = (EQUAL_PREFERENCE, MINIMUM_PREFERENCE)

FORMATION = "formation"
DISSOLUTION = "dissolution"
TASKS = (FORMATION, DISSOLUTION)

COMMON_NEIGHBORS_FEATURE = "common_neighbors"
DEFAULT_MAX_HOPS = 3

NEUTRAL_PREFERENCE = 0.5


def check_method(method: str) -> str:
    if method not in COMBINATION_METHODS:
        raise ValueError(f"unknown combination method {method!r}")
    return method


def check_task(task: str) -> str:
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    return task


def agreement(method: str, prefs: PreferenceTable, u: str, v: str, attribute: str) -> float:
    """Agreement of a dyad on one attribute.

    Uses u's preference for v's value and v's preference for u's value.
    When either node misses the attribute both sides fall back to the
    neutral 0.5, so equal preference yields 0.25 and minimum yields 0.5.
    """
    check_method(method)
    value_u = prefs.value_of(u, attribute)
    value_v = prefs.value_of(v, attribute)
    if value_u is None or value_v is None:
        pref_u = pref_v = NEUTRAL_PREFERENCE
    else:
        pref_u = prefs.preference(u, attribute, value_v)
        pref_v = prefs.preference(v, attribute, value_u)
    if method == EQUAL_PREFERENCE:
        return pref_u * pref_v
    return min(pref_u, pref_v)


def formation_candidates(snapshot: Snapshot, kind: str,
                         max_hops: int = DEFAULT_MAX_HOPS) -> set[tuple[str, str]]:
    """Absent dyads whose endpoints sit within ``max_hops`` of each other."""
    check_kind(kind)
    if max_hops < 1:
        raise ValueError("max_hops must be at least 1")
    order = sorted(snapshot.nodes)
    index = {node: i for i, node in enumerate(order)}
    adjacency = np.zeros((len(order), len(order)), dtype=bool)
    for u, v in snapshot.edge_set(kind):
        adjacency[index[u], index[v]] = True
    adjacency |= adjacency.T
    reach = adjacency.copy()
    walks = adjacency.astype(np.int32)
    for _ in range(max_hops - 1):
        walks = walks @ adjacency
        reach |= walks > 0
    candidates: set[tuple[str, str]] = set()
    rows, cols = np.nonzero(np.triu(reach & ~adjacency, k=1))
    for i, j in zip(rows, cols):
        candidates.add((order[i], order[j]))
    return candidates


def label_formation(candidates: Iterable[tuple[str, str]], next_snapshot: Snapshot,
                    kind: str) -> dict[tuple[str, str], bool]:
    """Positive iff the candidate pair has an edge in the next snapshot."""
    edges = next_snapshot.edge_set(kind)
    return {node_pair(u, v): node_pair(u, v) in edges for u, v in candidates}


def is_dissolving(weight_now: int, weight_next: int | None) -> bool:
    """True iff the edge disappears or drops to at most a third of its volume."""
    if weight_now < 1:
        raise ValueError("weight_now must be at least 1")
    if weight_next is None:
        return True
    return weight_next <= weight_now / 3


def label_dissolution(snapshot: Snapshot, next_snapshot: Snapshot,
                      kind: str) -> dict[tuple[str, str], bool]:
    """Dissolution labels for every current edge of the selected network.

    Behavioral edges follow the volume rule. A cognitive edge is dissolving
    when it is absent next semester, or when the dyad's behavioral edge is
    itself dissolving (which covers a behavioral edge that exists now and is
    gone next semester).
    """
    check_kind(kind)
    labels: dict[tuple[str, str], bool] = {}
    if kind == BEHAVIORAL:
        for pair, weight in snapshot.behavioral_edges.items():
            labels[pair] = is_dissolving(weight, next_snapshot.behavioral_edges.get(pair))
        return labels
    for pair in snapshot.cognitive_edges:
        dropped = pair not in next_snapshot.cognitive_edges
        weight_now = snapshot.behavioral_edges.get(pair)
        behavioral_dissolving = (weight_now is not None and
                                 is_dissolving(weight_now, next_snapshot.behavioral_edges.get(pair)))
        labels[pair] = dropped or behavioral_dissolving
    return labels


@dataclass(frozen=True)
class DyadFeatures:
    dyad: tuple[str, str]
    agreement: dict[str, float]
    common_neighbors: int


def dyad_features(prefs: PreferenceTable, snapshot: Snapshot, kind: str,
                  dyad: tuple[str, str], method: str,
                  schema: AttributeSchema) -> DyadFeatures:
    u, v = dyad
    scores = {attribute: agreement(method, prefs, u, v, attribute)
              for attribute in schema.names}
    return DyadFeatures(dyad=node_pair(u, v), agreement=scores,
                        common_neighbors=common_neighbors(snapshot, kind, u, v))


@dataclass
class LabeledDataset:
    """Feature matrix plus binary labels for one task and semester pair.

    ``X`` columns follow ``feature_names``: one agreement column per schema
    attribute, then the raw common neighbor count. ``source_semesters`` is
    (feature semester, label semester); features never read the label
    semester's snapshot.
    """

    task: str
    network: str
    method: str
    feature_names: tuple[str, ...]
    dyads: list[tuple[str, str]]
    X: np.ndarray
    y: np.ndarray
    source_semesters: tuple[int, int]

    def __post_init__(self):
        feat_sem, label_sem = self.source_semesters
        if feat_sem >= label_sem:
            raise ValueError("feature semester must precede the label semester")
        if len(self.dyads) != len(set(self.dyads)):
            raise ValueError("dataset contains duplicate dyads")
        if self.X.shape != (len(self.dyads), len(self.feature_names)):
            raise ValueError("feature matrix shape does not match dyads/feature names")

    @property
    def n_rows(self) -> int:
        return len(self.dyads)

    @property
    def n_positive(self) -> int:
        return int(self.y.sum())

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=int)
        return LabeledDataset(task=self.task, network=self.network, method=self.method,
                              feature_names=self.feature_names,
                              dyads=[self.dyads[i] for i in idx],
                              X=self.X[idx], y=self.y[idx],
                              source_semesters=self.source_semesters)

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["node_u", "node_v", *self.feature_names, "label"])
            for (u, v), row, label in zip(self.dyads, self.X, self.y):
                writer.writerow([u, v, *[repr(float(x)) for x in row], int(label)])

    @classmethod
    def read_csv(cls, path: str | Path, *, task: str, network: str, method: str,
                 source_semesters: tuple[int, int]) -> "LabeledDataset":
        path = Path(path)
        dyads, rows, labels = [], [], []
        with path.open(newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if not header or header[:2] != ["node_u", "node_v"] or header[-1] != "label":
                raise ParseError("unrecognized dataset header", path=str(path), line=1)
            feature_names = tuple(header[2:-1])
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise ParseError("row width does not match header",
                                     path=str(path), line=lineno)
                dyads.append((row[0], row[1]))
                rows.append([float(x) for x in row[2:-1]])
                labels.append(int(row[-1]))
        return cls(task=task, network=network, method=method, feature_names=feature_names,
                   dyads=dyads, X=np.asarray(rows, dtype=float),
                   y=np.asarray(labels, dtype=np.int8), source_semesters=source_semesters)


def _assemble(task: str, method: str, kind: str, schema: AttributeSchema,
              feature_snapshot: Snapshot, label_snapshot: Snapshot,
              max_hops: int) -> LabeledDataset:
    prefs = compute_preferences(feature_snapshot, kind, schema)
    if task == FORMATION:
        pairs = sorted(formation_candidates(feature_snapshot, kind, max_hops))
        labels = label_formation(pairs, label_snapshot, kind)
    else:
        pairs = sorted(feature_snapshot.edge_set(kind))
        labels = label_dissolution(feature_snapshot, label_snapshot, kind)

    # vectorized dyad_features over all pairs (same arithmetic, array form)
    nodes = sorted(feature_snapshot.nodes)
    index = {node: i for i, node in enumerate(nodes)}
    u_idx = np.fromiter((index[u] for u, _ in pairs), dtype=np.int64, count=len(pairs))
    v_idx = np.fromiter((index[v] for _, v in pairs), dtype=np.int64, count=len(pairs))

    feature_names = (*schema.names, COMMON_NEIGHBORS_FEATURE)
    X = np.empty((len(pairs), len(feature_names)), dtype=float)
    for j, attribute in enumerate(schema.names):
        values = schema.values_of(attribute)
        code_of = {value: c for c, value in enumerate(values)}
        codes = np.fromiter(
            (code_of.get(feature_snapshot.nodes[n].get(attribute), -1) for n in nodes),
            dtype=np.int64, count=len(nodes))
        table = np.array([[prefs.preference(n, attribute, value) for value in values]
                          for n in nodes])
        cu = codes[u_idx]
        cv = codes[v_idx]
        missing = (cu < 0) | (cv < 0)
        pref_u = table[u_idx, np.where(cv < 0, 0, cv)]  # u's preference for v's value
        pref_v = table[v_idx, np.where(cu < 0, 0, cu)]
        pref_u = np.where(missing, NEUTRAL_PREFERENCE, pref_u)
        pref_v = np.where(missing, NEUTRAL_PREFERENCE, pref_v)
        X[:, j] = pref_u * pref_v if method == EQUAL_PREFERENCE else np.minimum(pref_u, pref_v)

    adjacency = np.zeros((len(nodes), len(nodes)), dtype=np.int32)
    for a, b in feature_snapshot.edge_set(kind):
        adjacency[index[a], index[b]] = 1
    adjacency |= adjacency.T
    shared = adjacency @ adjacency
    X[:, -1] = shared[u_idx, v_idx]

    y = np.fromiter((1 if labels[pair] else 0 for pair in pairs),
                    dtype=np.int8, count=len(pairs))
    return LabeledDataset(task=task, network=kind, method=method,
                          feature_names=feature_names, dyads=list(pairs), X=X, y=y,
                          source_semesters=(feature_snapshot.semester,
                                            label_snapshot.semester))


def build_dataset(task: str, method: str, snapshots: Sequence[Snapshot],
                  semester_index: int, kind: str, schema: AttributeSchema,
                  max_hops: int = DEFAULT_MAX_HOPS) -> tuple[LabeledDataset, LabeledDataset]:
    """Training and test datasets for predicting ``semester_index``.

    Requires the three consecutive snapshots ending at ``semester_index``:
    training rows take features from the first and labels from the second;
    test rows take features from the second and labels from the third.
    """
    check_task(task)
    check_method(method)
    check_kind(kind)
    by_semester: Mapping[int, Snapshot] = {s.semester: s for s in snapshots}
    needed = (semester_index - 2, semester_index - 1, semester_index)
    missing = [s for s in needed if s not in by_semester]
    if missing:
        raise ValueError(
            f"predicting semester {semester_index} needs snapshots {needed}; missing {missing}")
    first, second, third = (by_semester[s] for s in needed)
    train = _assemble(task, method, kind, schema, first, second, max_hops)
    test = _assemble(task, method, kind, schema, second, third, max_hops)
    return train, test
