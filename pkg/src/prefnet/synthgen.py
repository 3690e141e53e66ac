"""Synthetic corpus generator with planted affinities and dynamics.

Produces event logs, nominations, attribute surveys and a schema file that
are bit-compatible with the ingest formats, plus a ground-truth ledger
recording which dyads formed or dissolved and the planted affinity behind
each outcome. Dyad formation probability is proportional to the product of
the two endpoints' affinities for each other's attribute values (taken
across attributes), mirroring the multiplicative structure the feature
builder assumes. Dissolution probability depends on the dyad's attribute
agreement: dyads above the strong threshold dissolve at the strong rate,
the rest at the weak rate. A dissolving edge either disappears or, for a
configurable fraction, survives with its volume damped below a third.

A fixed seed reproduces the corpus byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ingest import (AttributeRecord, CommEvent, IngestWarnings, Nomination,
                     build_snapshots)
from .schema import AttributeDef, AttributeSchema, Semester, SemesterCalendar

SECONDS_PER_DAY = 86400
SEMESTER_DAYS = 120
BREAK_DAYS = 30
STUDY_START = 1_312_000_000  # ~August 2011, UTC


@dataclass(frozen=True)
class AttributeSpec:
    """One planted attribute: value distribution plus an affinity matrix.

    ``affinity[i][j]`` is the multiplicative affinity a node holding value i
    has for value j; all 1.0 means the attribute plays no role in tie
    dynamics. ``once_only`` attributes are surveyed in the first semester
    only (downstream ingestion carries them forward).
    """

    name: str
    values: tuple[str, ...]
    distribution: tuple[float, ...]
    affinity: tuple[tuple[float, ...], ...] | None = None
    once_only: bool = False

    def matrix(self) -> np.ndarray:
        if self.affinity is None:
            return np.ones((len(self.values), len(self.values)))
        return np.asarray(self.affinity, dtype=float)


@dataclass(frozen=True)
class GenConfig:
    n_nodes: int = 200
    n_semesters: int = 4
    attributes: tuple[AttributeSpec, ...] = ()
    formation_rate: float = 0.001
    initial_rate: float = 0.002
    long_range_rate: float = 0.0
    dissolve_strong: float = 0.2
    dissolve_weak: float = 0.5
    strong_threshold: float = 0.75
    soft_dissolve_fraction: float = 0.3
    mean_weight: float = 14.0
    weight_sigma: float = 0.5
    call_share: float = 0.4
    nominations_per_node: int = 3
    max_hops: int = 3
    rng_seed: int = 0
    ledger_candidates: bool = True

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ConfigError("n_nodes must be at least 2")
        if self.n_semesters < 1:
            raise ConfigError("n_semesters must be at least 1")
        if not self.attributes:
            raise ConfigError("config declares no attributes")
        if not 0 < self.nominations_per_node <= 20:
            raise ConfigError("nominations_per_node must be in 1..20")
        for rate_name in ("formation_rate", "initial_rate", "long_range_rate",
                          "dissolve_strong", "dissolve_weak", "soft_dissolve_fraction"):
            rate = getattr(self, rate_name)
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"{rate_name} must be within [0, 1], got {rate}")
        max_product = 1.0
        for spec in self.attributes:
            if len(spec.values) < 2:
                raise ConfigError(f"attribute {spec.name!r} needs at least 2 values")
            if len(spec.distribution) != len(spec.values):
                raise ConfigError(f"attribute {spec.name!r}: distribution size mismatch")
            if any(p < 0 for p in spec.distribution) or abs(sum(spec.distribution) - 1.0) > 1e-9:
                raise ConfigError(f"attribute {spec.name!r}: distribution must sum to 1")
            matrix = spec.matrix()
            if matrix.shape != (len(spec.values),) * 2:
                raise ConfigError(f"attribute {spec.name!r}: affinity matrix shape mismatch")
            if (matrix < 0).any():
                raise ConfigError(f"attribute {spec.name!r}: affinities must be non-negative")
            max_product *= float(matrix.max()) ** 2
        for rate_name in ("formation_rate", "initial_rate", "long_range_rate"):
            peak = getattr(self, rate_name) * max_product
            if peak > 1.0 + 1e-12:
                raise ConfigError(
                    f"infeasible config: {rate_name} * max affinity product = {peak:.3g} > 1")

    def schema(self) -> AttributeSchema:
        return AttributeSchema(attributes=tuple(
            AttributeDef(name=s.name, values=tuple(s.values)) for s in self.attributes))

    def calendar(self) -> SemesterCalendar:
        semesters = []
        period = (SEMESTER_DAYS + BREAK_DAYS) * SECONDS_PER_DAY
        for k in range(1, self.n_semesters + 1):
            start = STUDY_START + (k - 1) * period
            semesters.append(Semester(index=k, start=start,
                                      end=start + SEMESTER_DAYS * SECONDS_PER_DAY))
        return SemesterCalendar(semesters=tuple(semesters))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "GenConfig":
        raw = dict(raw)
        try:
            specs = []
            for spec in raw.pop("attributes", []):
                spec = dict(spec)
                if spec.get("affinity") is not None:
                    spec["affinity"] = tuple(tuple(float(x) for x in row)
                                             for row in spec["affinity"])
                spec["values"] = tuple(spec["values"])
                spec["distribution"] = tuple(float(p) for p in spec["distribution"])
                specs.append(AttributeSpec(**spec))
            return cls(attributes=tuple(specs), **raw)
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"bad generator config: {exc}") from None


def default_config(rng_seed: int = 0) -> GenConfig:
    """A corpus with mild homophily and realistic sparsity (about 1:50 formation imbalance)."""
    return GenConfig(
        n_nodes=200,
        n_semesters=4,
        attributes=(
            AttributeSpec("political_views", ("conservative", "moderate", "liberal"),
                          (0.25, 0.40, 0.35),
                          ((3.0, 1.2, 0.6), (1.2, 3.0, 1.2), (0.6, 1.2, 3.0))),
            AttributeSpec("parental_income", ("low", "middle", "high"),
                          (0.30, 0.45, 0.25),
                          ((2.0, 1.0, 1.0), (1.0, 2.0, 1.0), (1.0, 1.0, 2.0)),
                          once_only=True),
            AttributeSpec("exercise_time", ("low", "medium", "high"),
                          (0.40, 0.35, 0.25),
                          ((2.0, 1.0, 1.0), (1.0, 2.0, 1.0), (1.0, 1.0, 2.0))),
            AttributeSpec("major", ("science", "arts", "business", "engineering"),
                          (0.30, 0.25, 0.20, 0.25),
                          ((1.5, 1.0, 1.0, 1.0), (1.0, 1.5, 1.0, 1.0),
                           (1.0, 1.0, 1.5, 1.0), (1.0, 1.0, 1.0, 1.5))),
            AttributeSpec("religion", ("catholic", "protestant", "other", "none"),
                          (0.50, 0.20, 0.15, 0.15)),
        ),
        formation_rate=0.0012,
        initial_rate=0.0023,
        dissolve_strong=0.2,
        dissolve_weak=0.5,
        strong_threshold=0.75,
        soft_dissolve_fraction=0.3,
        rng_seed=rng_seed,
    )


@dataclass
class GeneratedData:
    """In-memory corpus plus the ground-truth ledger."""

    config: GenConfig
    schema: AttributeSchema
    calendar: SemesterCalendar
    events: list[CommEvent]
    nominations: list[Nomination]
    attribute_records: list[AttributeRecord]
    ledger: dict

    def snapshots(self, mutual_nominations: bool = False,
                  warnings: IngestWarnings | None = None):
        return build_snapshots(self.events, self.nominations, self.attribute_records,
                               self.calendar, self.schema,
                               mutual_nominations=mutual_nominations, warnings=warnings)


class _PairSpace:
    """Vectorized helpers over the upper-triangle dyad enumeration."""

    def __init__(self, n: int):
        self.n = n
        self.iu, self.iv = np.triu_indices(n, 1)
        self.count = len(self.iu)

    def index_of(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return i * (2 * self.n - i - 1) // 2 + (j - i - 1)


def _affinity_products(space: _PairSpace, value_codes: list[np.ndarray],
                       matrices: list[np.ndarray]) -> np.ndarray:
    products = np.ones(space.count)
    for codes, matrix in zip(value_codes, matrices):
        cu = codes[space.iu]
        cv = codes[space.iv]
        products *= matrix[cu, cv] * matrix[cv, cu]
    return products


def _agreement_fractions(space: _PairSpace, value_codes: list[np.ndarray]) -> np.ndarray:
    equal = np.zeros(space.count)
    for codes in value_codes:
        equal += codes[space.iu] == codes[space.iv]
    return equal / len(value_codes)


def _reachable_pairs(space: _PairSpace, edge_mask: np.ndarray, max_hops: int) -> np.ndarray:
    """Pairs within max_hops of each other, via boolean adjacency powers."""
    adjacency = np.zeros((space.n, space.n), dtype=bool)
    adjacency[space.iu[edge_mask], space.iv[edge_mask]] = True
    adjacency |= adjacency.T
    reach = adjacency.copy()
    frontier = adjacency.astype(np.int32)
    for _ in range(max_hops - 1):
        frontier = frontier @ adjacency
        reach |= frontier > 0
    return reach[space.iu, space.iv]


def generate(config: GenConfig) -> GeneratedData:
    """Simulate the planted dynamics and realize them as survey and event records."""
    rng = np.random.default_rng(config.rng_seed)
    n = config.n_nodes
    width = max(3, len(str(n - 1)))
    node_ids = [f"n{i:0{width}d}" for i in range(n)]
    space = _PairSpace(n)
    calendar = config.calendar()
    schema = config.schema()

    # quota assignment: exact value counts per the configured distribution
    # (largest-remainder rounding), shuffled per attribute
    value_codes = []
    for spec in config.attributes:
        quotas = np.asarray(spec.distribution) * n
        counts = np.floor(quotas).astype(int)
        remainder = np.argsort(-(quotas - counts), kind="stable")
        counts[remainder[:n - counts.sum()]] += 1
        codes = np.repeat(np.arange(len(spec.values)), counts)
        value_codes.append(rng.permutation(codes))
    matrices = [spec.matrix() for spec in config.attributes]
    affinity = _affinity_products(space, value_codes, matrices)
    agreement = _agreement_fractions(space, value_codes)
    strong_pair = agreement > config.strong_threshold
    dissolve_p = np.where(strong_pair, config.dissolve_strong, config.dissolve_weak)

    strengths = config.mean_weight * rng.lognormal(
        -config.weight_sigma ** 2 / 2.0, config.weight_sigma, space.count)
    # volumes below 3 cannot soft-dissolve; keep baseline weights clear of it
    strengths = np.maximum(strengths, 4.0)

    edge_masks = [rng.random(space.count) < np.clip(config.initial_rate * affinity, 0.0, 1.0)]
    formation_log: list[dict] = []
    dissolution_log: list[dict] = []
    soft_masks = []  # dissolving edges that stay present with damped volume

    for k in range(1, config.n_semesters):
        current = edge_masks[-1]
        reachable = _reachable_pairs(space, current, config.max_hops)
        candidates = reachable & ~current
        form_draw = rng.random(space.count)
        formed = candidates & (form_draw < np.clip(config.formation_rate * affinity, 0.0, 1.0))
        if config.long_range_rate > 0.0:
            far = ~reachable & ~current
            formed |= far & (form_draw < np.clip(config.long_range_rate * affinity, 0.0, 1.0))
        dissolve_draw = rng.random(space.count)
        dissolving = current & (dissolve_draw < dissolve_p)
        soft = dissolving & (rng.random(space.count) < config.soft_dissolve_fraction)
        edge_masks.append((current & ~dissolving) | formed | soft)
        soft_masks.append(soft)

        formation_log.append({
            "from_semester": k, "to_semester": k + 1,
            "events": [
                {"u": node_ids[space.iu[p]], "v": node_ids[space.iv[p]],
                 "affinity": float(affinity[p]), "formed": bool(formed[p])}
                for p in np.flatnonzero(candidates if config.ledger_candidates else formed)
            ],
        })
        dissolution_log.append({
            "from_semester": k, "to_semester": k + 1,
            "events": [
                {"u": node_ids[space.iu[p]], "v": node_ids[space.iv[p]],
                 "agreement": float(agreement[p]), "strong": bool(strong_pair[p]),
                 "dissolving": bool(dissolving[p]), "soft": bool(soft[p])}
                for p in np.flatnonzero(current)
            ],
        })

    # realize integer weights; a soft-dissolving edge must land at or below a
    # third of its volume, everything else must stay strictly above it
    weights = []
    for k, mask in enumerate(edge_masks):
        noise = rng.uniform(0.8, 1.2, space.count)
        W = np.zeros(space.count, dtype=np.int64)
        base = np.maximum(1, np.rint(strengths * noise).astype(np.int64))
        if k == 0:
            W[mask] = base[mask]
        else:
            prev_w = weights[k - 1]
            prev_mask = edge_masks[k - 1]
            soft = soft_masks[k - 1]
            kept = mask & prev_mask & ~soft
            fresh = mask & ~prev_mask
            W[fresh] = base[fresh]
            W[kept] = np.maximum(base[kept], prev_w[kept] // 3 + 1)
            soft_here = mask & soft
            W[soft_here] = np.maximum(1, prev_w[soft_here] // 4)
            # volumes of 1 or 2 cannot drop to a third while staying present
            infeasible = soft_here & (prev_w < 3)
            W[infeasible] = 0
            if infeasible.any():
                mask = mask & ~infeasible
                edge_masks[k] = mask
        weights.append(W)

    events: list[CommEvent] = []
    for k, (mask, W) in enumerate(zip(edge_masks, weights)):
        window = calendar.semesters[k]
        active = np.flatnonzero(mask)
        edge_w = W[active]
        calls = np.minimum(edge_w // 10,
                           rng.poisson(edge_w * config.call_share / 10.0))
        texts = edge_w - 10 * calls
        totals = calls + texts
        stamps = rng.integers(window.start, window.end, size=int(totals.sum()))
        flips = rng.random(int(totals.sum())) < 0.5
        call_durs = 5 + rng.poisson(90.0, size=int(calls.sum()))
        text_durs = 1 + rng.poisson(40.0, size=int(texts.sum()))
        at = c_at = t_at = 0
        for e, p in enumerate(active):
            u, v = node_ids[space.iu[p]], node_ids[space.iv[p]]
            for local in range(int(totals[e])):
                is_call = local < calls[e]
                if is_call:
                    duration = int(call_durs[c_at])
                    c_at += 1
                else:
                    duration = int(text_durs[t_at])
                    t_at += 1
                sender, receiver = (u, v) if flips[at] else (v, u)
                events.append(CommEvent(timestamp=int(stamps[at]), sender=sender,
                                        receiver=receiver,
                                        kind="call" if is_call else "text",
                                        duration=duration))
                at += 1
    events.sort(key=lambda e: (e.timestamp, e.sender, e.receiver, e.kind))

    nominations: list[Nomination] = []
    for k, (mask, W) in enumerate(zip(edge_masks, weights), start=1):
        neighbors: dict[int, list[tuple[int, int]]] = {i: [] for i in range(n)}
        for p in np.flatnonzero(mask):
            i, j = int(space.iu[p]), int(space.iv[p])
            neighbors[i].append((int(W[p]), j))
            neighbors[j].append((int(W[p]), i))
        for i in range(n):
            ranked = sorted(neighbors[i], key=lambda t: (-t[0], t[1]))
            for _, j in ranked[:config.nominations_per_node]:
                nominations.append(Nomination(semester=k, ego=node_ids[i], alter=node_ids[j]))

    attribute_records: list[AttributeRecord] = []
    for k in range(1, config.n_semesters + 1):
        for spec, codes in zip(config.attributes, value_codes):
            if spec.once_only and k > 1:
                continue
            for i in range(n):
                attribute_records.append(AttributeRecord(
                    semester=k, node=node_ids[i], attribute=spec.name,
                    value=spec.values[codes[i]]))

    ledger = {
        "rng_seed": config.rng_seed,
        "n_nodes": n,
        "n_semesters": config.n_semesters,
        "config_digest": hashlib.sha256(
            json.dumps(config.to_dict(), sort_keys=True).encode()).hexdigest(),
        "edge_counts": [int(mask.sum()) for mask in edge_masks],
        "formation": formation_log,
        "dissolution": dissolution_log,
    }
    return GeneratedData(config=config, schema=schema, calendar=calendar, events=events,
                         nominations=nominations, attribute_records=attribute_records,
                         ledger=ledger)


def write_corpus(data: GeneratedData, out_dir: str | Path) -> dict[str, Path]:
    """Write the corpus in the ingest file formats plus the ground-truth ledger."""
    import csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / f"{name}.csv" for name in ("events", "nominations", "attributes")}
    paths["schema"] = out / "schema.json"
    paths["ground_truth"] = out / "ground_truth.json"

    with paths["events"].open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["timestamp", "sender", "receiver", "kind", "duration"])
        for event in data.events:
            writer.writerow([event.timestamp, event.sender, event.receiver,
                             event.kind, event.duration])
    with paths["nominations"].open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["semester", "ego", "alter"])
        for nom in data.nominations:
            writer.writerow([nom.semester, nom.ego, nom.alter])
    with paths["attributes"].open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["semester", "node", "attribute", "value"])
        for rec in data.attribute_records:
            writer.writerow([rec.semester, rec.node, rec.attribute, rec.value])

    schema_doc: dict = {name: list(values) for name, values in
                        ((a.name, a.values) for a in data.schema.attributes)}
    schema_doc["calendar"] = data.calendar.to_list()
    paths["schema"].write_text(json.dumps(schema_doc, indent=2) + "\n", encoding="utf-8")
    paths["ground_truth"].write_text(
        json.dumps(data.ledger, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8")
    return paths


def generate_corpus(config: GenConfig, out_dir: str | Path) -> tuple[GeneratedData, dict[str, Path]]:
    data = generate(config)
    return data, write_corpus(data, out_dir)
