"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the criterion
lines as they complete. The planted-formation corpus (20 seeds) is built
once and shared by the criteria that consume it.
"""

from __future__ import annotations

import json
import statistics
import subprocess
import sys
import time
from dataclasses import dataclass

import mpmath
import numpy as np
import pytest

from prefnet import features, ml, survival, synthgen
from prefnet.features import EQUAL_PREFERENCE, MINIMUM_PREFERENCE, agreement, is_dissolving
from prefnet.importance import attribute_weights
from prefnet.preference import PreferenceTable, preference_from_counts
from prefnet.schema import AttributeDef, AttributeSchema

import _planted

mpmath.mp.dps = 50


def report_line(number: int, name: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number:>2} [{status}] {name}: {detail}")


# -- shared planted-formation corpus ------------------------------------------

N_SEEDS = 20


@dataclass
class SeedOutcome:
    best_kind: str
    best_recall: float
    best_accuracy: float
    auc_by_kind: dict
    roc_ok: bool
    dominant_rank: int


@pytest.fixture(scope="module")
def formation_runs():
    outcomes = []
    started = time.perf_counter()
    for seed in range(N_SEEDS):
        reports, best, regression = _planted.run_formation_pipeline(seed)
        roc_ok = all(_roc_well_formed(r.roc) for r in reports.values())
        outcomes.append(SeedOutcome(
            best_kind=best,
            best_recall=reports[best].recall,
            best_accuracy=reports[best].accuracy,
            auc_by_kind={kind: r.auc for kind, r in reports.items()},
            roc_ok=roc_ok,
            dominant_rank=attribute_weights(regression).rank_of("group"),
        ))
    return outcomes, time.perf_counter() - started


def _roc_well_formed(points) -> bool:
    if not points:
        return False
    if (points[0].fpr, points[0].tpr) != (0.0, 0.0):
        return False
    if (points[-1].fpr, points[-1].tpr) != (1.0, 1.0):
        return False
    fprs = [p.fpr for p in points]
    tprs = [p.tpr for p in points]
    thresholds = [p.threshold for p in points]
    return (fprs == sorted(fprs) and tprs == sorted(tprs)
            and thresholds == sorted(thresholds, reverse=True))


# -- criterion 1 ---------------------------------------------------------------

def test_criterion_1_preference_math_oracle():
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 51))
        p = float(rng.uniform(0.001, 0.999))
        x = int(rng.integers(0, n + 1))
        got = preference_from_counts(x, n, p)
        z = (x - n * p) / mpmath.sqrt(n * p * (1 - p))
        expected = float(mpmath.ncdf(z))
        worst = max(worst, abs(got - expected))
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-7 and elapsed < 1.0
    report_line(1, "preference math oracle", ok,
                f"1000 triples, max |delta| = {worst:.3g}, {elapsed:.2f}s")
    assert worst <= 1e-7
    assert elapsed < 1.0


# -- criterion 2 ---------------------------------------------------------------

def test_criterion_2_neutrality_and_degeneracy():
    started = time.perf_counter()
    failures = 0
    checked = 0
    for p in (0.0, 0.25, 0.5, 0.75, 1.0):
        checked += 1
        failures += preference_from_counts(0, 0, p) != 0.5
    for n in range(1, 21):
        for x in range(n + 1):
            for p in (0.0, 1.0):
                checked += 1
                failures += preference_from_counts(x, n, p) != 0.5
        for j in range(n + 1):
            checked += 1
            failures += preference_from_counts(j, n, j / n) != 0.5
    elapsed = time.perf_counter() - started
    ok = failures == 0 and elapsed < 1.0
    report_line(2, "neutral and degenerate cases are exactly 0.5", ok,
                f"{checked} cases, {failures} not exactly 0.5, {elapsed:.2f}s")
    assert failures == 0
    assert elapsed < 1.0


# -- criterion 3 ---------------------------------------------------------------

def test_criterion_3_feature_method_properties():
    schema = AttributeSchema(attributes=(AttributeDef("views", ("red", "blue")),))
    rng = np.random.default_rng(7)
    bad = 0
    for _ in range(10_000):
        a, b = rng.random(2)
        table = PreferenceTable(
            network="behavioral", semester=1, schema=schema,
            preferences={"u": {"views": {"red": 0.1, "blue": float(a)}},
                         "v": {"views": {"red": float(b), "blue": 0.2}}},
            neighbor_counts={"u": 1, "v": 1},
            node_values={"u": {"views": "red"}, "v": {"views": "blue"}})
        equal_uv = agreement(EQUAL_PREFERENCE, table, "u", "v", "views")
        equal_vu = agreement(EQUAL_PREFERENCE, table, "v", "u", "views")
        min_uv = agreement(MINIMUM_PREFERENCE, table, "u", "v", "views")
        min_vu = agreement(MINIMUM_PREFERENCE, table, "v", "u", "views")
        if equal_uv != a * b or min_uv != min(a, b):
            bad += 1
        elif equal_uv != equal_vu or min_uv != min_vu:
            bad += 1
        elif equal_uv > min_uv:
            bad += 1
    ok = bad == 0
    report_line(3, "agreement is product / min, bounded and symmetric", ok,
                f"10000 random pairs, {bad} violations")
    assert bad == 0


# -- criterion 4 ---------------------------------------------------------------

def test_criterion_4_dissolution_rule_exhaustive():
    bad = 0
    for now in range(1, 101):
        if is_dissolving(now, None) is not True:
            bad += 1
        for nxt in range(0, 101):
            expected = nxt <= now / 3  # absent handled above; inclusive third
            if is_dissolving(now, nxt) is not expected:
                bad += 1
    ok = bad == 0
    report_line(4, "volume-drop rule matches 'absent or <= now/3'", ok,
                f"100x102 weight pairs, {bad} mismatches")
    assert bad == 0


# -- criterion 5 ---------------------------------------------------------------

def test_criterion_5_planted_homophily_recovery(formation_runs):
    outcomes, elapsed = formation_runs
    recalls = [o.best_recall for o in outcomes]
    accuracies = [o.best_accuracy for o in outcomes]
    median_recall = statistics.median(recalls)
    median_accuracy = statistics.median(accuracies)
    ok = median_recall >= 0.90 and median_accuracy >= 0.90 and elapsed < 120.0
    report_line(5, "planted homophily recovery (formation)", ok,
                f"{N_SEEDS} seeds, median recall {median_recall:.3f}, "
                f"median accuracy {median_accuracy:.3f}, {elapsed:.1f}s")
    assert median_recall >= 0.90
    assert median_accuracy >= 0.90
    assert elapsed < 120.0


# -- criterion 6 ---------------------------------------------------------------

def test_criterion_6_planted_dissolution_recovery():
    started = time.perf_counter()
    precisions, recalls, accuracies = [], [], []
    for seed in range(5):
        config = _planted.dissolution_config(seed)
        snapshots = synthgen.generate(config).snapshots()
        train_full, test = features.build_dataset(
            features.DISSOLUTION, EQUAL_PREFERENCE, snapshots, 3, "behavioral",
            config.schema())
        spec = ml.SplitSpec(rng_seed=seed)
        fit, validation = ml.split(train_full, spec)
        reports = {kind: ml.evaluate(ml.train(kind, fit, validation, spec), test)
                   for kind in ml.KINDS}
        best = reports[ml.select_model(reports)]
        precisions.append(best.precision)
        recalls.append(best.recall)
        accuracies.append(best.accuracy)
    elapsed = time.perf_counter() - started
    med = (statistics.median(precisions), statistics.median(recalls),
           statistics.median(accuracies))
    ok = all(m >= 0.75 for m in med) and elapsed < 120.0
    report_line(6, "planted dissolution recovery", ok,
                f"5 seeds, median precision {med[0]:.3f}, recall {med[1]:.3f}, "
                f"accuracy {med[2]:.3f}, {elapsed:.1f}s")
    for value in med:
        assert value >= 0.75
    assert elapsed < 120.0


# -- criterion 7 ---------------------------------------------------------------

def test_criterion_7_importance_ranking(formation_runs):
    outcomes, _ = formation_runs
    hits = sum(1 for o in outcomes if o.dominant_rank <= 3)
    share = hits / len(outcomes)
    ok = share >= 0.80
    report_line(7, "planted attribute ranks in the top 3", ok,
                f"rank <= 3 in {hits}/{len(outcomes)} seeds ({share:.0%})")
    assert share >= 0.80


# -- criterion 8 ---------------------------------------------------------------

def test_criterion_8_survival_rates_and_sweep():
    config = _planted.survival_config(11)
    snapshots = synthgen.generate(config).snapshots()
    schema = config.schema()
    report = survival.survival_rates(snapshots, "behavioral", 0.75, schema)
    strong_n = sum(t.strong_edges for t in report.transitions)
    weak_n = sum(t.weak_edges for t in report.transitions)
    strong_rate = sum(t.strong_survivors for t in report.transitions) / strong_n
    weak_rate = sum(t.weak_survivors for t in report.transitions) / weak_n
    first_edges = report.transitions[0].strong_edges + report.transitions[0].weak_edges
    grid = (0.25, 0.5, 0.625, 0.75)
    sweep = survival.sweep_threshold(snapshots, "behavioral", grid, schema)
    gaps = {}
    for rep in sweep:
        diffs = [t.strong_rate - t.weak_rate for t in rep.transitions
                 if t.strong_rate is not None and t.weak_rate is not None]
        gaps[rep.threshold] = sum(diffs) / len(diffs)
    argmax = max(gaps, key=gaps.get)
    ok = (abs(strong_rate - 0.80) <= 0.05 and abs(weak_rate - 0.44) <= 0.05
          and first_edges >= 1000 and argmax == 0.75)
    report_line(8, "survival separation at the planted threshold", ok,
                f"strong {strong_rate:.3f} (target 0.80), weak {weak_rate:.3f} "
                f"(target 0.44), {first_edges} first-semester edges, "
                f"gap argmax at {argmax}")
    assert abs(strong_rate - 0.80) <= 0.05
    assert abs(weak_rate - 0.44) <= 0.05
    assert first_edges >= 1000
    assert argmax == 0.75


# -- criterion 9 ---------------------------------------------------------------

def test_criterion_9_roc_sanity(formation_runs):
    outcomes, _ = formation_runs
    shape_ok = all(o.roc_ok for o in outcomes)
    median_auc = {kind: statistics.median(o.auc_by_kind[kind] for o in outcomes)
                  for kind in ml.KINDS}
    auc_ok = all(a >= 0.90 for a in median_auc.values())
    ok = shape_ok and auc_ok
    report_line(9, "ROC endpoints, monotonicity, AUC", ok,
                "endpoints/monotone on all {} curves; median AUC {}".format(
                    len(outcomes) * len(ml.KINDS),
                    {k: round(v, 3) for k, v in median_auc.items()}))
    assert shape_ok
    for kind, auc in median_auc.items():
        assert auc >= 0.90, kind


# -- criterion 10 ----------------------------------------------------------------

PIPELINE_CONFIG = {
    "synth": {
        "n_nodes": 100,
        "n_semesters": 4,
        "attributes": [
            {"name": "group", "values": ["a", "b"], "distribution": [0.5, 0.5],
             "affinity": [[5.0, 1.0], [1.0, 5.0]]},
            {"name": "hall", "values": ["north", "south"], "distribution": [0.5, 0.5]},
        ],
        "formation_rate": 0.03,
        "initial_rate": 0.02,
        "dissolve_strong": 0.6,
        "dissolve_weak": 0.6,
        "soft_dissolve_fraction": 0.2,
        "mean_weight": 9.0,
        "rng_seed": 0,
    }
}


def _cli(*args):
    result = subprocess.run([sys.executable, "-m", "prefnet", *map(str, args)],
                            capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    return result


def _run_pipeline(root, config_path, jobs: int):
    raw = root / "raw"
    ingested = root / "ingested"
    ds = root / "dataset"
    ev = root / "evaluation"
    _cli("synth", "--config", config_path, "--seed", 7, "--out", raw)
    _cli("ingest", "--data", raw, "--out", ingested)
    snapshots = ingested / "snapshots.json"
    _cli("dataset", "--snapshots", snapshots, "--task", "formation",
         "--method", "equal", "--network", "behavioral", "--semester", 3,
         "--out", ds, "--no-figures")
    _cli("evaluate", "--snapshots", snapshots, "--task", "formation",
         "--method", "equal", "--network", "behavioral", "--semester", 3,
         "--classifier", "all", "--seed", 7, "--jobs", jobs,
         "--out", ev, "--no-figures")
    return root


def _pipeline_bytes(root, names):
    return {name: (root / name).read_bytes() for name in names}


def test_criterion_10_end_to_end_determinism(tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(PIPELINE_CONFIG), encoding="utf-8")
    run_a = _run_pipeline(tmp_path / "a", config_path, jobs=1)
    run_b = _run_pipeline(tmp_path / "b", config_path, jobs=1)
    run_c = _run_pipeline(tmp_path / "c", config_path, jobs=4)

    tracked = ["raw/events.csv", "raw/nominations.csv", "raw/attributes.csv",
               "raw/schema.json", "raw/ground_truth.json", "raw/manifest.json",
               "ingested/snapshots.json", "ingested/ingest_report.json",
               "ingested/manifest.json",
               "dataset/train.csv", "dataset/test.csv", "dataset/manifest.json",
               "evaluation/evaluation.json"]
    tracked += [f"evaluation/roc_{kind}.csv" for kind in ml.KINDS]

    bytes_a = _pipeline_bytes(run_a, tracked)
    bytes_b = _pipeline_bytes(run_b, tracked)
    rerun_equal = [name for name in tracked if bytes_a[name] != bytes_b[name]]

    threaded = ["evaluation/evaluation.json"] + [f"evaluation/roc_{k}.csv"
                                                 for k in ml.KINDS]
    bytes_c = _pipeline_bytes(run_c, threaded)
    thread_equal = [name for name in threaded if bytes_a[name] != bytes_c[name]]

    ok = not rerun_equal and not thread_equal
    report_line(10, "end-to-end determinism", ok,
                f"{len(tracked)} artifacts byte-identical across reruns; "
                f"threaded training matches serial"
                + (f"; MISMATCH {rerun_equal + thread_equal}" if not ok else ""))
    assert not rerun_equal, rerun_equal
    assert not thread_equal, thread_equal
