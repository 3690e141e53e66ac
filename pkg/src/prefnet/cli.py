"""Command-line pipeline: synth, ingest, prefs, matrix, dataset, train,
evaluate, importance, survival.

All configuration is taken from flags, optionally backed by a JSON config
file (``--config``) whose keys match the long flag names; explicit flags
win. Every subcommand writes its artifacts plus one ``manifest.json`` into
``--out`` and exits 0 on success. Failures print a machine-readable JSON
error to stderr and exit with a per-category code: 2 usage, 3 missing
input, 4 bad data, 5 bad config.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigError, MissingInputError, ParseError, PrefnetError
from .features import (DEFAULT_MAX_HOPS, DISSOLUTION, FORMATION,
                       LabeledDataset, build_dataset)
from .graph import BEHAVIORAL, COGNITIVE, NETWORK_KINDS
from .importance import attribute_weights, compare_rankings
from .ingest import (IngestWarnings, load_inputs, load_snapshot_file,
                     parse_schema, save_snapshots)
from .manifest import write_manifest
from .ml import (KNN, LINEAR_REGRESSION, LINEAR_SVM, NAIVE_BAYES,
                 RANDOM_FOREST, SplitSpec, TrainOptions, evaluate, select_model,
                 split, train, train_all)
from .preference import (DEFAULT_TREND_EPSILON, average_preference_matrix,
                         compute_preferences, trend_marks)
from .survival import survival_rates, sweep_threshold
from .synthgen import GenConfig, default_config, generate_corpus

log = logging.getLogger("prefnet")

CLASSIFIER_NAMES = {
    "regression": LINEAR_REGRESSION,
    "svm": LINEAR_SVM,
    "knn": KNN,
    "forest": RANDOM_FOREST,
    "bayes": NAIVE_BAYES,
}
METHOD_NAMES = {"equal": "equal_preference", "min": "minimum_preference"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prefnet", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"prefnet {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser, *, seed: bool = True):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", default=None, help="JSON file with flag defaults")
        p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    common(p)

    p = sub.add_parser("ingest", help="parse raw files into snapshots")
    common(p, seed=False)
    p.add_argument("--data", default=None, help="directory holding the default file names")
    p.add_argument("--events", default=None)
    p.add_argument("--nominations", default=None)
    p.add_argument("--attributes", default=None)
    p.add_argument("--schema", default=None)
    p.add_argument("--mutual-nominations", action="store_true",
                   help="require reciprocated nominations for a cognitive edge")

    p = sub.add_parser("prefs", help="compute node preferences")
    common(p, seed=False)
    p.add_argument("--snapshots", "--snapshot", required=True)
    p.add_argument("--network", required=True, choices=NETWORK_KINDS)
    p.add_argument("--semester", type=int, required=True)

    p = sub.add_parser("matrix", help="average preference matrices and trends")
    common(p, seed=False)
    p.add_argument("--snapshots", "--snapshot", required=True)
    p.add_argument("--network", required=True, choices=NETWORK_KINDS)
    p.add_argument("--attribute", required=True)
    p.add_argument("--epsilon", type=float, default=DEFAULT_TREND_EPSILON,
                   help="trend significance threshold in preference units")

    def task_flags(p: argparse.ArgumentParser):
        p.add_argument("--snapshots", "--snapshot", required=True)
        p.add_argument("--task", required=True, choices=(FORMATION, DISSOLUTION))
        p.add_argument("--method", default="equal", choices=sorted(METHOD_NAMES))
        p.add_argument("--network", required=True, choices=NETWORK_KINDS)
        p.add_argument("--semester", type=int, required=True,
                       help="the semester whose links are predicted")
        p.add_argument("--max-hops", type=int, default=DEFAULT_MAX_HOPS)

    p = sub.add_parser("dataset", help="emit labeled train/test feature CSVs")
    common(p, seed=False)
    task_flags(p)

    def ml_flags(p: argparse.ArgumentParser):
        task_flags(p)
        p.add_argument("--classifier", default="all",
                       choices=[*sorted(CLASSIFIER_NAMES), "all"])
        p.add_argument("--validation-fraction", type=float, default=0.2)
        p.add_argument("--downsample", type=float, default=10.0,
                       help="max negatives per positive in training; 0 disables")
        p.add_argument("--jobs", type=int, default=1,
                       help="train classifier kinds concurrently")

    p = sub.add_parser("train", help="train classifiers; report validation metrics")
    common(p)
    ml_flags(p)

    p = sub.add_parser("evaluate", help="train, evaluate on the test semester, select a model")
    common(p)
    ml_flags(p)

    p = sub.add_parser("importance", help="attribute weights and ranks from regression")
    common(p)
    p.add_argument("--snapshots", "--snapshot", required=True)
    p.add_argument("--semester", type=int, required=True)
    p.add_argument("--method", default="equal", choices=sorted(METHOD_NAMES))
    p.add_argument("--tasks", default="formation,dissolution")
    p.add_argument("--networks", default=f"{BEHAVIORAL},{COGNITIVE}")
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--max-hops", type=int, default=DEFAULT_MAX_HOPS)
    p.add_argument("--validation-fraction", type=float, default=0.2)
    p.add_argument("--downsample", type=float, default=10.0)

    p = sub.add_parser("survival", help="strong/weak edge survival statistics")
    common(p, seed=False)
    p.add_argument("--snapshots", "--snapshot", required=True)
    p.add_argument("--network", required=True, choices=NETWORK_KINDS)
    p.add_argument("--ts", type=float, default=0.75, help="strength threshold")
    p.add_argument("--sweep", default=None, help="threshold grid as start:stop:step")

    return parser


def _apply_config(args: argparse.Namespace, argv: list[str]) -> None:
    """Fill unspecified flags from the JSON config file; explicit flags win."""
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    if not path.exists():
        raise MissingInputError(str(path))
    try:
        overrides = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(overrides, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    given = {token.split("=", 1)[0] for token in argv if token.startswith("--")}
    for key, value in overrides.items():
        if key == "synth":  # nested generator config is consumed by the synth handler
            continue
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise ConfigError(f"{path}: unknown config key {key!r}")
        if f"--{key}" in given:
            continue
        setattr(args, dest, value)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump_json(payload, path: Path) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _load_corpus(args):
    snapshots, schema = load_snapshot_file(args.snapshots)
    if schema is None:
        raise ParseError("snapshot file carries no schema block; re-run ingest",
                         path=args.snapshots)
    return snapshots, schema


def _figures(args) -> bool:
    return not args.no_figures


# -- handlers -----------------------------------------------------------------

def _cmd_synth(args, argv) -> int:
    out = _out_dir(args)
    config_dict = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        config_dict = raw.get("synth", raw if "n_nodes" in raw else {})
    if config_dict:
        config_dict.setdefault("rng_seed", args.seed)
        if "--seed" in {t.split("=", 1)[0] for t in argv}:
            config_dict["rng_seed"] = args.seed
        config = GenConfig.from_dict(config_dict)
    else:
        config = default_config(rng_seed=args.seed)
    data, paths = generate_corpus(config, out)
    write_manifest(out, subcommand="synth", config=config.to_dict(), seed=config.rng_seed,
                   inputs=[], outputs=paths.values())
    log.info("wrote %d events, %d nominations, %d attribute records",
             len(data.events), len(data.nominations), len(data.attribute_records))
    return 0


def _cmd_ingest(args, argv) -> int:
    out = _out_dir(args)
    if args.data:
        base = Path(args.data)
        defaults = {"events": base / "events.csv", "nominations": base / "nominations.csv",
                    "attributes": base / "attributes.csv", "schema": base / "schema.json"}
    else:
        defaults = {}
    paths = {}
    for name in ("events", "nominations", "attributes", "schema"):
        given = getattr(args, name)
        if given is None and name not in defaults:
            raise ConfigError(f"--{name} is required (or pass --data)")
        paths[name] = Path(given) if given else defaults[name]
    warnings = IngestWarnings()
    schema = parse_schema(paths["schema"])
    snapshots = load_inputs(paths["events"], paths["nominations"], paths["attributes"],
                            paths["schema"], mutual_nominations=args.mutual_nominations,
                            warnings=warnings)
    snap_path = out / "snapshots.json"
    save_snapshots(snapshots, snap_path, schema=schema)
    _dump_json(warnings.as_dict(), out / "ingest_report.json")
    write_manifest(out, subcommand="ingest",
                   config={"mutual_nominations": args.mutual_nominations}, seed=None,
                   inputs=paths.values(), outputs=[snap_path, out / "ingest_report.json"])
    for name, count in warnings.as_dict().items():
        if count:
            log.warning("%s: %d", name, count)
    return 0


def _pick_snapshot(snapshots, semester: int):
    for snap in snapshots:
        if snap.semester == semester:
            return snap
    raise ParseError(f"no snapshot for semester {semester}")


def _cmd_prefs(args, argv) -> int:
    out = _out_dir(args)
    snapshots, schema = _load_corpus(args)
    snapshot = _pick_snapshot(snapshots, args.semester)
    table = compute_preferences(snapshot, args.network, schema)
    path = _dump_json(table.to_dict(), out / "prefs.json")
    write_manifest(out, subcommand="prefs",
                   config={"network": args.network, "semester": args.semester}, seed=None,
                   inputs=[args.snapshots], outputs=[path])
    return 0


def _cmd_matrix(args, argv) -> int:
    out = _out_dir(args)
    snapshots, schema = _load_corpus(args)
    if args.attribute not in schema:
        raise ConfigError(f"unknown attribute {args.attribute!r}")
    matrices = {}
    for snapshot in snapshots:
        prefs = compute_preferences(snapshot, args.network, schema)
        matrices[snapshot.semester] = average_preference_matrix(prefs, snapshot, args.attribute)
    marks = trend_marks(matrices, epsilon=args.epsilon) if len(matrices) > 1 else []

    json_path = _dump_json(
        {"attribute": args.attribute, "network": args.network, "epsilon": args.epsilon,
         "matrices": {str(k): m.to_dict() for k, m in matrices.items()},
         "trends": [vars(m) for m in marks]},
        out / "matrix.json")
    csv_path = out / "matrix.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["semester", "row_value", "col_value", "mean_preference", "count_ratio"])
        for semester in sorted(matrices):
            matrix = matrices[semester]
            for i, row_value in enumerate(matrix.row_values):
                for j, col_value in enumerate(matrix.values):
                    ratio = matrix.ratios[i][j]
                    writer.writerow([semester, row_value, col_value,
                                     repr(matrix.means[i][j]),
                                     "" if ratio is None else repr(ratio)])
    trends_path = out / "trends.csv"
    with trends_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["from_semester", "to_semester", "row_value", "col_value", "mark"])
        for mark in marks:
            writer.writerow([mark.from_semester, mark.to_semester,
                             mark.row_value, mark.col_value, mark.mark])
    outputs = [json_path, csv_path, trends_path]
    if _figures(args):
        from . import plotting
        outputs.append(plotting.plot_preference_matrices(matrices, marks, out / "matrix.png"))
    write_manifest(out, subcommand="matrix",
                   config={"attribute": args.attribute, "network": args.network,
                           "epsilon": args.epsilon},
                   seed=None, inputs=[args.snapshots], outputs=outputs)
    return 0


def _build_datasets(args, snapshots, schema) -> tuple[LabeledDataset, LabeledDataset]:
    return build_dataset(args.task, METHOD_NAMES[args.method], snapshots, args.semester,
                         args.network, schema, max_hops=args.max_hops)


def _cmd_dataset(args, argv) -> int:
    out = _out_dir(args)
    snapshots, schema = _load_corpus(args)
    train_ds, test_ds = _build_datasets(args, snapshots, schema)
    train_path = out / "train.csv"
    test_path = out / "test.csv"
    train_ds.write_csv(train_path)
    test_ds.write_csv(test_path)
    write_manifest(out, subcommand="dataset",
                   config={"task": args.task, "method": args.method,
                           "network": args.network, "semester": args.semester,
                           "max_hops": args.max_hops},
                   seed=None, inputs=[args.snapshots], outputs=[train_path, test_path])
    log.info("train: %d rows (%d positive); test: %d rows (%d positive)",
             train_ds.n_rows, train_ds.n_positive, test_ds.n_rows, test_ds.n_positive)
    return 0


def _train_models(args, snapshots, schema):
    train_full, test_ds = _build_datasets(args, snapshots, schema)
    spec = SplitSpec(validation_fraction=args.validation_fraction, rng_seed=args.seed)
    options = TrainOptions(downsample_ratio=args.downsample if args.downsample > 0 else None)
    fit_ds, val_ds = split(train_full, spec)
    kinds = tuple(CLASSIFIER_NAMES.values()) if args.classifier == "all" \
        else (CLASSIFIER_NAMES[args.classifier],)
    models = train_all(fit_ds, val_ds, spec, options, kinds=kinds, jobs=args.jobs)
    return models, fit_ds, val_ds, test_ds


def _write_ml_outputs(args, out, models, reports, label: str):
    report_payload = {
        "task": args.task, "network": args.network, "method": args.method,
        "semester": args.semester, "seed": args.seed, "split": label,
        "reports": {kind: reports[kind].to_dict() for kind in sorted(reports)},
    }
    defined = {k: r for k, r in reports.items() if r.selection_score is not None}
    if defined:
        report_payload["selected"] = select_model(defined)
    json_path = _dump_json(report_payload, out / "evaluation.json")
    outputs = [json_path]
    for kind in sorted(reports):
        roc_path = out / f"roc_{kind}.csv"
        with roc_path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["threshold", "fpr", "tpr"])
            for point in reports[kind].roc:
                writer.writerow([repr(point.threshold), repr(point.fpr), repr(point.tpr)])
        outputs.append(roc_path)
    if _figures(args):
        from . import plotting
        outputs.append(plotting.plot_roc(reports, out / "roc.png"))
    return outputs, report_payload


def _cmd_train(args, argv) -> int:
    out = _out_dir(args)
    snapshots, schema = _load_corpus(args)
    models, fit_ds, val_ds, _ = _train_models(args, snapshots, schema)
    reports = {kind: evaluate(model, val_ds) for kind, model in models.items()}
    outputs, payload = _write_ml_outputs(args, out, models, reports, label="validation")
    write_manifest(out, subcommand="train", config=_ml_config(args), seed=args.seed,
                   inputs=[args.snapshots], outputs=outputs)
    print(json.dumps({k: payload["reports"][k]["selection_score"]
                      for k in sorted(payload["reports"])}, indent=2))
    return 0


def _cmd_evaluate(args, argv) -> int:
    out = _out_dir(args)
    snapshots, schema = _load_corpus(args)
    models, _, _, test_ds = _train_models(args, snapshots, schema)
    reports = {kind: evaluate(model, test_ds) for kind, model in models.items()}
    outputs, payload = _write_ml_outputs(args, out, models, reports, label="test")
    write_manifest(out, subcommand="evaluate", config=_ml_config(args), seed=args.seed,
                   inputs=[args.snapshots], outputs=outputs)
    selected = payload.get("selected")
    if selected:
        chosen = payload["reports"][selected]
        log.info("selected %s: accuracy=%.3f recall=%s", selected, chosen["accuracy"],
                 chosen["recall"])
    return 0


def _ml_config(args) -> dict:
    return {"task": args.task, "network": args.network, "method": args.method,
            "semester": args.semester, "classifier": args.classifier,
            "validation_fraction": args.validation_fraction,
            "downsample": args.downsample, "max_hops": args.max_hops}


def _cmd_importance(args, argv) -> int:
    out = _out_dir(args)
    snapshots, schema = _load_corpus(args)
    tasks = [t.strip() for t in args.tasks.split(",") if t.strip()]
    networks = [n.strip() for n in args.networks.split(",") if n.strip()]
    spec = SplitSpec(validation_fraction=args.validation_fraction, rng_seed=args.seed)
    # coefficients must map one-to-one onto attributes: no polynomial expansion
    options = TrainOptions(downsample_ratio=args.downsample if args.downsample > 0 else None,
                           expansion_sweep=False)
    reports = {}
    for task in tasks:
        for network in networks:
            train_full, _ = build_dataset(task, METHOD_NAMES[args.method], snapshots,
                                          args.semester, network, schema,
                                          max_hops=args.max_hops)
            fit_ds, val_ds = split(train_full, spec)
            model = train(LINEAR_REGRESSION, fit_ds, val_ds, spec, options)
            reports[f"{task}_{network}"] = attribute_weights(model)

    features = reports[next(iter(reports))].feature_names
    cells = sorted(reports)
    weights_path = out / "weights.csv"
    ranks_path = out / "ranks.csv"
    for path, value in ((weights_path, lambda row: repr(row.weight)),
                        (ranks_path, lambda row: row.rank)):
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["feature", *cells])
            by_cell = {cell: {r.feature: r for r in reports[cell].rows} for cell in cells}
            for feature in features:
                writer.writerow([feature, *[value(by_cell[cell][feature]) for cell in cells]])
    comparison = compare_rankings(reports, top_k=args.top_k)
    comparison_path = _dump_json(
        {"comparison": comparison,
         "reports": {cell: reports[cell].to_dict() for cell in cells}},
        out / "importance.json")
    outputs = [weights_path, ranks_path, comparison_path]
    if _figures(args):
        from . import plotting
        outputs.append(plotting.plot_importance(reports, out / "importance.png"))
    write_manifest(out, subcommand="importance",
                   config={"tasks": tasks, "networks": networks, "method": args.method,
                           "semester": args.semester, "top_k": args.top_k},
                   seed=args.seed, inputs=[args.snapshots], outputs=outputs)
    return 0


def _parse_sweep(text: str) -> list[float]:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"bad --sweep {text!r}; expected start:stop:step") from None
    if step <= 0 or stop < start:
        raise ConfigError(f"bad --sweep {text!r}; expected start:stop:step")
    grid = []
    value = start
    while value <= stop + 1e-12:
        grid.append(round(value, 10))
        value += step
    return grid


def _cmd_survival(args, argv) -> int:
    out = _out_dir(args)
    snapshots, schema = _load_corpus(args)
    report = survival_rates(snapshots, args.network, args.ts, schema)
    csv_path = out / "survival.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["semester", "strong_edges", "weak_edges", "strong_survivors",
                         "weak_survivors", "strong_rate", "weak_rate",
                         "strong_share", "aged_strong_share"])
        shares = {s.semester: s for s in report.strong_shares}
        aged = {s.semester: s for s in report.aged_strong_shares}
        stats = {t.semester: t for t in report.transitions}

        def fmt(value):
            return "" if value is None else repr(value)

        for semester in sorted(shares):
            t = stats.get(semester)
            writer.writerow([
                semester,
                t.strong_edges if t else "", t.weak_edges if t else "",
                t.strong_survivors if t else "", t.weak_survivors if t else "",
                fmt(t.strong_rate) if t else "", fmt(t.weak_rate) if t else "",
                fmt(shares[semester].fraction),
                fmt(aged[semester].fraction) if semester in aged else "",
            ])
    json_path = _dump_json(report.to_dict(), out / "survival.json")
    outputs = [csv_path, json_path]
    sweep_reports = None
    if args.sweep:
        grid = _parse_sweep(args.sweep)
        sweep_reports = sweep_threshold(snapshots, args.network, grid, schema)
        sweep_path = out / "sweep.csv"
        with sweep_path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["threshold", "semester", "strong_edges", "weak_edges",
                             "strong_rate", "weak_rate", "gap"])
            for rep in sweep_reports:
                for t in rep.transitions:
                    gap = (None if t.strong_rate is None or t.weak_rate is None
                           else t.strong_rate - t.weak_rate)
                    writer.writerow([repr(rep.threshold), t.semester, t.strong_edges,
                                     t.weak_edges,
                                     "" if t.strong_rate is None else repr(t.strong_rate),
                                     "" if t.weak_rate is None else repr(t.weak_rate),
                                     "" if gap is None else repr(gap)])
        outputs.append(sweep_path)
    if _figures(args):
        from . import plotting
        outputs.append(plotting.plot_survival(report, out / "survival.png"))
        if sweep_reports:
            outputs.append(plotting.plot_threshold_sweep(sweep_reports, out / "sweep.png"))
    write_manifest(out, subcommand="survival",
                   config={"network": args.network, "ts": args.ts, "sweep": args.sweep},
                   seed=None, inputs=[args.snapshots], outputs=outputs)
    return 0


_HANDLERS = {
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "prefs": _cmd_prefs,
    "matrix": _cmd_matrix,
    "dataset": _cmd_dataset,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "importance": _cmd_importance,
    "survival": _cmd_survival,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s",
                        stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, argv)
        return _HANDLERS[args.subcommand](args, argv)
    except PrefnetError as exc:
        _emit_error(exc)
        return exc.exit_code
    except (ValueError, KeyError) as exc:
        _emit_error(exc)
        return 4
    except Exception as exc:  # pragma: no cover - defensive
        _emit_error(exc)
        return 1


def _emit_error(exc: Exception) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, MissingInputError):
        payload["path"] = exc.path
    elif isinstance(exc, ParseError):
        if exc.path:
            payload["path"] = exc.path
        if exc.line is not None:
            payload["line"] = exc.line
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


if __name__ == "__main__":
    raise SystemExit(main())
