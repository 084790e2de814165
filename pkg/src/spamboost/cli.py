"""Command-line pipeline around the boosted spam detector.

Commands: train, evaluate, grid-search, reproduce, resample. Every run
writes a manifest capturing the dataset hash, split, and hyperparameters,
so any experiment can be replayed byte-for-byte. Diagnostics go to stderr;
data goes to files or stdout. Exit code 0 means success.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import statistics
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, booster, metrics, reports, resampling, tuning
from .dataset import Dataset, SplitSpec, load_dataset, stratified_split

RESAMPLE_CHOICES = {
    "none": None,
    "over": "random_over",
    "under": "random_under",
    "smote": "smote",
    "tomek": "tomek",
    "smote-tomek": "smote_tomek",
}

STUDY_METHODS = ["over", "under", "smote", "tomek", "smote-tomek"]

RESAMPLING_EXPECTATION = (
    "no data-level resampling method improves mean test accuracy by more "
    "than +0.5 percentage points"
)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _fmt(x: float) -> str:
    return repr(float(x))


def _hyperparams_from_args(args: argparse.Namespace) -> booster.Hyperparams:
    params = booster.Hyperparams()
    if getattr(args, "params", None):
        doc = json.loads(Path(args.params).read_text())
        if not isinstance(doc, dict):
            raise ValueError(f"{args.params}: params file must be a JSON object")
        unknown = set(doc) - set(booster.Hyperparams.field_names())
        if unknown:
            raise ValueError(f"{args.params}: unknown hyperparameters {sorted(unknown)}")
        params = replace(params, **doc)
    overrides = {
        "eta": args.eta,
        "gamma": args.gamma,
        "max_depth": args.max_depth,
        "colsample": args.colsample,
        "subsample": args.subsample,
        "min_child_weight": args.min_child_weight,
        "num_rounds": args.rounds,
        "early_stopping_rounds": args.early_stopping,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if overrides:
        params = replace(params, **overrides)
    return params


def _resample_spec(args: argparse.Namespace) -> resampling.ResampleSpec | None:
    method = RESAMPLE_CHOICES[getattr(args, "resample", "none")]
    if method is None:
        return None
    return resampling.ResampleSpec(
        method=method, k_neighbors=args.k_neighbors, seed=args.seed
    )


def _manifest(
    args: argparse.Namespace,
    data_path: Path,
    params: booster.Hyperparams,
    train_ds: Dataset,
    test_ds: Dataset,
    spec: resampling.ResampleSpec | None,
) -> dict:
    return {
        "tool": "spamboost",
        "tool_version": __version__,
        "data_path": str(data_path),
        "data_sha256": _sha256(data_path),
        "split": {"seed": args.seed, "test_fraction": args.test_fraction},
        "class_counts": {
            "train": {str(k): v for k, v in train_ds.class_counts().items()},
            "test": {str(k): v for k, v in test_ds.class_counts().items()},
        },
        "totals": {"train": train_ds.n_rows, "test": test_ds.n_rows},
        "hyperparams": {
            name: getattr(params, name) for name in booster.Hyperparams.field_names()
        },
        "resample": None
        if spec is None
        else {"method": spec.method, "k_neighbors": spec.k_neighbors, "seed": spec.seed},
    }


def _evaluate_model(
    model: booster.Model, ds: Dataset, threshold: float
) -> tuple[metrics.MetricsReport, metrics.CurvePoints, metrics.CurvePoints]:
    if ds.n_rows == 0:
        raise ValueError("evaluation set is empty")
    proba = booster.predict_proba(model, ds.features)
    predicted = (proba >= threshold).astype(int)
    report = metrics.scalar_metrics(metrics.confusion(ds.labels, predicted))
    roc, roc_auc = metrics.roc_curve(ds.labels, proba)
    pr, pr_auc = metrics.pr_curve(ds.labels, proba)
    report = replace(report, roc_auc=roc_auc, pr_auc=pr_auc)
    return report, roc, pr


def _metrics_document(report: metrics.MetricsReport, threshold: float) -> dict:
    cm = report.confusion
    names = [name for name, _ in reports.METRIC_COLUMNS]
    return {
        "counts": {"tp": cm.tp, "tn": cm.tn, "fp": cm.fp, "fn": cm.fn},
        "n_rows": cm.total,
        "threshold": threshold,
        "metrics": {name: getattr(report, name) for name in names},
        "percent": {name: reports.percent(getattr(report, name)) for name in names},
    }


def _write_curve(path: Path, curve: metrics.CurvePoints, x_name: str, y_name: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["threshold", x_name, y_name])
        for t, x, y in zip(curve.thresholds, curve.xs, curve.ys):
            writer.writerow([_fmt(t), _fmt(x), _fmt(y)])


def _write_evaluation(
    out: Path,
    report: metrics.MetricsReport,
    roc: metrics.CurvePoints,
    pr: metrics.CurvePoints,
    threshold: float,
    label: str,
) -> None:
    _write_json(out / "metrics.json", _metrics_document(report, threshold))
    text = reports.metrics_table(report, label=label) + "\n" + reports.confusion_table(
        report.confusion
    )
    (out / "metrics.txt").write_text(text)
    _write_curve(out / "roc.csv", roc, "fpr", "tpr")
    _write_curve(out / "pr.csv", pr, "recall", "precision")


def _write_training_log(path: Path, model: booster.Model) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["round", "train_error"])
        for i, err in enumerate(model.training_log):
            writer.writerow([i, _fmt(err)])


def _outdir(args: argparse.Namespace, default: str) -> Path:
    out = Path(args.out) if args.out else Path("runs") / default
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_train(args: argparse.Namespace) -> int:
    out = _outdir(args, "train")
    data_path = Path(args.data)
    ds = load_dataset(data_path)
    train_ds, test_ds = stratified_split(ds, SplitSpec(args.test_fraction, args.seed))
    spec = _resample_spec(args)
    fit_ds = resampling.apply_resample(train_ds, spec) if spec else train_ds
    params = _hyperparams_from_args(args)

    model = booster.train(fit_ds, params, args.seed)
    booster.save_model(model, out / "model.json")
    _write_json(out / "manifest.json", _manifest(args, data_path, params, train_ds, test_ds, spec))
    _write_training_log(out / "training_log.csv", model)
    final_err = model.training_log[len(model.trees) - 1]
    print(
        f"trained {len(model.trees)} trees (ran {len(model.training_log)} rounds); "
        f"training error {final_err:.4f}; wrote {out / 'model.json'}"
    )
    return 0


def _dataset_for_evaluation(args: argparse.Namespace) -> tuple[Dataset, str]:
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text())
        data_path = Path(args.data) if args.data else Path(manifest["data_path"])
        digest = _sha256(data_path)
        if digest != manifest["data_sha256"]:
            raise ValueError(
                f"{data_path} does not match the manifest (sha256 {digest[:12]}... "
                f"vs recorded {manifest['data_sha256'][:12]}...)"
            )
        ds = load_dataset(data_path)
        split = manifest["split"]
        train_ds, test_ds = stratified_split(
            ds, SplitSpec(split["test_fraction"], split["seed"])
        )
        part = {"train": train_ds, "test": test_ds, "all": ds}[args.split]
        return part, args.split
    if not args.data:
        raise ValueError("evaluate requires --data or --manifest")
    return load_dataset(Path(args.data)), "all"


def cmd_evaluate(args: argparse.Namespace) -> int:
    out = _outdir(args, "evaluate")
    model = booster.load_model(args.model)
    ds, label = _dataset_for_evaluation(args)
    report, roc, pr = _evaluate_model(model, ds, args.threshold)
    _write_evaluation(out, report, roc, pr, args.threshold, label=label)
    sys.stdout.write(reports.metrics_table(report, label=label))
    sys.stdout.write("\n" + reports.confusion_table(report.confusion))
    return 0


def cmd_grid_search(args: argparse.Namespace) -> int:
    out = _outdir(args, "grid_search")
    ds = load_dataset(Path(args.data))
    train_ds, _ = stratified_split(ds, SplitSpec(args.test_fraction, args.seed))
    grid = tuning.load_param_grid(args.grid)
    val = tuning.ValidationConfig(
        strategy=args.val_strategy,
        fraction=args.val_fraction,
        k=args.val_k,
        seed=args.val_seed,
    )
    base = _hyperparams_from_args(args)
    best, trace = tuning.grid_search(
        train_ds, grid, val, seed=args.seed, base=base, n_jobs=args.threads
    )
    _write_json(
        out / "best_params.json",
        {name: getattr(best, name) for name in booster.Hyperparams.field_names()},
    )
    tuning.write_trace_csv(trace, out / "trace.csv")
    best_err = min(record.validation_error for record in trace)
    print(
        f"searched {len(trace)} combinations; best validation error {best_err:.4f}; "
        f"wrote {out / 'best_params.json'}"
    )
    return 0


def _report_row(report: metrics.MetricsReport) -> dict:
    names = [name for name, _ in reports.METRIC_COLUMNS]
    return {name: getattr(report, name) for name in names}


def _aggregate(rows: list[dict]) -> tuple[dict, dict]:
    names = [name for name, _ in reports.METRIC_COLUMNS]
    mean: dict = {}
    sd: dict = {}
    for name in names:
        values = [row[name] for row in rows if row[name] is not None]
        if not values:
            mean[name] = None
            sd[name] = None
            continue
        mean[name] = statistics.fmean(values)
        sd[name] = statistics.stdev(values) if len(values) > 1 else 0.0
    return mean, sd


def cmd_reproduce(args: argparse.Namespace) -> int:
    out = _outdir(args, "reproduce")
    data_path = Path(args.data)
    ds = load_dataset(data_path)
    params = _hyperparams_from_args(args)
    seeds = [int(s) for s in args.seeds.split(",") if s.strip() != ""]
    if not seeds:
        raise ValueError("no seeds given")

    per_seed_rows: list[dict] = []
    study: dict[str, list[dict]] = {flag: [] for flag in STUDY_METHODS}
    for seed in seeds:
        train_ds, test_ds = stratified_split(ds, SplitSpec(args.test_fraction, seed))
        model = booster.train(train_ds, params, seed)
        report, roc, pr = _evaluate_model(model, test_ds, 0.5)

        seed_dir = out / "seeds" / f"seed_{seed}"
        seed_dir.mkdir(parents=True, exist_ok=True)
        booster.save_model(model, seed_dir / "model.json")
        _write_evaluation(seed_dir, report, roc, pr, 0.5, label="test")
        row = {"seed": seed, "rounds_kept": len(model.trees), **_report_row(report)}
        per_seed_rows.append(row)

        if not args.skip_resampling:
            for flag in STUDY_METHODS:
                spec = resampling.ResampleSpec(
                    method=RESAMPLE_CHOICES[flag], k_neighbors=args.k_neighbors, seed=seed
                )
                resampled = resampling.apply_resample(train_ds, spec)
                re_model = booster.train(resampled, params, seed)
                re_report, _, _ = _evaluate_model(re_model, test_ds, 0.5)
                study[flag].append(
                    {
                        "seed": seed,
                        "train_rows": resampled.n_rows,
                        **_report_row(re_report),
                    }
                )

    metric_rows = [{k: v for k, v in row.items() if k not in ("seed", "rounds_kept")} for row in per_seed_rows]
    mean, sd = _aggregate(metric_rows)

    resampling_summary: dict = {}
    if not args.skip_resampling:
        base_mean_acc = mean["accuracy"]
        per_method = {}
        worst_delta = None
        for flag in STUDY_METHODS:
            rows = study[flag]
            m_mean, _ = _aggregate(
                [{k: v for k, v in row.items() if k not in ("seed", "train_rows")} for row in rows]
            )
            delta_pp = (m_mean["accuracy"] - base_mean_acc) * 100.0
            per_method[flag] = {
                "per_seed": rows,
                "mean_accuracy": m_mean["accuracy"],
                "delta_accuracy_pp": delta_pp,
            }
            if worst_delta is None or delta_pp > worst_delta:
                worst_delta = delta_pp
        resampling_summary = {
            "per_method": per_method,
            "expectation": RESAMPLING_EXPECTATION,
            "max_delta_accuracy_pp": worst_delta,
            "expectation_holds": bool(worst_delta <= 0.5),
        }

    summary = {
        "seeds": seeds,
        "per_seed": per_seed_rows,
        "mean": mean,
        "sd": sd,
        "reference_reported_percent": reports.REFERENCE_TEST_ROW,
        "baselines_reported_percent": [
            {
                "classifier": name,
                "accuracy": acc,
                "sensitivity": sens,
                "specificity": spec,
                "precision": prec,
                "f1": f1,
                "roc_auc": roc_auc,
            }
            for name, acc, sens, spec, prec, f1, roc_auc in reports.BASELINE_ROWS
        ],
        "resampling": resampling_summary,
    }
    _write_json(out / "summary.json", summary)

    train_ds, test_ds = stratified_split(ds, SplitSpec(args.test_fraction, seeds[0]))
    spec0 = None
    _write_json(out / "manifest.json", {
        **_manifest(
            argparse.Namespace(seed=seeds[0], test_fraction=args.test_fraction),
            data_path,
            params,
            train_ds,
            test_ds,
            spec0,
        ),
        "seeds": seeds,
    })

    text = _summary_text(per_seed_rows, mean, sd, resampling_summary)
    (out / "summary.txt").write_text(text)
    sys.stdout.write(text)
    return 0


def _summary_text(
    per_seed_rows: list[dict], mean: dict, sd: dict, resampling_summary: dict
) -> str:
    names = [name for name, _ in reports.METRIC_COLUMNS]
    header = ["Run", *(title for _, title in reports.METRIC_COLUMNS)]
    table = [header]
    for row in per_seed_rows:
        table.append(
            [f"seed {row['seed']}", *(reports.percent(row[name]) for name in names)]
        )
    table.append(["mean", *(reports.percent(mean[name]) for name in names)])
    table.append(
        [
            "sd (pp)",
            *(
                "-" if sd[name] is None else f"{sd[name] * 100.0:.2f}"
                for name in names
            ),
        ]
    )
    table.append(
        [
            "reference [reported]",
            *(
                f"{reports.REFERENCE_TEST_ROW[name]:.2f}"
                for name in names
            ),
        ]
    )
    lines = ["Reproduction summary (test partition)", ""]
    lines.append(reports.render_table(table))

    lines.append("Comparison against reported classifiers (reported rows not recomputed)")
    lines.append("")
    lines.append(reports.comparison_table([("This run (mean)", mean)]))

    if resampling_summary:
        lines.append("Resampling study (train-set treatments, evaluated on the untouched test partition)")
        lines.append("")
        rtable = [["Method", "Mean accuracy", "Delta vs baseline (pp)"]]
        for flag, entry in resampling_summary["per_method"].items():
            rtable.append(
                [
                    flag,
                    reports.percent(entry["mean_accuracy"]),
                    f"{entry['delta_accuracy_pp']:+.2f}",
                ]
            )
        lines.append(reports.render_table(rtable))
        holds = "holds" if resampling_summary["expectation_holds"] else "is violated"
        lines.append(
            f"Expectation ({resampling_summary['expectation']}) {holds}: "
            f"max delta {resampling_summary['max_delta_accuracy_pp']:+.2f} pp.\n"
        )
    return "\n".join(lines)


def cmd_resample(args: argparse.Namespace) -> int:
    out = _outdir(args, "resample")
    ds = load_dataset(Path(args.data))
    if args.resample == "none":
        raise ValueError("resample command requires --resample with a method")
    spec = _resample_spec(args)
    assert spec is not None
    result = resampling.apply_resample(ds, spec)

    target = out / "resampled.csv"
    with open(target, "w", newline="") as f:
        for i in range(result.n_rows):
            row = [_fmt(v) for v in result.features[i]]
            row.append(str(int(result.labels[i])))
            f.write(",".join(row) + "\n")
    _write_json(
        out / "resample_summary.json",
        {
            "method": spec.method,
            "k_neighbors": spec.k_neighbors,
            "seed": spec.seed,
            "input_counts": {str(k): v for k, v in ds.class_counts().items()},
            "output_counts": {str(k): v for k, v in result.class_counts().items()},
        },
    )
    print(
        f"{spec.method}: {ds.n_rows} rows -> {result.n_rows} rows; wrote {target}"
    )
    return 0


def _add_common_flags(p: argparse.ArgumentParser, with_data: bool = True) -> None:
    if with_data:
        p.add_argument("--data", required=True, help="Spambase-format CSV path")
    p.add_argument("--seed", type=int, default=1, help="seed for splits and training")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--threads", type=int, default=1, help="parallel workers (grid search)")


def _add_hyperparam_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--params", default=None, help="JSON file of hyperparameter overrides")
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--max-depth", type=int, default=None, dest="max_depth")
    p.add_argument("--colsample", type=float, default=None)
    p.add_argument("--subsample", type=float, default=None)
    p.add_argument("--min-child-weight", type=float, default=None, dest="min_child_weight")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--early-stopping", type=int, default=None, dest="early_stopping")


def _add_resample_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--resample",
        choices=sorted(RESAMPLE_CHOICES),
        default="none",
        help="imbalance treatment applied to the training partition",
    )
    p.add_argument("--k-neighbors", type=int, default=5, dest="k_neighbors")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spamboost",
        description="Gradient-boosted tree spam detector and benchmark pipeline.",
    )
    parser.add_argument("--version", action="version", version=f"spamboost {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="split the data, fit a model, persist artifacts")
    _add_common_flags(p_train)
    p_train.add_argument("--test-fraction", type=float, default=0.3, dest="test_fraction")
    _add_hyperparam_flags(p_train)
    _add_resample_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="score a saved model on a dataset or manifest split")
    p_eval.add_argument("--model", required=True, help="model file path")
    p_eval.add_argument("--data", default=None, help="Spambase-format CSV path")
    p_eval.add_argument("--manifest", default=None, help="manifest.json from a training run")
    p_eval.add_argument(
        "--split",
        choices=["train", "test", "all"],
        default="test",
        help="partition to evaluate when a manifest is given",
    )
    p_eval.add_argument("--threshold", type=float, default=0.5)
    p_eval.add_argument("--out", default=None)
    p_eval.add_argument("--threads", type=int, default=1)
    p_eval.set_defaults(func=cmd_evaluate)

    p_grid = sub.add_parser("grid-search", help="exhaustive search on the training partition")
    _add_common_flags(p_grid)
    p_grid.add_argument("--test-fraction", type=float, default=0.3, dest="test_fraction")
    p_grid.add_argument("--grid", required=True, help="JSON grid config path")
    p_grid.add_argument("--val-strategy", choices=["holdout", "kfold"], default="holdout")
    p_grid.add_argument("--val-fraction", type=float, default=0.2)
    p_grid.add_argument("--val-k", type=int, default=5)
    p_grid.add_argument("--val-seed", type=int, default=0)
    _add_hyperparam_flags(p_grid)
    p_grid.set_defaults(func=cmd_grid_search)

    p_rep = sub.add_parser("reproduce", help="multi-seed benchmark run with reports")
    p_rep.add_argument("--data", required=True)
    p_rep.add_argument("--seeds", default="1,2,3,4,5", help="comma-separated seed list")
    p_rep.add_argument("--test-fraction", type=float, default=0.3, dest="test_fraction")
    p_rep.add_argument("--out", default=None)
    p_rep.add_argument("--threads", type=int, default=1)
    p_rep.add_argument("--k-neighbors", type=int, default=5, dest="k_neighbors")
    p_rep.add_argument(
        "--skip-resampling",
        action="store_true",
        help="skip the imbalance-treatment study",
    )
    _add_hyperparam_flags(p_rep)
    p_rep.set_defaults(func=cmd_reproduce)

    p_res = sub.add_parser("resample", help="apply an imbalance treatment and write a new CSV")
    _add_common_flags(p_res)
    _add_resample_flags(p_res)
    p_res.set_defaults(func=cmd_resample)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"spamboost: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
