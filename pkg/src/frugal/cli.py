"""Command-line entry point: ``frugal {predict,tune,benchmark,sweep,dimension,synth}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

from . import __version__
from .cla import cla_predict
from .dataset import LabelCounter, load_csv, write_csv
from .dimension import estimate_dimension
from .errors import FrugalError
from .forest import ForestParams
from .harness import (
    DEFAULT_BUDGETS,
    TREATMENTS,
    ExperimentConfig,
    budget_sweep,
    emit_report,
    generate_synthetic,
    single_sample_views,
)
from .tuner import SELECTION_METRICS, ClaConfig, fit_config, frugal_tune, predict, predict_test

log = logging.getLogger("frugal")


def _default_seed() -> int:
    return int(os.environ.get("FRUGAL_SEED", "0"))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--label-column", default="label")
    p.add_argument("--seed", type=int, default=_default_seed(), help="default: $FRUGAL_SEED or 0")
    p.add_argument("--metric", choices=SELECTION_METRICS, default="auc")
    p.add_argument("--budget", type=float, default=0.025, help="fraction of train labels revealed")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-split", type=int, default=2)
    p.add_argument("--uniform-validation", action="store_true",
                   help="draw the validation slice uniformly instead of stratified")
    p.add_argument("--cla-cutoffs", choices=("target", "fit"), default="target")
    p.add_argument("--literal-violations", action="store_true")


def _add_treatment(p: argparse.ArgumentParser) -> None:
    p.add_argument("--treatment", choices=sorted(TREATMENTS), default="frugal")
    p.add_argument("--c", type=float, default=None, help="percentile for fixed-C treatments")


def _experiment(args, budget=None) -> ExperimentConfig:
    return ExperimentConfig(
        train_path=args.train,
        test_path=args.test,
        label_column=args.label_column,
        treatment=args.treatment,
        c=args.c,
        label_budget=args.budget if budget is None else budget,
        metric=args.metric,
        seed=args.seed,
        bins=args.bins,
        samples=args.samples,
        n_trees=args.trees,
        max_depth=args.max_depth,
        min_split=args.min_split,
        dataset_name=args.name,
        stratified_validation=not args.uniform_validation,
        cla_cutoffs=args.cla_cutoffs,
        literal_violations=args.literal_violations,
    )


def _forest(args) -> ForestParams:
    return ForestParams(n_trees=args.trees, max_depth=args.max_depth, min_split=args.min_split)


def _write(text: str, path) -> None:
    if path:
        emit_text = text if text.endswith("\n") else text + "\n"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(emit_text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_predict(args) -> None:
    train = load_csv(args.train, args.label_column)
    test = load_csv(args.test, args.label_column if args.test_has_labels else None)
    if args.treatment == "frugal":
        validation, tuning = single_sample_views(
            train, args.budget, args.seed, not args.uniform_validation, LabelCounter()
        )
        tuned = frugal_tune(tuning, validation, args.metric, args.seed, _forest(args),
                            args.literal_violations, args.cla_cutoffs)
        pred = predict_test(tuned, test)
        log.info("winner %s C=%s", tuned.config.mode.value, tuned.config.c_percentile)
    elif args.treatment == "cla":
        pred = cla_predict(test, args.c)
    else:
        fitted = fit_config(ClaConfig(TREATMENTS[args.treatment], args.c), train.without_labels(),
                            _forest(args), args.literal_violations, args.cla_cutoffs)
        pred = predict(fitted, test)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["row", "label", "score"])
        for i, p in enumerate(pred):
            w.writerow([i, p.label, repr(p.score)])
    finally:
        if args.out:
            out.close()


def cmd_tune(args) -> None:
    train = load_csv(args.train, args.label_column)
    counter = LabelCounter()
    validation, tuning = single_sample_views(
        train, args.budget, args.seed, not args.uniform_validation, counter
    )
    tuned = frugal_tune(tuning, validation, args.metric, args.seed, _forest(args),
                        args.literal_violations, args.cla_cutoffs)
    doc = tuned.to_dict()
    doc["labels_revealed"] = counter.reads
    _write(json.dumps(doc, indent=2), args.out)


def cmd_benchmark(args) -> None:
    from .harness import run_experiment

    result = run_experiment(_experiment(args))
    if args.json:
        emit_report(result, "json", args.json)
    if args.csv:
        emit_report(result, "csv", args.csv)
    print(emit_report(result, "table"))


def cmd_sweep(args) -> None:
    budgets = [float(b) for b in args.budgets.split(",")]
    sweep = budget_sweep(_experiment(args), budgets)
    doc = sweep.to_dict()
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(doc, indent=2) + "\n")
    for row in doc["budgets"]:
        agg = row["aggregate"].get(args.metric) or {}
        med, iqr = agg.get("median"), agg.get("iqr")
        print(f"L={row['budget']:<6} {args.metric} median={med if med is None else round(med, 4)} "
              f"iqr={iqr if iqr is None else round(iqr, 4)} labels={row['labels_revealed']}")
    for pair in doc["pairs"]:
        if pair["adjacent"]:
            verdict = "similar" if pair["similar"] else "different"
            print(f"L={pair['a']} vs L={pair['b']}: {verdict} (M={pair['medium_effect']:.4f})")


def cmd_dimension(args) -> None:
    data = load_csv(args.data, args.label_column if args.has_labels else None)
    profile = estimate_dimension(data, args.radii, normalize=not args.raw, method=args.method,
                                 min_pairs=args.min_pairs)
    if args.out:
        profile.write_csv(args.out)
    print(f"D={profile.D:.4f}" + (" (degenerate)" if profile.degenerate else ""))


def cmd_synth(args) -> None:
    d = generate_synthetic(args.n, args.m, args.separation, args.positive_ratio, args.seed)
    write_csv(d, args.out, args.label_column)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frugal", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="fit on train, label test, write predictions CSV")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--test-has-labels", action="store_true")
    p.add_argument("--out")
    _add_treatment(p)
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("tune", help="run FRUGAL on a train CSV, emit winner and trace JSON")
    p.add_argument("--train", required=True)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_tune)

    for name, func, help_ in (
        ("benchmark", cmd_benchmark, "bins x samples protocol with median/IQR report"),
        ("sweep", cmd_sweep, "label-budget sweep with medium-effect similarity"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--train", required=True)
        p.add_argument("--test", required=True)
        p.add_argument("--name", default="data", help="dataset name for report rows")
        p.add_argument("--bins", type=int, default=5)
        p.add_argument("--samples", type=int, default=5)
        p.add_argument("--json")
        _add_treatment(p)
        _add_common(p)
        p.set_defaults(func=func)
        if name == "benchmark":
            p.add_argument("--csv")
        else:
            p.add_argument("--budgets", default=",".join(str(b) for b in DEFAULT_BUDGETS))

    p = sub.add_parser("dimension", help="correlation-sum intrinsic dimensionality")
    p.add_argument("--data", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--has-labels", action="store_true", help="drop the label column first")
    p.add_argument("--radii", type=int, default=20)
    p.add_argument("--method", choices=("max", "fit"), default="max")
    p.add_argument("--min-pairs", type=int, default=None)
    p.add_argument("--raw", action="store_true", help="skip min-max normalization")
    p.add_argument("--out", help="profile CSV (r, C(r)) plus a D line")
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("synth", help="write a planted-structure synthetic CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--separation", type=float, default=0.5)
    p.add_argument("--positive-ratio", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--label-column", default="label")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except FrugalError as exc:
        print(f"frugal: {exc.category} error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"frugal: io error: {exc}", file=sys.stderr)
        return 8
    return 0


if __name__ == "__main__":
    sys.exit(main())
