"""Experiment runner: bins x samples protocol, label-budget sweep, reports.

Test data is split once per seed into stratified bins; train data into
stratified samples. Every (bin, sample) pair is one run. FRUGAL tunes once per
train sample (the views are a pure function of the plan) and the label counter
is charged per run.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .cla import cla_predict
from .dataset import (
    Dataset,
    LabelCounter,
    SplitPlan,
    budget_size,
    draw_validation,
    load_csv,
    make_split_plan,
    reveal_labels,
)
from .errors import ContractError, FrugalError
from .forest import ForestParams
from .metrics import (
    METRIC_NAMES,
    EvalReport,
    aggregate,
    aggregate_csv_rows,
    evaluate,
    medium_effect,
    similar,
)
from .tuner import ClaConfig, Mode, TunedModel, config_seed, fit_config, frugal_tune, predict, predict_test

log = logging.getLogger(__name__)

TREATMENTS = {"cla": Mode.CLA, "cla-ml": Mode.CLA_ML, "clafi-ml": Mode.CLAFI_ML, "frugal": None}
DEFAULT_BUDGETS = (0.01, 0.025, 0.05, 0.1, 0.2)


@dataclass(frozen=True)
class ExperimentConfig:
    train_path: str | None = None
    test_path: str | None = None
    label_column: str = "label"
    treatment: str = "frugal"
    c: float | None = None
    label_budget: float = 0.025
    metric: str = "auc"
    seed: int = 0
    bins: int = 5
    samples: int = 5
    n_trees: int = 100
    max_depth: int | None = None
    min_split: int = 2
    dataset_name: str = "data"
    stratified_validation: bool = True
    cla_cutoffs: str = "target"
    literal_violations: bool = False
    auc_from: str = "score"

    def __post_init__(self):
        if self.treatment not in TREATMENTS:
            raise ContractError(f"unknown treatment {self.treatment!r}")
        if self.treatment == "frugal" and self.c is not None:
            raise ContractError("frugal tunes C itself; do not pass c")
        if self.treatment != "frugal" and self.c is None:
            raise ContractError(f"treatment {self.treatment} needs a fixed c")
        if not 0 < self.label_budget <= 1:
            raise ContractError("label budget must lie in (0, 1]")
        if self.bins < 1 or self.samples < 1:
            raise ContractError("bins and samples must be at least 1")

    @property
    def forest_params(self) -> ForestParams:
        return ForestParams(n_trees=self.n_trees, max_depth=self.max_depth, min_split=self.min_split)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunRecord:
    bin: int
    sample: int
    report: EvalReport | None
    labels_revealed: int
    train_size: int
    test_size: int
    tuned: TunedModel | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        out = {
            "bin": self.bin,
            "sample": self.sample,
            "labels_revealed": self.labels_revealed,
            "train_size": self.train_size,
            "test_size": self.test_size,
            "report": None if self.report is None else self.report.to_dict(),
        }
        if self.tuned is not None:
            out["frugal"] = self.tuned.to_dict()
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list[RunRecord]
    labels_revealed: int
    plan: SplitPlan | None = None

    @property
    def reports(self) -> list[EvalReport]:
        return [r.report for r in self.runs if r.report is not None]

    @property
    def failures(self) -> int:
        return sum(r.report is None for r in self.runs)

    def aggregate(self):
        return aggregate(self.reports) if self.reports else {}

    def values(self, metric: str) -> list[float]:
        return [r.get(metric) for r in self.reports if r.get(metric) is not None]

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "labels_revealed": self.labels_revealed,
            "failures": self.failures,
            "aggregate": {k: asdict(v) for k, v in self.aggregate().items()},
            "runs": [r.to_dict() for r in self.runs],
        }


def generate_synthetic(
    n: int, m: int, separation: float, positive_ratio: float, seed: int
) -> Dataset:
    """Negatives uniform on [0, 1]^m, positives on [separation, 1 + separation]^m.

    Exactly ``round(n * positive_ratio)`` rows are positive; row order is shuffled.
    """
    if n < 1 or m < 1:
        raise ContractError("n and m must be at least 1")
    if not 0 < positive_ratio < 1:
        raise ContractError("positive_ratio must lie in (0, 1)")
    if separation < 0:
        raise ContractError("separation must be non-negative")
    rng = np.random.default_rng(seed)
    n_pos = int(round(n * positive_ratio))
    y = np.zeros(n, dtype=np.int8)
    y[:n_pos] = 1
    X = rng.random((n, m)) + separation * y[:, None]
    order = rng.permutation(n)
    return Dataset.from_arrays(X[order], y[order])


def _load(cfg: ExperimentConfig, train, test):
    if train is None:
        train = load_csv(cfg.train_path, cfg.label_column)
    if test is None:
        test = load_csv(cfg.test_path, cfg.label_column)
    if train.n_features != test.n_features:
        raise ContractError(
            f"train has {train.n_features} features, test has {test.n_features}"
        )
    return train, test


def sample_seed(seed: int, sample: int) -> int:
    return config_seed(seed, 10_000 + sample)


def run_experiment(
    cfg: ExperimentConfig, train: Dataset | None = None, test: Dataset | None = None
) -> ExperimentResult:
    """Run every (test bin, train sample) pair and score each on its test bin."""
    train, test = _load(cfg, train, test)
    test.require_labels()
    plan = make_split_plan(
        train, test, cfg.label_budget, cfg.seed, cfg.bins, cfg.samples, cfg.stratified_validation
    )
    counter = LabelCounter()
    mode = TREATMENTS[cfg.treatment]
    fitted_by_sample: dict[int, object] = {}
    runs = []
    for b, bin_idx in enumerate(plan.test_bins):
        test_bin = test.take(bin_idx)
        for s, sample_idx in enumerate(plan.train_samples):
            record = RunRecord(b, s, None, 0, len(sample_idx), len(bin_idx))
            try:
                if mode is Mode.CLA:
                    pred = cla_predict(test_bin, cfg.c)
                elif mode is not None:
                    if s not in fitted_by_sample:
                        fitted_by_sample[s] = fit_config(
                            ClaConfig(mode, cfg.c, cfg.metric),
                            train.take(sample_idx).without_labels(),
                            ForestParams(**{**asdict(cfg.forest_params), "seed": sample_seed(cfg.seed, s)}),
                            cfg.literal_violations,
                            cfg.cla_cutoffs,
                        )
                    pred = predict(fitted_by_sample[s], test_bin)
                else:
                    validation, tuning = reveal_labels(train, plan, s, counter)
                    record.labels_revealed = validation.n_rows
                    if s not in fitted_by_sample:
                        fitted_by_sample[s] = frugal_tune(
                            tuning,
                            validation,
                            cfg.metric,
                            sample_seed(cfg.seed, s),
                            cfg.forest_params,
                            cfg.literal_violations,
                            cfg.cla_cutoffs,
                        )
                    record.tuned = fitted_by_sample[s]
                    pred = predict_test(record.tuned, test_bin)
                record.report = evaluate(
                    pred, test_bin.labels, record.labels_revealed, len(sample_idx), cfg.auc_from
                )
            except FrugalError as exc:
                record.error = f"{type(exc).__name__}: {exc}"
                log.warning("run bin=%d sample=%d failed: %s", b, s, record.error)
            runs.append(record)
    return ExperimentResult(cfg, runs, counter.reads, plan)


@dataclass
class SweepResult:
    metric: str
    budgets: list[float]
    results: list[ExperimentResult]
    pairs: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        rows = []
        for b, res in zip(self.budgets, self.results):
            agg = res.aggregate()
            rows.append(
                {
                    "budget": b,
                    "labels_revealed": res.labels_revealed,
                    "failures": res.failures,
                    "aggregate": {k: asdict(v) for k, v in agg.items()},
                    "values": res.values(self.metric),
                }
            )
        return {"metric": self.metric, "budgets": rows, "pairs": self.pairs}


def compare_budgets(metric: str, budgets, results) -> list[dict]:
    """Similarity of every budget pair: medians within the medium effect.

    The medium effect is computed once over the per-run values of every budget
    in the sweep, so all pairs are judged against the same threshold.
    """
    values = [res.values(metric) for res in results]
    pooled = [v for vs in values for v in vs]
    if len(budgets) < 2 or len(pooled) < 2:
        return []
    m = medium_effect(pooled)
    pairs = []
    for i in range(len(budgets)):
        for j in range(i + 1, len(budgets)):
            if not values[i] or not values[j]:
                continue
            med_a = results[i].aggregate()[metric].median
            med_b = results[j].aggregate()[metric].median
            pairs.append(
                {
                    "a": budgets[i],
                    "b": budgets[j],
                    "adjacent": j == i + 1,
                    "median_a": med_a,
                    "median_b": med_b,
                    "medium_effect": m,
                    "similar": similar(med_a, med_b, m),
                }
            )
    return pairs


def budget_sweep(
    cfg: ExperimentConfig, budgets=DEFAULT_BUDGETS, train: Dataset | None = None,
    test: Dataset | None = None,
) -> SweepResult:
    budgets = [float(b) for b in budgets]
    if not budgets or any(not 0 < b <= 1 for b in budgets) or budgets != sorted(budgets):
        raise ContractError("budgets must be ascending fractions in (0, 1]")
    train, test = _load(cfg, train, test)
    results = [
        run_experiment(ExperimentConfig(**{**cfg.to_dict(), "label_budget": b}), train, test)
        for b in budgets
    ]
    return SweepResult(cfg.metric, budgets, results, compare_budgets(cfg.metric, budgets, results))


def single_sample_views(train: Dataset, budget: float, seed: int, stratified: bool = True,
                        counter: LabelCounter | None = None):
    """Validation/tuning views over the whole train set, for one-shot tuning."""
    rng = np.random.default_rng(seed)
    everything = np.arange(train.n_rows)
    y = train.require_labels()
    plan = SplitPlan([], [everything], [draw_validation(y, everything, budget, rng, stratified)], budget)
    return reveal_labels(train, plan, 0, counter)


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.3f}"


def render_table(result: ExperimentResult) -> str:
    agg = result.aggregate()
    lines = [f"{'metric':<10} {'median':>8} {'iqr':>8} {'n':>4} {'undef':>5}"]
    for name in METRIC_NAMES:
        a = agg.get(name)
        if a is None:
            continue
        lines.append(f"{name:<10} {_fmt(a.median):>8} {_fmt(a.iqr):>8} {a.n:>4} {a.excluded:>5}")
    lines.append(
        f"runs={len(result.runs)} failures={result.failures} labels_revealed={result.labels_revealed}"
    )
    return "\n".join(lines)


def render_csv(result: ExperimentResult) -> str:
    cfg = result.config
    rows = aggregate_csv_rows(cfg.treatment, cfg.dataset_name, result.aggregate())
    buf = io.StringIO()
    w = csv.DictWriter(
        buf, ["treatment", "dataset", "metric", "median", "iqr", "n", "excluded"], lineterminator="\n"
    )
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if v is None else v) for k, v in row.items()})
    return buf.getvalue()


def render_json(result) -> str:
    return json.dumps(result.to_dict(), indent=2) + "\n"


def emit_report(result: ExperimentResult, fmt: str, path=None) -> str:
    """Render ``result`` as json, csv or table; write it when ``path`` is given."""
    if result is None or not result.runs:
        raise ContractError("no results to report")
    renderers = {"json": render_json, "csv": render_csv, "table": render_table}
    if fmt not in renderers:
        raise ContractError(f"unknown report format {fmt!r}")
    text = renderers[fmt](result)
    if path is not None:
        try:
            Path(path).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc.strerror}") from exc
    return text


def labels_per_run(budget: float, sample_size: int) -> int:
    return budget_size(budget, sample_size)
