"""Confusion metrics, rank AUC, labelling cost and the medium-effect threshold.

Metrics whose denominator is zero are ``None`` ("undefined"), never 0.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass, fields

import numpy as np

from .cla import percentile
from .errors import ContractError

METRIC_NAMES = ("auc", "precision", "recall", "f1", "far", "accuracy", "cost")
LOWER_IS_BETTER = frozenset({"far", "cost"})


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _binary(a, name) -> np.ndarray:
    a = np.asarray(a).reshape(-1)
    if a.size and not np.isin(a, (0, 1)).all():
        raise ContractError(f"{name} must contain only 0 and 1")
    return a.astype(np.int8)


def confusion(predicted, truth) -> Confusion:
    p = _binary(predicted, "predicted")
    t = _binary(truth, "truth")
    if p.shape != t.shape:
        raise ContractError(f"length mismatch: {p.size} predictions, {t.size} labels")
    return Confusion(
        tp=int(((p == 1) & (t == 1)).sum()),
        fp=int(((p == 1) & (t == 0)).sum()),
        tn=int(((p == 0) & (t == 0)).sum()),
        fn=int(((p == 0) & (t == 1)).sum()),
    )


def _ratio(num, den):
    return num / den if den else None


@dataclass(frozen=True)
class EvalReport:
    auc: float | None = None
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    far: float | None = None
    accuracy: float | None = None
    cost: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def get(self, metric: str):
        return getattr(self, metric)


def scalar_metrics(c: Confusion) -> EvalReport:
    """Everything derivable from the confusion counts alone.

    FAR is the false-alarm rate fp / (fp + tn): the share of true negatives
    flagged positive.
    """
    recall = _ratio(c.tp, c.tp + c.fn)
    precision = _ratio(c.tp, c.tp + c.fp)
    if recall is None or precision is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return EvalReport(
        precision=precision,
        recall=recall,
        f1=f1,
        far=_ratio(c.fp, c.fp + c.tn),
        accuracy=_ratio(c.tp + c.tn, c.total),
    )


def auc(scores, truth) -> float | None:
    """Mann-Whitney AUC with ties counted as half; ``None`` for single-class truth."""
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    t = _binary(truth, "truth")
    if s.shape != t.shape:
        raise ContractError(f"length mismatch: {s.size} scores, {t.size} labels")
    n1 = int(t.sum())
    n0 = t.size - n1
    if n1 == 0 or n0 == 0:
        return None
    _, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    ends = np.cumsum(counts)
    ranks = (ends - (counts - 1) / 2.0)[inverse]
    u = ranks[t == 1].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def cost(labels_revealed: int, total: int) -> float:
    if total <= 0 or not 0 <= labels_revealed <= total:
        raise ContractError(f"need 0 <= revealed <= total and total > 0, got {labels_revealed}/{total}")
    return labels_revealed / total


def evaluate(predictions, truth, labels_revealed: int = 0, total: int | None = None,
             auc_from: str = "score") -> EvalReport:
    """Full metric bundle for one set of predictions.

    ``auc_from="label"`` scores AUC on the hard labels instead of the
    continuous scores (equivalent to balanced accuracy).
    """
    truth = _binary(truth, "truth")
    scalars = scalar_metrics(confusion(predictions.labels, truth))
    ranked = predictions.scores if auc_from == "score" else predictions.labels
    total = len(truth) if total is None else total
    return EvalReport(
        auc=auc(ranked, truth),
        precision=scalars.precision,
        recall=scalars.recall,
        f1=scalars.f1,
        far=scalars.far,
        accuracy=scalars.accuracy,
        cost=cost(labels_revealed, total),
    )


def medium_effect(all_results) -> float:
    """0.35 times the sample standard deviation of every result being compared."""
    x = [float(v) for v in np.asarray(all_results, dtype=np.float64).reshape(-1)]
    if len(x) < 2:
        raise ContractError("medium effect needs at least two results")
    # statistics.stdev is exact on constant input, where numpy leaves rounding residue
    return 0.35 * statistics.stdev(x)


def similar(a: float, b: float, m: float) -> bool:
    return abs(a - b) <= m


@dataclass(frozen=True)
class Aggregate:
    median: float | None
    iqr: float | None
    n: int
    excluded: int


def aggregate(reports) -> dict[str, Aggregate]:
    """Per-metric median and p75 - p25 over the defined values."""
    reports = list(reports)
    if not reports:
        raise ContractError("nothing to aggregate")
    out = {}
    for f in fields(EvalReport):
        values = [r.get(f.name) for r in reports]
        defined = [v for v in values if v is not None and not math.isnan(v)]
        if defined:
            out[f.name] = Aggregate(
                median=percentile(defined, 50),
                iqr=percentile(defined, 75) - percentile(defined, 25),
                n=len(defined),
                excluded=len(values) - len(defined),
            )
        else:
            out[f.name] = Aggregate(None, None, 0, len(values))
    return out


def aggregate_csv_rows(treatment: str, dataset: str, agg: dict[str, Aggregate]) -> list[dict]:
    """One row per metric: treatment, dataset, metric, median, IQR, counts."""
    return [
        {
            "treatment": treatment,
            "dataset": dataset,
            "metric": name,
            "median": a.median,
            "iqr": a.iqr,
            "n": a.n,
            "excluded": a.excluded,
        }
        for name, a in agg.items()
    ]
