"""Tabular data model, CSV ingestion, stratified splitting and label accounting.

Labels are stored as an ``int8`` array where ``UNKNOWN`` (-1) marks a row
whose label is not known. A dataset without a label column has
``labels is None``.
"""

from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    BudgetViolation,
    ContractError,
    InfeasibleSplitError,
    ParseError,
    SchemaError,
)

UNKNOWN = -1


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    feature_names: tuple[str, ...]
    X: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        names = tuple(str(n) for n in self.feature_names)
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate feature names in {names}")
        X = np.array(self.X, dtype=np.float64)
        if X.ndim == 1 and len(names) == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise SchemaError("feature matrix must be two-dimensional")
        if X.shape[1] != len(names):
            raise SchemaError(
                f"{X.shape[1]} feature columns but {len(names)} feature names"
            )
        if not np.isfinite(X).all():
            raise ContractError("feature values must be finite")
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "X", _readonly(X))
        if self.labels is not None:
            y = np.array(self.labels, dtype=np.int8).reshape(-1)
            if y.shape[0] != X.shape[0]:
                raise SchemaError(f"{y.shape[0]} labels for {X.shape[0]} rows")
            if not np.isin(y, (0, 1, UNKNOWN)).all():
                raise ContractError("labels must be 0, 1 or unknown")
            object.__setattr__(self, "labels", _readonly(y))

    @classmethod
    def from_arrays(cls, X, labels=None, feature_names=None) -> "Dataset":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if feature_names is None:
            feature_names = [f"f{i + 1}" for i in range(X.shape[1])]
        return cls(tuple(feature_names), X, labels)

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n_rows

    @property
    def fully_labeled(self) -> bool:
        return self.labels is not None and bool((self.labels != UNKNOWN).all())

    def require_labels(self) -> np.ndarray:
        if not self.fully_labeled:
            raise ContractError("operation needs every label to be known")
        return self.labels

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        labels = None if self.labels is None else self.labels[idx]
        return Dataset(self.feature_names, self.X[idx], labels)

    def without_labels(self) -> "Dataset":
        return Dataset(self.feature_names, self.X, None)

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.feature_names, self.X, labels)


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {text!r} as a number", row, column) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r}", row, column)
    return value


def load_csv(path, label_column: str | None = None) -> Dataset:
    """Read a headed, comma-separated numeric table.

    Row numbers in errors count the header as row 1. An empty label cell means
    the label is unknown; any other value except ``0`` and ``1`` is rejected.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: missing header row") from None
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise SchemaError(f"{path}: duplicate header {dupes}")
        if label_column is not None and label_column not in header:
            raise SchemaError(f"{path}: no label column {label_column!r}")
        label_pos = header.index(label_column) if label_column is not None else None
        feature_pos = [i for i in range(len(header)) if i != label_pos]

        rows, labels = [], []
        for row_no, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise SchemaError(
                    f"{path}: row {row_no} has {len(cells)} cells, expected {len(header)}"
                )
            rows.append(
                [_parse_float(cells[i].strip(), row_no, header[i]) for i in feature_pos]
            )
            if label_pos is not None:
                cell = cells[label_pos].strip()
                if cell == "":
                    labels.append(UNKNOWN)
                elif cell in ("0", "1"):
                    labels.append(int(cell))
                else:
                    raise ParseError(
                        f"label must be 0, 1 or empty, got {cell!r}", row_no, label_column
                    )

    names = tuple(header[i] for i in feature_pos)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return Dataset(names, X, labels if label_pos is not None else None)


def write_csv(d: Dataset, path, label_column: str = "label") -> None:
    """Inverse of :func:`load_csv`; floats use ``repr`` so values round-trip."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = list(d.feature_names)
        if d.labels is not None:
            header.append(label_column)
        w.writerow(header)
        for i in range(d.n_rows):
            row = [repr(float(v)) for v in d.X[i]]
            if d.labels is not None:
                row.append("" if d.labels[i] == UNKNOWN else str(int(d.labels[i])))
            w.writerow(row)


def stratified_split(d: Dataset, bins: int, seed: int) -> list[np.ndarray]:
    """Partition row indices into ``bins`` class-balanced parts.

    Each class is shuffled and dealt round-robin; the negative class continues
    dealing where the positive class stopped so bin sizes also differ by at
    most one.
    """
    y = d.require_labels()
    if bins < 1:
        raise ContractError("bins must be a positive integer")
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    if bins > 1 and bins > min(len(pos), len(neg)):
        raise InfeasibleSplitError(
            f"cannot stratify {len(pos)} positives / {len(neg)} negatives into {bins} bins"
        )
    rng = np.random.default_rng(seed)
    parts: list[list[int]] = [[] for _ in range(bins)]
    slot = 0
    for members in (pos, neg):
        for i in rng.permutation(members):
            parts[slot % bins].append(int(i))
            slot += 1
    return [np.sort(np.array(p, dtype=np.intp)) for p in parts]


def budget_size(budget: float, n: int) -> int:
    if not 0 < budget <= 1:
        raise ContractError(f"label budget must lie in (0, 1], got {budget}")
    # guard against 0.025 * 1000 = 25.000000000000004
    return min(n, math.ceil(round(budget * n, 9)))


def draw_validation(
    labels: np.ndarray, indices: np.ndarray, budget: float, rng, stratified: bool = True
) -> np.ndarray:
    """Pick the ``ceil(budget * len(indices))`` rows whose labels get revealed."""
    indices = np.asarray(indices, dtype=np.intp)
    size = budget_size(budget, len(indices))
    if not stratified:
        return np.sort(rng.choice(indices, size=size, replace=False))
    pos = indices[labels[indices] == 1]
    neg = indices[labels[indices] == 0]
    n_pos = int(round(size * len(pos) / len(indices)))
    # keep both classes whenever the slice has room for them
    if size >= 2 and len(pos) and len(neg):
        n_pos = min(max(n_pos, 1), size - 1)
    n_pos = min(n_pos, len(pos))
    n_neg = min(size - n_pos, len(neg))
    n_pos = size - n_neg
    chosen = np.concatenate([rng.permutation(pos)[:n_pos], rng.permutation(neg)[:n_neg]])
    return np.sort(chosen)


@dataclass(frozen=True, eq=False)
class SplitPlan:
    test_bins: list[np.ndarray]
    train_samples: list[np.ndarray]
    validation_indices: list[np.ndarray]
    label_budget: float

    def to_dict(self) -> dict:
        return {
            "label_budget": self.label_budget,
            "test_bins": [b.tolist() for b in self.test_bins],
            "train_samples": [s.tolist() for s in self.train_samples],
            "validation_indices": [v.tolist() for v in self.validation_indices],
        }


def make_split_plan(
    train: Dataset,
    test: Dataset,
    label_budget: float,
    seed: int,
    bins: int = 5,
    samples: int = 5,
    stratified_validation: bool = True,
) -> SplitPlan:
    """Build the bins x samples layout; a pure function of its arguments."""
    test_seed, train_seed, val_seed = np.random.SeedSequence(seed).generate_state(3)
    test_bins = stratified_split(test, bins, int(test_seed))
    train_samples = stratified_split(train, samples, int(train_seed))
    y = train.require_labels()
    val_rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(int(val_seed)).spawn(samples)]
    validation = [
        draw_validation(y, s, label_budget, rng, stratified_validation)
        for s, rng in zip(train_samples, val_rngs)
    ]
    return SplitPlan(test_bins, train_samples, validation, label_budget)


@dataclass
class LabelCounter:
    """Counts true-label reads; the numerator of the labelling cost."""

    reads: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def record(self, n: int) -> None:
        with self._lock:
            self.reads += int(n)


def reveal_labels(
    d: Dataset, plan: SplitPlan, sample: int, counter: LabelCounter | None = None
) -> tuple[Dataset, Dataset]:
    """Split a train sample into a labeled validation view and an unlabeled tuning view.

    Only the validation rows have their labels read, and the counter is charged
    for exactly that many.
    """
    if not 0 <= sample < len(plan.train_samples):
        raise IndexError(f"train sample {sample} out of range")
    members = plan.train_samples[sample]
    val_idx = plan.validation_indices[sample]
    if not np.isin(val_idx, members).all():
        raise BudgetViolation("validation indices escape their train sample")
    tune_idx = np.setdiff1d(members, val_idx)
    labels = d.labels[val_idx]
    if (labels == UNKNOWN).any():
        raise ContractError("validation rows must carry known labels")
    if counter is not None:
        counter.record(len(val_idx))
    validation = Dataset(d.feature_names, d.X[val_idx], labels)
    tuning = Dataset(d.feature_names, d.X[tune_idx], None)
    return validation, tuning


def class_counts(labels: Sequence[int]) -> tuple[int, int]:
    y = np.asarray(labels)
    return int((y == 0).sum()), int((y == 1).sum())
