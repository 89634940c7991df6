"""Violation-score feature selection and instance selection for CLAFI.

A feature *violates* the proneness assumption on a row when the value sits
above its cutoff but the row is pseudo-labeled negative, or at/below the
cutoff while labeled positive. ``literal=True`` swaps the two cases, which is
the inverted reading kept for auditing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cla import ClaCutoffs
from .dataset import UNKNOWN, Dataset
from .errors import ContractError, DegenerateDataError, SelectionExhausted


def violation_matrix(
    X: np.ndarray, labels: np.ndarray, cutoffs: ClaCutoffs, literal: bool = False
) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels)
    if X.shape[1] != cutoffs.n_features:
        raise ContractError(f"expected {cutoffs.n_features} features, got {X.shape[1]}")
    if y.shape[0] != X.shape[0] or np.isin(y, (0, 1), invert=True).any():
        raise ContractError("every instance needs a pseudo-label in {0, 1}")
    above = X > cutoffs.cutoffs
    pos = (y == 1)[:, None]
    if literal:
        return (above & pos) | (~above & ~pos)
    return (above & ~pos) | (~above & pos)


def violation_scores(d: Dataset, cutoffs: ClaCutoffs, literal: bool = False) -> np.ndarray:
    if d.labels is None or (d.labels == UNKNOWN).any():
        raise ContractError("violation scores need a pseudo-label on every instance")
    return violation_matrix(d.X, d.labels, cutoffs, literal).sum(axis=0)


def select_features(scores, tier: int = 0) -> np.ndarray:
    """Indices of the features sharing the ``tier``-th smallest distinct score."""
    scores = np.asarray(scores)
    if scores.size == 0:
        raise ContractError("no violation scores to select from")
    levels = np.unique(scores)
    if not 0 <= tier < levels.size:
        raise SelectionExhausted(f"tier {tier} beyond {levels.size} distinct scores")
    return np.flatnonzero(scores == levels[tier])


@dataclass(frozen=True, eq=False)
class InstanceSelection:
    survivors: np.ndarray
    two_class: bool

    @property
    def retry_needed(self) -> bool:
        return not self.two_class


def select_instances(
    d: Dataset, cutoffs: ClaCutoffs, selected, literal: bool = False
) -> InstanceSelection:
    selected = np.asarray(selected, dtype=np.intp)
    if selected.size == 0:
        raise ContractError("instance selection needs at least one feature")
    V = violation_matrix(d.X, d.labels, cutoffs, literal)[:, selected]
    survivors = np.flatnonzero(~V.any(axis=1))
    kept = d.labels[survivors]
    return InstanceSelection(survivors, bool((kept == 0).any() and (kept == 1).any()))


def project(d: Dataset, selected) -> Dataset:
    selected = np.asarray(selected, dtype=np.intp).reshape(-1)
    if selected.size == 0:
        raise ContractError("projection onto an empty feature set")
    if (selected < 0).any() or (selected >= d.n_features).any():
        raise ContractError(f"feature index out of range for {d.n_features} features")
    names = tuple(d.feature_names[i] for i in selected)
    return Dataset(names, d.X[:, selected], d.labels)


@dataclass(frozen=True, eq=False)
class ViolationReport:
    scores: np.ndarray
    selected_features: np.ndarray
    removed_instances: np.ndarray
    fallback_depth: int

    def to_dict(self) -> dict:
        return {
            "scores": self.scores.tolist(),
            "selected_features": self.selected_features.tolist(),
            "removed_instances": self.removed_instances.tolist(),
            "fallback_depth": self.fallback_depth,
        }


def clafi_select(d: Dataset, cutoffs: ClaCutoffs, literal: bool = False) -> ViolationReport:
    """Pick features and surviving instances, walking up score tiers until both classes survive.

    Raises :class:`DegenerateDataError` if no tier leaves a two-class set.
    """
    scores = violation_scores(d, cutoffs, literal)
    for tier in range(np.unique(scores).size):
        selected = select_features(scores, tier)
        chosen = select_instances(d, cutoffs, selected, literal)
        if chosen.two_class:
            removed = np.setdiff1d(np.arange(d.n_rows), chosen.survivors)
            return ViolationReport(scores, selected, removed, tier)
    raise DegenerateDataError("no violation-score tier leaves both classes after instance selection")
