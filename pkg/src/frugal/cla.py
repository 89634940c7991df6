"""CLA: percentile cutoffs per feature, exceedance counts and threshold labels."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dataset import Dataset
from .errors import ContractError


def _rank(c: float, n: int) -> tuple[int, float]:
    """Lower rank index and interpolation weight for percentile ``c`` of ``n`` values.

    Computed exactly so that, say, the 70th percentile of 18 values sits at
    rank 11.9 rather than 11.899999999999999.
    """
    r = Fraction(c) / 100 * (n - 1)
    lo = r.numerator // r.denominator
    return lo, float(r - lo)


def percentile(values, c: float) -> float:
    """Linear-interpolation percentile between closest ranks.

    >>> percentile([1, 2, 3, 4], 75)
    3.25
    """
    v = np.sort(np.asarray(values, dtype=np.float64).reshape(-1))
    if v.size == 0:
        raise ContractError("percentile of an empty sequence")
    if not 0 <= c <= 100:
        raise ContractError(f"percentile rank must lie in [0, 100], got {c}")
    lo, frac = _rank(c, v.size)
    if lo >= v.size - 1:
        return float(v[-1])
    return float(v[lo] + frac * (v[lo + 1] - v[lo]))


def column_percentiles(X: np.ndarray, c: float) -> np.ndarray:
    """:func:`percentile` applied to every column at once."""
    X = np.sort(np.asarray(X, dtype=np.float64), axis=0)
    n = X.shape[0]
    if n == 0:
        raise ContractError("percentile of an empty dataset")
    lo, frac = _rank(c, n)
    if lo >= n - 1:
        return X[-1].copy()
    return X[lo] + frac * (X[lo + 1] - X[lo])


@dataclass(frozen=True, eq=False)
class ClaCutoffs:
    c_percentile: float
    cutoffs: np.ndarray

    @property
    def n_features(self) -> int:
        return self.cutoffs.shape[0]


@dataclass(frozen=True)
class Prediction:
    label: int
    score: float


@dataclass(frozen=True, eq=False)
class Predictions:
    """Hard labels and continuous scores for a batch of rows."""

    labels: np.ndarray
    scores: np.ndarray

    def __len__(self):
        return self.labels.shape[0]

    def __getitem__(self, i) -> Prediction:
        return Prediction(int(self.labels[i]), float(self.scores[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def _features(d) -> np.ndarray:
    return d.X if isinstance(d, Dataset) else np.asarray(d, dtype=np.float64)


def cla_fit(d, c: float) -> ClaCutoffs:
    X = _features(d)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ContractError("cla_fit needs a non-empty feature matrix")
    if not 0 < c < 100:
        raise ContractError(f"C must lie in (0, 100), got {c}")
    return ClaCutoffs(float(c), column_percentiles(X, c))


def exceedance_counts(cutoffs: ClaCutoffs, d) -> np.ndarray:
    X = _features(d)
    if X.ndim != 2 or X.shape[1] != cutoffs.n_features:
        raise ContractError(
            f"expected {cutoffs.n_features} features, got {X.shape[-1] if X.ndim else 0}"
        )
    return (X > cutoffs.cutoffs).sum(axis=1)


def cla_label(cutoffs: ClaCutoffs, d) -> Predictions:
    """Label rows positive when their exceedance count beats the median count."""
    K = exceedance_counts(cutoffs, d)
    if K.size == 0:
        return Predictions(np.zeros(0, dtype=np.int8), np.zeros(0))
    threshold = percentile(K, 50)
    return Predictions((K > threshold).astype(np.int8), K.astype(np.float64))


def cla_predict(d, c: float) -> Predictions:
    """Standalone CLA: fit the cutoffs on the rows being labeled."""
    return cla_label(cla_fit(d, c), d)
