"""Correlation-sum intrinsic dimensionality.

``C(r)`` is the fraction of unordered point pairs closer than ``r``; the
dimension ``D`` is the steepest slope of ``ln C(r)`` against ``ln r``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import ContractError


def _points(d) -> np.ndarray:
    X = d.X if isinstance(d, Dataset) else np.asarray(d, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return X


def minmax_normalize(X: np.ndarray) -> np.ndarray:
    """Scale each column to [0, 1]; constant columns become 0."""
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span[span == 0] = 1.0
    return (X - lo) / span


def pairwise_distances(X: np.ndarray) -> np.ndarray:
    """Condensed Euclidean distances in (i < j) row-major order."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    out = np.empty(n * (n - 1) // 2)
    pos = 0
    for i in range(n - 1):
        diff = X[i + 1:] - X[i]
        k = n - 1 - i
        out[pos:pos + k] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        pos += k
    return out


def correlation_sum(d, r: float, normalize: bool = True) -> float:
    X = _points(d)
    n = X.shape[0]
    if n < 2:
        raise ContractError("correlation sum needs at least two points")
    if r <= 0:
        raise ContractError("radius must be positive")
    if normalize:
        X = minmax_normalize(X)
    dist = pairwise_distances(X)
    return float(np.count_nonzero(dist < r)) / dist.size


@dataclass(frozen=True, eq=False)
class DimProfile:
    radii: np.ndarray
    correlation_sums: np.ndarray
    D: float
    degenerate: bool = False

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "C(r)"])
            for r, c in zip(self.radii, self.correlation_sums):
                w.writerow([repr(float(r)), repr(float(c))])
            w.writerow(["D", repr(self.D)])


def _max_slope(radii, sums, counts, min_pairs) -> float:
    best = 0.0
    for k in range(len(radii) - 1):
        c0, c1 = sums[k], sums[k + 1]
        if c0 <= 0 or c1 <= 0:
            continue
        if counts[k] < min_pairs or counts[k + 1] < min_pairs:
            continue
        slope = (np.log(c1) - np.log(c0)) / (np.log(radii[k + 1]) - np.log(radii[k]))
        best = max(best, float(slope))
    return best


def _fit_slope(radii, sums, counts, min_pairs) -> float:
    keep = (sums > 0) & (counts >= min_pairs)
    if keep.sum() < 2:
        return 0.0
    slope = np.polyfit(np.log(radii[keep]), np.log(sums[keep]), 1)[0]
    return max(0.0, float(slope))


def estimate_dimension(
    d,
    n_radii: int = 20,
    normalize: bool = True,
    method: str = "max",
    min_pairs: int | None = None,
) -> DimProfile:
    """Correlation-sum profile on ``n_radii`` log-spaced radii.

    Radii run from the smallest nonzero to the largest pairwise distance.
    ``method="max"`` reports the largest finite-difference slope;
    ``method="fit"`` a least-squares line through the profile.

    Radii enclosing fewer than ``min_pairs`` pairs (default: the number of
    points) are left out of the slope: with a handful of pairs the count ratio
    is Poisson noise and the maximum slope would chase it.
    """
    X = _points(d)
    if X.shape[0] < 2:
        raise ContractError("dimension estimate needs at least two points")
    if n_radii < 2:
        raise ContractError("need at least two radii")
    if normalize:
        X = minmax_normalize(X)
    dist = np.sort(pairwise_distances(X))
    nonzero = dist[dist > 0]
    if nonzero.size == 0:
        return DimProfile(np.zeros(0), np.zeros(0), 0.0, degenerate=True)
    lo, hi = nonzero[0], nonzero[-1]
    if lo == hi:
        radii = np.array([lo])
        sums = np.array([np.searchsorted(dist, lo, side="left") / dist.size])
        return DimProfile(radii, sums, 0.0, degenerate=True)
    radii = np.geomspace(lo, hi, n_radii)
    counts = np.searchsorted(dist, radii, side="left")
    sums = counts / dist.size
    min_pairs = X.shape[0] if min_pairs is None else min_pairs
    if method == "max":
        D = _max_slope(radii, sums, counts, min_pairs)
    elif method == "fit":
        D = _fit_slope(radii, sums, counts, min_pairs)
    else:
        raise ContractError(f"unknown slope method {method!r}")
    return DimProfile(radii, sums, D)
