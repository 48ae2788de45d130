"""Local transition counting and row normalization.

Counting is a pure fold over records: for every subject and feature, each
slot pair (t, t + lag) with both cells observed contributes one count from the
source bin to the destination bin.  Pairs touching a missing cell contribute
nothing, and no pair crosses subject boundaries, so counts over disjoint
record sets add entrywise -- the algebraic fact that makes federated
aggregation exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import BinningScheme, Dataset, TransitionCounts, TransitionMatrix
from .errors import ConfigurationError

__all__ = ["LagPolicy", "count_transitions", "normalize"]


@dataclass(frozen=True)
class LagPolicy:
    """Grid distance between observed slots that counts as one transition.

    The federated protocol always counts grid-adjacent pairs (lag 1); clients
    whose native sampling is coarser than the grid then contribute zero counts
    and act as pure consumers of the aggregate matrix.
    """

    count_lag: int = 1

    def __post_init__(self):
        if self.count_lag < 1:
            raise ConfigurationError(f"count_lag must be >= 1, got {self.count_lag}")


def count_transitions(
    dataset: Dataset, scheme: BinningScheme, policy: LagPolicy = LagPolicy()
) -> TransitionCounts:
    """Accumulate per-feature bin-transition counts over all records.

    An empty dataset yields all-zero counts; feature-set mismatch raises
    DatasetError via the grid discretization.
    """
    n = scheme.n_bins
    if not dataset.records:
        return TransitionCounts.zeros(scheme.feature_names, n)
    grid = dataset.to_bin_grid(scheme)
    counts = _kernels.count_pairs(grid, n, policy.count_lag)
    return TransitionCounts(counts, scheme.feature_names)


def normalize(counts: TransitionCounts, smoothing: float = 0.0) -> TransitionMatrix:
    """Turn counts into row-stochastic matrices.

    T(i,j) = (counts(i,j) + smoothing) / (row_sum + n * smoothing).  With zero
    smoothing a never-observed source row falls back to the uniform row 1/n.
    """
    if smoothing < 0:
        raise ConfigurationError(f"smoothing must be >= 0, got {smoothing}")
    c = counts.counts.astype(np.float64)
    n = counts.n_bins
    row_sums = c.sum(axis=2, keepdims=True)
    if smoothing == 0:
        safe = np.where(row_sums == 0, 1.0, row_sums)
        probs = np.where(row_sums > 0, c / safe, 1.0 / n)
    else:
        probs = (c + smoothing) / (row_sums + n * smoothing)
    return TransitionMatrix(probs, counts.feature_names)
