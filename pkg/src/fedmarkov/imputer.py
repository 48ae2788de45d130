"""Markov gap filling: pick the most probable bins for missing slots, then
decode them to bin midpoints.

A single missing slot with both neighbors observed gets the bin maximizing
T(left, j) * T(j, right); with one neighbor, the single-directional argmax.
Runs of consecutive missing slots are decoded as the most probable path by
max-product dynamic programming over the chain product (anchored on both ends
when available, one end otherwise).  Ties always resolve to the lowest bin
index, making every operation deterministic.  A feature with no observed slot
at all has no temporal context; its slots fall back to the most-targeted bin
argmax_j sum_i T(i, j) and the record is flagged with a warning.

The feature-wise mean baseline lives here too.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .core import BinningScheme, Dataset, TimeSeriesRecord, TransitionMatrix
from .errors import DatasetError

__all__ = [
    "Gap",
    "RecordImputationInfo",
    "find_gaps",
    "impute_bidirectional",
    "impute_forward",
    "impute_backward",
    "impute_gap",
    "impute_record",
    "impute_dataset",
    "impute_local_mean",
    "infos_to_sidecar",
]


@dataclass(frozen=True)
class Gap:
    """A maximal run of consecutive missing slots for one feature.

    ``left_bin``/``right_bin`` are the observed neighbor bins just outside the
    run, or None at a series boundary; by maximality the slot adjacent to the
    run is observed whenever it exists.
    """

    feature: int
    start: int
    end: int  # inclusive
    left_bin: int | None
    right_bin: int | None

    def __post_init__(self):
        if self.start > self.end:
            raise DatasetError(f"gap start {self.start} > end {self.end}")

    @property
    def length(self) -> int:
        return self.end - self.start + 1


def find_gaps(bin_row: np.ndarray, feature: int) -> list[Gap]:
    """Scan one feature's discretized row (missing = -1) left to right."""
    gaps: list[Gap] = []
    w = len(bin_row)
    t = 0
    while t < w:
        if bin_row[t] >= 0:
            t += 1
            continue
        start = t
        while t < w and bin_row[t] < 0:
            t += 1
        left = int(bin_row[start - 1]) if start > 0 else None
        right = int(bin_row[t]) if t < w else None
        gaps.append(Gap(feature, start, t - 1, left, right))
    return gaps


def impute_bidirectional(T: np.ndarray, left: int, right: int) -> int:
    """Best bin between two observed neighbors: argmax_j T[left,j] * T[j,right]."""
    scores = T[left] * T[:, right]
    return int(np.argmax(scores))


def impute_forward(T: np.ndarray, left: int) -> int:
    """Best successor of an observed left neighbor: argmax_j T[left, j]."""
    return int(np.argmax(T[left]))


def impute_backward(T: np.ndarray, right: int) -> int:
    """Best predecessor of an observed right neighbor: argmax_j T[j, right]."""
    return int(np.argmax(T[:, right]))


def _fallback_bin(T: np.ndarray) -> int:
    # no temporal context anywhere: most-targeted bin by column mass
    return int(np.argmax(T.sum(axis=0)))


def impute_gap(T: np.ndarray, gap: Gap) -> np.ndarray:
    """Most probable bin path across a gap (length = gap.length).

    Both anchors known: maximizes T(left, j_1) * prod T(j_k, j_{k+1}) *
    T(j_L, right) over all paths.  One anchor: maximizes the one-sided chain
    product.  No anchor: every slot gets the most-targeted fallback bin (the
    caller records the warning).
    """
    T = np.asarray(T, dtype=np.float64)
    if gap.left_bin is None and gap.right_bin is None:
        return np.full(gap.length, _fallback_bin(T), dtype=np.int64)
    left = -1 if gap.left_bin is None else gap.left_bin
    right = -1 if gap.right_bin is None else gap.right_bin
    return _kernels.gap_path(T, left, right, gap.length)


@dataclass(frozen=True)
class RecordImputationInfo:
    """Gap statistics and warning flags for one imputed record."""

    subject_id: str
    imputed_cells: int
    gap_count: int
    fully_missing_features: tuple[str, ...]


def impute_record(
    record: TimeSeriesRecord, matrix: TransitionMatrix, scheme: BinningScheme
) -> tuple[TimeSeriesRecord, RecordImputationInfo]:
    """Fill every missing cell of one record; observed cells pass through untouched."""
    if matrix.n_bins != scheme.n_bins or len(matrix.feature_names) != record.feature_count:
        raise DatasetError("matrix/scheme dimensions do not match the record")
    values = record.values.copy()
    if not np.isnan(values).any():
        return record, RecordImputationInfo(record.subject_id, 0, 0, ())
    bins = scheme.digitize_grid(record.values)
    imputed = 0
    gap_count = 0
    warned: list[str] = []
    for f in range(record.feature_count):
        gaps = find_gaps(bins[f], f)
        if not gaps:
            continue
        T = matrix.probs[f]
        for gap in gaps:
            if gap.left_bin is None and gap.right_bin is None:
                warned.append(scheme.feature_names[f])
            path = impute_gap(T, gap)
            for offset, b in enumerate(path):
                values[f, gap.start + offset] = scheme.bin_midpoint(int(b), f)
            imputed += gap.length
            gap_count += 1
    out = TimeSeriesRecord(record.subject_id, values)
    return out, RecordImputationInfo(record.subject_id, imputed, gap_count, tuple(warned))


def impute_dataset(
    dataset: Dataset,
    matrix: TransitionMatrix,
    scheme: BinningScheme,
    workers: int = 1,
) -> tuple[Dataset, list[RecordImputationInfo]]:
    """Impute every record; results keep dataset order regardless of worker count."""
    if workers > 1 and len(dataset.records) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda rec: impute_record(rec, matrix, scheme), dataset.records))
    else:
        results = [impute_record(rec, matrix, scheme) for rec in dataset.records]
    records = [rec for rec, _ in results]
    infos = [info for _, info in results]
    return Dataset(dataset.feature_names, records), infos


def impute_local_mean(
    dataset: Dataset, training: Dataset, scheme: BinningScheme
) -> Dataset:
    """Baseline: fill each missing cell with the feature's observed training mean.

    A feature with zero observed training cells falls back to the midpoint of
    its full configured range.
    """
    if training.feature_names != dataset.feature_names:
        raise DatasetError("training features do not match dataset")
    grid = training.stack()
    means = np.empty(dataset.feature_count)
    for f in range(dataset.feature_count):
        col = grid[:, f, :] if grid.size else np.empty(0)
        observed = col[~np.isnan(col)] if col.size else np.empty(0)
        means[f] = observed.mean() if observed.size else scheme.range_midpoint(f)
    records = []
    for rec in dataset.records:
        values = rec.values.copy()
        mask = np.isnan(values)
        for f in range(dataset.feature_count):
            values[f, mask[f]] = means[f]
        records.append(TimeSeriesRecord(rec.subject_id, values))
    return Dataset(dataset.feature_names, records)


def infos_to_sidecar(infos: Sequence[RecordImputationInfo]) -> dict:
    """JSON-ready sidecar report of per-record gap statistics and warnings."""
    return {
        "records": [
            {
                "subject_id": info.subject_id,
                "imputed_cells": info.imputed_cells,
                "gaps": info.gap_count,
                "fully_missing_features": list(info.fully_missing_features),
            }
            for info in infos
        ],
        "total_imputed_cells": int(sum(i.imputed_cells for i in infos)),
        "records_with_warnings": int(sum(1 for i in infos if i.fully_missing_features)),
    }


def write_sidecar(infos: Sequence[RecordImputationInfo], path) -> None:
    with open(path, "w") as fh:
        json.dump(infos_to_sidecar(infos), fh, indent=2)
        fh.write("\n")
