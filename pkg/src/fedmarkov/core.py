"""Domain types, equal-width discretization, and file formats.

Values live on a fixed global grid of ``feature_count x window_count`` cells
per subject; missing cells are NaN in memory and empty strings in CSV.
Datasets are exchanged as CSV (one row per subject/window pair), binning
schemes and count/probability matrices as JSON.  All serialization round-trips
bit-exactly: floats are written with ``repr`` so parsing restores the same
double.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DatasetError, InvalidValueError

MISSING = float("nan")


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, copy=True)
    out.setflags(write=False)
    return out


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest string that round-trips the double
    return repr(float(x))


@dataclass(frozen=True)
class FeatureId:
    """Position and label of one feature within a dataset."""

    index: int
    name: str

    def __post_init__(self):
        if self.index < 0:
            raise ConfigurationError(f"feature index must be >= 0, got {self.index}")


@dataclass(frozen=True)
class BinningScheme:
    """Per-feature equal-width bins mapping values to indices and back.

    ``edges`` has shape (features, n+1) with strictly increasing rows spanning
    the configured [min, max] per feature; ``midpoints[i] = (edges[i] +
    edges[i+1]) / 2``.  The bin count n is uniform across features (the
    aggregation wire format fixes one n for the whole federation).  Bins are
    left-closed/right-open, the last bin closed; out-of-range finite values
    clamp to the nearest bin, so discretization is total on finite reals.
    """

    feature_names: tuple[str, ...]
    lows: np.ndarray
    highs: np.ndarray
    edges: np.ndarray
    midpoints: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "edges", _readonly(self.edges))
        object.__setattr__(self, "lows", _readonly(np.asarray(self.lows, dtype=float)))
        object.__setattr__(self, "highs", _readonly(np.asarray(self.highs, dtype=float)))
        mids = (self.edges[:, :-1] + self.edges[:, 1:]) / 2.0
        object.__setattr__(self, "midpoints", _readonly(mids))

    @property
    def feature_count(self) -> int:
        return len(self.feature_names)

    @property
    def n_bins(self) -> int:
        return self.edges.shape[1] - 1

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise DatasetError(f"unknown feature {name!r}") from None

    def discretize(self, value: float, feature: int) -> int:
        """Map a finite value to its bin index for the given feature.

        Interior values map to the unique b with edges[b] <= v < edges[b+1];
        values outside the configured range clamp to the first/last bin.
        Raises InvalidValueError for NaN or infinite input.
        """
        v = float(value)
        if not math.isfinite(v):
            raise InvalidValueError(f"cannot discretize non-finite value {value!r}")
        b = int(np.searchsorted(self.edges[feature], v, side="right")) - 1
        return min(max(b, 0), self.n_bins - 1)

    def bin_midpoint(self, b: int, feature: int) -> float:
        """Center of bin ``b`` for the given feature (IndexError if out of range)."""
        if not 0 <= b < self.n_bins:
            raise IndexError(f"bin {b} out of range [0, {self.n_bins})")
        return float(self.midpoints[feature, b])

    def range_midpoint(self, feature: int) -> float:
        """Midpoint of the feature's full configured [min, max] range."""
        return float((self.lows[feature] + self.highs[feature]) / 2.0)

    def digitize_grid(self, values: np.ndarray) -> np.ndarray:
        """Vectorized discretization of a (..., features, windows) grid.

        NaN cells become -1; everything else follows ``discretize``.  Input
        must be free of +-inf (dataset loading enforces finiteness).
        """
        vals = np.asarray(values, dtype=np.float64)
        missing = np.isnan(vals)
        out = np.empty(vals.shape, dtype=np.int64)
        n = self.n_bins
        for f in range(self.feature_count):
            col = np.nan_to_num(vals[..., f, :], nan=self.edges[f, 0])
            b = np.searchsorted(self.edges[f], col, side="right") - 1
            out[..., f, :] = np.clip(b, 0, n - 1)
        out[missing] = -1
        return out


def build_binning_scheme(config: Sequence[Mapping]) -> BinningScheme:
    """Build an equal-width scheme from per-feature ``{name, min, max, n}``.

    All features must share one bin count n >= 2 and satisfy min < max with
    finite bounds; edges are ``linspace(min, max, n+1)`` per feature.
    """
    if not config:
        raise ConfigurationError("binning config must list at least one feature")
    names = []
    lows = []
    highs = []
    ns = set()
    for entry in config:
        name = str(entry["name"])
        lo = float(entry["min"])
        hi = float(entry["max"])
        n = int(entry["n"])
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ConfigurationError(f"feature {name!r}: non-finite bounds")
        if lo >= hi:
            raise ConfigurationError(f"feature {name!r}: min {lo} >= max {hi}")
        if n < 2:
            raise ConfigurationError(f"feature {name!r}: need n >= 2 bins, got {n}")
        names.append(name)
        lows.append(lo)
        highs.append(hi)
        ns.add(n)
    if len(ns) != 1:
        raise ConfigurationError(f"bin count must be uniform across features, got {sorted(ns)}")
    if len(set(names)) != len(names):
        raise ConfigurationError("feature names must be unique")
    n = ns.pop()
    edges = np.stack([np.linspace(lo, hi, n + 1) for lo, hi in zip(lows, highs)])
    return BinningScheme(tuple(names), np.array(lows), np.array(highs), edges)


def save_binning_scheme(scheme: BinningScheme, path) -> None:
    doc = {
        "features": [
            {"name": name, "min": float(scheme.lows[f]), "max": float(scheme.highs[f]), "n": scheme.n_bins}
            for f, name in enumerate(scheme.feature_names)
        ]
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_binning_scheme(path) -> BinningScheme:
    with open(path) as fh:
        doc = json.load(fh)
    return build_binning_scheme(doc["features"])


@dataclass(frozen=True)
class TimeSeriesRecord:
    """One subject's multivariate series on the global grid.

    ``values`` has shape (features, windows); NaN marks a missing slot and
    every observed cell is a finite real.  Records are immutable: the array
    is copied and marked read-only at construction.
    """

    subject_id: str
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2 or vals.shape[1] < 1:
            raise DatasetError(f"record {self.subject_id!r}: values must be (features, windows>=1)")
        observed = vals[~np.isnan(vals)]
        if observed.size and not np.all(np.isfinite(observed)):
            raise DatasetError(f"record {self.subject_id!r}: observed cells must be finite")
        object.__setattr__(self, "values", _readonly(vals))

    @property
    def feature_count(self) -> int:
        return self.values.shape[0]

    @property
    def window_count(self) -> int:
        return self.values.shape[1]

    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)


@dataclass
class Dataset:
    """An ordered collection of records sharing one feature set and grid."""

    feature_names: tuple[str, ...]
    records: list[TimeSeriesRecord]

    def __post_init__(self):
        self.feature_names = tuple(self.feature_names)
        f = len(self.feature_names)
        for rec in self.records:
            if rec.feature_count != f:
                raise DatasetError(
                    f"record {rec.subject_id!r} has {rec.feature_count} features, dataset has {f}"
                )
        widths = {rec.window_count for rec in self.records}
        if len(widths) > 1:
            raise DatasetError(f"records disagree on window count: {sorted(widths)}")

    @property
    def feature_count(self) -> int:
        return len(self.feature_names)

    @property
    def window_count(self) -> int:
        if not self.records:
            return 0
        return self.records[0].window_count

    def __len__(self) -> int:
        return len(self.records)

    def stack(self) -> np.ndarray:
        """All records as one (records, features, windows) array."""
        if not self.records:
            return np.empty((0, self.feature_count, 0), dtype=np.float64)
        return np.stack([rec.values for rec in self.records])

    def to_bin_grid(self, scheme: BinningScheme) -> np.ndarray:
        """Discretize every record; missing cells become -1."""
        if scheme.feature_names != self.feature_names:
            raise DatasetError("dataset features do not match binning scheme")
        return scheme.digitize_grid(self.stack())


def save_dataset(dataset: Dataset, path) -> None:
    """Write CSV with header ``subject_id,window,<features...>``; missing cells empty."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "window", *dataset.feature_names])
        for rec in dataset.records:
            for t in range(rec.window_count):
                row = [rec.subject_id, str(t)]
                for f in range(rec.feature_count):
                    v = rec.values[f, t]
                    row.append("" if math.isnan(v) else _fmt(v))
                writer.writerow(row)


def load_dataset(path) -> Dataset:
    """Parse the dataset CSV; rows must be grouped by subject with windows 0..W-1."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if header[:2] != ["subject_id", "window"]:
            raise DatasetError(f"{path}: header must start with subject_id,window")
        names = tuple(header[2:])
        if not names:
            raise DatasetError(f"{path}: no feature columns")
        records: list[TimeSeriesRecord] = []
        current_id: str | None = None
        rows: list[list[str]] = []
        seen: set[str] = set()

        def flush():
            if current_id is None:
                return
            vals = np.full((len(names), len(rows)), np.nan)
            for t, cells in enumerate(rows):
                for f, cell in enumerate(cells):
                    if cell != "":
                        v = float(cell)
                        if not math.isfinite(v):
                            raise DatasetError(f"{path}: non-finite value {cell!r} for {current_id!r}")
                        vals[f, t] = v
            records.append(TimeSeriesRecord(current_id, vals))

        for line_no, row in enumerate(reader, start=2):
            if len(row) != 2 + len(names):
                raise DatasetError(f"{path}:{line_no}: expected {2 + len(names)} columns")
            sid, window = row[0], int(row[1])
            if sid != current_id:
                flush()
                if sid in seen:
                    raise DatasetError(f"{path}:{line_no}: rows for subject {sid!r} are not contiguous")
                seen.add(sid)
                current_id = sid
                rows = []
            if window != len(rows):
                raise DatasetError(f"{path}:{line_no}: window {window} out of order (expected {len(rows)})")
            rows.append(row[2:])
        flush()
    ds = Dataset(names, records)
    if records and ds.window_count < 1:
        raise DatasetError(f"{path}: records must have at least one window")
    return ds


@dataclass(frozen=True)
class TransitionCounts:
    """Per-feature n x n non-negative transition counts (pre-normalization)."""

    counts: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ConfigurationError(f"counts must be (features, n, n), got {arr.shape}")
        if arr.shape[0] != len(self.feature_names):
            raise ConfigurationError("counts feature dimension does not match names")
        if np.any(arr < 0):
            raise ConfigurationError("counts must be non-negative")
        object.__setattr__(self, "counts", _readonly(arr))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @classmethod
    def zeros(cls, feature_names: Sequence[str], n: int) -> "TransitionCounts":
        return cls(np.zeros((len(feature_names), n, n), dtype=np.int64), tuple(feature_names))

    @property
    def n_bins(self) -> int:
        return self.counts.shape[1]

    @property
    def total_transitions(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "TransitionCounts") -> "TransitionCounts":
        if self.feature_names != other.feature_names or self.counts.shape != other.counts.shape:
            raise DatasetError("cannot add counts with mismatched dimensions")
        return TransitionCounts(self.counts + other.counts, self.feature_names)


@dataclass(frozen=True)
class TransitionMatrix:
    """Per-feature row-stochastic matrices (local or federated)."""

    probs: np.ndarray
    feature_names: tuple[str, ...]

    ROW_SUM_TOL = 1e-9

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ConfigurationError(f"matrix must be (features, n, n), got {arr.shape}")
        if arr.shape[0] != len(self.feature_names):
            raise ConfigurationError("matrix feature dimension does not match names")
        if np.any(arr < 0) or np.any(arr > 1):
            raise ConfigurationError("matrix entries must lie in [0, 1]")
        if np.any(np.abs(arr.sum(axis=2) - 1.0) > self.ROW_SUM_TOL):
            raise ConfigurationError("matrix rows must sum to 1 within 1e-9")
        object.__setattr__(self, "probs", _readonly(arr))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_bins(self) -> int:
        return self.probs.shape[1]


def _save_per_feature(path, feature_names: Iterable[str], grids: np.ndarray, as_int: bool) -> None:
    feats = []
    for name, grid in zip(feature_names, grids):
        if as_int:
            rows = [[int(x) for x in row] for row in grid]
        else:
            rows = [[float(x) for x in row] for row in grid]
        feats.append({"name": name, "rows": rows})
    with open(path, "w") as fh:
        json.dump({"features": feats}, fh)
        fh.write("\n")


def save_counts(counts: TransitionCounts, path) -> None:
    _save_per_feature(path, counts.feature_names, counts.counts, as_int=True)


def load_counts(path) -> TransitionCounts:
    with open(path) as fh:
        doc = json.load(fh)
    names = tuple(f["name"] for f in doc["features"])
    arr = np.array([f["rows"] for f in doc["features"]], dtype=np.int64)
    return TransitionCounts(arr, names)


def save_matrix(matrix: TransitionMatrix, path) -> None:
    _save_per_feature(path, matrix.feature_names, matrix.probs, as_int=False)


def load_matrix(path) -> TransitionMatrix:
    with open(path) as fh:
        doc = json.load(fh)
    names = tuple(f["name"] for f in doc["features"])
    arr = np.array([f["rows"] for f in doc["features"]], dtype=np.float64)
    return TransitionMatrix(arr, names)
