import numpy as np
import pytest

from fedmarkov.core import BinningScheme, Dataset, TimeSeriesRecord, build_binning_scheme


def random_stochastic(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random row-stochastic matrix with no zero entries."""
    m = rng.random((n, n)) + 1e-3
    return m / m.sum(axis=1, keepdims=True)


def random_stochastic_sparse(rng: np.random.Generator, n: int) -> np.ndarray:
    """Row-stochastic matrix where roughly half the entries are zero."""
    m = rng.random((n, n)) * (rng.random((n, n)) < 0.5)
    m[np.arange(n), rng.integers(0, n, size=n)] += 0.1  # no all-zero rows
    return m / m.sum(axis=1, keepdims=True)


def make_scheme(features=2, bins=4, low=0.0, high=8.0) -> BinningScheme:
    return build_binning_scheme(
        [{"name": f"f{i}", "min": low, "max": high, "n": bins} for i in range(features)]
    )


def random_dataset(
    rng: np.random.Generator,
    scheme: BinningScheme,
    subjects: int = 10,
    windows: int = 6,
    missing_rate: float = 0.3,
    prefix: str = "s",
) -> Dataset:
    f = scheme.feature_count
    records = []
    for i in range(subjects):
        vals = np.empty((f, windows))
        for j in range(f):
            lo, hi = scheme.lows[j], scheme.highs[j]
            vals[j] = rng.uniform(lo, hi - 1e-9, size=windows)
        if missing_rate > 0:
            vals[rng.random((f, windows)) < missing_rate] = np.nan
        records.append(TimeSeriesRecord(f"{prefix}{i:03d}", vals))
    return Dataset(scheme.feature_names, tuple(records))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def scheme():
    return make_scheme()
