"""Synthetic ground-truth generator for the uniform/heterogeneous sampling
experiments.

Each subject's bin sequence is sampled from a known per-feature chain
(initial distribution pi, transition matrix T-star); bins decode to values
drawn uniformly within the bin, so midpoint decoding carries measurable error
and RMSE is meaningful.  A client with native interval k keeps only grid
slots t with t % k == 0, then loses surviving cells independently with the
MCAR rate.  Generation is a pure function of (spec, interval, client index):
per-client RNG streams are spawned from the spec seed, so reruns are
bit-identical and clients can be generated in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import BinningScheme, Dataset, TimeSeriesRecord, build_binning_scheme
from .errors import ConfigurationError

__all__ = ["GeneratorSpec", "make_generator_spec", "generate_client_data"]


@dataclass(frozen=True)
class GeneratorSpec:
    """Everything needed to sample one client's data with known ground truth."""

    scheme: BinningScheme
    transition: np.ndarray  # (features, n, n) row-stochastic ground truth
    initial: np.ndarray  # (features, n) initial bin distributions
    window_count: int = 6
    subjects_per_client: int = 200
    mcar_rate: float = 0.2
    seed: int = 0

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=np.float64)
        p = np.asarray(self.initial, dtype=np.float64)
        f, n = self.scheme.feature_count, self.scheme.n_bins
        if t.shape != (f, n, n):
            raise ConfigurationError(f"transition shape {t.shape} != ({f}, {n}, {n})")
        if p.shape != (f, n):
            raise ConfigurationError(f"initial shape {p.shape} != ({f}, {n})")
        if np.any(np.abs(t.sum(axis=2) - 1.0) > 1e-9):
            raise ConfigurationError("ground-truth transition rows must sum to 1")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
            raise ConfigurationError("initial distributions must sum to 1")
        if not 0 <= self.mcar_rate < 1:
            raise ConfigurationError(f"mcar_rate must be in [0, 1), got {self.mcar_rate}")
        if self.window_count < 1 or self.subjects_per_client < 1:
            raise ConfigurationError("window_count and subjects_per_client must be >= 1")
        object.__setattr__(self, "transition", t)
        object.__setattr__(self, "initial", p)

    def with_seed(self, seed: int) -> "GeneratorSpec":
        return replace(self, seed=seed)


def make_generator_spec(
    feature_names=("f0", "f1", "f2", "f3", "f4"),
    bins: int = 10,
    windows: int = 6,
    subjects: int = 200,
    mcar: float = 0.2,
    seed: int = 0,
    value_range: tuple[float, float] = (0.0, 100.0),
    band_sigma: float = 1.0,
    concentration: float = 60.0,
) -> GeneratorSpec:
    """Build a spec with banded random ground-truth chains.

    Rows of each T-star are Dirichlet draws concentrated around a Gaussian
    band of width ``band_sigma`` along the diagonal: series move between
    nearby bins most of the time, which is what makes transition-based
    imputation informative.  Higher ``concentration`` means rows closer to
    the band profile.
    """
    lo, hi = value_range
    scheme = build_binning_scheme(
        [{"name": name, "min": lo, "max": hi, "n": bins} for name in feature_names]
    )
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x57A7]))
    f, n = len(feature_names), bins
    idx = np.arange(n)
    band = np.exp(-((idx[:, None] - idx[None, :]) ** 2) / (2.0 * band_sigma**2))
    band /= band.sum(axis=1, keepdims=True)
    transition = np.empty((f, n, n))
    initial = np.empty((f, n))
    for fi in range(f):
        for i in range(n):
            transition[fi, i] = rng.dirichlet(concentration * band[i] + 0.05)
        initial[fi] = rng.dirichlet(np.full(n, 5.0))
    return GeneratorSpec(
        scheme=scheme,
        transition=transition,
        initial=initial,
        window_count=windows,
        subjects_per_client=subjects,
        mcar_rate=mcar,
        seed=seed,
    )


def _sample_categorical(rng: np.random.Generator, cumprobs: np.ndarray, n: int) -> np.ndarray:
    # cumprobs: (draws, n) cumulative rows; one uniform per draw
    u = rng.random(cumprobs.shape[0])
    picks = (cumprobs <= u[:, None]).sum(axis=1)
    return np.minimum(picks, n - 1)


def generate_client_data(
    spec: GeneratorSpec,
    interval_hours: int,
    client_index: int = 0,
    client_id: str | None = None,
) -> tuple[Dataset, Dataset]:
    """Sample one client's (observed, ground_truth) dataset pair.

    The ground truth is fully observed; the observed dataset drops slots off
    the client's native interval and then applies MCAR removal.
    """
    if interval_hours not in (1, 2, 3):
        raise ConfigurationError(f"interval_hours must be 1, 2, or 3, got {interval_hours}")
    cid = client_id if client_id is not None else f"client_{client_index}"
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), int(client_index)]))
    scheme = spec.scheme
    r, f, w, n = spec.subjects_per_client, scheme.feature_count, spec.window_count, scheme.n_bins

    bins = np.empty((r, f, w), dtype=np.int64)
    cum_initial = np.cumsum(spec.initial, axis=1)
    cum_transition = np.cumsum(spec.transition, axis=2)
    for fi in range(f):
        bins[:, fi, 0] = _sample_categorical(rng, np.broadcast_to(cum_initial[fi], (r, n)), n)
        for t in range(1, w):
            rows = cum_transition[fi][bins[:, fi, t - 1]]
            bins[:, fi, t] = _sample_categorical(rng, rows, n)

    lows = scheme.edges[:, :-1]  # (f, n)
    widths = scheme.edges[:, 1:] - scheme.edges[:, :-1]
    u = rng.random((r, f, w))
    feat_idx = np.arange(f)[None, :, None]
    values = lows[feat_idx, bins] + u * widths[feat_idx, bins]

    observed = values.copy()
    slot_missing = (np.arange(w) % interval_hours) != 0
    observed[:, :, slot_missing] = np.nan
    if spec.mcar_rate > 0:
        drop = rng.random((r, f, w)) < spec.mcar_rate
        observed[drop] = np.nan

    names = scheme.feature_names
    truth_records = []
    obs_records = []
    for i in range(r):
        sid = f"{cid}_s{i:05d}"
        truth_records.append(TimeSeriesRecord(sid, values[i]))
        obs_records.append(TimeSeriesRecord(sid, observed[i]))
    return Dataset(names, obs_records), Dataset(names, truth_records)
