"""Pairwise-masking secure aggregation of flattened transition counts.

Every unordered client pair shares a 32-byte seed.  Each client flattens its
integer counts into a modular ring, adds the mask derived from each pair seed
where it is the smaller id, and subtracts it where it is the larger.  Summing
all uploads cancels every mask, so the coordinator recovers exactly the
entrywise integer sum of the clients' counts and nothing else: any single
upload is uniformly distributed over the ring in every coordinate.

The protocol requires full participation: a missing upload or pair seed
aborts the round.  Dropout recovery, key agreement, and noise mechanisms are
out of scope; seeds are provisioned out-of-band.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import TransitionCounts
from .errors import ConfigurationError, ProtocolError

__all__ = [
    "RingConfig",
    "PairwiseSeed",
    "MaskedCountVector",
    "derive_mask",
    "flatten_counts",
    "mask_counts",
    "aggregate",
    "provision_pairwise_seeds",
    "pair_key",
    "vector_to_wire",
    "vector_from_wire",
]

DEFAULT_RING_BITS = 61


@dataclass(frozen=True)
class RingConfig:
    """Modular ring for mask arithmetic: a power-of-two modulus.

    The modulus must exceed any plausible true count total so the aggregate
    never wraps; entries at or above modulus/2 are treated as wraparound
    suspicion at reconstruction time.
    """

    modulus: int = 2**DEFAULT_RING_BITS

    def __post_init__(self):
        m = self.modulus
        if m < 4 or (m & (m - 1)) != 0:
            raise ConfigurationError(f"ring modulus must be a power of two >= 4, got {m}")
        if m > 2**64:
            raise ConfigurationError("ring modulus above 2^64 is not supported")

    @property
    def bits(self) -> int:
        return self.modulus.bit_length() - 1


@dataclass(frozen=True)
class PairwiseSeed:
    """32-byte secret shared by exactly one unordered client pair (a < b)."""

    a: str
    b: str
    seed: bytes

    def __post_init__(self):
        if self.a >= self.b:
            raise ConfigurationError(f"pair ids must satisfy a < b, got ({self.a!r}, {self.b!r})")
        if len(self.seed) != 32:
            raise ConfigurationError("pair seed must be exactly 32 bytes")


@dataclass(frozen=True)
class MaskedCountVector:
    """One client's upload: masked flattened counts plus its dimensions."""

    client_id: str
    dims: tuple[int, int]  # (features, n)
    payload: tuple[int, ...]

    def __post_init__(self):
        f, n = self.dims
        if len(self.payload) != f * n * n:
            raise ProtocolError(
                f"payload length {len(self.payload)} does not match dims {self.dims}"
            )


def pair_key(a: str, b: str) -> tuple[str, str]:
    """Canonical unordered-pair key (lexicographically sorted ids)."""
    if a == b:
        raise ConfigurationError(f"a pair needs two distinct clients, got {a!r} twice")
    return (a, b) if a < b else (b, a)


def provision_pairwise_seeds(client_ids: Sequence[str], master_seed: int) -> dict[tuple[str, str], PairwiseSeed]:
    """Deterministically derive one independent seed per unordered pair.

    Stands in for a key-agreement phase: the test harness and the federation
    driver hand every client the seeds for its pairs out-of-band.
    """
    ids = sorted(set(client_ids))
    seeds = {}
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            material = f"pairseed|{master_seed}|{a}|{b}".encode()
            seeds[(a, b)] = PairwiseSeed(a, b, hashlib.sha256(material).digest())
    return seeds


def derive_mask(seed: bytes, length: int, ring: RingConfig) -> list[int]:
    """Expand a seed into ``length`` pseudorandom ring elements.

    Deterministic: the same seed always yields the same vector.  Eight bytes
    are drawn per element, so reduction modulo any power-of-two ring up to
    2^64 stays exactly uniform.
    """
    if length < 1:
        raise ConfigurationError(f"mask length must be >= 1, got {length}")
    stream = hashlib.shake_256(seed).digest(8 * length)
    low = ring.modulus - 1
    return [int.from_bytes(stream[8 * i : 8 * i + 8], "big") & low for i in range(length)]


def flatten_counts(counts: TransitionCounts) -> list[int]:
    """Row-major flattening of (features, n, n) counts into plain ints."""
    return [int(x) for x in counts.counts.reshape(-1)]


def mask_counts(
    counts: TransitionCounts,
    self_id: str,
    all_client_ids: Iterable[str],
    seeds: Mapping[tuple[str, str], PairwiseSeed],
    ring: RingConfig = RingConfig(),
) -> MaskedCountVector:
    """Lift counts into the ring and apply all pairwise masks for this client.

    The mask for pair (a, b) is added by a and subtracted by b, so the masks
    cancel pairwise in the coordinator's sum.  A missing seed for any pair
    containing ``self_id`` is a protocol error (the round must abort).
    """
    peers = sorted(set(all_client_ids))
    if self_id not in peers:
        raise ProtocolError(f"client {self_id!r} is not in the registered client set")
    m = ring.modulus
    payload = [v % m for v in flatten_counts(counts)]
    for peer in peers:
        if peer == self_id:
            continue
        key = pair_key(self_id, peer)
        if key not in seeds:
            raise ProtocolError(f"missing pairwise seed for {key}")
        mask = derive_mask(seeds[key].seed, len(payload), ring)
        if self_id < peer:
            payload = [(v + w) % m for v, w in zip(payload, mask)]
        else:
            payload = [(v - w) % m for v, w in zip(payload, mask)]
    f, n = counts.counts.shape[0], counts.n_bins
    return MaskedCountVector(self_id, (f, n), tuple(payload))


def aggregate(
    vectors: Sequence[MaskedCountVector],
    ring: RingConfig,
    client_ids: Sequence[str],
    feature_names: Sequence[str],
) -> TransitionCounts:
    """Sum masked uploads and un-flatten the reconstructed counts.

    Requires exactly one upload per registered client with matching
    dimensions.  Any reconstructed entry at or above modulus/2 is rejected as
    suspected wraparound (the ring was too small for the true sum).
    """
    expected = sorted(set(client_ids))
    got = sorted(v.client_id for v in vectors)
    if got != expected:
        raise ProtocolError(f"uploads {got} do not match registered clients {expected}")
    dims = {v.dims for v in vectors}
    if len(dims) != 1:
        raise ProtocolError(f"uploads disagree on dimensions: {sorted(dims)}")
    (f, n) = dims.pop()
    if f != len(feature_names):
        raise ProtocolError(f"uploads carry {f} features, coordinator expects {len(feature_names)}")
    m = ring.modulus
    total = [0] * (f * n * n)
    for v in vectors:
        for i, x in enumerate(v.payload):
            total[i] = (total[i] + x) % m
    guard = m // 2
    for i, x in enumerate(total):
        if x >= guard:
            raise ProtocolError(
                f"reconstructed entry {x} at index {i} exceeds modulus/2: suspected wraparound"
            )
    arr = np.array(total, dtype=np.int64).reshape(f, n, n)
    return TransitionCounts(arr, tuple(feature_names))


def vector_to_wire(vector: MaskedCountVector, round_id: int = 1) -> dict:
    """JSON-safe message for one upload; ring elements travel as decimal strings."""
    return {
        "round": round_id,
        "client_id": vector.client_id,
        "dims": {"features": vector.dims[0], "n": vector.dims[1]},
        "payload": [str(x) for x in vector.payload],
    }


def vector_from_wire(message: Mapping) -> tuple[int, MaskedCountVector]:
    dims = (int(message["dims"]["features"]), int(message["dims"]["n"]))
    payload = tuple(int(x) for x in message["payload"])
    return int(message["round"]), MaskedCountVector(str(message["client_id"]), dims, payload)
