"""Single-round federation driver: local counting, masked upload, aggregation,
matrix broadcast, local imputation.

Clients run as per-client state machines whose phases only move forward
(INIT -> COUNTED -> MASKED_SENT -> MATRIX_RECEIVED -> IMPUTED); the
coordinator processes uploads in deterministic (sorted client id) order.
Every message is logged to a transcript holding payload digests only, so
tests can verify the coordinator never saw plaintext counts.  Any client
failure before aggregation aborts the round; there is no partial aggregate.

Transport is an in-process message log behind a small recording interface;
the state machines never talk to each other directly, so the same flow could
later run over sockets.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Sequence

from .core import (
    BinningScheme,
    Dataset,
    TransitionCounts,
    TransitionMatrix,
    load_binning_scheme,
    load_dataset,
)
from .errors import ConfigurationError, ProtocolError, RoundAborted
from .imputer import RecordImputationInfo, impute_dataset
from .secure_agg import (
    MaskedCountVector,
    RingConfig,
    aggregate,
    mask_counts,
    provision_pairwise_seeds,
    vector_to_wire,
)
from .transitions import LagPolicy, count_transitions, normalize

__all__ = [
    "ClientPhase",
    "ClientConfig",
    "ClientState",
    "RoundTranscript",
    "TranscriptEntry",
    "FederationResult",
    "LmiResult",
    "run_federation",
    "run_lmi",
    "canonical_digest",
]

COORDINATOR = "coordinator"


class ClientPhase(IntEnum):
    INIT = 0
    COUNTED = 1
    MASKED_SENT = 2
    MATRIX_RECEIVED = 3
    IMPUTED = 4


@dataclass(frozen=True)
class ClientConfig:
    """One simulated client: its id, local dataset, and native sampling interval."""

    client_id: str
    dataset: Dataset
    interval_hours: int = 1

    def __post_init__(self):
        if self.interval_hours < 1:
            raise ProtocolError(f"interval_hours must be >= 1, got {self.interval_hours}")


@dataclass
class ClientState:
    """Mutable per-client protocol state; phases advance strictly forward."""

    client_id: str
    native_interval_hours: int
    phase: ClientPhase = ClientPhase.INIT

    def advance(self, new_phase: ClientPhase) -> None:
        if new_phase != self.phase + 1:
            raise ProtocolError(
                f"client {self.client_id!r} cannot move {self.phase.name} -> {new_phase.name}"
            )
        self.phase = new_phase


def canonical_digest(payload) -> str:
    """sha256 over the canonical JSON encoding of a message payload."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class TranscriptEntry:
    kind: str  # register | masked_upload | aggregate_done | matrix_broadcast
    sender: str
    recipient: str
    digest: str


@dataclass
class RoundTranscript:
    """Ordered log of protocol messages; payloads appear as digests only."""

    round_id: int = 1
    entries: list[TranscriptEntry] = field(default_factory=list)

    def record(self, kind: str, sender: str, recipient: str, payload) -> None:
        self.entries.append(TranscriptEntry(kind, sender, recipient, canonical_digest(payload)))

    def digests(self, kind: str) -> list[str]:
        return [e.digest for e in self.entries if e.kind == kind]

    def to_jsonl(self) -> str:
        lines = []
        for e in self.entries:
            lines.append(
                json.dumps(
                    {
                        "round": self.round_id,
                        "type": e.kind,
                        "sender": e.sender,
                        "recipient": e.recipient,
                        "digest": e.digest,
                    },
                    sort_keys=True,
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())


@dataclass
class FederationResult:
    matrix: TransitionMatrix
    counts: TransitionCounts
    imputed: dict[str, Dataset]
    infos: dict[str, list[RecordImputationInfo]]
    transcript: RoundTranscript


def run_federation(
    clients: Sequence[ClientConfig],
    scheme: BinningScheme,
    ring: RingConfig = RingConfig(),
    smoothing: float = 0.0,
    mask_seed: int = 0,
    lag: LagPolicy = LagPolicy(),
    workers: int = 1,
) -> FederationResult:
    """Run one full aggregation round and impute every client's dataset.

    The returned matrix equals normalize(sum of all clients' counts), but the
    sum is produced exclusively from masked uploads; the transcript never
    contains plaintext counts.  Raises RoundAborted if any client fails
    before aggregation completes.
    """
    if len(clients) < 2:
        raise ProtocolError(f"federation needs >= 2 clients, got {len(clients)}")
    ids = [c.client_id for c in clients]
    if len(set(ids)) != len(ids):
        raise ProtocolError(f"duplicate client ids: {sorted(ids)}")
    order = sorted(clients, key=lambda c: c.client_id)
    states = {c.client_id: ClientState(c.client_id, c.interval_hours) for c in order}
    seeds = provision_pairwise_seeds(ids, mask_seed)
    transcript = RoundTranscript()

    for cfg in order:
        transcript.record("register", cfg.client_id, COORDINATOR, {"client_id": cfg.client_id})

    uploads: list[MaskedCountVector] = []
    for cfg in order:
        state = states[cfg.client_id]
        try:
            counts = count_transitions(cfg.dataset, scheme, lag)
            state.advance(ClientPhase.COUNTED)
            vector = mask_counts(counts, cfg.client_id, ids, seeds, ring)
            state.advance(ClientPhase.MASKED_SENT)
        except Exception as exc:
            raise RoundAborted(
                f"round aborted: client {cfg.client_id!r} failed before upload: {exc}"
            ) from exc
        transcript.record("masked_upload", cfg.client_id, COORDINATOR, vector_to_wire(vector))
        uploads.append(vector)

    total = aggregate(uploads, ring, ids, scheme.feature_names)
    transcript.record(
        "aggregate_done",
        COORDINATOR,
        COORDINATOR,
        {"clients": len(ids), "total_transitions": total.total_transitions},
    )
    matrix = normalize(total, smoothing)
    matrix_payload = {
        "features": [
            {"name": name, "rows": [[float(x) for x in row] for row in grid]}
            for name, grid in zip(matrix.feature_names, matrix.probs)
        ]
    }

    imputed: dict[str, Dataset] = {}
    infos: dict[str, list[RecordImputationInfo]] = {}
    for cfg in order:
        state = states[cfg.client_id]
        transcript.record("matrix_broadcast", COORDINATOR, cfg.client_id, matrix_payload)
        state.advance(ClientPhase.MATRIX_RECEIVED)
        out, rec_infos = impute_dataset(cfg.dataset, matrix, scheme, workers=workers)
        imputed[cfg.client_id] = out
        infos[cfg.client_id] = rec_infos
        state.advance(ClientPhase.IMPUTED)

    return FederationResult(matrix, total, imputed, infos, transcript)


@dataclass
class LmiResult:
    """Outcome of local-matrix imputation for one client.

    ``status`` is 'ok' with the imputed dataset and local matrix, or
    'infeasible' when the client's native interval is coarser than the grid
    (it then has no grid-adjacent observed pairs to estimate a matrix from).
    """

    status: str  # ok | infeasible
    dataset: Dataset | None = None
    matrix: TransitionMatrix | None = None
    infos: list[RecordImputationInfo] | None = None
    reason: str = ""


def run_lmi(
    config: ClientConfig,
    scheme: BinningScheme,
    smoothing: float = 0.0,
    lag: LagPolicy = LagPolicy(),
    workers: int = 1,
) -> LmiResult:
    """Impute a client's dataset with its own local transition matrix only."""
    if config.interval_hours > 1:
        return LmiResult(
            status="infeasible",
            reason=(
                f"native interval {config.interval_hours}h is coarser than the grid; "
                "no grid-adjacent observed pairs exist for local matrix estimation"
            ),
        )
    counts = count_transitions(config.dataset, scheme, lag)
    matrix = normalize(counts, smoothing)
    out, infos = impute_dataset(config.dataset, matrix, scheme, workers=workers)
    return LmiResult(status="ok", dataset=out, matrix=matrix, infos=infos)


def load_federation_config(path):
    """Materialize a federation config JSON into ready-to-run pieces.

    Expected document shape::

        {"clients": [{"id", "data_path", "interval_hours"}],
         "binning_path", "ring_modulus", "smoothing", "seed"}

    Relative paths resolve against the config file's directory.  Returns
    ``(clients, scheme, ring, smoothing, seed)``.
    """
    with open(path) as fh:
        doc = json.load(fh)
    for key in ("clients", "binning_path"):
        if key not in doc:
            raise ConfigurationError(f"federation config missing {key!r}")
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    scheme = load_binning_scheme(resolve(doc["binning_path"]))
    if not isinstance(doc["clients"], list) or not doc["clients"]:
        raise ConfigurationError("federation config needs a non-empty clients list")
    clients = []
    for entry in doc["clients"]:
        for key in ("id", "data_path"):
            if key not in entry:
                raise ConfigurationError(f"client entry missing {key!r}: {entry}")
        dataset = load_dataset(resolve(entry["data_path"]))
        clients.append(
            ClientConfig(str(entry["id"]), dataset, int(entry.get("interval_hours", 1)))
        )
    if "ring_modulus" in doc:
        ring = RingConfig(int(doc["ring_modulus"]))
    else:
        ring = RingConfig()
    return clients, scheme, ring, float(doc.get("smoothing", 0.0)), int(doc.get("seed", 0))
