"""Federated Markov imputation for binned clinical time series.

Clients estimate per-feature bin-transition counts locally, upload them under
pairwise additive masks so the coordinator only ever sees the exact sum, and
receive back a shared row-stochastic transition model used to fill missing
windows by most-probable-path decoding.
"""

__version__ = "0.1.0"

from .core import (
    MISSING,
    BinningScheme,
    Dataset,
    TimeSeriesRecord,
    TransitionCounts,
    TransitionMatrix,
    build_binning_scheme,
    load_binning_scheme,
    load_counts,
    load_dataset,
    load_matrix,
    save_binning_scheme,
    save_counts,
    save_dataset,
    save_matrix,
)
from .datagen import GeneratorSpec, generate_client_data, make_generator_spec
from .errors import (
    ConfigurationError,
    DatasetError,
    FedMarkovError,
    InvalidValueError,
    ProtocolError,
    RoundAborted,
)
from .evaluation import (
    IRREGULAR,
    REGULAR,
    ExperimentResult,
    ImputationReport,
    ScoreResult,
    matrix_row_l1,
    run_experiment,
    score,
)
from .federation import (
    ClientConfig,
    FederationResult,
    LmiResult,
    load_federation_config,
    run_federation,
    run_lmi,
)
from .imputer import impute_dataset, impute_gap, impute_local_mean, impute_record
from .secure_agg import (
    MaskedCountVector,
    RingConfig,
    aggregate,
    derive_mask,
    mask_counts,
    provision_pairwise_seeds,
)
from .transitions import LagPolicy, count_transitions, normalize

__all__ = [
    "__version__",
    "MISSING",
    "BinningScheme",
    "Dataset",
    "TimeSeriesRecord",
    "TransitionCounts",
    "TransitionMatrix",
    "build_binning_scheme",
    "load_binning_scheme",
    "load_counts",
    "load_dataset",
    "load_matrix",
    "save_binning_scheme",
    "save_counts",
    "save_dataset",
    "save_matrix",
    "GeneratorSpec",
    "generate_client_data",
    "make_generator_spec",
    "FedMarkovError",
    "ConfigurationError",
    "DatasetError",
    "InvalidValueError",
    "ProtocolError",
    "RoundAborted",
    "REGULAR",
    "IRREGULAR",
    "ExperimentResult",
    "ImputationReport",
    "ScoreResult",
    "matrix_row_l1",
    "run_experiment",
    "score",
    "ClientConfig",
    "FederationResult",
    "LmiResult",
    "load_federation_config",
    "run_federation",
    "run_lmi",
    "impute_dataset",
    "impute_gap",
    "impute_local_mean",
    "impute_record",
    "MaskedCountVector",
    "RingConfig",
    "aggregate",
    "derive_mask",
    "mask_counts",
    "provision_pairwise_seeds",
    "LagPolicy",
    "count_transitions",
    "normalize",
]
