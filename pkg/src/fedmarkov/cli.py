"""Command-line interface.

Subcommands cover the full pipeline: synthesize client datasets, count
transitions, run the federated round, run the local baselines, score imputed
output against ground truth, and drive the end-to-end scenario experiment.

Exit codes: 0 success, 2 usage, 3 data/config/value errors, 4 protocol
errors.  Failures print one machine-parsable line to stderr:
``error:<category>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .core import (
    build_binning_scheme,
    load_binning_scheme,
    load_dataset,
    load_matrix,
    save_binning_scheme,
    save_counts,
    save_dataset,
    save_matrix,
)
from .datagen import generate_client_data, make_generator_spec
from .errors import (
    ConfigurationError,
    DatasetError,
    FedMarkovError,
    InvalidValueError,
    ProtocolError,
)
from .evaluation import IRREGULAR, REGULAR, run_experiment, score
from .federation import load_federation_config, run_federation, run_lmi
from .imputer import impute_dataset, impute_local_mean, infos_to_sidecar
from .secure_agg import RingConfig
from .transitions import count_transitions

__all__ = ["main", "build_parser"]


def _add_gen_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--bins", type=int, default=10, help="bins per feature")
    p.add_argument("--features", type=int, default=5, help="feature count")
    p.add_argument("--windows", type=int, default=6, help="1h windows per stay")
    p.add_argument("--subjects", type=int, default=200, help="subjects per client")
    p.add_argument("--mcar", type=float, default=0.2, help="random-drop rate")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedmarkov",
        description="Federated Markov imputation for binned clinical time series.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize one client's dataset")
    _add_gen_args(p)
    p.add_argument("--interval", type=int, default=1, choices=(1, 2, 3), help="native sampling interval (hours)")
    p.add_argument("--client-index", type=int, default=0, help="client stream index")
    p.add_argument("--out", required=True, help="observed dataset CSV")
    p.add_argument("--truth-out", help="fully-observed ground-truth CSV")
    p.add_argument("--binning-out", help="binning scheme JSON")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("count", help="count lag-1 transitions in a dataset")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--binning", required=True, help="binning scheme JSON")
    p.add_argument("--out", required=True, help="counts JSON")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("federate", help="run one secure-aggregation round from a config")
    p.add_argument("--config", required=True, help="federation config JSON")
    p.add_argument("--out", required=True, help="global matrix JSON")
    p.add_argument("--imputed-dir", help="directory for per-client imputed CSVs")
    p.add_argument("--transcript", help="coordinator transcript JSONL")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_federate)

    p = sub.add_parser("lmi", help="local-matrix imputation for one client")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--binning", required=True, help="binning scheme JSON")
    p.add_argument("--interval", type=int, default=1, help="client's native interval (hours)")
    p.add_argument("--smoothing", type=float, default=0.0)
    p.add_argument("--out", help="imputed dataset CSV")
    p.add_argument("--matrix-out", help="local matrix JSON")
    p.set_defaults(func=cmd_lmi)

    p = sub.add_parser("mean-impute", help="feature-mean baseline imputation")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--binning", required=True, help="binning scheme JSON")
    p.add_argument("--out", required=True, help="imputed dataset CSV")
    p.set_defaults(func=cmd_mean_impute)

    p = sub.add_parser("impute", help="impute a dataset with a saved matrix")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--binning", required=True, help="binning scheme JSON")
    p.add_argument("--matrix", required=True, help="transition matrix JSON")
    p.add_argument("--out", required=True, help="imputed dataset CSV")
    p.add_argument("--report", help="imputation sidecar JSON")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_impute)

    p = sub.add_parser("evaluate", help="score an imputed dataset against ground truth")
    p.add_argument("--original", required=True, help="dataset CSV with missing cells")
    p.add_argument("--imputed", required=True, help="imputed dataset CSV")
    p.add_argument("--truth", required=True, help="fully-observed CSV")
    p.add_argument("--binning", required=True, help="binning scheme JSON")
    p.add_argument("--out", help="metrics JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="run the regular/irregular method comparison")
    _add_gen_args(p)
    p.add_argument("--scenario", choices=(REGULAR, IRREGULAR), default=IRREGULAR)
    p.add_argument("--clients", type=int, default=7)
    p.add_argument("--smoothing", type=float, default=0.0)
    p.add_argument("--ring-bits", type=int, default=61)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="results CSV")
    p.set_defaults(func=cmd_experiment)

    return parser


def cmd_generate(args) -> int:
    spec = make_generator_spec(
        feature_names=tuple(f"f{i}" for i in range(args.features)),
        bins=args.bins,
        windows=args.windows,
        subjects=args.subjects,
        mcar=args.mcar,
        seed=args.seed,
    )
    observed, truth = generate_client_data(spec, args.interval, client_index=args.client_index)
    save_dataset(observed, args.out)
    if args.truth_out:
        save_dataset(truth, args.truth_out)
    if args.binning_out:
        save_binning_scheme(spec.scheme, args.binning_out)
    print(f"wrote {len(observed)} subjects x {args.features} features x {args.windows} windows to {args.out}")
    return 0


def cmd_count(args) -> int:
    scheme = load_binning_scheme(args.binning)
    dataset = load_dataset(args.data)
    counts = count_transitions(dataset, scheme)
    save_counts(counts, args.out)
    print(f"counted {counts.total_transitions} transitions into {args.out}")
    return 0


def cmd_federate(args) -> int:
    clients, scheme, ring, smoothing, seed = load_federation_config(args.config)
    result = run_federation(
        clients, scheme, ring=ring, smoothing=smoothing, mask_seed=seed, workers=args.workers
    )
    save_matrix(result.matrix, args.out)
    if args.imputed_dir:
        import os

        os.makedirs(args.imputed_dir, exist_ok=True)
        for cid, ds in result.imputed.items():
            save_dataset(ds, os.path.join(args.imputed_dir, f"{cid}_imputed.csv"))
    if args.transcript:
        result.transcript.write(args.transcript)
    print(
        f"aggregated {result.counts.total_transitions} transitions from "
        f"{len(clients)} clients into {args.out}"
    )
    return 0


def cmd_lmi(args) -> int:
    scheme = load_binning_scheme(args.binning)
    dataset = load_dataset(args.data)
    from .federation import ClientConfig

    result = run_lmi(ClientConfig("local", dataset, args.interval), scheme, smoothing=args.smoothing)
    if result.status == "infeasible":
        print(f"status:infeasible: {result.reason}")
        return 0
    if args.out:
        save_dataset(result.dataset, args.out)
    if args.matrix_out:
        save_matrix(result.matrix, args.matrix_out)
    print(f"status:ok: imputed {sum(i.imputed_cells for i in result.infos)} cells")
    return 0


def cmd_mean_impute(args) -> int:
    scheme = load_binning_scheme(args.binning)
    dataset = load_dataset(args.data)
    imputed = impute_local_mean(dataset, dataset, scheme)
    save_dataset(imputed, args.out)
    print(f"wrote mean-imputed dataset to {args.out}")
    return 0


def cmd_impute(args) -> int:
    scheme = load_binning_scheme(args.binning)
    dataset = load_dataset(args.data)
    matrix = load_matrix(args.matrix)
    imputed, infos = impute_dataset(dataset, matrix, scheme, workers=args.workers)
    save_dataset(imputed, args.out)
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(infos_to_sidecar(infos), fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"imputed {sum(i.imputed_cells for i in infos)} cells into {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    scheme = load_binning_scheme(args.binning)
    original = load_dataset(args.original)
    imputed = load_dataset(args.imputed)
    truth = load_dataset(args.truth)
    result = score(original, imputed, truth, scheme)
    payload = {
        "imputed_cells": result.imputed_cell_count,
        "bin_accuracy": result.bin_accuracy,
        "value_rmse": result.value_rmse,
    }
    for key in ("imputed_cells", "bin_accuracy", "value_rmse"):
        print(f"{key}={payload[key]}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_experiment(args) -> int:
    spec = make_generator_spec(
        feature_names=tuple(f"f{i}" for i in range(args.features)),
        bins=args.bins,
        windows=args.windows,
        subjects=args.subjects,
        mcar=args.mcar,
        seed=args.seed,
    )
    result = run_experiment(
        args.scenario,
        spec,
        args.clients,
        seed=args.seed,
        smoothing=args.smoothing,
        ring=RingConfig(modulus=1 << args.ring_bits),
        workers=args.workers,
    )
    sys.stdout.write(result.text_table())
    if args.out:
        result.write_csv(args.out)
        print(f"wrote {args.out}")
    return 0


_CATEGORY = (
    (ProtocolError, "protocol", 4),
    (ConfigurationError, "config", 3),
    (DatasetError, "data", 3),
    (InvalidValueError, "value", 3),
    (FedMarkovError, "error", 3),
)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FedMarkovError as exc:
        for klass, category, code in _CATEGORY:
            if isinstance(exc, klass):
                print(f"error:{category}: {exc}", file=sys.stderr)
                return code
        raise  # unreachable: FedMarkovError is the last entry
    except OSError as exc:
        print(f"error:data: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
