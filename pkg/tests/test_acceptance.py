"""Acceptance gate: every release-blocking property in one place.

Each test prints exactly one verdict line::

    [ACCEPTANCE k] <name>: PASS|FAIL

Run ``pytest tests/test_acceptance.py -v -s`` to see all eight lines.  The
verdict is printed before the assertion so a FAIL line always appears next
to its pytest failure detail.
"""

import hashlib
import time

import numpy as np

from conftest import make_scheme, random_stochastic, random_stochastic_sparse
from test_federation import partitioned_clients
from test_imputer import enumerate_best_path, random_dyadic_stochastic

from fedmarkov.cli import main as cli_main
from fedmarkov.core import TransitionCounts
from fedmarkov.datagen import generate_client_data, make_generator_spec
from fedmarkov.evaluation import (
    IRREGULAR,
    METHOD_FMI,
    METHOD_LMI,
    METHOD_LOCAL_MEAN,
    REGULAR,
    STATUS_INFEASIBLE,
    matrix_row_l1,
    run_experiment,
)
from fedmarkov.federation import ClientConfig, canonical_digest, run_federation
from fedmarkov.imputer import Gap, impute_bidirectional, impute_gap
from fedmarkov.secure_agg import (
    MaskedCountVector,
    RingConfig,
    aggregate,
    flatten_counts,
    mask_counts,
    provision_pairwise_seeds,
    vector_to_wire,
)
from fedmarkov.transitions import count_transitions, normalize


def verdict(k: int, name: str, ok: bool) -> None:
    print(f"\n[ACCEPTANCE {k}] {name}: {'PASS' if ok else 'FAIL'}")


def test_acceptance_1_secure_aggregation_exactness():
    rng = np.random.default_rng(101)
    ring = RingConfig()
    start = time.perf_counter()
    trials = 0
    failures = []
    for repeat in range(4):
        for k in range(2, 8):
            for n in range(2, 7):
                features = int(rng.integers(1, 3))
                names = tuple(f"f{i}" for i in range(features))
                ids = [f"c{i}" for i in range(k)]
                per_client = [
                    TransitionCounts(rng.integers(0, 50, size=(features, n, n)).astype(np.int64), names)
                    for _ in ids
                ]
                seeds = provision_pairwise_seeds(ids, master_seed=trials)
                uploads = [
                    mask_counts(per_client[i], cid, ids, seeds, ring) for i, cid in enumerate(ids)
                ]
                got = aggregate(uploads, ring, ids, names)
                want = sum(c.counts for c in per_client)
                if not np.array_equal(got.counts, want):
                    failures.append((k, n, trials))
                trials += 1
    elapsed = time.perf_counter() - start
    ok = not failures and trials >= 100 and elapsed < 5.0
    verdict(1, "secure aggregation exactness", ok)
    assert not failures, f"sum mismatches at (k, n, trial): {failures[:5]}"
    assert trials >= 100
    assert elapsed < 5.0, f"took {elapsed:.2f}s, budget 5s"


def test_acceptance_2_federated_equals_centralized():
    rng = np.random.default_rng(202)
    scheme = make_scheme(features=2, bins=4)
    start = time.perf_counter()
    count_mismatches = 0
    max_prob_diff = 0.0
    partitions = 20
    for trial in range(partitions):
        k = int(rng.integers(2, 6))
        pool, clients = partitioned_clients(rng, scheme, k)
        fed = run_federation(clients, scheme, mask_seed=trial)
        central = count_transitions(pool, scheme)
        if not np.array_equal(fed.counts.counts, central.counts):
            count_mismatches += 1
        diff = float(np.abs(fed.matrix.probs - normalize(central).probs).max())
        max_prob_diff = max(max_prob_diff, diff)
    elapsed = time.perf_counter() - start
    ok = count_mismatches == 0 and max_prob_diff <= 1e-12 and elapsed < 10.0
    verdict(2, "federated equals centralized", ok)
    assert count_mismatches == 0
    assert max_prob_diff <= 1e-12, f"normalized matrices differ by {max_prob_diff}"
    assert elapsed < 10.0, f"took {elapsed:.2f}s, budget 10s"


def test_acceptance_3_bidirectional_argmax_oracle():
    rng = np.random.default_rng(303)
    matrices = 0
    mismatches = []
    for n in range(2, 7):
        for i in range(21):
            T = (random_stochastic_sparse if i % 3 == 2 else random_stochastic)(rng, n)
            for left in range(n):
                for right in range(n):
                    best, arg = -1.0, -1
                    for j in range(n):
                        s = float(T[left, j]) * float(T[j, right])
                        if s > best:
                            best, arg = s, j
                    got = impute_bidirectional(T, left, right)
                    if got != arg:
                        mismatches.append((n, matrices, left, right, got, arg))
            matrices += 1
    ok = not mismatches and matrices >= 100
    verdict(3, "bidirectional argmax oracle", ok)
    assert matrices >= 100
    assert not mismatches, f"first mismatches: {mismatches[:5]}"


def test_acceptance_4_gap_decoder_enumeration_oracle():
    start = time.perf_counter()
    matrices = 0
    mismatches = []
    for n in range(2, 6):
        rng = np.random.default_rng(404 + n)
        for _ in range(30):
            T = random_dyadic_stochastic(rng, n)
            for length in range(1, 4):
                anchor_pairs = [(l, r) for l in range(n) for r in range(n)]
                anchor_pairs += [(l, None) for l in range(n)]
                anchor_pairs += [(None, r) for r in range(n)]
                for left, right in anchor_pairs:
                    gap = Gap(0, 2, 2 + length - 1, left, right)
                    got = [int(b) for b in impute_gap(T, gap)]
                    # the enumeration helper spells a missing anchor as -1
                    want, _ = enumerate_best_path(
                        T, -1 if left is None else left, -1 if right is None else right, length
                    )
                    if got != want:
                        mismatches.append((n, matrices, length, left, right, got, want))
            matrices += 1
    elapsed = time.perf_counter() - start
    ok = not mismatches and matrices >= 100 and elapsed < 30.0
    verdict(4, "gap decoder enumeration oracle", ok)
    assert matrices >= 100
    assert not mismatches, f"first mismatches: {mismatches[:5]}"
    assert elapsed < 30.0, f"took {elapsed:.2f}s, budget 30s"


def test_acceptance_5_transition_matrix_recovery():
    sizes = (1_000, 10_000, 100_000)
    k_clients, windows = 3, 6
    errors = {s: [] for s in sizes}
    for seed in range(5):
        for total in sizes:
            subjects = max(2, round(total / (k_clients * (windows - 1))))
            spec = make_generator_spec(
                feature_names=("x",), bins=10, windows=windows,
                subjects=subjects, mcar=0.0, seed=seed,
            )
            configs = []
            for i in range(k_clients):
                observed, _ = generate_client_data(spec, 1, client_index=i, client_id=f"c{i}")
                configs.append(ClientConfig(f"c{i}", observed, 1))
            fed = run_federation(configs, spec.scheme, mask_seed=seed)
            errors[total].append(matrix_row_l1(fed.matrix, spec.transition))
    medians = [float(np.median(errors[s])) for s in sizes]
    worst_at_top = max(errors[sizes[-1]])
    ok = worst_at_top < 0.05 and medians[0] > medians[1] > medians[2]
    verdict(5, "transition matrix recovery", ok)
    assert worst_at_top < 0.05, f"per-seed errors at 1e5 transitions: {errors[sizes[-1]]}"
    assert medians[0] > medians[1] > medians[2], f"medians not decreasing: {medians}"


def test_acceptance_6_scenario_findings():
    start = time.perf_counter()
    margin_failures = []
    feasibility_failures = []
    degradation_failures = []
    for seed in range(5):
        spec = make_generator_spec(
            feature_names=("f0", "f1", "f2"), bins=10, windows=6,
            subjects=200, mcar=0.2, seed=seed,
        )
        irregular = run_experiment(IRREGULAR, spec, 7, seed=seed)
        regular = run_experiment(REGULAR, spec, 7, seed=seed)

        margin = irregular.mean_metric(METHOD_FMI) - irregular.mean_metric(METHOD_LOCAL_MEAN)
        if not margin > 0:
            margin_failures.append((seed, margin))

        infeasible = {
            c for c in irregular.client_ids
            if irregular.client_report(c, METHOD_LMI).status == STATUS_INFEASIBLE
        }
        coarse = {c for c in irregular.client_ids if irregular.intervals[c] > 1}
        if infeasible != coarse:
            feasibility_failures.append((seed, sorted(infeasible), sorted(coarse)))

        def mean_degradation(interval):
            cids = [c for c in irregular.client_ids if irregular.intervals[c] == interval]
            drops = [
                regular.client_report(c, METHOD_FMI).bin_accuracy
                - irregular.client_report(c, METHOD_FMI).bin_accuracy
                for c in cids
            ]
            return sum(drops) / len(drops)

        deg_3h, deg_1h = mean_degradation(3), mean_degradation(1)
        if not deg_3h > deg_1h:
            degradation_failures.append((seed, deg_3h, deg_1h))
    elapsed = time.perf_counter() - start
    ok = (
        not margin_failures and not feasibility_failures
        and not degradation_failures and elapsed < 120.0
    )
    verdict(6, "scenario findings", ok)
    assert not margin_failures, f"fmi did not beat local mean: {margin_failures}"
    assert not feasibility_failures, f"lmi feasibility wrong: {feasibility_failures}"
    assert not degradation_failures, f"3h clients did not degrade more: {degradation_failures}"
    assert elapsed < 120.0, f"took {elapsed:.2f}s, budget 120s"


def test_acceptance_7_privacy_transcript():
    rng = np.random.default_rng(707)
    scheme = make_scheme(features=2, bins=4)
    collisions = []
    for run in range(20):
        _, clients = partitioned_clients(rng, scheme, 3)
        plaintext = set()
        for cfg in clients:
            counts = count_transitions(cfg.dataset, scheme)
            assert counts.total_transitions > 0
            vec = MaskedCountVector(
                cfg.client_id, (counts.counts.shape[0], counts.n_bins), tuple(flatten_counts(counts))
            )
            plaintext.add(canonical_digest(vector_to_wire(vec)))
        result = run_federation(clients, scheme, mask_seed=run)
        visible = {entry.digest for entry in result.transcript.entries}
        if visible & plaintext:
            collisions.append(run)

    _, clients = partitioned_clients(rng, scheme, 4)
    first = run_federation(clients, scheme, mask_seed=111)
    second = run_federation(clients, scheme, mask_seed=222)
    uploads_first = first.transcript.digests("masked_upload")
    uploads_second = second.transcript.digests("masked_upload")
    stale_uploads = [i for i, (a, b) in enumerate(zip(uploads_first, uploads_second)) if a == b]
    matrix_identical = first.matrix.probs.tobytes() == second.matrix.probs.tobytes()

    ok = not collisions and not stale_uploads and matrix_identical
    verdict(7, "privacy transcript", ok)
    assert not collisions, f"plaintext digest visible to coordinator in runs: {collisions}"
    assert not stale_uploads, f"uploads unchanged after reseeding at positions: {stale_uploads}"
    assert matrix_identical, "reseeding the masks changed the aggregated matrix"


def test_acceptance_8_experiment_determinism(tmp_path, capsys):
    flags = [
        "experiment", "--scenario", "irregular", "--clients", "5", "--seed", "31",
        "--bins", "6", "--features", "2", "--windows", "6", "--subjects", "40",
        "--mcar", "0.2",
    ]
    digests = []
    tables = []
    for name, extra in (("first", []), ("second", []), ("parallel", ["--workers", "3"])):
        out = tmp_path / f"{name}.csv"
        code = cli_main(flags + extra + ["--out", str(out)])
        tables.append(capsys.readouterr().out)
        assert code == 0
        digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
    # the trailer line names each --out path; the table above it must match
    same_tables = tables[0].splitlines()[:5] == tables[2].splitlines()[:5]
    ok = len(set(digests)) == 1 and same_tables
    with capsys.disabled():
        verdict(8, "experiment determinism", ok)
    assert digests[0] == digests[1], "identical flags produced different report files"
    assert digests[0] == digests[2], "worker count changed the report file"
    assert tables[0].splitlines()[:5] == tables[2].splitlines()[:5]


if __name__ == "__main__":
    import sys

    import pytest

    sys.exit(pytest.main([__file__, "-v", "-s"]))
