import numpy as np
import pytest

from fedmarkov.datagen import GeneratorSpec, generate_client_data, make_generator_spec
from fedmarkov.errors import ConfigurationError
from fedmarkov.evaluation import matrix_row_l1
from fedmarkov.transitions import count_transitions, normalize


def small_spec(**kw):
    defaults = dict(feature_names=("a", "b"), bins=5, windows=6, subjects=30, mcar=0.2, seed=3)
    defaults.update(kw)
    return make_generator_spec(**defaults)


class TestMakeGeneratorSpec:
    def test_chain_shapes_and_stochasticity(self):
        spec = small_spec()
        assert spec.transition.shape == (2, 5, 5)
        assert spec.initial.shape == (2, 5)
        assert np.allclose(spec.transition.sum(axis=2), 1.0, atol=1e-12)
        assert np.allclose(spec.initial.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(spec.transition >= 0)

    def test_band_concentrates_near_diagonal(self):
        spec = small_spec(bins=10, band_sigma=1.0, concentration=60.0)
        t = spec.transition[0]
        near = sum(t[i, max(0, i - 1) : i + 2].sum() for i in range(10)) / 10
        assert near > 0.7  # most mass within one bin of the diagonal

    def test_deterministic_in_seed(self):
        a, b = small_spec(seed=5), small_spec(seed=5)
        c = small_spec(seed=6)
        assert np.array_equal(a.transition, b.transition)
        assert np.array_equal(a.initial, b.initial)
        assert not np.array_equal(a.transition, c.transition)

    def test_validation(self):
        spec = small_spec()
        with pytest.raises(ConfigurationError):
            GeneratorSpec(spec.scheme, spec.transition * 2, spec.initial)
        with pytest.raises(ConfigurationError):
            GeneratorSpec(spec.scheme, spec.transition, spec.initial, mcar_rate=1.0)
        with pytest.raises(ConfigurationError):
            GeneratorSpec(spec.scheme, spec.transition[:, :3, :3], spec.initial)


class TestGenerateClientData:
    def test_truth_fully_observed_and_consistent(self):
        spec = small_spec()
        observed, truth = generate_client_data(spec, 1, client_index=0)
        assert len(observed) == len(truth) == spec.subjects_per_client
        tgrid, ogrid = truth.stack(), observed.stack()
        assert not np.isnan(tgrid).any()
        mask = ~np.isnan(ogrid)
        assert np.array_equal(ogrid[mask], tgrid[mask])  # observed cells identical

    def test_values_inside_configured_range(self):
        spec = small_spec(subjects=50)
        _, truth = generate_client_data(spec, 1)
        grid = truth.stack()
        for f in range(2):
            lo, hi = spec.scheme.lows[f], spec.scheme.highs[f]
            assert np.all(grid[:, f, :] >= lo) and np.all(grid[:, f, :] < hi)

    @pytest.mark.parametrize("interval", [2, 3])
    def test_native_interval_slot_pattern(self, interval):
        spec = small_spec(mcar=0.0, subjects=40)
        observed, _ = generate_client_data(spec, interval)
        grid = observed.stack()
        w = spec.window_count
        on_grid = np.arange(w) % interval == 0
        assert not np.isnan(grid[:, :, on_grid]).any()
        assert np.isnan(grid[:, :, ~on_grid]).all()

    def test_mcar_zero_interval_one_fully_observed(self):
        spec = small_spec(mcar=0.0)
        observed, _ = generate_client_data(spec, 1)
        assert not np.isnan(observed.stack()).any()

    def test_mcar_rate_roughly_respected(self):
        spec = small_spec(mcar=0.3, subjects=400)
        observed, _ = generate_client_data(spec, 1)
        frac = float(np.isnan(observed.stack()).mean())
        assert 0.27 < frac < 0.33

    def test_bit_identical_reruns(self):
        spec = small_spec()
        a_obs, a_truth = generate_client_data(spec, 2, client_index=4)
        b_obs, b_truth = generate_client_data(spec, 2, client_index=4)
        assert np.array_equal(a_obs.stack(), b_obs.stack(), equal_nan=True)
        assert np.array_equal(a_truth.stack(), b_truth.stack())
        assert [r.subject_id for r in a_obs.records] == [r.subject_id for r in b_obs.records]

    def test_client_streams_independent(self):
        spec = small_spec()
        a, _ = generate_client_data(spec, 1, client_index=0)
        b, _ = generate_client_data(spec, 1, client_index=1)
        assert not np.array_equal(a.stack(), b.stack(), equal_nan=True)

    def test_subject_ids_carry_client_id(self):
        spec = small_spec(subjects=2)
        observed, _ = generate_client_data(spec, 1, client_index=3, client_id="icu_x")
        assert [r.subject_id for r in observed.records] == ["icu_x_s00000", "icu_x_s00001"]

    def test_bad_interval_rejected(self):
        spec = small_spec()
        with pytest.raises(ConfigurationError):
            generate_client_data(spec, 4)

    def test_empirical_transitions_converge_to_chain(self):
        spec = make_generator_spec(
            feature_names=("x",), bins=5, windows=6, subjects=5000, mcar=0.0, seed=11
        )
        _, truth = generate_client_data(spec, 1)
        est = normalize(count_transitions(truth, spec.scheme))
        assert matrix_row_l1(est, spec.transition) < 0.08

    def test_empirical_initial_converges(self):
        spec = make_generator_spec(
            feature_names=("x",), bins=4, windows=2, subjects=8000, mcar=0.0, seed=12
        )
        _, truth = generate_client_data(spec, 1)
        first = truth.stack()[:, 0, 0]
        bins = [spec.scheme.discretize(v, 0) for v in first]
        freq = np.bincount(bins, minlength=4) / len(bins)
        assert np.abs(freq - spec.initial[0]).max() < 0.03
