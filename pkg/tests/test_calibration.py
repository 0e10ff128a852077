"""Unit tests for threshold calibration and class weighting."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oodscreen import (
    CalibrationConfig,
    CalibrationError,
    CalibrationMeta,
    DimensionError,
    EmptyInput,
    InvalidInput,
    InvalidTemperature,
    LinearHead,
    ModelBundle,
    calibrate,
    calibrate_activation_threshold,
    calibrate_energy_threshold,
    class_weights,
    energy,
    quantile,
)
from oodscreen.calibration import rectified_energies

IDENTITY_HEAD = LinearHead(weights=np.eye(2), bias=np.zeros(2))


def quantile_oracle(values, p):
    """Sort-based linear interpolation, written independently of numpy."""
    xs = sorted(float(v) for v in values)
    if len(xs) == 1:
        return xs[0]
    position = p * (len(xs) - 1)
    lower = math.floor(position)
    upper = min(lower + 1, len(xs) - 1)
    fraction = position - lower
    return xs[lower] + (xs[upper] - xs[lower]) * fraction


class TestQuantile:
    def test_interpolates_between_order_statistics(self):
        assert quantile(range(1, 11), 0.9) == pytest.approx(9.1, abs=1e-12)

    def test_endpoints_are_min_and_max(self):
        data = [3.0, -1.0, 7.0, 2.0]
        assert quantile(data, 0.0) == -1.0
        assert quantile(data, 1.0) == 7.0

    def test_single_element(self):
        assert quantile([42.0], 0.3) == 42.0

    @given(data=st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
                         min_size=1, max_size=200),
           p=st.floats(min_value=0.0, max_value=1.0))
    @settings(max_examples=300)
    def test_matches_sort_based_oracle(self, data, p):
        expected = quantile_oracle(data, p)
        assert quantile(data, p) == pytest.approx(expected, abs=1e-12, rel=1e-12)

    def test_rejects_empty(self):
        with pytest.raises(EmptyInput):
            quantile([], 0.5)

    def test_rejects_out_of_range_level(self):
        with pytest.raises(InvalidInput):
            quantile([1.0], 1.5)
        with pytest.raises(InvalidInput):
            quantile([1.0], -0.1)

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidInput):
            quantile([1.0, math.nan], 0.5)


class TestActivationThreshold:
    def test_pools_all_rows_and_units(self):
        config = CalibrationConfig(activation_percentile=50.0)
        cap = calibrate_activation_threshold([[1.0, 2.0], [3.0, 4.0]], config)
        assert cap == pytest.approx(2.5, abs=1e-15)

    def test_default_percentile_is_90(self):
        values = np.arange(1.0, 12.0).reshape(11, 1)  # pooled 1..11
        assert calibrate_activation_threshold(values) == pytest.approx(10.0, abs=1e-12)

    def test_non_positive_cap_raises(self):
        with pytest.raises(CalibrationError):
            calibrate_activation_threshold([[-3.0, -2.0], [-1.0, 0.0]])

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            calibrate_activation_threshold(np.empty((0, 4)))

    def test_non_finite_raises(self):
        with pytest.raises(InvalidInput):
            calibrate_activation_threshold([[1.0, math.inf]])


class TestEnergyThreshold:
    def test_constant_energies_keep_everything(self):
        rows = np.tile([1.0, 2.0], (5, 1))
        threshold = calibrate_energy_threshold(rows, IDENTITY_HEAD, activation_cap=10.0)
        assert threshold == -energy([1.0, 2.0])
        energies = rectified_energies(rows, IDENTITY_HEAD, 10.0)
        assert all(threshold + e <= 0.0 for e in energies)

    def test_single_row_threshold_is_exact_negation(self):
        rows = np.array([[0.25, -1.5]])
        threshold = calibrate_energy_threshold(rows, IDENTITY_HEAD, activation_cap=10.0)
        assert threshold == -energy([0.25, -1.5])

    def test_twenty_distinct_rows_keep_nineteen(self):
        rows = np.column_stack([np.arange(20.0), np.zeros(20)])
        threshold = calibrate_energy_threshold(rows, IDENTITY_HEAD, activation_cap=100.0)
        energies = rectified_energies(rows, IDENTITY_HEAD, 100.0)
        kept = int(np.sum(threshold + energies <= 0.0))
        assert kept == 19

    @given(values=st.lists(st.floats(min_value=-20.0, max_value=20.0, allow_nan=False),
                           min_size=1, max_size=60),
           percentile=st.sampled_from([50.0, 80.0, 90.0, 95.0, 99.0]))
    @settings(max_examples=200, deadline=None)
    def test_retention_meets_percentile(self, values, percentile):
        rows = np.column_stack([np.asarray(values), np.zeros(len(values))])
        config = CalibrationConfig(energy_percentile=percentile)
        threshold = calibrate_energy_threshold(rows, IDENTITY_HEAD, 50.0, config)
        energies = rectified_energies(rows, IDENTITY_HEAD, 50.0)
        kept = int(np.sum(threshold + energies <= 0.0))
        assert kept / len(values) >= percentile / 100.0

    @given(values=st.lists(st.floats(min_value=-20.0, max_value=20.0, allow_nan=False),
                           min_size=2, max_size=60, unique=True))
    @settings(max_examples=200, deadline=None)
    def test_threshold_is_maximal(self, values):
        # Any strictly larger threshold must drop retention below the target.
        rows = np.column_stack([np.asarray(values), np.zeros(len(values))])
        threshold = calibrate_energy_threshold(rows, IDENTITY_HEAD, 50.0)
        energies = rectified_energies(rows, IDENTITY_HEAD, 50.0)
        bumped = math.nextafter(threshold, math.inf)
        kept = int(np.sum(bumped + energies <= 0.0))
        assert kept / len(values) < 0.95

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            calibrate_energy_threshold(np.empty((0, 2)), IDENTITY_HEAD, 1.0)

    def test_dimension_mismatch_raises(self):
        with pytest.raises(DimensionError):
            calibrate_energy_threshold(np.ones((3, 5)), IDENTITY_HEAD, 1.0)


class TestCalibrate:
    def test_assembles_bundle(self):
        rng = np.random.default_rng(3)
        rows = rng.gamma(4.0, 0.25, size=(40, 2))
        bundle = calibrate(rows, IDENTITY_HEAD, model_id="demo")
        assert bundle.model_id == "demo"
        assert bundle.activation_cap == calibrate_activation_threshold(rows)
        assert bundle.energy_threshold == calibrate_energy_threshold(
            rows, IDENTITY_HEAD, bundle.activation_cap
        )
        assert bundle.temperature == 1.0
        assert bundle.calibration_meta == CalibrationMeta(
            n_validation=40, activation_percentile=90.0, energy_percentile=95.0
        )
        assert bundle.class_names == ("no_referable_glaucoma", "referable_glaucoma")

    def test_deterministic(self):
        rows = np.random.default_rng(11).gamma(4.0, 0.25, size=(25, 2))
        a = calibrate(rows, IDENTITY_HEAD)
        b = calibrate(rows, IDENTITY_HEAD)
        assert a.activation_cap == b.activation_cap
        assert a.energy_threshold == b.energy_threshold

    def test_generic_class_names_for_wider_heads(self):
        head = LinearHead(weights=np.ones((2, 3)), bias=np.zeros(3))
        bundle = calibrate(np.ones((4, 2)) + np.eye(4, 2), head)
        assert bundle.class_names == ("class_0", "class_1", "class_2")

    def test_empty_raises(self):
        with pytest.raises(EmptyInput):
            calibrate(np.empty((0, 2)), IDENTITY_HEAD)


class TestClassWeights:
    def test_inverse_frequency_scaled_to_mean_one(self):
        weights = class_weights([90, 10])
        assert weights == pytest.approx([0.2, 1.8], abs=1e-12)

    def test_balanced_counts_give_unit_weights(self):
        assert class_weights([25, 25]).tolist() == [1.0, 1.0]

    @given(counts=st.lists(st.integers(min_value=1, max_value=10**6),
                           min_size=1, max_size=10))
    def test_mean_is_one_and_products_constant(self, counts):
        weights = class_weights(counts)
        assert math.fsum(weights) / len(counts) == pytest.approx(1.0, abs=1e-12)
        products = [w * c for w, c in zip(weights, counts)]
        assert max(products) == pytest.approx(min(products), rel=1e-12)

    @pytest.mark.parametrize("counts", [[0, 5], [-1, 3], []])
    def test_rejects_non_positive_or_empty(self, counts):
        with pytest.raises(InvalidInput):
            class_weights(counts)

    def test_rejects_non_integer(self):
        with pytest.raises(InvalidInput):
            class_weights([1.5, 2.5])


class TestConfigAndBundleValidation:
    @pytest.mark.parametrize("pct", [0.0, 100.0, -5.0, math.nan])
    def test_config_rejects_bad_percentiles(self, pct):
        with pytest.raises(InvalidInput):
            CalibrationConfig(activation_percentile=pct)
        with pytest.raises(InvalidInput):
            CalibrationConfig(energy_percentile=pct)

    def test_config_rejects_bad_temperature(self):
        with pytest.raises(InvalidTemperature):
            CalibrationConfig(temperature=0.0)

    def _bundle_kwargs(self, **overrides):
        kwargs = dict(
            model_id="m",
            head=IDENTITY_HEAD,
            activation_cap=1.0,
            energy_threshold=0.5,
            temperature=1.0,
            class_names=("a", "b"),
            calibration_meta=CalibrationMeta(10, 90.0, 95.0),
        )
        kwargs.update(overrides)
        return kwargs

    def test_bundle_rejects_non_positive_cap(self):
        with pytest.raises(InvalidInput):
            ModelBundle(**self._bundle_kwargs(activation_cap=0.0))

    def test_bundle_rejects_class_name_mismatch(self):
        with pytest.raises(DimensionError):
            ModelBundle(**self._bundle_kwargs(class_names=("a", "b", "c")))

    def test_meta_rejects_zero_samples(self):
        with pytest.raises(InvalidInput):
            CalibrationMeta(0, 90.0, 95.0)
