"""Unit tests for the synthetic cohort generator."""

import numpy as np
import pytest

from oodscreen import InvalidInput
from oodscreen.synthetic import generate


class TestGenerate:
    def test_deterministic_for_fixed_seed(self):
        a = generate(20, 10, 16, seed=99)
        b = generate(20, 10, 16, seed=99)
        assert a.sample_ids == b.sample_ids
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.head.weights, b.head.weights)
        assert a.labels == b.labels

    def test_different_seeds_differ(self):
        a = generate(20, 10, 16, seed=1)
        b = generate(20, 10, 16, seed=2)
        assert not np.array_equal(a.features, b.features)

    def test_shapes_and_labels(self):
        fixture = generate(7, 5, 8, seed=0)
        assert fixture.features.shape == (12, 8)
        assert fixture.features.dtype == np.float32
        assert len(fixture.sample_ids) == 12
        assert len(set(fixture.sample_ids)) == 12
        assert fixture.head.n_inputs == 8
        assert fixture.head.n_classes == 2
        ungradable = [l.ungradable for l in fixture.labels]
        assert ungradable == [False] * 7 + [True] * 5
        assert [l.sample_id for l in fixture.labels] == fixture.sample_ids

    def test_class_split_present(self):
        fixture = generate(200, 1, 8, seed=5)
        referable = [l.referable for l in fixture.labels[:200]]
        assert any(referable) and not all(referable)

    def test_sharpness_zero_removes_spikes(self):
        null = generate(50, 50, 64, seed=11, ood_sharpness=0.0)
        spiked = generate(50, 50, 64, seed=11, ood_sharpness=1.0)
        null_ood = null.features[50:]
        spiked_ood = spiked.features[50:]
        # The gamma baseline stays in single digits; spikes reach far higher.
        assert float(null_ood.max()) < 10.0
        assert float(spiked_ood.max()) > 20.0

    def test_ood_only_optional(self):
        fixture = generate(5, 0, 4, seed=3)
        assert fixture.features.shape == (5, 4)
        assert all(not l.ungradable for l in fixture.labels)

    @pytest.mark.parametrize("kwargs", [
        dict(n_id=0, n_ood=1, dim=4, seed=0),
        dict(n_id=1, n_ood=-1, dim=4, seed=0),
        dict(n_id=1, n_ood=1, dim=0, seed=0),
        dict(n_id=1, n_ood=1, dim=4, seed=0, ood_sharpness=-0.5),
    ])
    def test_rejects_bad_arguments(self, kwargs):
        with pytest.raises(InvalidInput):
            generate(**kwargs)
