import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from larpcesk import metrics
from larpcesk.metrics import ValidationSet


class TestErmse:
    def test_perfect(self):
        assert metrics.ermse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_constant_error(self):
        assert metrics.ermse(np.full(7, -1.5), np.zeros(7)) == pytest.approx(1.5)

    def test_hand_value(self):
        assert metrics.ermse([3.0, 4.0], [0.0, 0.0]) == pytest.approx(math.sqrt(12.5))
        assert math.sqrt(12.5) == pytest.approx(3.5355, abs=1e-4)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            metrics.ermse([1.0, 2.0], [1.0])


class TestNmae:
    def test_perfect(self):
        assert metrics.nmae(np.ones(5), np.ones(5), 0.3) == 0.0

    def test_single_worst(self):
        pred = np.zeros(100)
        pred[17] = 2.5
        assert metrics.nmae(pred, np.zeros(100), 1.0) == pytest.approx(0.025)

    @settings(max_examples=40)
    @given(arrays(float, 10, elements=st.floats(-10, 10)), st.floats(0.1, 5.0))
    def test_homogeneous(self, err, s):
        truth = np.zeros(10)
        assert metrics.nmae(2 * err, truth, s) == pytest.approx(2 * metrics.nmae(err, truth, s))

    def test_needs_positive_sigma(self):
        with pytest.raises(ValueError):
            metrics.nmae([1.0], [0.0], 0.0)


class TestSigmaVs:
    def test_exact(self):
        assert metrics.sigma_vs([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_equal_deviation(self):
        assert metrics.sigma_vs(np.full(4, 0.7), np.zeros(4)) == pytest.approx(0.7)

    def test_alternating(self):
        assert metrics.sigma_vs([1.0, -1.0, 1.0, -1.0], np.zeros(4)) == pytest.approx(1.0)


class TestValidationSet:
    def test_shapes(self):
        vs = ValidationSet(np.linspace(0, 1, 5), np.arange(5.0))
        assert vs.points.shape == (5, 1) and vs.size == 5

    def test_mismatch(self):
        with pytest.raises(ValueError):
            ValidationSet(np.zeros((3, 2)), np.zeros(4))
