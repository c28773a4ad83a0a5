import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ccmn.core import ShapeError
from ccmn.metrics import (
    average_precision,
    average_precision_detail,
    hamming_loss,
    predict_dummy_threshold,
    predict_sign,
    ranking_loss,
    ranking_loss_sorted,
)


def test_predict_sign():
    assert predict_sign([0.3, -0.1]).tolist() == [1, -1]
    assert predict_sign([0.0]).tolist() == [1]
    f = np.array([[0.3, -2.0, 0.0, 1e-9]])
    assert np.array_equal(predict_sign(f), predict_sign(7.5 * f))


def test_predict_dummy_threshold():
    assert predict_dummy_threshold([1, 2, 3], 2.5).tolist() == [-1, -1, 1]
    F = np.array([[0.3, -0.1, 0.0], [-2.0, 5.0, 1.0]])
    assert np.array_equal(predict_dummy_threshold(F, np.zeros(2)), predict_sign(F))
    f0 = np.array([0.1, 1.0])
    assert np.array_equal(predict_dummy_threshold(F + 4.0, f0 + 4.0), predict_dummy_threshold(F, f0))


def test_hamming_loss():
    y = np.array([[1, -1, 1, -1], [1, 1, -1, -1]])
    assert hamming_loss(y, y) == 0.0
    assert hamming_loss(-y, y) == 1.0
    assert hamming_loss([[1, -1, 1, 1]], [[1, -1, 1, -1]]) == 0.25
    with pytest.raises(ShapeError):
        hamming_loss(y[:, :3], y)


def test_ranking_loss_examples():
    assert ranking_loss([[0.7, 0.2]], [[1, -1]]) == 0.0
    assert ranking_loss([[0.2, 0.7]], [[1, -1]]) == 1.0
    assert ranking_loss([[0.5, 0.5]], [[1, -1]]) == 0.5
    # all-relevant instance is skipped
    assert ranking_loss([[0.2, 0.7], [0.1, 0.3]], [[1, -1], [1, 1]]) == 1.0
    assert ranking_loss([[0.2, 0.7, 0.1]], [[1, -1, -1]], normalize=False) == 1.0


def test_average_precision_examples():
    assert average_precision([[0.9, 0.5, 0.1]], [[1, -1, 1]]) == pytest.approx(0.833333, abs=1e-6)
    assert average_precision([[3.0, 2.0, 1.0]], [[1, 1, -1]]) == 1.0
    assert average_precision([[-4.0]], [[1]]) == 1.0
    res = average_precision_detail([[0.1, 0.2], [0.3, 0.1]], [[-1, -1], [1, -1]])
    assert res == (1.0, 1)


def test_average_precision_ties_by_index():
    # tie between labels 0 (irrelevant) and 1 (relevant): label 0 ranks first
    assert average_precision([[0.5, 0.5]], [[-1, 1]]) == 0.5


def test_pair_scan_equals_sort_based():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        q = int(rng.integers(2, 12))
        F = np.round(rng.normal(size=(1, q)), 1)  # rounding produces ties
        Y = np.where(rng.random((1, q)) < 0.4, 1, -1)
        assert ranking_loss(F, Y) == ranking_loss_sorted(F, Y)
        assert ranking_loss(F, Y, normalize=False) == ranking_loss_sorted(F, Y, normalize=False)


@settings(max_examples=200, deadline=None)
@given(
    arrays(np.float64, (5, 4), elements=st.floats(-3, 3)),
    arrays(np.int8, (5, 4), elements=st.sampled_from([-1, 1])),
)
def test_metric_ranges(F, Y):
    assert 0.0 <= hamming_loss(predict_sign(F), Y) <= 1.0
    assert 0.0 <= ranking_loss(F, Y) <= 1.0
    assert ranking_loss(F, Y) == ranking_loss_sorted(F, Y)
    if np.all(np.any(Y > 0, axis=1)):
        assert 0.0 < average_precision(F, Y) <= 1.0
