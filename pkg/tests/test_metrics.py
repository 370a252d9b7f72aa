import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gcngan import metrics
from gcngan.linalg import ShapeError
from gcngan.metrics import SliceScore, UndefinedMetric

from helpers import loop_kl, loop_mismatch, loop_mse

nonneg = arrays(np.float64, (4, 4), elements=st.floats(0, 10).map(lambda x: 0.0 if x < 3 else x))


def test_mse_examples():
    t = np.array([[0.0, 2.0], [2.0, 0.0]])
    assert metrics.mse(t, t) == 0.0
    assert metrics.mse(t, np.zeros((2, 2))) == 2.0
    assert metrics.mse(3 * t, np.zeros((2, 2))) == 18.0
    with pytest.raises(ShapeError):
        metrics.mse(t, np.zeros((3, 3)))


def test_kl_examples():
    t = np.array([[0.0, 1.0], [1.0, 0.0]])
    p = np.array([[0.0, 3.0], [1.0, 0.0]])
    assert metrics.edgewise_kl(t, t) == 0.0
    expected = 0.5 * math.log(0.5 / 0.75) + 0.5 * math.log(0.5 / 0.25)
    assert metrics.edgewise_kl(t, p) == pytest.approx(expected, rel=1e-14)
    assert metrics.edgewise_kl(t, p) == pytest.approx(0.143841, abs=1e-6)


def test_kl_zero_matrices_undefined():
    t = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(UndefinedMetric):
        metrics.edgewise_kl(np.zeros((2, 2)), t)
    with pytest.raises(UndefinedMetric):
        metrics.edgewise_kl(t, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        metrics.edgewise_kl(-t, t)


@pytest.mark.parametrize("k", [0.5, 2.0, 10.0])
def test_kl_scale_invariant(k):
    x = np.random.default_rng(1).random((6, 6))
    assert metrics.edgewise_kl(x, k * x) == pytest.approx(0.0, abs=1e-15)


def test_mismatch_examples():
    t = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert metrics.mismatch_rate(t, 2 * t) == 0.0
    assert metrics.mismatch_rate(t, np.zeros((2, 2))) == 1.0
    assert metrics.mismatch_rate(np.eye(3), np.zeros((3, 3))) == 0.0
    with pytest.raises(ShapeError):
        metrics.mismatch_rate(np.zeros((1, 1)), np.zeros((1, 1)))


@settings(max_examples=50, deadline=None)
@given(nonneg, nonneg, st.floats(0.1, 10))
def test_mismatch_symmetric_and_support_only(a, b, k):
    assert metrics.mismatch_rate(a, b) == metrics.mismatch_rate(b, a)
    assert metrics.mismatch_rate(a, k * b) == metrics.mismatch_rate(a, b)


def test_metrics_match_scalar_oracles():
    rng = np.random.default_rng(7)
    for _ in range(20):
        t = rng.random((10, 10)) * (rng.random((10, 10)) < 0.6)
        p = rng.random((10, 10)) * (rng.random((10, 10)) < 0.6)
        tl, pl = t.tolist(), p.tolist()
        assert abs(metrics.mse(t, p) - loop_mse(tl, pl)) <= 1e-12
        assert abs(metrics.edgewise_kl(t, p) - loop_kl(tl, pl)) <= 1e-12
        assert abs(metrics.mismatch_rate(t, p) - loop_mismatch(tl, pl)) <= 1e-12


def test_score_marks_undefined_kl(caplog):
    t = np.array([[0.0, 1.0], [1.0, 0.0]])
    s = metrics.score(4, t, np.zeros((2, 2)))
    assert s == SliceScore(4, 0.5, None, 1.0)
    assert "slice 4" in caplog.text


def test_aggregate():
    one = metrics.aggregate([SliceScore(0, 1.5, 0.2, 0.1)])
    assert (one.mse, one.kl, one.mismatch) == (1.5, 0.2, 0.1)
    two = metrics.aggregate([SliceScore(0, 1.0, 0.2, 0.0), SliceScore(1, 3.0, None, 0.5)])
    assert two.mse == 2.0 and two.kl == 0.2 and two.mismatch == 0.25
    none = metrics.aggregate([SliceScore(0, 1.0, None, 0.0)])
    assert none.kl is None
    with pytest.raises(ValueError):
        metrics.aggregate([])


def test_report_csv_round_trip(tmp_path):
    report = metrics.aggregate([SliceScore(11, 0.1, 1 / 3, 0.25), SliceScore(12, 0.2, None, 0.5)])
    path = tmp_path / "m.csv"
    metrics.write_report_csv(report, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "slice,mse,kl,mismatch"
    assert lines[2] == "12,0.2,nan,0.5"
    assert lines[-1].startswith("average,")
    assert metrics.read_report_csv(path) == report
    path.write_text("a,b\n")
    with pytest.raises(ValueError):
        metrics.read_report_csv(path)
