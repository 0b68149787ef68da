import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from biovessel.errors import InvalidWindow, ShapeMismatch
from biovessel.metrics import MetricReport, dice, evaluate, iou, mse, ssim

from oracles import accumulate_mse, cell_count_dice, cell_count_iou, naive_ssim


def _mask(cells, shape=(4, 4)):
    m = np.zeros(shape, dtype=np.uint8)
    for y, x in cells:
        m[y, x] = 255
    return m


def test_iou_examples():
    a = _mask([(0, 0), (0, 1), (1, 0), (1, 1)])
    b = _mask([(0, 0), (0, 1)])
    assert iou(a, a) == 1.0
    assert iou(a, _mask([(3, 3)])) == 0.0
    assert iou(a, b) == 0.5


def test_dice_examples():
    a = _mask([(0, 0), (0, 1), (1, 0), (1, 1)])
    b = _mask([(0, 0), (0, 1)])
    assert dice(a, a) == 1.0
    assert dice(a, _mask([(3, 3)])) == 0.0
    assert dice(a, b) == pytest.approx(4 / 6, abs=1e-15)
    assert dice(a, b) == pytest.approx(2 * 0.5 / 1.5, abs=1e-15)


def test_empty_masks_match_perfectly():
    z = np.zeros((3, 3))
    assert iou(z, z) == dice(z, z) == 1.0


def test_mse_examples(rng):
    a = rng.integers(0, 200, (10, 10))
    assert mse(a, a) == 0.0
    assert mse(a, a + 1) == 1.0


def test_shape_mismatch():
    for fn in (iou, dice, mse, ssim):
        with pytest.raises(ShapeMismatch):
            fn(np.zeros((12, 12)), np.zeros((12, 13)))


def test_ssim_identical():
    img = np.random.default_rng(1).integers(0, 256, (32, 32))
    assert ssim(img, img) == pytest.approx(1.0, abs=1e-12)


def test_ssim_constant_closed_form():
    a, b = np.full((20, 20), 50.0), np.full((20, 20), 100.0)
    c1 = (0.01 * 255) ** 2
    expected = (2 * 50 * 100 + c1) / (50**2 + 100**2 + c1)
    assert ssim(a, b) == pytest.approx(expected, rel=1e-12)


def test_ssim_matches_naive_oracle(rng):
    a = rng.integers(0, 256, (64, 64)).astype(float)
    b = np.clip(a + rng.normal(0, 30, a.shape), 0, 255)
    assert abs(ssim(a, b) - naive_ssim(a, b)) <= 1e-9


def test_ssim_window_validation():
    with pytest.raises(InvalidWindow):
        ssim(np.zeros((8, 8)), np.zeros((8, 8)))
    with pytest.raises(InvalidWindow):
        ssim(np.zeros((16, 16)), np.zeros((16, 16)), window=4)
    assert ssim(np.zeros((8, 8)), np.zeros((8, 8)), window=7) == 1.0


masks = arrays(np.uint8, st.tuples(st.integers(1, 24), st.integers(1, 24)), elements=st.sampled_from([0, 255]))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_overlap_metrics_match_oracles_and_are_symmetric(data):
    a = data.draw(masks)
    b = data.draw(arrays(np.uint8, a.shape, elements=st.sampled_from([0, 255])))
    assert iou(a, b) == cell_count_iou(a, b) == iou(b, a)
    assert dice(a, b) == cell_count_dice(a, b) == dice(b, a)
    assert mse(a, b) == accumulate_mse(a, b) == mse(b, a)
    i = iou(a, b)
    assert abs(dice(a, b) - 2 * i / (1 + i)) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_ssim_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.integers(0, 256, (2, 24, 24))
    s = ssim(a, b)
    assert s == pytest.approx(ssim(b, a), abs=1e-12)
    assert -1.0 <= s <= 1.0
    assert s == pytest.approx(naive_ssim(a, b), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_flipping_a_disagreeing_cell_never_helps(seed):
    rng = np.random.default_rng(seed)
    truth = (rng.random((10, 10)) < 0.4) * 255
    pred = truth.copy()
    before_i, before_d = iou(pred, truth), dice(pred, truth)
    for y, x in rng.integers(0, 10, (15, 2)):
        if pred[y, x] != truth[y, x]:
            continue
        pred[y, x] = 255 - pred[y, x]
        now_i, now_d = iou(pred, truth), dice(pred, truth)
        assert now_i <= before_i and now_d <= before_d
        before_i, before_d = now_i, now_d


def test_report_serialization():
    a = _mask([(0, 0), (1, 1)], (12, 12))
    r = evaluate(a, a)
    assert r == MetricReport(1.0, 1.0, 1.0, 0.0)
    assert json.loads(r.to_json()) == {"iou": 1.0, "dice": 1.0, "ssim": 1.0, "mse": 0.0}
    assert r.to_csv().splitlines() == ["iou,dice,ssim,mse", "1.0,1.0,1.0,0.0"]
