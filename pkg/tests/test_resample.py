import numpy as np
import pytest

from gfseg.episode import BinaryMask
from gfseg.resample import mask_to_grid, resize_prediction

import oracles


def test_all_ones_stays_all_ones():
    mask = BinaryMask(np.ones((32, 32), dtype=np.uint8))
    out = mask_to_grid(mask, (4, 4))
    np.testing.assert_array_equal(out.data, np.ones((4, 4), dtype=np.uint8))


def test_quarter_coverage_thresholds_to_zero():
    mask = BinaryMask(np.array([[1, 0], [0, 0]], dtype=np.uint8))
    out = mask_to_grid(mask, (1, 1))
    assert out.data[0, 0] == 0


def test_upsampling_rejected():
    with pytest.raises(ValueError):
        mask_to_grid(BinaryMask(np.ones((4, 4), dtype=np.uint8)), (8, 8))


def test_integer_ratio_matches_oracle_exactly():
    rng = np.random.default_rng(0)
    for _ in range(5):
        mask = rng.integers(0, 2, size=(64, 64)).astype(np.uint8)
        got = mask_to_grid(BinaryMask(mask), (8, 8)).data
        avg = oracles.fractional_downsample(mask.tolist(), 8, 8)
        want = (np.array(avg) > 0.5).astype(np.uint8)
        np.testing.assert_array_equal(got, want)


def test_fractional_ratio_matches_oracle():
    rng = np.random.default_rng(1)
    for _ in range(5):
        H, W = int(rng.integers(10, 40)), int(rng.integers(10, 40))
        h, w = int(rng.integers(2, 7)), int(rng.integers(2, 7))
        mask = rng.integers(0, 2, size=(H, W)).astype(np.uint8)
        got = mask_to_grid(BinaryMask(mask), (h, w)).data
        avg = np.array(oracles.fractional_downsample(mask.tolist(), h, w))
        # compare thresholded cells away from exact 0.5 ties
        safe = np.abs(avg - 0.5) > 1e-9
        np.testing.assert_array_equal(got[safe], (avg > 0.5).astype(np.uint8)[safe])


def test_resize_same_size_is_identity():
    mask = BinaryMask(np.eye(5, dtype=np.uint8))
    assert resize_prediction(mask, (5, 5)) is mask


def test_resize_integer_upsample_duplicates_cells():
    checker = np.indices((4, 4)).sum(axis=0) % 2
    out = resize_prediction(BinaryMask(checker.astype(np.uint8)), (8, 8)).data
    np.testing.assert_array_equal(out, np.kron(checker, np.ones((2, 2))).astype(np.uint8))


def test_resize_matches_scalar_oracle():
    rng = np.random.default_rng(2)
    mask = rng.integers(0, 2, size=(64, 64)).astype(np.uint8)
    for out_size in [(37, 50), (100, 23), (64, 64), (128, 3)]:
        got = resize_prediction(BinaryMask(mask), out_size).data
        want = np.array(oracles.nearest_resize(mask.tolist(), *out_size),
                        dtype=np.uint8)
        np.testing.assert_array_equal(got, want)
