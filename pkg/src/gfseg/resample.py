"""Mask resampling between image/provider resolution and the feature grid."""

from __future__ import annotations

import numpy as np

from .episode import BinaryMask


def _overlap_weights(n_src: int, n_dst: int) -> np.ndarray:
    """(n_dst, n_src) matrix of interval overlaps between destination cells
    (each covering n_src/n_dst source units) and unit source pixels."""
    ratio = n_src / n_dst
    w = np.zeros((n_dst, n_src), dtype=np.float64)
    for d in range(n_dst):
        lo, hi = d * ratio, (d + 1) * ratio
        s0, s1 = int(np.floor(lo)), min(int(np.ceil(hi)), n_src)
        for s in range(s0, s1):
            w[d, s] = min(hi, s + 1) - max(lo, s)
    return w


def mask_to_grid(mask: BinaryMask, grid: tuple[int, int]) -> BinaryMask:
    """Area-average a mask down to (h, w); a cell is 1 iff its average > 0.5.

    Fractional cell footprints are accumulated exactly: each source pixel
    contributes its overlap area with the destination cell.
    """
    h, w = grid
    H, W = mask.shape
    if H < h or W < w:
        raise ValueError(f"mask_to_grid cannot upsample {mask.shape} -> {grid}")
    wr = _overlap_weights(H, h)
    wc = _overlap_weights(W, w)
    area = wr @ mask.data.astype(np.float64) @ wc.T
    cell_area = (H / h) * (W / w)
    return BinaryMask((area / cell_area > 0.5).astype(np.uint8))


def grid_fractions(mask_data: np.ndarray, grid: tuple[int, int]) -> np.ndarray:
    """Per-cell area fraction of a {0,1} (or weighted) map; helper for the
    synthetic renderer. Returns float64 (h, w)."""
    h, w = grid
    H, W = mask_data.shape
    wr = _overlap_weights(H, h)
    wc = _overlap_weights(W, w)
    cell_area = (H / h) * (W / w)
    return wr @ mask_data.astype(np.float64) @ wc.T / cell_area


def resize_prediction(mask: BinaryMask, image_size: tuple[int, int]) -> BinaryMask:
    """Nearest-neighbor resample with pixel-center alignment."""
    H_out, W_out = image_size
    H_in, W_in = mask.shape
    if (H_in, W_in) == (H_out, W_out):
        return mask
    rows = np.minimum(
        ((np.arange(H_out) + 0.5) * H_in / H_out).astype(np.int64), H_in - 1)
    cols = np.minimum(
        ((np.arange(W_out) + 0.5) * W_in / W_out).astype(np.int64), W_in - 1)
    return BinaryMask(mask.data[np.ix_(rows, cols)])
