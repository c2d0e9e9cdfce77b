"""Qualitative overlays: prediction fill, GT boundary, and cluster-colored
prompt points composited in pixel space and written as PNG."""

from __future__ import annotations

import numpy as np
from matplotlib import colormaps
from matplotlib.image import imsave

from .episode import Episode
from .pipeline import EpisodeResult

_BASE_GRAY = 96
_MARKER_HALF = 2


def _boundary(mask: np.ndarray) -> np.ndarray:
    """Foreground pixels with at least one 4-neighbor outside the mask."""
    m = mask.astype(bool)
    interior = m.copy()
    interior[1:, :] &= m[:-1, :]
    interior[:-1, :] &= m[1:, :]
    interior[:, 1:] &= m[:, :-1]
    interior[:, :-1] &= m[:, 1:]
    return m & ~interior


def emit_overlay(episode: Episode, result: EpisodeResult, path) -> None:
    """Write a PNG overlay.

    The prediction owns the red channel (r=255 exactly on its foreground),
    the GT boundary the green channel, and point markers only touch
    green/blue, so channel counts stay auditable.
    """
    H, W = episode.image_size
    img = np.full((H, W, 3), _BASE_GRAY, dtype=np.uint8)

    pred = result.prediction.data.astype(bool)
    img[pred, 0] = 255

    if episode.target_gt is not None:
        img[_boundary(episode.target_gt.data), 1] = 255

    Hp, Wp = episode.provider_size
    cmap = colormaps["tab10"]
    for (x, y), cl in zip(result.points_xy, result.clusters):
        px = min(int(x * W / Wp), W - 1)
        py = min(int(y * H / Hp), H - 1)
        r, g, b = (int(v * 255) for v in cmap(int(cl) % 10)[:3])
        y0, y1 = max(0, py - _MARKER_HALF), min(H, py + _MARKER_HALF + 1)
        x0, x1 = max(0, px - _MARKER_HALF), min(W, px + _MARKER_HALF + 1)
        img[y0:y1, x0:x1, 1] = max(g, 16)
        img[y0:y1, x0:x1, 2] = max(b, 16)

    imsave(path, img)
