"""Positive-negative alignment: correlation split, similarity maps, and
parameter-free point selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .episode import BinaryMask, FeatureMap


@dataclass(frozen=True)
class CorrelationSplit:
    """ReLU-cosine correlations of every target pixel against reference
    foreground (positive) and background (negative) pixels."""

    positive: np.ndarray  # (hw, n_pos) float32 in [0, 1]
    negative: np.ndarray  # (hw, n_neg) float32 in [0, 1]

    @property
    def n_pos(self) -> int:
        return self.positive.shape[1]

    @property
    def n_neg(self) -> int:
        return self.negative.shape[1]


@dataclass(frozen=True)
class SimilarityMaps:
    """Flattened similarity maps over the hw target grid cells."""

    mean_pos: np.ndarray
    max_pos: np.ndarray
    mix_pos: np.ndarray
    mean_neg: np.ndarray
    filtered: np.ndarray


@dataclass(frozen=True)
class PointSet:
    """Selected prompt points, ordered by non-increasing score."""

    grid_points: np.ndarray   # (N, 2) int32, (row, col) on the feature grid
    image_points: np.ndarray  # (N, 2) int32, (x, y) at provider resolution
    scores: np.ndarray        # (N,) float32

    def __len__(self) -> int:
        return len(self.grid_points)

    @property
    def empty(self) -> bool:
        return len(self.grid_points) == 0


def empty_point_set() -> PointSet:
    return PointSet(
        grid_points=np.zeros((0, 2), dtype=np.int32),
        image_points=np.zeros((0, 2), dtype=np.int32),
        scores=np.zeros((0,), dtype=np.float32),
    )


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    """Unit-normalize rows; zero rows stay zero (cosine defined as 0)."""
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return x / safe


def compute_correlation(
    target: FeatureMap,
    references: list[tuple[FeatureMap, BinaryMask]],
) -> CorrelationSplit:
    """ReLU-cosine correlation between target cells and reference cells,
    split into foreground/background columns.

    Reference masks must already be at feature resolution. For K > 1 the
    reference pixels of all shots are concatenated column-wise in shot order.
    """
    tn = _normalize_rows(target.flat().astype(np.float64))
    pos_cols, neg_cols = [], []
    for i, (fm, mask) in enumerate(references):
        if fm.c != target.c:
            raise ValueError(
                f"reference {i} has {fm.c} channels, target has {target.c}")
        if mask.shape != (fm.h, fm.w):
            raise ValueError(
                f"reference {i} mask {mask.shape} not at feature resolution "
                f"({fm.h}, {fm.w})")
        rn = _normalize_rows(fm.flat().astype(np.float64))
        corr = np.maximum(tn @ rn.T, 0.0)
        fg = mask.data.reshape(-1).astype(bool)
        pos_cols.append(corr[:, fg])
        neg_cols.append(corr[:, ~fg])
    hw = target.h * target.w
    positive = np.concatenate(pos_cols, axis=1) if pos_cols else np.zeros((hw, 0))
    negative = np.concatenate(neg_cols, axis=1) if neg_cols else np.zeros((hw, 0))
    return CorrelationSplit(
        positive=positive.astype(np.float32),
        negative=negative.astype(np.float32),
    )


def min_max_normalize(v: np.ndarray) -> np.ndarray:
    """Min-max normalize to [0, 1]; a constant vector maps to all-zeros."""
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def build_similarity_maps(split: CorrelationSplit) -> SimilarityMaps:
    """Mean/max/mixture positive maps, mean negative map, and the filtered
    point-selection map."""
    if split.n_pos < 1:
        raise ValueError("correlation split has no positive (foreground) columns")
    pos = split.positive.astype(np.float64)
    mean_pos = pos.mean(axis=1)
    max_pos = pos.max(axis=1)
    mix_pos = mean_pos * max_pos
    if split.n_neg > 0:
        mean_neg = split.negative.astype(np.float64).mean(axis=1)
    else:
        mean_neg = np.zeros_like(mean_pos)
    mn_mix = min_max_normalize(mix_pos)
    mn_neg = min_max_normalize(mean_neg)
    filtered = mn_mix * (mn_mix > mn_neg)
    return SimilarityMaps(
        mean_pos=mean_pos.astype(np.float32),
        max_pos=max_pos.astype(np.float32),
        mix_pos=mix_pos.astype(np.float32),
        mean_neg=mean_neg.astype(np.float32),
        filtered=filtered.astype(np.float32),
    )


def grid_to_image(
    p: tuple[int, int], grid: tuple[int, int], image_size: tuple[int, int],
) -> tuple[int, int]:
    """Patch-center mapping of a (row, col) grid cell to (x, y) pixels."""
    row, col = p
    h, w = grid
    H, W = image_size
    if not (0 <= row < h and 0 <= col < w):
        raise ValueError(f"grid point {p} outside grid {grid}")
    x = int(np.floor((col + 0.5) * W / w))
    y = int(np.floor((row + 0.5) * H / h))
    return x, y


def select_points(
    maps: SimilarityMaps,
    grid: tuple[int, int],
    image_size: tuple[int, int],
) -> PointSet:
    """Pick the top-N cells of the filtered map, N = round(sum of the map),
    clamped to [1, nnz]. Ties break by ascending flat index."""
    h, w = grid
    f = maps.filtered.astype(np.float64)
    if f.shape[0] != h * w:
        raise ValueError(f"filtered map has {f.shape[0]} entries, grid is {grid}")
    nnz = int(np.count_nonzero(f > 0))
    if nnz == 0:
        return empty_point_set()
    total = float(f.sum())
    n = int(np.floor(total + 0.5))  # round half away from zero (total >= 0)
    n = max(1, min(n, nnz))
    order = np.argsort(-f, kind="stable")[:n]
    rows, cols = np.divmod(order, w)
    image_points = np.array(
        [grid_to_image((r, c), grid, image_size) for r, c in zip(rows, cols)],
        dtype=np.int32,
    ).reshape(n, 2)
    return PointSet(
        grid_points=np.stack([rows, cols], axis=1).astype(np.int32),
        image_points=image_points,
        scores=f[order].astype(np.float32),
    )
