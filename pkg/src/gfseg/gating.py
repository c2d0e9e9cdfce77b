"""Post-gating: polarity map, positive gating with mask growth, overshoot
filtering via self-consistency, and final mask merging."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .alignment import PointSet, _normalize_rows
from .episode import BinaryMask, FeatureMap
from .clustering import Clustering
from .errors import ConfigError
from .resample import mask_to_grid

CLUSTERING_MODES = ("weak", "strong")
POSITIVE_STRATEGIES = ("num", "sum")
GROWTH_MODES = ("mask_growth", "union", "off")
PIVOT_MODES = ("product", "plus", "mid_only", "neg_only")


@dataclass(frozen=True)
class GateConfig:
    """Ablation switches; defaults are the full pipeline."""

    clustering_mode: str = "weak"
    positive_strategy: str = "num"
    growth_mode: str = "mask_growth"
    pivot_mode: str = "product"
    overshoot: bool = True

    def __post_init__(self):
        if self.clustering_mode not in CLUSTERING_MODES:
            raise ConfigError(f"bad clustering mode {self.clustering_mode!r}")
        if self.positive_strategy not in POSITIVE_STRATEGIES:
            raise ConfigError(f"bad positive strategy {self.positive_strategy!r}")
        if self.growth_mode not in GROWTH_MODES:
            raise ConfigError(f"bad growth mode {self.growth_mode!r}")
        if self.pivot_mode not in PIVOT_MODES:
            raise ConfigError(f"bad pivot mode {self.pivot_mode!r}")


@dataclass(frozen=True)
class PolarityMap:
    """Per-grid-cell foreground(+1)/background(-1) labeling."""

    values: np.ndarray  # (hw,) int8 in {+1, -1}


@dataclass(frozen=True)
class GateOutcome:
    positive_points: list[int]
    consistent_points: list[int]
    final_mask: BinaryMask


def polarity_map(
    mean_pos: np.ndarray, mean_neg: np.ndarray, pivot_mode: str = "product",
) -> PolarityMap:
    """Label each cell +1/-1 by comparing positive similarity against the
    midpoint/negative pivots."""
    mp = mean_pos.astype(np.float64)
    mn = mean_neg.astype(np.float64)
    if mp.shape != mn.shape:
        raise ValueError("mean_pos and mean_neg must have the same length")
    s_mid = (float(mp.max()) + float(mp.min())) / 2.0
    if pivot_mode == "product":
        pos = mp * mp > s_mid * mn
    elif pivot_mode == "plus":
        pos = 2.0 * mp > s_mid + mn
    elif pivot_mode == "mid_only":
        pos = mp > s_mid
    elif pivot_mode == "neg_only":
        pos = mp > mn
    else:
        raise ConfigError(f"bad pivot mode {pivot_mode!r}")
    return PolarityMap(np.where(pos, 1, -1).astype(np.int8))


def polarity_magnitudes(
    mean_pos: np.ndarray, mean_neg: np.ndarray,
) -> np.ndarray:
    """|mean_pos^2 - s_mid * mean_neg|, the signed-magnitude weights for the
    'sum' positive-gating strategy under the product pivot."""
    mp = mean_pos.astype(np.float64)
    mn = mean_neg.astype(np.float64)
    s_mid = (float(mp.max()) + float(mp.min())) / 2.0
    return np.abs(mp * mp - s_mid * mn)


def mask_positive_score(
    mask: BinaryMask,
    polarity: PolarityMap,
    grid: tuple[int, int],
    strategy: str = "num",
    magnitudes: np.ndarray | None = None,
) -> float:
    """Signed positive-pixel count (or magnitude sum) of the grid-downsampled
    mask under the polarity map."""
    g = mask_to_grid(mask, grid).data.reshape(-1).astype(np.float64)
    pol = polarity.values.astype(np.float64)
    if strategy == "num":
        return float(np.dot(pol, g))
    if strategy == "sum":
        if magnitudes is None:
            raise ValueError("'sum' strategy needs magnitude weights")
        return float(np.dot(pol * np.abs(magnitudes), g))
    raise ConfigError(f"bad positive strategy {strategy!r}")


def mask_growth(
    cluster_masks: list[BinaryMask],
    cluster_points: list[int],
    polarity: PolarityMap,
    grid: tuple[int, int],
    mode: str = "mask_growth",
    strategy: str = "num",
    magnitudes: np.ndarray | None = None,
) -> list[int]:
    """Greedy per-cluster acceptance of mask residuals with positive score.

    Masks are visited by descending score/area ratio (area at grid
    resolution; empty grid masks get ratio 0 and go last; ties by ascending
    point index). Each visited mask is reduced to its residual outside the
    growing pseudo mask; a positive residual score accepts the point and
    unions the residual in. Growth runs at full mask resolution, scoring at
    grid resolution.
    """
    if len(cluster_masks) != len(cluster_points) or not cluster_masks:
        raise ValueError("cluster masks and points must be non-empty and aligned")

    def score(m: BinaryMask) -> float:
        return mask_positive_score(m, polarity, grid, strategy, magnitudes)

    if mode == "union":
        union = cluster_masks[0].data.copy()
        for m in cluster_masks[1:]:
            union |= m.data
        return list(cluster_points) if score(BinaryMask(union)) > 0 else []
    if mode == "off":
        return [p for m, p in zip(cluster_masks, cluster_points) if score(m) > 0]
    if mode != "mask_growth":
        raise ConfigError(f"bad growth mode {mode!r}")

    ratios = []
    for m, p in zip(cluster_masks, cluster_points):
        area = mask_to_grid(m, grid).count()
        ratios.append((score(m) / area if area > 0 else 0.0, p))
    order = sorted(range(len(cluster_masks)),
                   key=lambda i: (-ratios[i][0], ratios[i][1]))

    pseudo = np.zeros(cluster_masks[0].shape, dtype=np.uint8)
    accepted = []
    for i in order:
        residual = cluster_masks[i].data & ~pseudo
        if score(BinaryMask(residual)) > 0:
            accepted.append(cluster_points[i])
            pseudo |= residual
    return sorted(accepted)


def self_consistency_scores(
    target: FeatureMap,
    points: PointSet,
    clustering: Clustering,
    masks,
) -> np.ndarray:
    """(N, num_clusters) matrix of distance-weighted similarity between each
    point's feature and each cluster's union-mask region."""
    n = len(points)
    grid = (target.h, target.w)
    fn = _normalize_rows(target.flat().astype(np.float64))
    flat_idx = points.grid_points[:, 0] * target.w + points.grid_points[:, 1]
    point_feats = fn[flat_idx]
    cos_all = np.maximum(point_feats @ fn.T, 0.0)  # (N, hw)

    coords = points.grid_points.astype(np.float64)
    scores = np.zeros((n, clustering.num_clusters), dtype=np.float64)
    for p, members in enumerate(clustering.clusters):
        union = masks.masks[members[0]].data.copy()
        for l in members[1:]:
            union |= masks.masks[l].data
        fg = mask_to_grid(BinaryMask(union), grid).data.reshape(-1).astype(bool)
        if not fg.any():
            continue
        mean_sim = cos_all[:, fg].mean(axis=1)
        diffs = coords[:, None, :] - coords[None, members, :]
        dist = np.maximum(np.sqrt((diffs ** 2).sum(axis=2)).min(axis=1), 1.0)
        scores[:, p] = mean_sim / dist
    return scores


def filter_overshooting(scores: np.ndarray, clustering: Clustering) -> list[int]:
    """Keep points whose best-scoring cluster is their own; ties retain."""
    n = scores.shape[0]
    if scores.shape[1] != clustering.num_clusters or n != len(clustering.component_of):
        raise ValueError("score matrix shape does not match the clustering")
    own = scores[np.arange(n), clustering.component_of]
    return np.flatnonzero(own >= scores.max(axis=1)).tolist()


def merge_prediction(points: PointSet, masks, p_plus, p_sc) -> BinaryMask:
    """Pixelwise OR of the masks whose points survive both gates."""
    keep = sorted(set(p_plus) & set(p_sc))
    out = np.zeros(masks.resolution, dtype=np.uint8)
    for l in keep:
        out |= masks.masks[l].data
    return BinaryMask(out)
