"""Per-episode orchestration and mIoU evaluation."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .alignment import (PointSet, build_similarity_maps, compute_correlation,
                        empty_point_set, select_points)
from .clustering import (Clustering, build_coverage_graph,
                         strongly_connected_components,
                         weakly_connected_components)
from .episode import BinaryMask, Episode
from .errors import PipelineError, ProviderError
from .gating import (GateConfig, filter_overshooting, mask_growth,
                     merge_prediction, polarity_magnitudes, polarity_map,
                     self_consistency_scores)
from .providers import MaskProvider
from .resample import mask_to_grid, resize_prediction


@dataclass
class EpisodeResult:
    episode_id: str
    prediction: BinaryMask            # at episode image_size
    intersection: int | None          # vs GT, None when the episode has no GT
    union: int | None
    point_count: int
    cluster_count: int
    timings: dict[str, float]         # contiguous per-stage milliseconds
    points_xy: np.ndarray             # (N, 2) int32, provider-resolution (x, y)
    clusters: np.ndarray              # (N,) int32 cluster index per point
    class_id: int = 0
    fold: int | None = None


@dataclass(frozen=True)
class Report:
    per_class_iou: dict[int, float]
    miou: float
    episode_count: int
    per_fold: dict[int, float] | None = None


def _iou_counts(pred: BinaryMask, gt: BinaryMask | None):
    if gt is None:
        return None, None
    if gt.shape != pred.shape:
        raise PipelineError(
            f"GT shape {gt.shape} does not match prediction {pred.shape}")
    inter = int(np.sum((pred.data & gt.data) == 1))
    union = int(np.sum((pred.data | gt.data) == 1))
    return inter, union


def run_episode(
    episode: Episode,
    provider: MaskProvider,
    config: GateConfig = GateConfig(),
) -> EpisodeResult:
    """Execute the full pipeline on one episode.

    An empty point selection short-circuits to an all-background prediction
    without invoking the provider.
    """
    timings: dict[str, float] = {}
    marks = [time.perf_counter()]

    def tick(stage: str):
        marks.append(time.perf_counter())
        timings[stage] = (marks[-1] - marks[-2]) * 1000.0

    target = episode.target_features
    grid = (target.h, target.w)
    grid_refs = [
        (fm, mask_to_grid(mask, (fm.h, fm.w))) for fm, mask in episode.references
    ]
    for i, (_, gmask) in enumerate(grid_refs):
        if gmask.count() == 0:
            raise PipelineError(
                f"episode {episode.id}: reference {i} mask is empty at "
                f"feature resolution")
    split = compute_correlation(target, grid_refs)
    tick("correlation")
    maps = build_similarity_maps(split)
    tick("similarity")
    points = select_points(maps, grid, episode.provider_size)
    tick("selection")

    if points.empty:
        prediction = BinaryMask(np.zeros(episode.image_size, dtype=np.uint8))
        inter, union = _iou_counts(prediction, episode.target_gt)
        tick("short_circuit")
        return EpisodeResult(
            episode_id=episode.id, prediction=prediction,
            intersection=inter, union=union,
            point_count=0, cluster_count=0, timings=timings,
            points_xy=np.zeros((0, 2), dtype=np.int32),
            clusters=np.zeros((0,), dtype=np.int32),
            class_id=episode.class_id, fold=episode.fold)

    try:
        masks = provider.generate(episode, points)
    except ProviderError:
        raise
    except Exception as e:
        raise ProviderError(f"episode {episode.id}: provider failed: {e}") from e
    tick("provider")

    graph = build_coverage_graph(points, masks)
    if config.clustering_mode == "strong":
        clustering = strongly_connected_components(graph)
    else:
        clustering = weakly_connected_components(graph)
    tick("clustering")

    polarity = polarity_map(maps.mean_pos, maps.mean_neg, config.pivot_mode)
    magnitudes = None
    if config.positive_strategy == "sum":
        magnitudes = polarity_magnitudes(maps.mean_pos, maps.mean_neg)
    p_plus: list[int] = []
    for members in clustering.clusters:
        p_plus.extend(mask_growth(
            [masks.masks[l] for l in members], members, polarity, grid,
            mode=config.growth_mode, strategy=config.positive_strategy,
            magnitudes=magnitudes))
    tick("positive_gating")

    if config.overshoot:
        sc = self_consistency_scores(target, points, clustering, masks)
        p_sc = filter_overshooting(sc, clustering)
    else:
        p_sc = list(range(len(points)))
    tick("overshoot_gating")

    merged = merge_prediction(points, masks, p_plus, p_sc)
    prediction = resize_prediction(merged, episode.image_size)
    inter, union = _iou_counts(prediction, episode.target_gt)
    tick("merge")

    return EpisodeResult(
        episode_id=episode.id, prediction=prediction,
        intersection=inter, union=union,
        point_count=len(points), cluster_count=clustering.num_clusters,
        timings=timings,
        points_xy=points.image_points.copy(),
        clusters=clustering.component_of.copy(),
        class_id=episode.class_id, fold=episode.fold)


def evaluate(
    results: list[EpisodeResult],
    class_map: dict[str, int] | None = None,
    fold_map: dict[str, int] | None = None,
) -> Report:
    """Accumulated per-class IoU (sum of intersections over sum of unions)
    and unweighted mean over classes. A class whose accumulated union is zero
    scores 1.0 (prediction and GT both empty everywhere)."""
    acc: dict[int, list[int]] = {}
    fold_acc: dict[int, list[int]] = {}
    for r in results:
        if r.intersection is None or r.union is None:
            raise PipelineError(f"episode {r.episode_id} has no ground truth")
        cid = class_map[r.episode_id] if class_map else r.class_id
        acc.setdefault(cid, [0, 0])
        acc[cid][0] += r.intersection
        acc[cid][1] += r.union
        fold = fold_map.get(r.episode_id) if fold_map else r.fold
        if fold is not None:
            fold_acc.setdefault(fold, [0, 0])
            fold_acc[fold][0] += r.intersection
            fold_acc[fold][1] += r.union

    def ratio(i, u):
        return i / u if u > 0 else 1.0

    per_class = {cid: ratio(i, u) for cid, (i, u) in sorted(acc.items())}
    miou = float(np.mean(list(per_class.values()))) if per_class else 0.0
    per_fold = None
    if fold_acc:
        per_fold = {f: ratio(i, u) for f, (i, u) in sorted(fold_acc.items())}
    return Report(per_class_iou=per_class, miou=miou,
                  episode_count=len(results), per_fold=per_fold)
