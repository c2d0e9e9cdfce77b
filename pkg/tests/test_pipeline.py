import numpy as np
import pytest

from gfseg.episode import BinaryMask, Episode, FeatureMap
from gfseg.errors import PipelineError
from gfseg.gating import GateConfig
from gfseg.pipeline import EpisodeResult, evaluate, run_episode
from gfseg.providers import OracleProvider
from gfseg.synthetic import make_episode


def test_easy_zero_noise_is_exact():
    episode, scene = make_episode(1, "easy", noise_sigma=0.0)
    provider = OracleProvider(ambiguity="instance", scenes={episode.id: scene})
    result = run_episode(episode, provider)
    assert result.union is not None and result.intersection == result.union
    assert result.point_count > 0


def test_all_zero_filtered_short_circuits():
    # target features orthogonal to the reference foreground and identical
    # to the reference background: filtered map collapses to zero
    c = 4
    fg = np.zeros(c, dtype=np.float32); fg[0] = 1
    bg = np.zeros(c, dtype=np.float32); bg[1] = 1
    target = FeatureMap(np.tile(bg, (4, 4, 1)))
    ref_data = np.tile(bg, (4, 4, 1))
    ref_data[:2, :2] = fg
    mask = np.zeros((4, 4), dtype=np.uint8); mask[:2, :2] = 1
    episode = Episode(
        id="zero", target_features=target,
        references=[(FeatureMap(ref_data), BinaryMask(mask))],
        class_id=1, image_size=(16, 16), provider_size=(16, 16),
        target_gt=BinaryMask(np.zeros((16, 16), dtype=np.uint8)))
    provider = OracleProvider()
    result = run_episode(episode, provider)
    assert result.point_count == 0
    assert result.prediction.count() == 0
    assert provider.calls == {}
    assert result.intersection == 0 and result.union == 0


def test_rerun_is_identical():
    episode, scene = make_episode(2, "ambiguous", noise_sigma=0.1)
    provider = OracleProvider(ambiguity="mixed", scenes={episode.id: scene})
    r1 = run_episode(episode, provider)
    r2 = run_episode(episode, provider)
    np.testing.assert_array_equal(r1.prediction.data, r2.prediction.data)
    np.testing.assert_array_equal(r1.points_xy, r2.points_xy)
    np.testing.assert_array_equal(r1.clusters, r2.clusters)
    assert (r1.intersection, r1.union) == (r2.intersection, r2.union)
    assert provider.calls[episode.id] == 2  # two deliberate runs


def test_provider_called_once_per_episode():
    episode, scene = make_episode(3, "easy", noise_sigma=0.1)
    provider = OracleProvider(ambiguity="mixed", scenes={episode.id: scene})
    run_episode(episode, provider)
    assert provider.calls == {episode.id: 1}


def test_prediction_inside_mask_union():
    from gfseg.alignment import (build_similarity_maps, compute_correlation,
                                 select_points)
    from gfseg.resample import mask_to_grid, resize_prediction
    from gfseg.synthetic import oracle_masks

    episode, scene = make_episode(4, "multi-instance", noise_sigma=0.1)
    provider = OracleProvider(ambiguity="mixed", scenes={episode.id: scene})
    result = run_episode(episode, provider)

    grid = (episode.target_features.h, episode.target_features.w)
    refs = [(fm, mask_to_grid(m, (fm.h, fm.w))) for fm, m in episode.references]
    maps = build_similarity_maps(compute_correlation(episode.target_features, refs))
    points = select_points(maps, grid, episode.provider_size)
    masks = oracle_masks(scene, points, "mixed")
    union = np.zeros(episode.provider_size, dtype=np.uint8)
    for m in masks.masks:
        union |= m.data
    union_img = resize_prediction(BinaryMask(union), episode.image_size).data
    assert not (result.prediction.data & ~union_img).any()


def test_timings_cover_wall_clock():
    import time

    episode, scene = make_episode(5, "easy", noise_sigma=0.1)
    provider = OracleProvider(ambiguity="mixed", scenes={episode.id: scene})
    t0 = time.perf_counter()
    result = run_episode(episode, provider)
    wall = (time.perf_counter() - t0) * 1000.0
    staged = sum(result.timings.values())
    assert staged <= wall
    assert staged >= 0.5 * wall  # stages dominate the call
    expected = {"correlation", "similarity", "selection", "provider",
                "clustering", "positive_gating", "overshoot_gating", "merge"}
    assert set(result.timings) == expected


def counts_result(eid, cid, inter, union, fold=None):
    return EpisodeResult(
        episode_id=eid, prediction=None, intersection=inter, union=union,
        point_count=0, cluster_count=0, timings={},
        points_xy=np.zeros((0, 2), np.int32), clusters=np.zeros((0,), np.int32),
        class_id=cid, fold=fold)


def test_evaluate_perfect_prediction():
    report = evaluate([counts_result("a", 1, 10, 10),
                       counts_result("b", 2, 4, 4)])
    assert report.miou == 1.0
    assert report.per_class_iou == {1: 1.0, 2: 1.0}
    assert report.episode_count == 2


def test_evaluate_all_background_prediction():
    report = evaluate([counts_result("a", 1, 0, 25)])
    assert report.per_class_iou[1] == 0.0


def test_evaluate_hand_arithmetic():
    report = evaluate([counts_result("a", 1, 3, 6),
                       counts_result("b", 2, 1, 4)])
    assert report.miou == pytest.approx((0.5 + 0.25) / 2)


def test_evaluate_accumulates_within_class():
    report = evaluate([counts_result("a", 1, 3, 6),
                       counts_result("b", 1, 1, 4)])
    assert report.per_class_iou[1] == pytest.approx(4 / 10)


def test_evaluate_zero_union_class():
    report = evaluate([counts_result("a", 1, 0, 0)])
    assert report.per_class_iou[1] == 1.0


def test_evaluate_missing_gt_raises():
    with pytest.raises(PipelineError):
        evaluate([counts_result("a", 1, None, None)])


def test_evaluate_per_fold():
    report = evaluate([counts_result("a", 1, 1, 2, fold=0),
                       counts_result("b", 2, 3, 4, fold=1)])
    assert report.per_fold == {0: 0.5, 1: 0.75}


def test_ablation_configs_run_cleanly():
    # every ablation switch still yields the exact result on a clean episode
    episode, scene = make_episode(6, "easy", noise_sigma=0.0)
    provider = OracleProvider(ambiguity="instance", scenes={episode.id: scene})
    for config in (GateConfig(clustering_mode="strong"),
                   GateConfig(positive_strategy="sum"),
                   GateConfig(growth_mode="off", overshoot=False),
                   GateConfig(pivot_mode="mid_only")):
        result = run_episode(episode, provider, config)
        assert result.intersection == result.union
