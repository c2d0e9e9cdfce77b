import numpy as np
import pytest

from gfseg.alignment import PointSet
from gfseg.clustering import (CoverageGraph, build_coverage_graph,
                              strongly_connected_components,
                              weakly_connected_components)
from gfseg.episode import BinaryMask
from gfseg.providers import MaskSet

import oracles


def make_points(coords, image_coords):
    n = len(coords)
    return PointSet(
        grid_points=np.array(coords, dtype=np.int32).reshape(n, 2),
        image_points=np.array(image_coords, dtype=np.int32).reshape(n, 2),
        scores=np.linspace(1, 0.5, n).astype(np.float32),
    )


def mask_from_points(res, covered_xy):
    m = np.zeros(res, dtype=np.uint8)
    for x, y in covered_xy:
        m[y, x] = 1
    return BinaryMask(m)


def test_singleton_graph():
    points = make_points([(0, 0)], [(1, 1)])
    masks = MaskSet([mask_from_points((4, 4), [(1, 1)])], (4, 4))
    g = build_coverage_graph(points, masks)
    assert g.n == 1 and g.edges == [[]]


def test_coverage_rule_and_no_self_loops():
    points = make_points([(0, 0), (0, 1)], [(0, 0), (2, 2)])
    mask0 = mask_from_points((4, 4), [(0, 0), (2, 2)])  # covers both
    mask1 = mask_from_points((4, 4), [(2, 2)])          # covers only its own
    g = build_coverage_graph(points, MaskSet([mask0, mask1], (4, 4)))
    assert g.edges == [[1], []]


def test_disjoint_masks_no_edges():
    points = make_points([(0, 0), (1, 1), (2, 2)], [(0, 0), (1, 1), (2, 2)])
    masks = MaskSet(
        [mask_from_points((4, 4), [(i, i)]) for i in range(3)], (4, 4))
    g = build_coverage_graph(points, masks)
    assert g.edges == [[], [], []]
    assert weakly_connected_components(g).num_clusters == 3


def test_out_of_bounds_point_raises():
    points = make_points([(0, 0)], [(9, 9)])
    masks = MaskSet([mask_from_points((4, 4), [])], (4, 4))
    with pytest.raises(ValueError):
        build_coverage_graph(points, masks)


def test_wcc_edgeless():
    g = CoverageGraph(n=5, edges=[[] for _ in range(5)])
    c = weakly_connected_components(g)
    assert c.clusters == [[0], [1], [2], [3], [4]]
    assert c.component_of.tolist() == [0, 1, 2, 3, 4]


def test_wcc_ignores_direction():
    g = CoverageGraph(n=3, edges=[[1], [], [1]])
    c = weakly_connected_components(g)
    assert c.clusters == [[0, 1, 2]]


def test_wcc_invariant_under_edge_reversal():
    rng = np.random.default_rng(5)
    for _ in range(30):
        n = int(rng.integers(2, 40))
        edges = [sorted(set(rng.integers(0, n, size=rng.integers(0, 4)).tolist())
                        - {u}) for u in range(n)]
        g = CoverageGraph(n=n, edges=edges)
        rev = [[] for _ in range(n)]
        for u, vs in enumerate(edges):
            for v in vs:
                rev[v].append(u)
        rev = [sorted(set(vs)) for vs in rev]
        assert (weakly_connected_components(g).clusters
                == weakly_connected_components(CoverageGraph(n, rev)).clusters)


def test_scc_no_cycle():
    g = CoverageGraph(n=2, edges=[[1], []])
    assert strongly_connected_components(g).clusters == [[0], [1]]


def test_scc_two_cycle():
    g = CoverageGraph(n=2, edges=[[1], [0]])
    assert strongly_connected_components(g).clusters == [[0, 1]]


def random_graph(rng, n_max=60, density=0.1):
    n = int(rng.integers(1, n_max + 1))
    edges = []
    for u in range(n):
        row = np.flatnonzero(rng.random(n) < density).tolist()
        edges.append([v for v in row if v != u])
    return CoverageGraph(n=n, edges=edges)


def test_random_graphs_match_oracles():
    rng = np.random.default_rng(6)
    for _ in range(100):
        g = random_graph(rng)
        wcc = weakly_connected_components(g)
        scc = strongly_connected_components(g)
        assert wcc.clusters == oracles.undirected_components(g.n, g.edges)
        assert scc.clusters == oracles.strong_components_closure(g.n, g.edges)
        # refinement: every SCC lies inside exactly one WCC
        for comp in scc.clusters:
            owners = {wcc.component_of[v] for v in comp}
            assert len(owners) == 1


def test_partition_properties():
    rng = np.random.default_rng(7)
    g = random_graph(rng, n_max=100, density=0.05)
    for clustering in (weakly_connected_components(g),
                       strongly_connected_components(g)):
        seen = sorted(v for cl in clustering.clusters for v in cl)
        assert seen == list(range(g.n))
        mins = [cl[0] for cl in clustering.clusters]
        assert mins == sorted(mins)
        for ci, cl in enumerate(clustering.clusters):
            assert all(clustering.component_of[v] == ci for v in cl)
