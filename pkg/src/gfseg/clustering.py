"""Coverage graph over prompt points and its component decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alignment import PointSet


@dataclass(frozen=True)
class CoverageGraph:
    """Directed simple graph; edge l->m means mask l covers point m (m != l)."""

    n: int
    edges: list[list[int]]  # adjacency lists, each sorted ascending


@dataclass(frozen=True)
class Clustering:
    """Partition of the vertices; clusters ordered by smallest member."""

    component_of: np.ndarray  # (n,) int32
    clusters: list[list[int]]

    @property
    def num_clusters(self) -> int:
        return len(self.clusters)


def build_coverage_graph(points: PointSet, masks) -> CoverageGraph:
    """Edge l->m iff masks[l] is 1 at image point m, evaluated at full mask
    resolution."""
    n = len(points)
    if len(masks.masks) != n:
        raise ValueError(f"{len(masks.masks)} masks for {n} points")
    H, W = masks.resolution
    xs = points.image_points[:, 0]
    ys = points.image_points[:, 1]
    if n and (xs.min() < 0 or xs.max() >= W or ys.min() < 0 or ys.max() >= H):
        raise ValueError("image point outside mask bounds; resolution mismatch")
    edges: list[list[int]] = []
    for l in range(n):
        covered = masks.masks[l].data[ys, xs] == 1
        covered[l] = False
        edges.append(np.flatnonzero(covered).tolist())
    return CoverageGraph(n=n, edges=edges)


def _partition(labels: list[int], n: int) -> Clustering:
    """Group vertices by label; renumber clusters by smallest contained vertex."""
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(labels[v], []).append(v)
    clusters = sorted(groups.values(), key=lambda g: g[0])
    component_of = np.zeros(n, dtype=np.int32)
    for ci, members in enumerate(clusters):
        for v in members:
            component_of[v] = ci
    return Clustering(component_of=component_of, clusters=clusters)


def weakly_connected_components(g: CoverageGraph) -> Clustering:
    """Components of the undirected version of g, via union-find with path
    compression and union by size."""
    parent = list(range(g.n))
    size = [1] * g.n

    def find(v: int) -> int:
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    for u in range(g.n):
        for v in g.edges[u]:
            ru, rv = find(u), find(v)
            if ru != rv:
                if size[ru] < size[rv]:
                    ru, rv = rv, ru
                parent[rv] = ru
                size[ru] += size[rv]
    return _partition([find(v) for v in range(g.n)], g.n)


def strongly_connected_components(g: CoverageGraph) -> Clustering:
    """Maximal sets with mutual directed reachability (iterative Tarjan)."""
    n = g.n
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    label = [-1] * n
    counter = 0
    n_comps = 0

    for root in range(n):
        if index[root] != -1:
            continue
        work: list[tuple[int, int]] = [(root, 0)]
        while work:
            v, i = work[-1]
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while i < len(g.edges[v]):
                w = g.edges[v][i]
                i += 1
                if index[w] == -1:
                    work[-1] = (v, i)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    label[w] = n_comps
                    if w == v:
                        break
                n_comps += 1
            if work:
                pv, _ = work[-1]
                low[pv] = min(low[pv], low[v])
    return _partition(label, n)
