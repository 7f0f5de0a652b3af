"""Realize a finite 2r-regular graph as a coset graph of a subgroup of F_r.

An Euler circuit orients every edge so each vertex has r outgoing and r
incoming arcs.  The resulting r-regular bipartite multigraph splits into r
perfect matchings; matching i is the action of generator i.  The subgroup
is the stabilizer of vertex 0, read off a spanning tree of that action.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.optimize import linear_sum_assignment

from .graphs import GraphError, LabeledGraph, bfs_code, labeled_from_permutations, schreier_ball
from .spectral import is_connected
from .stallings import fold
from .words import SubgroupSpec, inverse, reduce


@dataclass
class Realization:
    subgroup: SubgroupSpec
    permutations: list
    labeled: LabeledGraph
    bfs_match: bool
    edges_match: bool

    @property
    def verified(self) -> bool:
        return self.bfs_match and self.edges_match


def _orient(g: LabeledGraph) -> list[tuple[int, int]]:
    """Arcs of an Euler circuit from vertex 0; each undirected edge once."""
    M = nx.MultiGraph()
    M.add_nodes_from(range(g.n_vertices))
    for v in range(g.n_vertices):
        for j in range(g.degree):
            t, r = int(g.targets[v, j]), int(g.reverse[v, j])
            if (v, j) < (t, r):
                M.add_edge(v, t)
    return [(u, v) for u, v, *_ in nx.eulerian_circuit(M, source=0, keys=True)]


def _split_matchings(arcs: list[tuple[int, int]], n: int, r: int) -> list[list[int]]:
    mult = np.zeros((n, n), dtype=np.int64)
    for u, v in arcs:
        mult[u, v] += 1
    perms = []
    for _ in range(r):
        # a regular bipartite multigraph always has a perfect matching
        rows, cols = linear_sum_assignment((mult > 0).astype(np.int64), maximize=True)
        if not (mult[rows, cols] > 0).all():
            raise AssertionError("regular bipartite graph without a perfect matching")
        mult[rows, cols] -= 1
        perm = [0] * n
        for u, v in zip(rows, cols):
            perm[int(u)] = int(v)
        perms.append(perm)
    return perms


def _stabilizer_generators(lg: LabeledGraph) -> list[tuple]:
    path = {0: ()}
    tree = set()
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for x in range(lg.degree):
            t = int(lg.targets[v, x])
            if t not in path:
                path[t] = path[v] + (x,)
                tree.add((v, x))
                tree.add((t, x ^ 1))
                queue.append(t)
    gens = []
    for v in range(lg.n_vertices):
        for x in range(0, lg.degree, 2):
            if (v, x) in tree:
                continue
            t = int(lg.targets[v, x])
            gens.append(reduce(path[v] + (x,) + inverse(path[t])))
    return gens


def _diameter(lg: LabeledGraph) -> int:
    best = 0
    for s in range(lg.n_vertices):
        dist = {s: 0}
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for t in lg.targets[v]:
                t = int(t)
                if t not in dist:
                    dist[t] = dist[v] + 1
                    queue.append(t)
        best = max(best, max(dist.values()))
    return best


def schreier_realization(g: LabeledGraph) -> Realization:
    if not g.complete:
        raise GraphError("realization needs a finite graph")
    d = g.degree
    if d % 2:
        raise GraphError(f"degree {d} is odd; only 2r-regular graphs are coset graphs of F_r")
    if d == 0:
        raise GraphError("degree 0 graphs have no generators")
    for v in range(g.n_vertices):
        for j in range(d):
            if int(g.targets[v, j]) == v and int(g.reverse[v, j]) == j:
                raise GraphError(f"vertex {v} carries a half-loop, which no generator can produce")
    if not is_connected(g):
        raise GraphError("graph is not connected")
    r = d // 2
    perms = _split_matchings(_orient(g), g.n_vertices, r)
    lg = labeled_from_permutations(perms)
    H = SubgroupSpec(r, tuple(_stabilizer_generators(lg)))
    ball = schreier_ball(fold(H), _diameter(lg) + 1)
    bfs_match = ball.complete and bfs_code(ball) == bfs_code(lg)
    edges_match = lg.edge_multiset() == g.edge_multiset()
    return Realization(H, perms, lg, bfs_match, edges_match)
