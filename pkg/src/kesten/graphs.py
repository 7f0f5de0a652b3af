"""Rooted regular multigraphs: Cayley/Schreier balls and finite graphs.

Every graph is stored as a ``targets`` array of shape ``(n, d)``: slot ``j``
of vertex ``v`` leads to ``targets[v, j]`` (``-1`` when the edge leaves a
materialized ball).  ``reverse[v, j]`` is the slot of the reverse edge at the
target.  In labeled graphs slot ``j`` carries letter ``j`` and its reverse is
slot ``j ^ 1``.  The root is always vertex 0.
"""
from __future__ import annotations

import io
import os
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .stallings import CoreAutomaton, fold
from .words import SubgroupSpec, Word


class GraphError(ValueError):
    pass


class RadiusError(ValueError):
    """A computation needs a larger ball than the one supplied."""


@dataclass(eq=False)
class LabeledGraph:
    targets: np.ndarray
    reverse: np.ndarray
    kind: str = "finite"
    labeled: bool = False
    rank: int | None = None
    radius: int | None = None
    parent: np.ndarray | None = None
    parent_letter: np.ndarray | None = None
    dist: np.ndarray | None = None
    core_state: np.ndarray | None = None
    hang_depth: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return self.targets.shape[0]

    @property
    def degree(self) -> int:
        return self.targets.shape[1]

    @property
    def complete(self) -> bool:
        """True when no edge leaves the materialized vertex set."""
        return self.radius is None

    def reverse_edge(self, e: tuple[int, int]) -> tuple[int, int]:
        v, j = e
        return int(self.targets[v, j]), int(self.reverse[v, j])

    def word(self, v: int) -> Word:
        """Label word of the BFS tree path from the root to ``v``."""
        if self.parent is None:
            raise GraphError("graph carries no BFS tree words")
        out = []
        while v != 0:
            out.append(int(self.parent_letter[v]))
            v = int(self.parent[v])
        return tuple(reversed(out))

    def require_radius(self, r: int, what: str = "computation") -> None:
        if self.radius is not None and self.radius < r:
            raise RadiusError(f"{what} needs ball radius >= {r}, graph has radius {self.radius}")

    def adjacency(self) -> np.ndarray:
        """Dense adjacency counts; a full loop contributes 2, a half-loop 1."""
        if not self.complete:
            raise GraphError("adjacency of a truncated ball is not a finite graph")
        n, d = self.targets.shape
        A = np.zeros((n, n), dtype=np.int64)
        rows = np.repeat(np.arange(n), d)
        cols = self.targets.ravel()
        ok = cols >= 0
        np.add.at(A, (rows[ok], cols[ok]), 1)
        return A

    def edge_multiset(self) -> dict:
        """Undirected edge multiplicities ``{(u, v): m}`` with ``u <= v``.

        Loops are reported in slot units (2 per full loop, 1 per half-loop).
        """
        out: dict = {}
        n, d = self.targets.shape
        for v in range(n):
            for j in range(d):
                t = int(self.targets[v, j])
                if t < 0:
                    continue
                key = (min(v, t), max(v, t))
                out[key] = out.get(key, 0) + 1
        return {k: (m if k[0] == k[1] else m // 2) for k, m in out.items()}

    def check_regular(self) -> None:
        if (self.targets < 0).any() and self.complete:
            raise GraphError("complete graph has absent edges")
        d = self.degree
        n = self.n_vertices
        for v in range(n):
            for j in range(d):
                t = self.targets[v, j]
                if t < 0:
                    continue
                r = self.reverse[v, j]
                if self.targets[t, r] != v or self.reverse[t, r] != j:
                    raise GraphError(f"reverse pairing broken at edge ({v}, {j})")


# -- Schreier / Cayley graphs -------------------------------------------------

@dataclass(frozen=True)
class SchreierGraph:
    """The (possibly infinite) coset graph of ``automaton`` in the free group.

    Vertices are core states plus hanging tree branches grown lazily.
    """

    automaton: CoreAutomaton

    @property
    def rank(self) -> int:
        return self.automaton.rank

    @property
    def degree(self) -> int:
        return 2 * self.automaton.rank

    @property
    def is_cayley(self) -> bool:
        return self.automaton.n_states == 1 and self.automaton.n_edges() == 0

    @property
    def is_finite(self) -> bool:
        return all(t >= 0 for row in self.automaton.table for t in row)

    def ball(self, radius: int) -> LabeledGraph:
        return BallView(self, radius).graph()


def cayley_graph(rank: int) -> SchreierGraph:
    return SchreierGraph(fold(SubgroupSpec.trivial(rank)))


def schreier_graph(H: SubgroupSpec | CoreAutomaton) -> SchreierGraph:
    return SchreierGraph(H if isinstance(H, CoreAutomaton) else fold(H))


class BallView:
    """Materialized ball around the base coset; ``extend`` keeps vertex ids."""

    def __init__(self, source: SchreierGraph, radius: int = 0):
        if radius < 0:
            raise ValueError("radius must be >= 0")
        self.source = source
        A = source.automaton
        self._table = np.array(A.table, dtype=np.int64).reshape(A.n_states, 2 * A.rank)
        d = 2 * A.rank
        self.targets = np.full((1, d), -1, dtype=np.int64)
        self.parent = np.array([-1], dtype=np.int64)
        self.parent_letter = np.array([-1], dtype=np.int64)
        self.dist = np.array([0], dtype=np.int64)
        self.core_state = np.array([0], dtype=np.int64)
        self.attach = np.array([0], dtype=np.int64)
        self.hang_depth = np.array([0], dtype=np.int64)
        self.core_id = {0: 0}
        self.level_start = [0, 1]
        self.radius = 0
        self._close_core_level()
        self.extend(radius)

    def extend(self, radius: int) -> "BallView":
        while self.radius < radius:
            self._expand_level()
        return self

    def _expand_level(self) -> None:
        d = self.targets.shape[1]
        lo, hi = self.level_start[-2], self.level_start[-1]
        rows = np.arange(lo, hi)
        core = self.core_state[lo:hi]
        creates = np.zeros((hi - lo, d), dtype=bool)
        new_state = np.full((hi - lo, d), -1, dtype=np.int64)

        hang = core < 0
        creates[hang] = True
        back = self.parent_letter[lo:hi][hang] ^ 1
        creates[np.nonzero(hang)[0], back] = False

        claimed = {}
        for i in np.nonzero(~hang)[0]:
            s = int(core[i])
            for x in range(d):
                t = int(self._table[s, x])
                if t < 0:
                    creates[i, x] = True
                elif t not in self.core_id and t not in claimed:
                    creates[i, x] = True
                    new_state[i, x] = t
                    claimed[t] = (i, x)

        flat = creates.ravel()
        n_new = int(flat.sum())
        base = self.n_vertices
        ids = np.full(flat.shape, -1, dtype=np.int64)
        ids[flat] = base + np.arange(n_new)
        ids = ids.reshape(creates.shape)

        src_i, src_x = np.nonzero(creates)
        src_v = rows[src_i]
        st = new_state[src_i, src_x]
        par_core = core[src_i]
        self.targets = np.vstack([self.targets, np.full((n_new, d), -1, dtype=np.int64)])
        self.targets[src_v, src_x] = base + np.arange(n_new)
        self.targets[base + np.arange(n_new), src_x ^ 1] = src_v
        self.parent = np.concatenate([self.parent, src_v])
        self.parent_letter = np.concatenate([self.parent_letter, src_x])
        self.dist = np.concatenate([self.dist, np.full(n_new, self.radius + 1, dtype=np.int64)])
        self.core_state = np.concatenate([self.core_state, st])
        self.attach = np.concatenate([self.attach, np.where(st >= 0, st, self.attach[src_v])])
        self.hang_depth = np.concatenate(
            [self.hang_depth, np.where(st >= 0, 0, self.hang_depth[src_v] + 1)]
        )
        for t, (i, x) in claimed.items():
            self.core_id[t] = int(ids[i, x])

        # core-to-core edges from this level into already known core vertices
        for i in np.nonzero(~hang)[0]:
            v = int(rows[i])
            s = int(core[i])
            for x in range(d):
                t = int(self._table[s, x])
                if t >= 0 and not creates[i, x]:
                    u = self.core_id[t]
                    self.targets[v, x] = u
                    self.targets[u, x ^ 1] = v

        self.radius += 1
        self.level_start.append(self.n_vertices)
        self._close_core_level()

    def _close_core_level(self) -> None:
        lo, hi = self.level_start[-2], self.level_start[-1]
        d = self.targets.shape[1]
        for v in range(lo, hi):
            s = int(self.core_state[v])
            if s < 0:
                continue
            for x in range(d):
                t = int(self._table[s, x])
                if t >= 0 and t in self.core_id:
                    u = self.core_id[t]
                    self.targets[v, x] = u
                    self.targets[u, x ^ 1] = v

    @property
    def n_vertices(self) -> int:
        return self.targets.shape[0]

    def graph(self) -> LabeledGraph:
        src = self.source
        d = self.targets.shape[1]
        rev = np.where(self.targets >= 0, np.arange(d)[None, :] ^ 1, -1)
        complete = bool((self.targets >= 0).all())
        return LabeledGraph(
            targets=self.targets.copy(),
            reverse=rev,
            kind="cayley" if src.is_cayley else "schreier",
            labeled=True,
            rank=src.rank,
            radius=None if complete else self.radius,
            parent=self.parent.copy(),
            parent_letter=self.parent_letter.copy(),
            dist=self.dist.copy(),
            core_state=self.core_state.copy(),
            hang_depth=self.hang_depth.copy(),
            meta={"attach": self.attach.copy(), "automaton": src.automaton},
        )


def cayley_ball(rank: int, radius: int) -> LabeledGraph:
    return cayley_graph(rank).ball(radius)


def schreier_ball(H: SubgroupSpec | CoreAutomaton, radius: int) -> LabeledGraph:
    return schreier_graph(H).ball(radius)


# -- finite graphs ------------------------------------------------------------

def _parse_edge_text(text: str):
    n = d = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "vertices":
            if len(tok) != 4 or tok[2] != "degree":
                raise GraphError(f"line {lineno}: header must be 'vertices N degree d'")
            n, d = int(tok[1]), int(tok[3])
            continue
        if len(tok) not in (3, 4) or (len(tok) == 4 and tok[3] != "half"):
            raise GraphError(f"line {lineno}: expected 'u v multiplicity [half]'")
        try:
            u, v, m = int(tok[0]), int(tok[1]), int(tok[2])
        except ValueError:
            raise GraphError(f"line {lineno}: non-integer field") from None
        edges.append((u, v, m, len(tok) == 4))
    return n, d, edges


def load_finite_graph(source, n_vertices: int | None = None) -> LabeledGraph:
    """Build an unlabeled regular multigraph.

    ``source`` is a path, file text, or an iterable of ``(u, v, m)`` /
    ``(u, v, m, half)`` tuples.  Parallel edges and loops are paired in
    slot order, which fixes the non-backtracking semantics.
    """
    declared_d = None
    if isinstance(source, (str, os.PathLike)):
        text = str(source)
        if "\n" not in text and os.path.exists(text):
            with open(text) as fh:
                text = fh.read()
        n_decl, declared_d, edges = _parse_edge_text(text)
        n_vertices = n_vertices if n_vertices is not None else n_decl
    else:
        edges = [tuple(e) + (False,) * (4 - len(e)) for e in source]
    if n_vertices is None:
        n_vertices = 1 + max(max(u, v) for u, v, *_ in edges)

    slots: list[list] = [[] for _ in range(n_vertices)]
    for u, v, m, half in sorted(edges, key=lambda e: (min(e[0], e[1]), max(e[0], e[1]), e[3])):
        if not (0 <= u < n_vertices and 0 <= v < n_vertices):
            raise GraphError(f"edge ({u}, {v}) references a vertex outside 0..{n_vertices - 1}")
        if m < 0:
            raise GraphError(f"negative multiplicity on edge ({u}, {v})")
        for _ in range(m):
            if u == v:
                a = len(slots[u])
                if half:
                    slots[u].append((u, a))
                else:
                    slots[u].append((u, a + 1))
                    slots[u].append((u, a))
            else:
                a, b = len(slots[u]), len(slots[v])
                slots[u].append((v, b))
                slots[v].append((u, a))

    degs = [len(s) for s in slots]
    d = declared_d if declared_d is not None else (degs[0] if degs else 0)
    for v, dv in enumerate(degs):
        if dv != d:
            raise GraphError(f"graph is not {d}-regular: vertex {v} has degree {dv}")

    targets = np.array([[t for t, _ in s] for s in slots], dtype=np.int64).reshape(n_vertices, d)
    reverse = np.array([[r for _, r in s] for s in slots], dtype=np.int64).reshape(n_vertices, d)
    return LabeledGraph(targets=targets, reverse=reverse, kind="finite")


def dump_finite_graph(g: LabeledGraph) -> str:
    out = io.StringIO()
    out.write(f"vertices {g.n_vertices} degree {g.degree}\n")
    n, d = g.targets.shape
    full_loops: dict = {}
    half_loops: dict = {}
    for v in range(n):
        for j in range(d):
            if g.targets[v, j] == v:
                if g.reverse[v, j] == j:
                    half_loops[v] = half_loops.get(v, 0) + 1
                else:
                    full_loops[v] = full_loops.get(v, 0) + 1
    for (u, v), m in sorted(g.edge_multiset().items()):
        if u != v:
            out.write(f"{u} {v} {m}\n")
        else:
            if full_loops.get(u):
                out.write(f"{u} {u} {full_loops[u] // 2}\n")
            if half_loops.get(u):
                out.write(f"{u} {u} {half_loops[u]} half\n")
    return out.getvalue()


SHIPPED = ("petersen", "c5", "k5", "c4_doubled", "two_k4")


def load_shipped(name: str) -> LabeledGraph:
    if name not in SHIPPED:
        raise GraphError(f"unknown shipped graph {name!r}; choose from {', '.join(SHIPPED)}")
    text = resources.files("kesten.data").joinpath(f"{name}.txt").read_text()
    return load_finite_graph(text)


def cycle_graph(n: int) -> LabeledGraph:
    return load_finite_graph([(i, (i + 1) % n, 1) for i in range(n)], n)


def bfs_code(g: LabeledGraph) -> tuple:
    """Canonical code of a labeled graph: targets renumbered in BFS order."""
    if not g.labeled:
        raise GraphError("BFS codes are defined for labeled graphs")
    order = {0: 0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for t in g.targets[v]:
            t = int(t)
            if t >= 0 and t not in order:
                order[t] = len(order)
                queue.append(t)
    inv = sorted(order, key=order.get)
    return tuple(tuple(order[int(t)] if t >= 0 else -1 for t in g.targets[v]) for v in inv)


def labeled_from_permutations(perms: Sequence[Sequence[int]], root: int = 0) -> LabeledGraph:
    """Labeled graph in which generator ``i`` acts by ``perms[i]``."""
    rank = len(perms)
    n = len(perms[0])
    targets = np.full((n, 2 * rank), -1, dtype=np.int64)
    for i, p in enumerate(perms):
        for v in range(n):
            targets[v, 2 * i] = p[v]
            targets[p[v], 2 * i + 1] = v
    if root != 0:
        swap = np.arange(n)
        swap[0], swap[root] = root, 0
        targets = swap[targets[swap]]
    rev = np.broadcast_to(np.arange(2 * rank) ^ 1, targets.shape).copy()
    return LabeledGraph(targets=targets, reverse=rev, kind="schreier", labeled=True, rank=rank)


def iter_edges(g: LabeledGraph) -> Iterable[tuple[int, int]]:
    n, d = g.targets.shape
    for v in range(n):
        for j in range(d):
            if g.targets[v, j] >= 0:
                yield (v, j)
