"""Stallings folding of finitely generated subgroups of free groups."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .words import SubgroupSpec, Word, reduce


@dataclass(frozen=True)
class CoreAutomaton:
    """Folded core graph with base state 0.

    ``table[s][x]`` is the target of letter ``x`` from state ``s`` or -1.
    States are numbered by BFS from the base in letter order, so two
    automata of the same subgroup compare equal.
    """

    rank: int
    table: tuple

    @property
    def n_states(self) -> int:
        return len(self.table)

    def step(self, state: int, x: int) -> int:
        return self.table[state][x]

    def read(self, w: Sequence[int], state: int = 0) -> int:
        """State reached after reading ``w``, or -1 if the path falls off."""
        for x in w:
            state = self.table[state][x]
            if state < 0:
                return -1
        return state

    def n_edges(self) -> int:
        return sum(t >= 0 for row in self.table for t in row) // 2

    def missing_letters(self, state: int) -> list[int]:
        return [x for x, t in enumerate(self.table[state]) if t < 0]


def fold(H: SubgroupSpec | Iterable[Word], rank: int | None = None) -> CoreAutomaton:
    if isinstance(H, SubgroupSpec):
        rank = H.rank if rank is None else rank
        gens = H.generators
    else:
        gens = [reduce(w) for w in H]
    if rank is None:
        raise ValueError("rank is required when folding a bare word list")
    nletters = 2 * rank

    parent = [0]
    trans: list[dict[int, int]] = [{}]
    pending: list[tuple[int, int, int]] = []

    def new_state() -> int:
        parent.append(len(parent))
        trans.append({})
        return len(parent) - 1

    def find(v: int) -> int:
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    for w in gens:
        if not w:
            continue
        u = 0
        for i, x in enumerate(w):
            v = 0 if i == len(w) - 1 else new_state()
            pending.append((u, x, v))
            pending.append((v, x ^ 1, u))
            u = v

    while pending:
        u, x, v = pending.pop()
        u, v = find(u), find(v)
        t = trans[u].get(x)
        if t is None:
            trans[u][x] = v
            continue
        t = find(t)
        if t == v:
            continue
        # keep the smaller id so the base survives as 0
        keep, lose = (t, v) if t < v else (v, t)
        parent[lose] = keep
        moved = trans[lose]
        trans[lose] = {}
        for y, z in moved.items():
            pending.append((keep, y, z))

    live = {find(v) for v in range(len(parent))}
    adj = {v: {x: find(t) for x, t in trans[v].items()} for v in live}

    # trim hanging non-base leaves; the subgroup is unchanged
    leaves = deque(v for v in adj if v != 0 and len(adj[v]) == 1)
    while leaves:
        v = leaves.popleft()
        if v not in adj or len(adj[v]) != 1:
            continue
        (x, t), = adj[v].items()
        del adj[v]
        adj[t].pop(x ^ 1, None)
        if t != 0 and len(adj[t]) == 1:
            leaves.append(t)

    return _canonical(adj, rank, nletters)


def _canonical(adj: dict, rank: int, nletters: int) -> CoreAutomaton:
    order = {0: 0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for x in range(nletters):
            t = adj[v].get(x)
            if t is not None and t not in order:
                order[t] = len(order)
                queue.append(t)
    table = [[-1] * nletters for _ in range(len(order))]
    for v, i in order.items():
        for x, t in adj[v].items():
            table[i][x] = order[t]
    return CoreAutomaton(rank, tuple(tuple(row) for row in table))


def from_permutations(perms: Sequence[Sequence[int]], root: int = 0) -> CoreAutomaton:
    """Automaton of the stabilizer of ``root`` under generator permutations.

    ``perms[i][v]`` is the image of vertex ``v`` under generator ``i``.
    The coset graph is finite, so it is already folded and core.
    """
    rank = len(perms)
    n = len(perms[0])
    adj = {v: {} for v in range(n)}
    for i, p in enumerate(perms):
        for v in range(n):
            adj[v][2 * i] = p[v]
            adj[p[v]][2 * i + 1] = v
    relabel = {root: 0, 0: root} if root != 0 else {}
    if relabel:
        adj = {relabel.get(v, v): {x: relabel.get(t, t) for x, t in d.items()} for v, d in adj.items()}
    return _canonical(adj, rank, 2 * rank)


def member(A: CoreAutomaton, w: Sequence[int]) -> bool:
    """``w`` (reduced) lies in the subgroup iff reading it returns to base."""
    return A.read(w) == 0


def intersect_power_ball(A: CoreAutomaton, m: int) -> frozenset:
    """Subgroup elements among nonidentity reduced words of length <= m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    found = []
    stack = [(0, ())]
    while stack:
        state, w = stack.pop()
        if w and state == 0:
            found.append(w)
        if len(w) == m:
            continue
        last = w[-1] ^ 1 if w else -1
        for x, t in enumerate(A.table[state]):
            if t >= 0 and x != last:
                stack.append((t, w + (x,)))
    return frozenset(found)


def free_rank(A: CoreAutomaton) -> int:
    return A.n_edges() - A.n_states + 1


def is_free_basis(words: Iterable[Word], rank: int) -> bool:
    """True if the symmetric set ``words`` is {w1^±1, ..., wr^±1} for a free basis."""
    ws = set(words)
    if not ws or any(tuple(x ^ 1 for x in reversed(w)) not in ws for w in ws):
        return False
    return len(ws) == 2 * free_rank(fold(ws, rank))
