"""Non-backtracking walks, graph powers, cycle indicators and cycle density.

A cycle of length k at x is a closed walk of k edges starting and ending at
x that is non-backtracking cyclically: no step reverses the previous one,
and the first edge is not the reverse of the last.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .graphs import GraphError, LabeledGraph, RadiusError, SchreierGraph, load_finite_graph
from .spectral import RamanujanReport, is_ramanujan_finite, rho_tree_exact
from .stallings import CoreAutomaton, fold, free_rank
from .walks import INT64_SAFE, lumped_counts
from .words import format_word, reduce

ENUMERATION_CAP = 10_000


def _edge_arrays(g: LabeledGraph):
    n, d = g.targets.shape
    valid = g.targets.ravel() >= 0
    tgt = g.targets.ravel()
    rev = np.where(valid, np.where(valid, g.targets.ravel(), 0) * d + g.reverse.ravel(), -1)
    return n, d, valid, tgt, rev


def _check_reach(g: LabeledGraph, x: int, k: int, what: str) -> None:
    if g.radius is not None and g.dist is not None:
        need = int(g.dist[x]) + k
        if need > g.radius:
            raise RadiusError(f"{what} at vertex {x} needs ball radius >= {need}, have {g.radius}")


def nb_counts_from(g: LabeledGraph, u: int, k: int) -> np.ndarray:
    """Non-backtracking walk counts of length k from ``u`` to every vertex."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_reach(g, u, k, "non-backtracking walks")
    n, d, valid, tgt, rev = _edge_arrays(g)
    dtype = np.int64 if d**k < INT64_SAFE else object
    cnt = np.zeros(n * d, dtype=dtype)
    cnt[u * d:(u + 1) * d] = valid[u * d:(u + 1) * d]
    safe_tgt = np.where(valid, tgt, 0)
    for _ in range(k - 1):
        arriving = np.zeros(n, dtype=dtype)
        np.add.at(arriving, safe_tgt[valid], cnt[valid])
        back = np.zeros(n * d, dtype=dtype)
        back[valid] = cnt[rev[valid]]
        cnt = np.where(valid, np.repeat(arriving, d) - back, 0).astype(dtype)
    out = np.zeros(n, dtype=dtype)
    np.add.at(out, safe_tgt[valid], cnt[valid])
    return out


def nb_walk_count(g: LabeledGraph, u: int, v: int, k: int) -> int:
    return int(nb_counts_from(g, u, k)[v])


@dataclass
class PowerGraph:
    """Multigraph on the base vertices; ``weights[u, v]`` counts NB k-walks."""

    base: LabeledGraph
    k: int
    weights: np.ndarray

    @property
    def degree(self) -> int:
        d = self.base.degree
        return d * (d - 1) ** (self.k - 1)

    def to_graph(self) -> LabeledGraph:
        W = self.weights
        n = W.shape[0]
        edges = []
        for u in range(n):
            for v in range(u + 1, n):
                if W[u, v]:
                    edges.append((u, v, int(W[u, v])))
            loops = int(W[u, u])
            if loops // 2:
                edges.append((u, u, loops // 2))
            if loops % 2:
                edges.append((u, u, 1, True))
        return load_finite_graph(edges, n)


def graph_power(g: LabeledGraph, k: int) -> PowerGraph:
    if not g.complete:
        raise GraphError("graph power needs a finite graph")
    if g.degree < 2:
        raise GraphError("graph power needs degree >= 2")
    n = g.n_vertices
    W = np.vstack([nb_counts_from(g, u, k) for u in range(n)]).astype(np.int64)
    pg = PowerGraph(g, k, W)
    rows = W.sum(axis=1)
    if not (rows == pg.degree).all():
        bad = int(np.nonzero(rows != pg.degree)[0][0])
        raise AssertionError(f"power graph row {bad} sums to {rows[bad]}, expected {pg.degree}")
    if not np.array_equal(W, W.T):
        raise AssertionError("power graph weights are not symmetric")
    return pg


@dataclass(frozen=True)
class PowerCheck:
    base: RamanujanReport
    power: RamanujanReport
    k: int

    @property
    def agree(self) -> bool:
        return self.base.ramanujan == self.power.ramanujan


def ramanujan_power_check(g: LabeledGraph, k: int, tol: float = 1e-9) -> PowerCheck:
    pg = graph_power(g, k)
    return PowerCheck(is_ramanujan_finite(g, tol), is_ramanujan_finite(pg.weights, tol, pg.degree), k)


# -- cycles ---------------------------------------------------------------------

def iter_cycles(g: LabeledGraph, x: int, k: int):
    """Yield cyclically non-backtracking closed walks of length k at ``x``."""
    _check_reach(g, x, (k + 1) // 2, "cycle search")
    d = g.degree
    stack = [(x, ())]
    while stack:
        v, path = stack.pop()
        if len(path) == k:
            if v == x and path[0] != g.reverse_edge(path[-1]):
                yield path
            continue
        forbid = g.reverse_edge(path[-1]) if path else None
        for j in range(d - 1, -1, -1):
            t = int(g.targets[v, j])
            if t < 0 or (v, j) == forbid:
                continue
            stack.append((t, path + ((v, j),)))


def cycle_indicator(g: LabeledGraph, x: int, k: int) -> tuple[int, tuple | None]:
    """(1, witness) if a length-k cycle is based at ``x``, else (0, None)."""
    for c in iter_cycles(g, x, k):
        return 1, c
    return 0, None


def cycle_indicator_upto(g: LabeledGraph, x: int, k: int) -> int:
    return max(cycle_indicator(g, x, j)[0] for j in range(1, k + 1))


@dataclass
class IndependenceCertificate:
    value: int | None  # 1, 0, or None when the enumeration cap was hit
    cycles_seen: int
    words: tuple = ()
    folded_rank: int | None = None
    pi1_rank: int | None = None
    witnesses: tuple = ()

    def validate(self) -> bool:
        """Re-fold the two words; rank 2 means they generate a free group of rank 2."""
        if self.value != 1:
            return False
        return free_rank(fold(self.words, self.pi1_rank)) == 2


def _spanning_tree(g: LabeledGraph, x: int, radius: int):
    parent_edge = {x: None}
    queue = deque([(x, 0)])
    while queue:
        v, r = queue.popleft()
        if r == radius:
            continue
        for j in range(g.degree):
            t = int(g.targets[v, j])
            if t >= 0 and t not in parent_edge:
                parent_edge[t] = (v, j)
                queue.append((t, r + 1))
    tree = set()
    for e in parent_edge.values():
        if e is not None:
            tree.add(e)
            tree.add(g.reverse_edge(e))
    return tree


def _cycle_word(g: LabeledGraph, cycle, tree: set, gen_index: dict) -> tuple:
    letters = []
    for e in cycle:
        if e in tree:
            continue
        r = g.reverse_edge(e)
        if r == e:
            raise GraphError("half-loops have no free fundamental-group generator")
        canon = min(e, r)
        if canon not in gen_index:
            gen_index[canon] = len(gen_index)
        letters.append(2 * gen_index[canon] + (0 if e == canon else 1))
    return reduce(letters)


def independent_cycles(g: LabeledGraph, x: int, k: int, cap: int = ENUMERATION_CAP) -> IndependenceCertificate:
    """Decide whether two length-k cycles at ``x`` generate a free group of rank 2.

    Cycles become words in the fundamental group through a BFS spanning tree
    of the ball of radius ceil(k/2) around ``x``.
    """
    tree = _spanning_tree(g, x, (k + 1) // 2)
    gen_index: dict = {}
    first = None
    first_cycle = None
    seen = 0
    for c in iter_cycles(g, x, k):
        seen += 1
        if seen > cap:
            return IndependenceCertificate(None, seen - 1)
        w = _cycle_word(g, c, tree, gen_index)
        if first is None:
            first, first_cycle = w, c
            continue
        # commuting is transitive among nontrivial free-group elements,
        # so testing against the first cycle suffices
        rank = max(1, len(gen_index))
        fr = free_rank(fold([first, w], rank))
        if fr == 2:
            return IndependenceCertificate(1, seen, (first, w), 2, rank, (first_cycle, c))
    return IndependenceCertificate(0, seen)


# -- cycle density ----------------------------------------------------------------

def _core_graph(A: CoreAutomaton) -> LabeledGraph:
    t = np.array(A.table, dtype=np.int64).reshape(A.n_states, 2 * A.rank)
    rev = np.where(t >= 0, np.arange(2 * A.rank)[None, :] ^ 1, -1)
    return LabeledGraph(targets=t, reverse=rev, kind="core", labeled=True, rank=A.rank)


def core_cycle_flags(A: CoreAutomaton, k: int) -> np.ndarray:
    """Cycle indicator (length <= k) on core states.

    Closed non-backtracking walks never enter the hanging trees of a coset
    graph, so the core alone decides the indicator; hanging vertices have 0.
    """
    core = _core_graph(A)
    return np.array([cycle_indicator_upto(core, s, k) for s in range(A.n_states)], dtype=np.uint8)


@dataclass
class DensitySeries:
    q: list
    k: int

    def cesaro(self, n: int) -> Fraction:
        if n < 1:
            raise ValueError("n must be >= 1")
        return sum(self.q[1:n + 1], Fraction(0)) / n

    def to_csv(self) -> str:
        lines = ["j,q_num,q_den,q_float"]
        for j, q in enumerate(self.q):
            lines.append(f"{j},{q.numerator},{q.denominator},{float(q):.15g}")
        return "\n".join(lines) + "\n"


def cycle_density_dp(graph, k: int, n_max: int) -> DensitySeries:
    """Exact q_j = P(X_j lies on a cycle of length <= k), j = 0..n_max."""
    if isinstance(graph, CoreAutomaton):
        graph = SchreierGraph(graph)
    if isinstance(graph, SchreierGraph):
        flags = core_cycle_flags(graph.automaton, k)
        lc = lumped_counts(graph, n_max)
        d = graph.degree
        q = [Fraction(int(sum(int(c) for c, f in zip(lc.core[j], flags) if f)), d**j)
             for j in range(n_max + 1)]
        return DensitySeries(q, k)

    g: LabeledGraph = graph
    if not g.complete:
        g.require_radius(n_max + k, "cycle density")
    d = g.degree
    reach = np.arange(g.n_vertices) if g.dist is None else np.nonzero(g.dist <= n_max)[0]
    flags = np.zeros(g.n_vertices, dtype=np.int64)
    for v in reach:
        flags[v] = cycle_indicator_upto(g, int(v), k)
    dtype = np.int64 if d**n_max < INT64_SAFE else object
    w = np.zeros(g.n_vertices, dtype=dtype)
    w[0] = 1
    q = []
    for j in range(n_max + 1):
        q.append(Fraction(int((w.astype(object) * flags).sum()), d**j))
        if j < n_max:
            w = _kernels.gather_sum(g.targets, w)
    return DensitySeries(q, k)


@dataclass
class MonteCarloSeries:
    estimates: np.ndarray
    stderr: np.ndarray
    walkers: int
    seed: int
    k: int

    def to_csv(self) -> str:
        lines = ["j,estimate,stderr"]
        for j, (e, s) in enumerate(zip(self.estimates, self.stderr)):
            lines.append(f"{j},{e:.15g},{s:.15g}")
        return "\n".join(lines) + "\n"


def cycle_density_mc(graph, k: int, n: int, walkers: int, seed: int,
                     backend: str | None = None) -> MonteCarloSeries:
    """Seeded simulation of q_j for j = 0..n.

    All letter choices are drawn up front from ``numpy.random.default_rng(seed)``
    so results do not depend on the backend or thread count.
    """
    if isinstance(graph, CoreAutomaton):
        graph = SchreierGraph(graph)
    rng = np.random.default_rng(seed)
    choices = rng.integers(0, graph.degree, size=(walkers, n), dtype=np.int64)
    if isinstance(graph, SchreierGraph):
        flags = core_cycle_flags(graph.automaton, k)
        table = np.array(graph.automaton.table, dtype=np.int64).reshape(-1, graph.degree)
        hits = _kernels.walk_schreier(table, flags, choices, backend)
    else:
        g: LabeledGraph = graph
        if not g.complete:
            g.require_radius(n + k, "cycle density simulation")
        flags = np.array([cycle_indicator_upto(g, v, k) if g.dist is None or g.dist[v] <= n else 0
                          for v in range(g.n_vertices)], dtype=np.uint8)
        hits = _kernels.walk_graph(g.targets, flags, choices, backend)
    est = hits.mean(axis=0, dtype=np.float64)
    se = np.sqrt(est * (1.0 - est) / walkers)
    return MonteCarloSeries(est, se, walkers, seed, k)


# -- stationarity -------------------------------------------------------------------

@dataclass(frozen=True)
class StationarityReport:
    base_preserved: bool
    power_preserved: bool
    k: int
    steps: int


def _uniform_preserved(A: np.ndarray, d: int, steps: int) -> bool:
    n = A.shape[0]
    mu = [Fraction(1, n)] * n
    for _ in range(steps):
        col = A.sum(axis=0)
        mu = [sum((mu[u] * int(A[u, v]) for u in range(n) if A[u, v]), Fraction(0)) / d
              for v in range(n)]
        if any(m != Fraction(1, n) for m in mu):
            return False
        if not (col == d).all():
            return False
    return True


def stationarity_check_finite(g: LabeledGraph, k: int = 2, steps: int = 1) -> StationarityReport:
    """Uniform root law is invariant under a walk step, on g and on its power."""
    if not g.complete:
        raise GraphError("stationarity check needs a finite graph")
    g.check_regular()
    A = g.adjacency()
    if not (A.sum(axis=1) == g.degree).all():
        raise GraphError("graph is not regular")
    pg = graph_power(g, k)
    return StationarityReport(_uniform_preserved(A, g.degree, steps),
                              _uniform_preserved(pg.weights, pg.degree, steps), k, steps)


def beta_bound() -> float:
    """The rank-2 free-basis value used for two independent cycles."""
    return rho_tree_exact(4).value


def describe_certificate(cert: IndependenceCertificate) -> dict:
    return {
        "D": cert.value,
        "cycles_seen": cert.cycles_seen,
        "words": [format_word(w) for w in cert.words],
        "folded_rank": cert.folded_rank,
    }
