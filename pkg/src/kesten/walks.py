"""Exact return-walk counts, trace measures and the quasi-invariance check.

All counts are exact integers.  Vectors use int64 while the largest
possible value fits, and Python ints (object arrays) beyond that.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .graphs import LabeledGraph, RadiusError, SchreierGraph
from .stallings import CoreAutomaton
from .words import Word, format_word, multiply, shortlex_key

INT64_SAFE = 2**62


class MeasureError(ValueError):
    """The requested measure has no mass to normalize (no return walks)."""


def _count_dtype(degree: int, n: int):
    return np.int64 if max(n, 1) * degree**n < INT64_SAFE else object


def _as_graph(graph, n: int) -> LabeledGraph:
    """Resolve a SchreierGraph to a ball big enough for length-n return walks."""
    if isinstance(graph, SchreierGraph):
        return graph.ball((n + 1) // 2)
    graph.require_radius((n + 1) // 2, f"return walks of length {n}")
    return graph


def vertex_counts(graph: LabeledGraph, steps: int) -> list[np.ndarray]:
    """``W_t(v)`` = number of length-t walks from the root to ``v``, t = 0..steps."""
    dtype = _count_dtype(graph.degree, steps)
    w = np.zeros(graph.n_vertices, dtype=dtype)
    w[0] = 1
    out = [w]
    for _ in range(steps):
        w = _kernels.gather_sum(graph.targets, w)
        out.append(w)
    return out


# -- lumped counts on coset graphs ---------------------------------------------

@dataclass
class LumpedCounts:
    """Walk counts on a coset graph, hanging branches lumped by (attach state, depth).

    ``core[t][s]`` counts walks of length t ending at core state ``s``;
    ``hang[t][s, h]`` counts those ending at depth ``h`` below ``s``.
    """

    core: list
    hang: list


def lumped_counts(sg: SchreierGraph, steps: int) -> LumpedCounts:
    A = sg.automaton
    d = sg.degree
    c = A.n_states
    M = np.zeros((c, c), dtype=object)
    missing = np.zeros(c, dtype=object)
    for s, row in enumerate(A.table):
        for t in row:
            if t >= 0:
                M[s, t] += 1
            else:
                missing[s] += 1
    core = np.zeros(c, dtype=object)
    core[0] = 1
    hang = np.zeros((c, steps + 2), dtype=object)
    cores, hangs = [core], [hang]
    for _ in range(steps):
        new_core = M.T.dot(core) + hang[:, 1]
        new_hang = np.zeros_like(hang)
        new_hang[:, 1] = core * missing + hang[:, 2]
        new_hang[:, 2:-1] = hang[:, 1:-2] * (d - 1) + hang[:, 3:]
        core, hang = new_core, new_hang
        cores.append(core)
        hangs.append(hang)
    return LumpedCounts(cores, hangs)


def return_counts(graph, n: int) -> list[int]:
    """``[|A(0)|, |A(1)|, ..., |A(n)|]`` for the root of ``graph``."""
    if isinstance(graph, SchreierGraph):
        lc = lumped_counts(graph, n)
        return [int(c[0]) for c in lc.core]
    graph.require_radius((n + 1) // 2, f"return walks of length {n}")
    ws = vertex_counts(graph, n)
    return [int(w[0]) for w in ws]


def return_count(graph, n: int) -> int:
    """Exact number of length-n walks from the root back to the root."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if isinstance(graph, SchreierGraph):
        return return_counts(graph, n)[-1]
    graph = _as_graph(graph, n)
    half = n // 2
    ws = vertex_counts(graph, n - half)
    # symmetric graph: W_n(root, root) = sum_v W_half(v) W_{n-half}(v)
    a, b = ws[half], ws[n - half]
    if graph.degree**n < INT64_SAFE:
        return int(a @ b)
    return int(np.dot(a.astype(object), b.astype(object)))


def passage_counts(graph, n: int) -> np.ndarray:
    """``N[i, v]`` = number of length-n return walks with ``w(i) = v``, i = 0..n.

    Row 0 is included for convenience; the trace measure uses rows 1..n.
    """
    graph = _as_graph(graph, n)
    ws = vertex_counts(graph, n)
    N = np.empty((n + 1, graph.n_vertices), dtype=ws[0].dtype)
    for i in range(n + 1):
        N[i] = ws[i] * ws[n - i]
    return N


def _key(graph: LabeledGraph, v: int):
    return graph.word(v) if graph.kind == "cayley" else v


@dataclass(frozen=True)
class TraceMeasure:
    """Finitely supported probability measure with exact rational masses."""

    support: dict
    n: int
    kind: str = "mu"

    def __getitem__(self, key) -> Fraction:
        return self.support.get(key, Fraction(0))

    def mass(self, keys: Iterable) -> Fraction:
        return sum((self[k] for k in set(keys)), Fraction(0))

    def total(self) -> Fraction:
        return sum(self.support.values(), Fraction(0))

    def sorted_items(self) -> list:
        def order(item):
            k = item[0]
            return shortlex_key(k) if isinstance(k, tuple) else (0, k)

        return sorted(self.support.items(), key=order)

    def to_csv(self) -> str:
        lines = ["element,numerator,denominator"]
        for k, q in self.sorted_items():
            name = format_word(k) if isinstance(k, tuple) else str(k)
            lines.append(f"{name},{q.numerator},{q.denominator}")
        return "\n".join(lines) + "\n"


def occupation_numerators(graph, n: int) -> tuple[LabeledGraph, np.ndarray, int]:
    """Per-vertex ``sum_{i=1..n} N_i(v)`` and the normalizer ``n |A(n)|``."""
    graph = _as_graph(graph, n)
    N = passage_counts(graph, n)
    total = int(N[n, 0])
    if total == 0:
        raise MeasureError(f"no return walks of length {n}; the trace measure is undefined")
    num = N[1:].sum(axis=0)
    return graph, num, n * total


def trace_measure(graph, n: int) -> TraceMeasure:
    """mu_n: expected fraction of time a uniform length-n return walk spends at each vertex."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g, num, den = occupation_numerators(graph, n)
    nz = np.nonzero(num)[0]
    support = {_key(g, int(v)): Fraction(int(num[v]), den) for v in nz}
    return TraceMeasure(support, n, "mu")


def nu_measure(graph, n: int) -> TraceMeasure:
    """nu_n: uniform average of mu_{2k} over k = n+1 .. 2n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(graph, SchreierGraph):
        graph = graph.ball(2 * n)
    acc: dict = {}
    for k in range(n + 1, 2 * n + 1):
        for key, q in trace_measure(graph, 2 * k).support.items():
            acc[key] = acc.get(key, Fraction(0)) + q
    return TraceMeasure({k: q / n for k, q in acc.items()}, n, "nu")


def rho_sq_ratio_lower(graph, j: int) -> Fraction:
    """Rational lower bound ``|A(2j+2)| / (|S|^2 |A(2j)|) <= rho^2``."""
    counts = return_counts(graph, 2 * j + 2)
    d = graph.degree
    if counts[2 * j] == 0:
        raise MeasureError(f"no return walks of length {2 * j}")
    return Fraction(counts[2 * j + 2], d * d * counts[2 * j])


@dataclass(frozen=True)
class QInvReport:
    n: int
    nu_As: Fraction
    nu_A: Fraction
    rho_sq_lower: Fraction
    subtrahend: Fraction
    margin: Fraction

    @property
    def holds(self) -> bool:
        return self.margin >= 0


def _shift(graph: LabeledGraph, key, s: int):
    if graph.kind == "cayley":
        return multiply(key, (s,))
    t = int(graph.targets[key, s])
    if t < 0:
        raise RadiusError(f"vertex {key} has no edge in slot {s} inside the ball")
    return t


def quasi_invariance_margin(graph, A: Iterable, s: int, n: int,
                            rho_sq_lower: Fraction | None = None) -> QInvReport:
    """Slack in ``nu_n(As) >= n nu_n(A) / ((n+1) |S|^2 rho^2) - 1/n``.

    ``rho_sq_lower`` must be a certified lower bound on rho^2; by default the
    ratio bound at ``j = 2n`` is used, which only enlarges the subtrahend.
    """
    if isinstance(graph, SchreierGraph):
        ball = graph.ball(2 * n + 1)
        if rho_sq_lower is None:
            rho_sq_lower = rho_sq_ratio_lower(graph, 2 * n)
    else:
        ball = graph
        if rho_sq_lower is None:
            j = 2 * n if ball.radius is None else ball.radius - 1
            if j < 1:
                raise RadiusError("quasi-invariance check needs ball radius >= 2")
            rho_sq_lower = rho_sq_ratio_lower(ball, j)
    nu = nu_measure(ball, n)
    A = list(A)
    As = {_shift(ball, a, s) for a in A}
    nu_A = nu.mass(A)
    nu_As = nu.mass(As)
    d = ball.degree
    sub = Fraction(n) * nu_A / ((n + 1) * d * d * rho_sq_lower) - Fraction(1, n)
    return QInvReport(n, nu_As, nu_A, rho_sq_lower, sub, nu_As - sub)


def nonchanging_times(w: Sequence[int], A: CoreAutomaton) -> set[int]:
    """Times t (1-based) at which step t keeps the walk in the same coset."""
    out = set()
    state: tuple[int, tuple] = (0, ())
    for t, x in enumerate(w, 1):
        nxt = _coset_step(A, state, x)
        if nxt == state:
            out.add(t)
        state = nxt
    return out


def _coset_step(A: CoreAutomaton, coset: tuple[int, tuple], x: int) -> tuple[int, tuple]:
    s, tail = coset
    if tail:
        if tail[-1] == x ^ 1:
            return (s, tail[:-1])
        return (s, tail + (x,))
    t = A.table[s][x]
    return (t, ()) if t >= 0 else (s, (x,))


def coset_of(A: CoreAutomaton, g: Word) -> tuple[int, tuple]:
    """Canonical coset label ``(core state, hanging suffix)`` of ``Hg``."""
    c = (0, ())
    for x in g:
        c = _coset_step(A, c, x)
    return c
