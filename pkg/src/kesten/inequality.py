"""The spectral-radius gap inequality for subgroups of free groups.

For a subgroup ``H`` of the free group ``G = F_k`` with symmetric generators
``S`` the integrand is

    I_n = sum_g mu_{2n}(g) * |H^g ∩ S^(m)| * (-log rho(H^g, H^g ∩ S^(m)))

and the finite-n form of the inequality reads

    log|A_H(n)| - log|A(n)| >= (n-2) |A(n-2)| / |A(n)| * I_{(n-2)/2}.

``H^g ∩ S^(m)`` depends on ``g`` only through the coset ``Hg``, so it is
evaluated once per coset.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from .graphs import BallView, SchreierGraph, cayley_graph
from .spectral import (CERTIFIED_LOWER, EVAL_SLACK, SpectralBound, rho_tree_exact,
                       _root_from_count)
from .stallings import CoreAutomaton, fold, intersect_power_ball, is_free_basis, member
from .walks import lumped_counts, occupation_numerators, return_counts
from .words import SubgroupSpec, Word, conjugate, format_word, multiply


# -- spectral radius of a subgroup with a finite generating multiset ---------

def _free_group_return_count(T: frozenset, n: int) -> int:
    """|A(2n)| in the Cayley graph of <T> w.r.t. the symmetric set T."""
    w: dict = {(): 1}
    for _ in range(n):
        nxt: dict = {}
        for g, c in w.items():
            for t in T:
                h = multiply(g, t)
                nxt[h] = nxt.get(h, 0) + c
        w = nxt
    return sum(c * c for c in w.values())


def _subgroup_ball_graph(T: frozenset, radius: int):
    index = {(): 0}
    order = [()]
    gens = sorted(T)
    frontier = [()]
    for _ in range(radius):
        nxt = []
        for g in frontier:
            for t in gens:
                h = multiply(g, t)
                if h not in index:
                    index[h] = len(order)
                    order.append(h)
                    nxt.append(h)
        frontier = nxt
    targets = np.full((len(order), len(gens)), -1, dtype=np.int64)
    for i, g in enumerate(order):
        for j, t in enumerate(gens):
            targets[i, j] = index.get(multiply(g, t), -1)
    return targets


@lru_cache(maxsize=4096)
def _rho_of_set(T: frozenset, rank: int, method: str, n: int, radius: int) -> SpectralBound:
    if method in ("auto", "exact") and is_free_basis(T, rank):
        return rho_tree_exact(len(T)) if len(T) >= 2 else SpectralBound(1.0, "exact-reference", 1)
    if method == "exact":
        raise ValueError("generating set is not a free basis; no exact reference value")
    if method in ("auto", "return"):
        count = _free_group_return_count(T, n)
        return SpectralBound(_root_from_count(count, len(T), 2 * n), CERTIFIED_LOWER, n, EVAL_SLACK)
    if method == "rayleigh":
        from . import _kernels

        targets = _subgroup_ball_graph(T, radius)
        f = np.zeros(targets.shape[0])
        f[0] = 1.0
        value = 0.0
        for _ in range(10 * radius):
            pf = _kernels.markov_apply(targets, f, len(T))
            nf = float(np.linalg.norm(pf))
            value = nf / float(np.linalg.norm(f))
            f = pf / nf
        return SpectralBound(min(value, 1.0), CERTIFIED_LOWER, radius, 1e-12)
    raise ValueError(f"unknown method {method!r}")


def subgroup_rho(H: CoreAutomaton | SubgroupSpec, F: Iterable[Word], method: str = "auto",
                 n: int = 4, radius: int = 6) -> SpectralBound | None:
    """Bound on rho(<F ∩ H>, F ∩ H); ``None`` when the intersection is empty.

    ``method``: ``"auto"`` (exact tree value when F ∩ H is a symmetric free
    basis, else the return-count lower bound), ``"exact"``, ``"return"``
    (walks of length 2n) or ``"rayleigh"`` (ball of the given radius).
    """
    A = H if isinstance(H, CoreAutomaton) else fold(H)
    T = frozenset(w for w in F if w and member(A, w))
    if not T:
        return None
    return _rho_of_set(T, A.rank, method, n, radius)


# -- the integrand -------------------------------------------------------------

@dataclass(frozen=True)
class IntegrandRow:
    element: Word
    mass: Fraction
    intersection_size: int
    rho_bound: SpectralBound | None
    contribution: float

    def to_record(self) -> dict:
        return {
            "element": format_word(self.element),
            "mass_num": self.mass.numerator,
            "mass_den": self.mass.denominator,
            "intersection_size": self.intersection_size,
            "rho": None if self.rho_bound is None else self.rho_bound.value,
            "rho_kind": None if self.rho_bound is None else self.rho_bound.kind,
            "contribution": self.contribution,
        }


@dataclass
class Integrand:
    n: int
    m: int
    total: float
    certified: bool
    rows: list = field(default_factory=list)
    coset_masses: dict = field(default_factory=dict)


def _class_value(H: SubgroupSpec, g: Word, m: int, method: str, rho_n: int):
    """(|H^g ∩ S^(m)|, rho bound, weight) for one coset representative g."""
    Ag = fold(conjugate(H, g))
    T = intersect_power_ball(Ag, m)
    if not T:
        return 0, None, 0.0
    bound = subgroup_rho(Ag, T, method, rho_n)
    weight = len(T) * max(0.0, -math.log(bound.value))
    return len(T), bound, weight


def integrand_In(H: SubgroupSpec, n: int, m: int = 1, *, method: str = "auto",
                 rho_n: int = 4, rows: bool = True) -> Integrand:
    """Integrand against mu_{2n}.

    ``rows=True`` enumerates every group element in the support (ball of
    radius n).  ``rows=False`` uses that mu_{2n} on a free group is spherical
    and counts reduced words per coset class, which scales to large n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if rows:
        return _integrand_rows(H, n, m, method, rho_n)
    return _integrand_lumped(H, n, m, method, rho_n)


def _integrand_rows(H, n, m, method, rho_n) -> Integrand:
    k = H.rank
    cay, num, den = occupation_numerators(cayley_graph(k), 2 * n)
    A = fold(H)
    sball = BallView(SchreierGraph(A), n).graph()

    # coset of every Cayley vertex, level by level along the BFS tree
    sid = np.zeros(cay.n_vertices, dtype=np.int64)
    starts = np.searchsorted(cay.dist, np.arange(n + 2))
    for L in range(1, n + 1):
        lo, hi = starts[L], starts[L + 1]
        sid[lo:hi] = sball.targets[sid[cay.parent[lo:hi]], cay.parent_letter[lo:hi]]

    cache: dict = {}

    def value(c: int):
        if c not in cache:
            h = int(sball.hang_depth[c])
            if 2 * h + 1 > m:
                cache[c] = (0, None, 0.0)
            else:
                cache[c] = _class_value(H, sball.word(c), m, method, rho_n)
        return cache[c]

    out_rows = []
    coset_mass: dict = {}
    for v in np.nonzero(num)[0]:
        v = int(v)
        mass = Fraction(int(num[v]), den)
        c = int(sid[v])
        size, bound, weight = value(c)
        coset_mass[c] = coset_mass.get(c, Fraction(0)) + mass
        out_rows.append(IntegrandRow(cay.word(v), mass, size, bound,
                                     float(mass) * weight if size else 0.0))
    total = sum(float(q) * cache[c][2] for c, q in coset_mass.items())
    certified = all(r.rho_bound.certified for r in out_rows if r.rho_bound is not None)
    return Integrand(n, m, total, certified, out_rows, coset_mass)


def _integrand_lumped(H, n, m, method, rho_n) -> Integrand:
    k = H.rank
    d = 2 * k
    A = fold(H)
    length = 2 * n

    # spherical trace measure on the free group
    tree = lumped_counts(cayley_graph(k), length)
    sphere = [[int(tree.core[i][0])] + [int(x) for x in tree.hang[i][0, 1:n + 1]]
              for i in range(length + 1)]
    total_returns = int(tree.core[length][0])
    den = length * total_returns
    per_element = []
    for r in range(n + 1):
        size = 1 if r == 0 else d * (d - 1) ** (r - 1)
        occ = sum(sphere[i][r] * sphere[length - i][r] for i in range(1, length + 1))
        per_element.append(Fraction(occ, size * size * den))

    # reduced words of each length per coset class
    c = A.n_states
    depth_max = (m - 1) // 2
    missing = [len(A.missing_letters(s)) for s in range(c)]
    nb = {(0, -1): 1}
    class_count: dict = {}
    hang = np.zeros((c, depth_max + 1), dtype=object)
    for r in range(n + 1):
        at_core = [0] * c
        for (s, _), cnt in nb.items():
            at_core[s] += cnt
        for s in range(c):
            if at_core[s]:
                class_count[("core", s)] = class_count.get(("core", s), 0) + at_core[s] * per_element[r]
            for h in range(1, depth_max + 1):
                if hang[s, h]:
                    key = ("hang", s, h)
                    class_count[key] = class_count.get(key, 0) + hang[s, h] * per_element[r]
        new_hang = np.zeros_like(hang)
        if depth_max >= 1:
            new_hang[:, 1] = [at_core[s] * missing[s] for s in range(c)]
            new_hang[:, 2:] = hang[:, 1:-1] * (d - 1)
        hang = new_hang
        nxt: dict = {}
        for (s, y), cnt in nb.items():
            for x, t in enumerate(A.table[s]):
                if t >= 0 and x != (y ^ 1 if y >= 0 else -1):
                    nxt[(t, x)] = nxt.get((t, x), 0) + cnt
        nb = nxt

    reps = _class_representatives(A, depth_max)
    total = 0.0
    certified = True
    masses = {}
    for key, mass in sorted(class_count.items(), key=lambda kv: kv[0]):
        mass = Fraction(mass)
        masses[key] = mass
        if key[0] == "hang" and 2 * key[2] + 1 > m:
            continue
        size, bound, weight = _class_value(H, reps[key], m, method, rho_n)
        if bound is not None and not bound.certified:
            certified = False
        total += float(mass) * weight
    return Integrand(n, m, total, certified, [], masses)


def _class_representatives(A: CoreAutomaton, depth_max: int) -> dict:
    """A group element in each core-state class and each shallow hanging class."""
    reps = {("core", 0): ()}
    queue = deque([0])
    while queue:
        s = queue.popleft()
        for x, t in enumerate(A.table[s]):
            if t >= 0 and ("core", t) not in reps:
                reps[("core", t)] = reps[("core", s)] + (x,)
                queue.append(t)
    for s in range(A.n_states):
        miss = A.missing_letters(s)
        if not miss:
            continue
        w = reps[("core", s)] + (miss[0],)
        for h in range(1, depth_max + 1):
            reps[("hang", s, h)] = w
            w = w + (0 if w[-1] != 1 else 1,)
    return reps


# -- the inequality ------------------------------------------------------------

@dataclass
class InequalityReport:
    n: int
    lhs: float
    rhs: float
    margin: float
    certified: bool
    rows: list = field(default_factory=list)
    slack: float = 2 * EVAL_SLACK
    detail: dict = field(default_factory=dict)

    @property
    def conclusive(self) -> bool:
        return self.margin >= -self.slack

    def to_record(self, with_rows: bool = False) -> dict:
        rec = {
            "n": self.n, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin,
            "certified": self.certified, "conclusive": self.conclusive, **self.detail,
        }
        if with_rows:
            rec["rows"] = [r.to_record() for r in self.rows]
        return rec


def finite_n_inequality(H: SubgroupSpec, n: int, m: int = 1, *, method: str = "auto",
                        rho_n: int = 4, rows: bool = True) -> InequalityReport:
    """Exact-count check of the per-n inequality at even walk length ``n >= 4``."""
    if n < 4 or n % 2:
        raise ValueError("finite-n inequality needs an even n >= 4")
    k = H.rank
    A = fold(H)
    a_h = return_counts(SchreierGraph(A), n)[n]
    a = return_counts(cayley_graph(k), n)
    a_n, a_n2 = a[n], a[n - 2]
    lhs = math.log(a_h) - math.log(a_n)
    I = integrand_In(H, (n - 2) // 2, m, method=method, rho_n=rho_n, rows=rows)
    pref = Fraction((n - 2) * a_n2, a_n)
    rhs = float(pref) * I.total
    detail = {
        "subgroup": str(H), "rank": k, "m": m,
        "A_H": str(a_h), "A_n": str(a_n), "A_n_minus_2": str(a_n2),
        "prefactor_num": pref.numerator, "prefactor_den": pref.denominator,
        "integrand": I.total,
    }
    return InequalityReport(n, lhs, rhs, lhs - rhs, I.certified, I.rows, detail=detail)


def asymptotic_report(H: SubgroupSpec, n_max: int, m: int = 1, *, method: str = "auto",
                      rho_n: int = 4) -> list[InequalityReport]:
    """Finite-n values of both sides of the limiting inequality, even n <= n_max.

    ``lhs_n = log rho_lower(H\\G, n) - log rho(G)`` with the return bound at
    walk length 2n; ``rhs_n = I_n / (|S|^2 rho(G)^2)``.  No extrapolation.
    """
    if n_max % 2:
        raise ValueError("n_max must be even")
    k = H.rank
    d = 2 * k
    rho_g = rho_tree_exact(d)
    A = fold(H)
    counts = return_counts(SchreierGraph(A), 2 * n_max)
    out = []
    for n in range(2, n_max + 1, 2):
        rho_h = _root_from_count(counts[2 * n], d, 2 * n)
        lhs = math.log(rho_h) - math.log(rho_g.value)
        I = integrand_In(H, n, m, method=method, rho_n=rho_n, rows=False)
        rhs = I.total / (d * d * rho_g.value ** 2)
        out.append(InequalityReport(
            n, lhs, rhs, lhs - rhs, I.certified, [],
            detail={"subgroup": str(H), "rank": k, "m": m, "rho_quotient_lower": rho_h,
                    "rho_group": rho_g.value, "integrand": I.total},
        ))
    return out
