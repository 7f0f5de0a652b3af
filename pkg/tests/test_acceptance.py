"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py`` for the lines alone.
"""
from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np

from kesten.cycles import (cycle_density_dp, cycle_density_mc, cycle_indicator, graph_power,
                           independent_cycles, ramanujan_power_check)
from kesten.graphs import cayley_ball, cayley_graph, load_shipped, schreier_graph
from kesten.inequality import finite_n_inequality
from kesten.instances import QINV_SUITE, all_instance_names, instance
from kesten.realize import schreier_realization
from kesten.spectral import eigenvalues_finite, rho_rayleigh_lower, rho_return_series
from kesten.stallings import fold
from kesten.walks import (MeasureError, nu_measure, passage_counts, quasi_invariance_margin,
                          return_counts, trace_measure)
from kesten.words import SubgroupSpec
from oracles import WalkEnumeration, coset_label, exhaustive_cycles, independence_oracle

RESULTS: list[str] = []

CESARO_A2B2 = {
    16: Fraction(283937763, 1073741824),
    32: Fraction(645432248521748595, 4611686018427387904),
    64: Fraction(5981308404105157914540876236784292755, 85070591730234615865843651857942052864),
}


class Check:
    def __init__(self, number: int, title: str, budget: float):
        self.number, self.title, self.budget = number, title, budget
        self.failures: list[str] = []

    def expect(self, ok, what: str):
        if not ok:
            self.failures.append(what)

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        if exc is not None:
            self.failures.append(f"raised {exc_type.__name__}: {exc}")
        if elapsed > self.budget:
            self.failures.append(f"runtime {elapsed:.2f}s over budget {self.budget}s")
        status = "PASS" if not self.failures else "FAIL"
        line = f"[{status}] criterion {self.number}: {self.title} ({elapsed:.2f}s)"
        if self.failures:
            line += " -- " + "; ".join(self.failures[:3])
        RESULTS.append(line)
        print(line)
        assert not self.failures, line
        return False


def _labels(sg, n):
    core = sg.automaton
    ball = sg.ball(n)
    mu = trace_measure(ball, n)
    return {coset_label(core, k if isinstance(k, tuple) else ball.word(k)): q for k, q in mu.support.items()}


def test_criterion_1_oracle_equivalence():
    with Check(1, "return counts and trace measures equal S^n enumeration, n <= 8", 10.0) as c:
        cases = [(1, None), (2, None), (3, SubgroupSpec.parse(3, "a,b"))]
        for rank, H in cases:
            sg = schreier_graph(H) if H else cayley_graph(rank)
            counts = return_counts(sg, 8)
            for n in range(1, 9):
                enum = WalkEnumeration(rank, H, n)
                ret = enum.return_count()
                c.expect(counts[n] == ret, f"count rank={rank} H={H} n={n}")
                if ret:
                    c.expect(_labels(sg, n) == enum.trace_measure(), f"measure rank={rank} H={H} n={n}")


def test_criterion_2_amenable_reference():
    with Check(2, "Z: return bound >= 0.94 at n=16, strictly increasing; Rayleigh(R=30) >= 1-1e-6", 5.0) as c:
        vals = [b.value for b in rho_return_series(cayley_graph(1), 16)]
        c.expect(vals[-1] >= 0.94, f"return bound {vals[-1]:.6f} at n=16")
        c.expect(all(y > x for x, y in zip(vals, vals[1:])), "return bound not strictly increasing")
        ray = rho_rayleigh_lower(cayley_graph(1), 30).bound.value
        c.expect(ray >= 1 - 1e-6, f"Rayleigh bound {ray:.9f} at R=30 (ball norm cos(pi/62) = {math.cos(math.pi / 62):.9f})")


def test_criterion_3_free_group_reference():
    with Check(3, "F2: return bound nondecreasing and <= sqrt(3)/2 for n <= 24; Rayleigh(R=12) within 0.03", 60.0) as c:
        tree = math.sqrt(3) / 2
        vals = [b.value for b in rho_return_series(cayley_graph(2), 24)]
        c.expect(all(y >= x for x, y in zip(vals, vals[1:])), "return bound decreased")
        c.expect(max(vals) <= tree + 1e-12, f"return bound {max(vals)} above tree value")
        ray = rho_rayleigh_lower(cayley_graph(2), 12).bound.value
        c.expect(abs(ray - tree) <= 0.03, f"Rayleigh bound {ray:.6f}")


def test_criterion_4_finite_n_inequality():
    with Check(4, "finite-n inequality for <a,b> in F3, n=4..12, plus trivial closed forms", 120.0) as c:
        H = SubgroupSpec.parse(3, "a,b")
        for n in range(4, 13, 2):
            r = finite_n_inequality(H, n)
            c.expect(r.margin >= -1e-10 and r.certified, f"n={n} margin={r.margin} certified={r.certified}")
        counts = return_counts(cayley_graph(2), 12)
        log_tree = math.log(2 / math.sqrt(3))
        for n in range(4, 13, 2):
            r = finite_n_inequality(SubgroupSpec.trivial(2), n)
            c.expect((r.lhs, r.rhs, r.margin) == (0.0, 0.0, 0.0), f"H=1 n={n}")
            r = finite_n_inequality(SubgroupSpec.full(2), n)
            lhs = n * math.log(4) - math.log(counts[n])
            rhs = (n - 2) * counts[n - 2] / counts[n] * 4 * log_tree
            c.expect(r.lhs == lhs, f"H=G lhs n={n}")
            c.expect(abs(r.rhs - rhs) <= 1e-12, f"H=G rhs n={n}: {r.rhs} vs {rhs}")
            c.expect(Fraction(r.detail["prefactor_num"], r.detail["prefactor_den"])
                     == Fraction((n - 2) * counts[n - 2], counts[n]), f"H=G prefactor n={n}")


def test_criterion_5_graph_power():
    with Check(5, "Petersen^(2) spectrum and Ramanujan power checks", 1.0) as c:
        pg = graph_power(load_shipped("petersen"), 2)
        c.expect(pg.degree == 6 and (pg.weights.sum(axis=1) == 6).all(), "not 6-regular")
        lam = eigenvalues_finite(pg.weights).eigenvalues
        c.expect(np.allclose(lam, [6] + [1] * 4 + [-2] * 5, atol=1e-8, rtol=0), f"spectrum {lam}")
        for name in ("petersen", "c5"):
            chk = ramanujan_power_check(load_shipped(name), 2)
            c.expect(chk.base.ramanujan and chk.power.ramanujan, f"{name} power check")


def test_criterion_6_measure_identities():
    with Check(6, "mass, root mass, passage partition for n <= 16; nu_1 = mu_4; quasi-invariance suite", 30.0) as c:
        for name in all_instance_names():
            g = instance(name)
            graph = g.ball(8) if hasattr(g, "ball") else g
            root = () if graph.kind == "cayley" else 0
            counts = return_counts(graph, 16)
            for n in range(1, 17):
                if counts[n] == 0:
                    continue
                N = passage_counts(graph, n)
                c.expect(all(int(N[i].sum()) == counts[n] for i in range(n + 1)), f"{name} passage n={n}")
                mu = trace_measure(graph, n)
                c.expect(mu.total() == 1, f"{name} mass n={n}")
                c.expect(mu[root] >= Fraction(1, n), f"{name} root mass n={n}")
            c.expect(nu_measure(graph, 1).support == trace_measure(graph, 4).support, f"{name} nu_1")
        for name, A, s, n in QINV_SUITE:
            r = quasi_invariance_margin(instance(name), A, s, n)
            c.expect(r.margin >= 0, f"qinv {name} n={n} margin={r.margin}")


def test_criterion_7_cycle_machinery():
    with Check(7, "C and D against exhaustive oracles; C_G(x,k) = C_G^(k)(x,1); certificates", 10.0) as c:
        graphs = {"petersen": load_shipped("petersen"), "c5": load_shipped("c5"),
                  "tree4": cayley_ball(2, 3), "tree6": cayley_ball(3, 3)}
        for name, g in graphs.items():
            vertices = range(g.n_vertices) if g.complete else [0]
            for x in vertices:
                for k in range(1, 7):
                    C, _ = cycle_indicator(g, x, k)
                    c.expect(C == int(bool(exhaustive_cycles(g, x, k))), f"C {name} x={x} k={k}")
                    cert = independent_cycles(g, x, k)
                    c.expect(cert.value == independence_oracle(g, x, k), f"D {name} x={x} k={k}")
                    if cert.value == 1:
                        c.expect(C == 1 and cert.validate(), f"certificate {name} x={x} k={k}")
        P = graphs["petersen"]
        for k in (2, 3):
            Pk = graph_power(P, k).to_graph()
            for x in range(P.n_vertices):
                c.expect(cycle_indicator(P, x, k)[0] == cycle_indicator(Pk, x, 1)[0], f"power identity x={x} k={k}")


def test_criterion_8_cycle_density():
    with Check(8, "Monte Carlo within 3 SE of exact DP for j <= 64; frozen Cesaro averages", 60.0) as c:
        sg = schreier_graph(SubgroupSpec.parse(2, "aa,bb"))
        series = cycle_density_dp(sg, 2, 64)
        q = np.array([float(x) for x in series.q])
        mc = cycle_density_mc(sg, 2, 64, 10_000, seed=0)
        se = np.sqrt(q * (1 - q) / 10_000)
        bad = np.nonzero(np.abs(mc.estimates - q) > 3 * se + 1e-15)[0]
        c.expect(len(bad) == 0, f"MC outside 3 SE at j={list(bad[:5])}")
        for n, value in CESARO_A2B2.items():
            c.expect(series.cesaro(n) == value, f"Cesaro n={n}")


def test_criterion_9_realization():
    with Check(9, "K5 and doubled C4 realized as coset graphs, BFS codes match", 1.0) as c:
        for name in ("k5", "c4_doubled"):
            R = schreier_realization(load_shipped(name))
            c.expect(R.bfs_match and R.edges_match and R.subgroup.rank == 2, f"{name}")


if __name__ == "__main__":
    import sys

    failed = 0
    for fn in [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
