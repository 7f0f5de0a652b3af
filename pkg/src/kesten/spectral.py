"""Spectral radius bounds and finite-graph spectra."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .graphs import GraphError, LabeledGraph, SchreierGraph
from .walks import MeasureError, return_count, return_counts

CERTIFIED_LOWER = "certified-lower"
EXACT = "exact-reference"
HEURISTIC = "heuristic"

# relative error of one libm log/exp round trip, with a wide margin
EVAL_SLACK = 1e-12


@dataclass(frozen=True)
class SpectralBound:
    value: float
    kind: str
    parameter: int | None = None
    error_slack: float = 0.0

    @property
    def certified(self) -> bool:
        return self.kind in (CERTIFIED_LOWER, EXACT)

    def to_record(self) -> dict:
        return asdict(self)


def _root_from_count(count: int, degree: int, length: int) -> float:
    return math.exp((math.log(count) - length * math.log(degree)) / length)


def rho_return_lower(graph, n: int) -> SpectralBound:
    """``(|A(2n)| / d^(2n))^(1/(2n))``; every term is a lower bound on rho."""
    if n < 1:
        raise ValueError("n must be >= 1")
    count = return_count(graph, 2 * n)
    if count == 0:
        raise MeasureError(f"no return walks of length {2 * n}")
    return SpectralBound(_root_from_count(count, graph.degree, 2 * n), CERTIFIED_LOWER, n, EVAL_SLACK)


def rho_return_series(graph, n_max: int) -> list[SpectralBound]:
    """``rho_return_lower(graph, n)`` for n = 1..n_max from one count sweep."""
    counts = return_counts(graph, 2 * n_max)
    d = graph.degree
    out = []
    for n in range(1, n_max + 1):
        c = counts[2 * n]
        if c == 0:
            raise MeasureError(f"no return walks of length {2 * n}")
        out.append(SpectralBound(_root_from_count(c, d, 2 * n), CERTIFIED_LOWER, n, EVAL_SLACK))
    return out


@dataclass(frozen=True)
class PowerIterationResult:
    bound: SpectralBound
    iterations: int
    last_increment: float


def rho_rayleigh_lower(graph, radius: int, iterations: int | None = None,
                       backend: str | None = None) -> PowerIterationResult:
    """Norm lower bound from the Markov operator compressed to a ball.

    Iterates ``f <- P_R f`` from the root indicator and reports
    ``||P_R f|| / ||f||``, i.e. the square root of the Rayleigh quotient of
    ``P_R^2``.  It never exceeds ``||P_R|| <= rho``.  (The plain quotient
    ``<P_R f, f>`` vanishes identically on bipartite balls.)
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    if isinstance(graph, SchreierGraph):
        g = graph.ball(radius)
    else:
        g = graph
    iterations = 10 * radius if iterations is None else iterations
    d = g.degree
    f = np.zeros(g.n_vertices)
    f[0] = 1.0
    value = prev = 0.0
    for _ in range(max(iterations, 1)):
        pf = _kernels.markov_apply(g.targets, f, d, backend)
        norm_f = math.sqrt(float(f @ f))
        norm_pf = math.sqrt(float(pf @ pf))
        prev, value = value, norm_pf / norm_f
        if norm_pf == 0.0:
            break
        f = pf / norm_pf
    bound = SpectralBound(min(value, 1.0), CERTIFIED_LOWER, radius, 1e-12)
    return PowerIterationResult(bound, iterations, abs(value - prev))


def rho_tree_exact(d: int) -> SpectralBound:
    """Spectral radius of the d-regular tree, ``2 sqrt(d-1) / d``."""
    if d < 2:
        raise ValueError("tree spectral radius needs d >= 2")
    return SpectralBound(2.0 * math.sqrt(d - 1) / d, EXACT, d, 0.0)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    max_residual: float

    def __len__(self):
        return len(self.eigenvalues)

    def multiplicities(self, tol: float = 1e-8) -> list[tuple[float, int]]:
        out: list[list] = []
        for lam in self.eigenvalues:
            if out and abs(lam - out[-1][0]) <= tol:
                out[-1][1] += 1
            else:
                out.append([float(lam), 1])
        return [(v, m) for v, m in out]


def eigenvalues_finite(graph: LabeledGraph | np.ndarray) -> Spectrum:
    """Adjacency spectrum, sorted descending, with a residual check."""
    if isinstance(graph, np.ndarray):
        A = graph.astype(float)
        d = float(np.abs(graph).sum(axis=1).max())
    else:
        if not graph.complete:
            raise GraphError("spectrum needs a finite graph, got a truncated ball")
        A = graph.adjacency().astype(float)
        d = float(graph.degree)
    if not np.array_equal(A, A.T):
        raise GraphError("adjacency matrix is not symmetric")
    w, V = np.linalg.eigh(A)
    resid = float(np.abs(A @ V - V * w).max()) if len(w) else 0.0
    if resid > 1e-8 * max(d, 1.0):
        raise ArithmeticError(f"eigen-solver residual {resid:.3g} exceeds tolerance")
    return Spectrum(w[::-1].copy(), resid)


def is_connected(graph: LabeledGraph) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for t in graph.targets[v]:
            t = int(t)
            if t >= 0 and t not in seen:
                seen.add(t)
                stack.append(t)
    return len(seen) == graph.n_vertices


@dataclass(frozen=True)
class RamanujanReport:
    ramanujan: bool
    witness: float | None
    bound: float
    degree: int
    connected: bool

    def __bool__(self):
        return self.ramanujan


def is_ramanujan_finite(graph, tol: float = 1e-9, degree: int | None = None) -> RamanujanReport:
    """Nontrivial eigenvalues bounded by ``2 sqrt(d-1)``.

    One copy of ``d`` is trivial, plus one copy of ``-d`` when present
    (bipartite).  Any further copy of ``+-d`` counts as nontrivial, so
    disconnected graphs fail.
    """
    if isinstance(graph, np.ndarray):
        spec = eigenvalues_finite(graph)
        d = int(degree if degree is not None else round(spec.eigenvalues[0]))
        connected = True
    else:
        spec = eigenvalues_finite(graph)
        d = graph.degree
        connected = is_connected(graph)
    lam = list(spec.eigenvalues)
    for trivial in (d, -d):
        for i, x in enumerate(lam):
            if abs(x - trivial) <= 1e-8 * max(d, 1):
                del lam[i]
                break
    bound = 2.0 * math.sqrt(max(d - 1, 0))
    witness = max(lam, key=abs) if lam else None
    ok = witness is None or abs(witness) <= bound + tol
    return RamanujanReport(bool(ok), None if witness is None else float(witness), bound, d, connected)
