"""Hot loops with a numba path and a pure-numpy fallback.

``KESTEN_BACKEND=numpy`` forces the fallback; ``KESTEN_NUM_THREADS`` sets
the numba thread count.  Both paths produce bit-identical results: every
output cell is written by exactly one iteration, so no reduction order
depends on the schedule.
"""
from __future__ import annotations

import os

import numpy as np

# must be set before numba is imported; the workqueue layer has no external dependency
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba
    from numba import njit, prange

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

BACKEND = os.environ.get("KESTEN_BACKEND", "numba" if NUMBA_AVAILABLE else "numpy").lower()
if BACKEND not in ("numba", "numpy"):
    raise ValueError(f"KESTEN_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")
if BACKEND == "numba" and not NUMBA_AVAILABLE:
    BACKEND = "numpy"

if NUMBA_AVAILABLE and os.environ.get("KESTEN_NUM_THREADS"):
    numba.set_num_threads(int(os.environ["KESTEN_NUM_THREADS"]))


# -- numpy reference path -----------------------------------------------------

def _gather_sum_np(targets, w):
    """out[v] = sum_j w[targets[v, j]], absent slots contribute zero."""
    pad = np.concatenate([w, np.zeros(1, dtype=w.dtype)])
    idx = np.where(targets >= 0, targets, len(w))
    out = pad[idx[:, 0]].copy()
    for j in range(1, targets.shape[1]):
        out = out + pad[idx[:, j]]
    return out


def _walk_graph_np(targets, flags, choices):
    walkers, steps = choices.shape
    pos = np.zeros(walkers, dtype=np.int64)
    hits = np.zeros((walkers, steps + 1), dtype=np.uint8)
    hits[:, 0] = flags[pos]
    for j in range(steps):
        pos = targets[pos, choices[:, j]]
        if (pos < 0).any():
            raise IndexError("walker left the materialized graph")
        hits[:, j + 1] = flags[pos]
    return hits


def _walk_schreier_np(table, flags, choices):
    walkers, steps = choices.shape
    state = np.zeros(walkers, dtype=np.int64)
    depth = np.zeros(walkers, dtype=np.int64)
    stack = np.zeros((walkers, steps + 1), dtype=np.int64)
    hits = np.zeros((walkers, steps + 1), dtype=np.uint8)
    rows = np.arange(walkers)
    hits[:, 0] = flags[state]
    for j in range(steps):
        x = choices[:, j]
        in_core = depth == 0
        nxt = table[state, x]
        move = in_core & (nxt >= 0)
        leave = in_core & (nxt < 0)
        state = np.where(move, nxt, state)
        stack[rows[leave], 0] = x[leave]
        hang = ~in_core
        top = stack[rows, np.maximum(depth - 1, 0)]
        up = hang & (x == (top ^ 1))
        down = hang & ~up
        stack[rows[down], depth[down]] = x[down]
        depth = depth + leave + down - up
        hits[:, j + 1] = (depth == 0) & (flags[state] == 1)
    return hits


# -- numba path ---------------------------------------------------------------

if NUMBA_AVAILABLE:

    @njit(parallel=True, cache=True)
    def _gather_sum_nb(targets, w):
        n, d = targets.shape
        out = np.zeros(n, dtype=w.dtype)
        for v in prange(n):
            acc = out[v]
            for j in range(d):
                t = targets[v, j]
                if t >= 0:
                    acc += w[t]
            out[v] = acc
        return out

    @njit(parallel=True, cache=True)
    def _walk_graph_nb(targets, flags, choices):
        walkers, steps = choices.shape
        hits = np.zeros((walkers, steps + 1), dtype=np.uint8)
        bad = np.zeros(walkers, dtype=np.uint8)
        for i in prange(walkers):
            pos = 0
            hits[i, 0] = flags[pos]
            for j in range(steps):
                pos = targets[pos, choices[i, j]]
                if pos < 0:
                    bad[i] = 1
                    break
                hits[i, j + 1] = flags[pos]
        return hits, bad

    @njit(parallel=True, cache=True)
    def _walk_schreier_nb(table, flags, choices):
        walkers, steps = choices.shape
        hits = np.zeros((walkers, steps + 1), dtype=np.uint8)
        for i in prange(walkers):
            stack = np.empty(steps + 1, dtype=np.int64)
            state = 0
            depth = 0
            hits[i, 0] = flags[0]
            for j in range(steps):
                x = choices[i, j]
                if depth == 0:
                    t = table[state, x]
                    if t >= 0:
                        state = t
                    else:
                        stack[0] = x
                        depth = 1
                elif x == (stack[depth - 1] ^ 1):
                    depth -= 1
                else:
                    stack[depth] = x
                    depth += 1
                if depth == 0 and flags[state] == 1:
                    hits[i, j + 1] = 1
        return hits


# -- dispatch -----------------------------------------------------------------

def gather_sum(targets: np.ndarray, w: np.ndarray, backend: str | None = None) -> np.ndarray:
    """One walk-count step on a symmetric graph: ``out[v] = sum_j w[targets[v, j]]``.

    Object-dtype (arbitrary precision) vectors always take the numpy path.
    """
    backend = backend or BACKEND
    if backend == "numba" and w.dtype != object:
        return _gather_sum_nb(targets, w)
    return _gather_sum_np(targets, w)


def markov_apply(targets: np.ndarray, f: np.ndarray, degree: int, backend: str | None = None) -> np.ndarray:
    return gather_sum(targets, f, backend) / degree


def walk_graph(targets, flags, choices, backend: str | None = None) -> np.ndarray:
    """Per-walker indicator hits ``flags[X_j]`` for walkers started at vertex 0."""
    backend = backend or BACKEND
    if backend == "numba":
        hits, bad = _walk_graph_nb(targets, flags, choices)
        if bad.any():
            raise IndexError("walker left the materialized graph")
        return hits
    return _walk_graph_np(targets, flags, choices)


def walk_schreier(table, flags, choices, backend: str | None = None) -> np.ndarray:
    """Walkers on a coset graph given by its core table; hits count core states with ``flags``."""
    backend = backend or BACKEND
    if backend == "numba":
        return _walk_schreier_nb(table, flags, choices)
    return _walk_schreier_np(table, flags, choices)
