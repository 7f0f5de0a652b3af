import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kesten.graphs import GraphError, bfs_code, labeled_from_permutations, load_finite_graph, load_shipped, schreier_ball
from kesten.realize import schreier_realization
from kesten.spectral import is_connected
from kesten.stallings import fold
from kesten.words import SubgroupSpec


@pytest.mark.parametrize("name", ["k5", "c4_doubled", "c5"])
def test_shipped_round_trip(name):
    g = load_shipped(name)
    R = schreier_realization(g)
    assert R.verified
    assert R.subgroup.rank == g.degree // 2
    core = fold(R.subgroup)
    # finite index: the core is the whole coset graph
    assert core.n_states == g.n_vertices
    assert all(t >= 0 for row in core.table for t in row)


def test_single_vertex_gives_full_group():
    for r in (1, 2, 3):
        g = load_finite_graph([(0, 0, r)], 1)
        R = schreier_realization(g)
        assert R.verified
        assert fold(R.subgroup) == fold(SubgroupSpec.full(r))


def test_rejections():
    with pytest.raises(GraphError, match="odd"):
        schreier_realization(load_shipped("petersen"))
    two_c5 = load_finite_graph([(i, (i + 1) % 5, 1) for i in range(5)] + [(5 + i, 5 + (i + 1) % 5, 1) for i in range(5)], 10)
    with pytest.raises(GraphError, match="connected"):
        schreier_realization(two_c5)
    with pytest.raises(GraphError, match="half-loop"):
        schreier_realization(load_finite_graph("vertices 2 degree 2\n0 1 1\n0 0 1 half\n1 1 1 half\n"))


def test_deterministic_output():
    g = load_shipped("k5")
    assert schreier_realization(g).subgroup == schreier_realization(g).subgroup


perm_lists = st.integers(2, 7).flatmap(
    lambda n: st.lists(st.permutations(list(range(n))), min_size=1, max_size=3))


@given(perm_lists)
def test_random_even_regular_graphs(perms):
    lg = labeled_from_permutations(perms)
    if not is_connected(lg):
        return
    edges = [(u, v, m) for (u, v), m in lg.edge_multiset().items() if u != v]
    edges += [(u, u, m // 2) for (u, v), m in lg.edge_multiset().items() if u == v]
    g = load_finite_graph(edges, lg.n_vertices)
    R = schreier_realization(g)
    assert R.verified
    assert fold(R.subgroup).n_states == g.n_vertices
