import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kesten.stallings import fold, free_rank, intersect_power_ball, is_free_basis, member
from kesten.words import SubgroupSpec, ball_words, inverse, multiply, reduce

a, A, b, B, c, C = range(6)


def sub(rank, text):
    return SubgroupSpec.parse(rank, text)


def test_fold_examples():
    core = fold(sub(3, "a,b"))
    assert core.n_states == 1
    assert core.table[0][:4] == (0, 0, 0, 0) and core.table[0][4:] == (-1, -1)
    assert fold(sub(2, "aa,bb")).n_states == 3
    assert fold(sub(2, "a,a")) == fold(sub(2, "a"))
    assert fold(sub(2, "a,b")).n_states == 1


def test_member_examples():
    assert member(fold(sub(3, "a,b")), (a,))
    assert not member(fold(sub(3, "a,b")), (c, a, C))
    assert not member(fold(sub(2, "aa,bb")), (a,))


def test_intersect_power_ball_examples():
    assert intersect_power_ball(fold(sub(3, "a,b")), 1) == {(a,), (A,), (b,), (B,)}
    assert intersect_power_ball(fold(sub(3, "cAC,cBC")), 1) == frozenset()
    assert intersect_power_ball(fold(sub(2, "aa,bb")), 2) == {(a, a), (A, A), (b, b), (B, B)}


def test_intersect_matches_filtering_the_ball():
    for text in ("aa,bb", "ab", "aB,bbb", "a,bab"):
        core = fold(sub(2, text))
        for m in (1, 2, 3, 4):
            expect = {w for w in ball_words(2, m) if member(core, w)}
            assert intersect_power_ball(core, m) == expect


def test_free_rank_examples():
    assert free_rank(fold(sub(3, "a,b"))) == 2
    assert free_rank(fold(sub(2, "a"))) == 1
    # a^2, b^2, ab generate an index-2 subgroup of F_2, which has rank 3
    assert free_rank(fold(sub(2, "aa,bb,ab"))) == 3


def test_degree_one_base_is_kept():
    core = fold(sub(2, "abA"))
    assert member(core, (a, b, A)) and not member(core, (b,))
    assert free_rank(core) == 1


def test_free_basis_detection():
    assert is_free_basis([(a,), (A,), (b,), (B,)], 2)
    assert not is_free_basis([(a,), (A,), (a, a), (A, A)], 2)


words = st.lists(st.integers(0, 3), min_size=1, max_size=6).map(reduce).filter(bool)
gen_lists = st.lists(words, min_size=1, max_size=4)


@given(gen_lists, st.lists(st.tuples(st.integers(0, 3), st.booleans()), max_size=3))
def test_members_closed_under_products(gens, picks):
    H = SubgroupSpec(2, tuple(gens))
    core = fold(H)
    for w in gens:
        assert member(core, w)
    prod = ()
    for i, inv in picks:
        w = gens[i % len(gens)]
        prod = multiply(prod, inverse(w) if inv else w)
    assert member(core, prod)


@given(gen_lists, st.randoms())
def test_fold_independent_of_order(gens, rnd):
    shuffled = list(gens)
    rnd.shuffle(shuffled)
    assert fold(SubgroupSpec(2, tuple(gens))) == fold(SubgroupSpec(2, tuple(shuffled)))


@given(gen_lists, st.integers(1, 4))
def test_intersection_inversion_closed(gens, m):
    T = intersect_power_ball(fold(SubgroupSpec(2, tuple(gens))), m)
    assert () not in T
    assert all(inverse(w) in T for w in T)


@given(words)
def test_cyclic_subgroup_rank_one(w):
    assert free_rank(fold(SubgroupSpec(2, (w,)))) == 1


@pytest.mark.parametrize("rank", [1, 2, 3])
def test_full_and_trivial(rank):
    assert fold(SubgroupSpec.full(rank)).n_states == 1
    assert free_rank(fold(SubgroupSpec.full(rank))) == rank
    assert free_rank(fold(SubgroupSpec.trivial(rank))) == 0
    for w in itertools.islice(ball_words(rank, 3), 30):
        assert member(fold(SubgroupSpec.full(rank)), w)
