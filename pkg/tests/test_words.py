import pytest
from hypothesis import given
from hypothesis import strategies as st

from kesten.words import (SubgroupSpec, WordSyntaxError, ball_words, conjugate, format_word, inverse,
                          is_reduced, letter, multiply, parse_word, reduce, sign, generator_index)
from kesten.stallings import fold

a, A, b, B, c = 0, 1, 2, 3, 4
raw_words = st.lists(st.integers(0, 5), max_size=20)


def test_letter_encoding():
    assert letter(1, -1) == B
    assert generator_index(B) == 1 and sign(B) == -1 and sign(b) == 1


def test_reduce_examples():
    assert reduce([a, A]) == ()
    assert reduce([a, b, B, a]) == (a, a)
    assert reduce((a, b, a)) == (a, b, a)


@given(raw_words)
def test_reduce_idempotent_and_shrinking(w):
    r = reduce(w)
    assert reduce(r) == r
    assert len(r) <= len(w)
    assert is_reduced(r)


@given(raw_words, raw_words)
def test_inverse_cancels(u, v):
    u = reduce(u)
    assert multiply(u, inverse(u)) == ()
    assert inverse(multiply(u, v)) == multiply(inverse(v), inverse(u))


def test_parse_and_format_round_trip():
    assert parse_word("aBa") == (a, B, a)
    assert parse_word("1") == () and parse_word("") == ()
    assert format_word(()) == "1"
    assert format_word(parse_word("abCA", 3)) == "abCA"


def test_parse_rejects_with_column():
    with pytest.raises(WordSyntaxError) as exc:
        parse_word("ab?", 2)
    assert exc.value.column == 3
    with pytest.raises(WordSyntaxError) as exc:
        SubgroupSpec.parse(2, "aa, bc")
    assert exc.value.column == 6


def test_ball_words_count():
    # nonidentity reduced words of length <= m in F_2: 4 + 12 + 36
    assert len(ball_words(2, 1)) == 4
    assert len(ball_words(2, 2)) == 16
    assert len(ball_words(2, 3)) == 52
    assert all(is_reduced(w) and w for w in ball_words(3, 3))


def test_conjugate_examples():
    H = SubgroupSpec(2, ((a,),))
    assert conjugate(H, ()) == H
    assert conjugate(H, (b,)).generators == ((B, a, b),)


@given(st.lists(raw_words, min_size=1, max_size=3), raw_words)
def test_conjugation_is_an_action(gens, g):
    H = SubgroupSpec(3, tuple(tuple(x % 6 for x in w) for w in gens))
    g = reduce(g)
    back = conjugate(conjugate(H, g), inverse(g))
    assert fold(back) == fold(H)
