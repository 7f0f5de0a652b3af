"""Free-group words.

A letter is a small int: generator ``i`` is ``2*i`` and its inverse is
``2*i + 1``, so ``letter ^ 1`` inverts and the natural int order is
a < A < b < B < ...  A word is a tuple of letters, freely reduced.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

Word = tuple  # tuple[int, ...]

IDENTITY: Word = ()


def letter(generator_index: int, sign: int = 1) -> int:
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    return 2 * generator_index + (0 if sign == 1 else 1)


def generator_index(x: int) -> int:
    return x >> 1


def sign(x: int) -> int:
    return -1 if x & 1 else 1


def inverse_letter(x: int) -> int:
    return x ^ 1


def reduce(raw: Iterable[int]) -> Word:
    """Freely reduce a letter sequence (stack cancellation)."""
    out: list[int] = []
    for x in raw:
        if out and out[-1] == x ^ 1:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def is_reduced(w: Sequence[int]) -> bool:
    return all(w[i + 1] != w[i] ^ 1 for i in range(len(w) - 1))


def inverse(w: Sequence[int]) -> Word:
    return tuple(x ^ 1 for x in reversed(w))


def multiply(*words: Sequence[int]) -> Word:
    return reduce(itertools.chain.from_iterable(words))


def shortlex_key(w: Sequence[int]):
    return (len(w), tuple(w))


def symmetric_generators(rank: int) -> list[int]:
    return list(range(2 * rank))


def ball_words(rank: int, m: int) -> list[Word]:
    """All nonidentity reduced words of length <= m, in shortlex order."""
    out: list[Word] = []
    layer: list[Word] = [IDENTITY]
    for _ in range(m):
        nxt = []
        for w in layer:
            for x in range(2 * rank):
                if w and w[-1] == x ^ 1:
                    continue
                nxt.append(w + (x,))
        out.extend(nxt)
        layer = nxt
    return out


def parse_word(text: str, rank: int | None = None) -> Word:
    """Parse ``"aBa"`` (uppercase = inverse) into a reduced word.

    ``"1"`` and the empty string denote the identity.
    """
    s = text.strip()
    if s in ("", "1"):
        return IDENTITY
    letters = []
    for pos, ch in enumerate(s):
        if not ch.isalpha() or not ch.isascii():
            raise WordSyntaxError(f"unexpected character {ch!r}", column=pos + 1)
        gen = ord(ch.lower()) - ord("a")
        if rank is not None and gen >= rank:
            raise WordSyntaxError(
                f"generator {ch.lower()!r} outside rank {rank}", column=pos + 1
            )
        letters.append(letter(gen, -1 if ch.isupper() else 1))
    return reduce(letters)


def format_word(w: Sequence[int]) -> str:
    if not w:
        return "1"
    chars = []
    for x in w:
        c = chr(ord("a") + (x >> 1))
        chars.append(c.upper() if x & 1 else c)
    return "".join(chars)


class WordSyntaxError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


@dataclass(frozen=True)
class SubgroupSpec:
    """A finite generating list for a subgroup of the free group of ``rank``."""

    rank: int
    generators: tuple = ()

    def __post_init__(self):
        gens = tuple(reduce(w) for w in self.generators)
        for w in gens:
            if any(x >> 1 >= self.rank for x in w):
                raise ValueError(f"word {format_word(w)} uses a generator outside rank {self.rank}")
        object.__setattr__(self, "generators", gens)

    @classmethod
    def parse(cls, rank: int, text: str) -> "SubgroupSpec":
        gens = []
        start = 0
        for chunk in text.split(","):
            lead = len(chunk) - len(chunk.lstrip())
            try:
                w = parse_word(chunk, rank)
            except WordSyntaxError as exc:
                raise WordSyntaxError(exc.args[0].split(" (")[0],
                                      column=start + lead + (exc.column or 1)) from None
            if w:
                gens.append(w)
            start += len(chunk) + 1
        return cls(rank, tuple(gens))

    @classmethod
    def full(cls, rank: int) -> "SubgroupSpec":
        return cls(rank, tuple((2 * i,) for i in range(rank)))

    @classmethod
    def trivial(cls, rank: int) -> "SubgroupSpec":
        return cls(rank, ())

    def __str__(self):
        return "<" + ", ".join(format_word(w) for w in self.generators) + ">"


def conjugate(H: SubgroupSpec, g: Sequence[int]) -> SubgroupSpec:
    """Generators of ``H^g = g^-1 H g``."""
    gi = inverse(g)
    return SubgroupSpec(H.rank, tuple(multiply(gi, w, g) for w in H.generators))


def iter_sequences(rank: int, n: int) -> Iterator[tuple]:
    """All length-n sequences over the symmetric generating set (unreduced)."""
    return itertools.product(range(2 * rank), repeat=n)
