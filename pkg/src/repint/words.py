"""Words over the alphabet {1, ..., d} and their graded enumeration.

A word is a tuple of ints read left to right; ``()`` is the empty word.
``WordTable`` lists all words of length <= N by length first and
lexicographically within each length, so that truncating the degree keeps a
prefix of the table (and of every block matrix laid out over it).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ShapeMismatch

Word = tuple


def table_size(d: int, max_len: int) -> int:
    if d == 1:
        return max_len + 1
    return (d ** (max_len + 1) - 1) // (d - 1)


@dataclass(frozen=True)
class WordTable:
    d: int
    max_len: int
    words: tuple = field(repr=False)
    _index: dict = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def __getitem__(self, k: int) -> Word:
        return self.words[k]

    @property
    def size(self) -> int:
        return len(self.words)

    def index(self, w: Sequence[int]) -> int:
        try:
            return self._index[tuple(w)]
        except KeyError:
            raise KeyError(f"word {tuple(w)} not in table (d={self.d}, N={self.max_len})") from None

    def __contains__(self, w) -> bool:
        return tuple(w) in self._index

    def grade_slice(self, length: int) -> slice:
        """Index range holding the words of exactly ``length`` letters."""
        start = table_size(self.d, length - 1) if length > 0 else 0
        return slice(start, table_size(self.d, length))

    def reversal_permutation(self) -> np.ndarray:
        """``perm[k]`` is the index of ``reverse(self[k])``."""
        return np.array([self._index[reverse(w)] for w in self.words], dtype=int)


def enumerate_words(d: int, max_len: int) -> WordTable:
    if d < 1 or max_len < 0:
        raise ValueError(f"need d >= 1 and max_len >= 0, got d={d}, max_len={max_len}")
    words = []
    for k in range(max_len + 1):
        words.extend(itertools.product(range(1, d + 1), repeat=k))
    words = tuple(words)
    return WordTable(d, max_len, words, {w: i for i, w in enumerate(words)})


def reverse(w: Sequence[int]) -> Word:
    return tuple(reversed(tuple(w)))


def concat(a: Sequence[int], b: Sequence[int]) -> Word:
    return tuple(a) + tuple(b)


def tuple_apply(mats: Sequence[np.ndarray], w: Iterable[int]) -> np.ndarray:
    """``T_w = T_{w1} T_{w2} ... T_{wk}`` (stored order); identity for the empty word."""
    mats = list(mats)
    if not mats:
        raise ShapeMismatch("empty tuple")
    shape = np.shape(mats[0])
    if len(shape) != 2 or shape[0] != shape[1] or any(np.shape(m) != shape for m in mats):
        raise ShapeMismatch("tuple_apply needs square matrices of one common shape")
    out = np.eye(shape[0], dtype=np.complex128)
    for letter in w:
        out = out @ mats[letter - 1]
    return out


def word_to_json(w: Sequence[int]) -> list:
    return [int(x) for x in w]


def word_from_json(data: list) -> Word:
    return tuple(int(x) for x in data)
