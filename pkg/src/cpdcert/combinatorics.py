"""Lexicographically ordered k-subsets of {1..n} and the product vector.

Multi-indices are 1-based at every public boundary. Internally the package
works with 0-based tuples from :func:`itertools.combinations`, which already
enumerates in lexicographic order; :func:`subsets` is the single place where
that ordering is produced.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb, prod
from typing import Sequence

import numpy as np

from .errors import DomainError, checked_comb


@dataclass(frozen=True)
class MultiIndex:
    """A strictly increasing tuple of integers in 1..n."""

    entries: tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        entries = tuple(int(e) for e in self.entries)
        object.__setattr__(self, "entries", entries)
        if self.n < 0:
            raise DomainError(f"ambient size must be non-negative, got {self.n}")
        if len(entries) > self.n:
            raise DomainError(f"tuple {entries} is longer than n={self.n}")
        for a, b in zip(entries, entries[1:]):
            if not a < b:
                raise DomainError(f"tuple {entries} is not strictly increasing")
        if entries and (entries[0] < 1 or entries[-1] > self.n):
            raise DomainError(f"tuple {entries} has entries outside 1..{self.n}")

    @property
    def k(self) -> int:
        return len(self.entries)

    def zero_based(self) -> tuple[int, ...]:
        return tuple(e - 1 for e in self.entries)

    @classmethod
    def from_zero_based(cls, entries: Sequence[int], n: int) -> "MultiIndex":
        return cls(tuple(e + 1 for e in entries), n)

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.entries)) + ")"


@dataclass(frozen=True)
class CombinadicTable:
    """The ordered set S_n^k with its rank/unrank bijection."""

    n: int
    k: int

    def __post_init__(self) -> None:
        if self.n < 0 or self.k < 0 or self.k > self.n:
            raise DomainError(f"need 0 <= k <= n, got n={self.n}, k={self.k}")

    @property
    def count(self) -> int:
        return comb(self.n, self.k)

    def rank(self, idx: MultiIndex) -> int:
        if idx.n != self.n or idx.k != self.k:
            raise DomainError(f"{idx} does not belong to S_{self.n}^{self.k}")
        return rank(idx)

    def unrank(self, i: int) -> MultiIndex:
        return unrank(self, i)

    def __iter__(self):
        for t in combinations(range(1, self.n + 1), self.k):
            yield MultiIndex(t, self.n)

    def __len__(self) -> int:
        return self.count


def rank(idx: MultiIndex) -> int:
    """Position (1-based) of ``idx`` in the lexicographic enumeration."""
    n, k = idx.n, idx.k
    position = 1
    previous = 0
    for j, value in enumerate(idx.entries, start=1):
        for v in range(previous + 1, value):
            position += comb(n - v, k - j)
        previous = value
    return position


def unrank(table: CombinadicTable, i: int) -> MultiIndex:
    n, k = table.n, table.k
    if not 1 <= i <= table.count:
        raise DomainError(f"index {i} outside 1..{table.count} for S_{n}^{k}")
    remaining = i - 1
    out = []
    value = 1
    for j in range(1, k + 1):
        while True:
            block = comb(n - value, k - j)
            if remaining < block:
                break
            remaining -= block
            value += 1
        out.append(value)
        value += 1
    return MultiIndex(tuple(out), n)


@lru_cache(maxsize=256)
def subsets(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All 0-based k-subsets of range(n) in lexicographic order (cap-checked)."""
    if not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n, got n={n}, k={k}")
    checked_comb(n, k)
    return tuple(combinations(range(n), k))


@lru_cache(maxsize=256)
def subset_positions(n: int, k: int) -> dict[tuple[int, ...], int]:
    """0-based position of each 0-based k-subset."""
    return {t: i for i, t in enumerate(subsets(n, k))}


def as_vector(values) -> np.ndarray:
    """1-D array; integer input is promoted to Python ints to avoid overflow."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DomainError(f"expected a vector, got shape {arr.shape}")
    if arr.dtype.kind in "iub":
        arr = np.array([int(v) for v in arr], dtype=object)
    return arr


def product_vector(d, m: int) -> np.ndarray:
    """All m-fold products d_{i1}...d_{im}, i1 < ... < im, in lexicographic order."""
    vec = as_vector(d)
    R = len(vec)
    if not 1 <= m <= R:
        raise DomainError(f"need 1 <= m <= R={R}, got m={m}")
    if m == 1:
        return vec.copy()
    items = list(vec)
    out = [prod((items[i] for i in t), start=1) for t in subsets(R, m)]
    return np.array(out, dtype=vec.dtype)


def support_size(d) -> int:
    """omega(d): the number of nonzero entries."""
    return int(sum(1 for v in as_vector(d) if v != 0))
