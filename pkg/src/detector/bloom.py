"""Bloom filter over byte patterns and its collision-probability formula.

The k index functions are derived from two polynomial hashes (bases ``q`` and
``q + 2``) by extended double hashing: ``h_i = (H1 + i*H2 + i*i) mod m`` with
``H2`` forced odd.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from config.exceptions import ConfigurationError
from detector.hashing import HashParams, gram_hashes, polynomial_hash

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import NDArray

DEFAULT_BITS = 10_000
DEFAULT_HASH_COUNT = 4
MAX_HASH_COUNT = 32


@dataclass(frozen=True)
class BloomParams:
    m: int = DEFAULT_BITS
    k: int = DEFAULT_HASH_COUNT
    n_expected: int = 1500

    def __post_init__(self) -> None:
        if self.m < 8:
            msg = f'Bloom filter needs at least 8 bits, got m={self.m}'
            raise ConfigurationError(msg)
        if not 1 <= self.k <= MAX_HASH_COUNT:
            msg = f'hash function count k must be in [1, {MAX_HASH_COUNT}], got {self.k}'
            raise ConfigurationError(msg)
        if self.n_expected < 0:
            msg = 'n_expected cannot be negative'
            raise ConfigurationError(msg)

    @property
    def collision_probability(self) -> float:
        return collision_probability(self.m, self.k, self.n_expected)


def _index_offsets(k: int) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    i = np.arange(k, dtype=np.int64)
    return i, i * i


def hash_pair(pattern: bytes, base_params: HashParams) -> tuple[int, int]:
    """The two polynomial hashes (bases ``q`` and ``q + 2``) every index function starts from."""
    return (
        polynomial_hash(pattern, base_params.q, base_params.M),
        polynomial_hash(pattern, base_params.q + 2, base_params.M),
    )


def double_hash[T: (int, NDArray[np.int64])](h1: T, h2: T, i: T, i_squared: T, m: int) -> T:
    """``(h1 + i*h2 + i*i) mod m`` with ``h2`` forced odd; broadcasts over numpy arrays."""
    return (h1 + i * (h2 | 1) + i_squared) % m


def derive_hashers(params: BloomParams, base_params: HashParams) -> list[Callable[[bytes], int]]:
    """Return the k index functions of the filter, each mapping a pattern into ``[0, m)``."""
    m = params.m

    def make(i: int) -> Callable[[bytes], int]:
        def h(pattern: bytes) -> int:
            h1, h2 = hash_pair(pattern, base_params)
            return double_hash(h1, h2, i, i * i, m)

        return h

    return [make(i) for i in range(params.k)]


@dataclass(eq=False)
class BloomFilter:
    """Bit-array set membership with no false negatives.

    Single writer; concurrent readers only once all inserts are done.
    """

    params: BloomParams = field(default_factory=BloomParams)
    hash_params: HashParams = field(default_factory=HashParams)
    bits: NDArray[np.bool_] = field(init=False, repr=False)
    hashers: list[Callable[[bytes], int]] = field(init=False, repr=False)
    inserted: int = field(init=False, default=0)

    def __post_init__(self) -> None:
        self.bits = np.zeros(self.params.m, dtype=np.bool_)
        self._i, self._i_squared = _index_offsets(self.params.k)
        self.hashers = derive_hashers(self.params, self.hash_params)

    def positions(self, pattern: bytes) -> list[int]:
        return [h(pattern) for h in self.hashers]

    def positions_many(self, h1: NDArray[np.int64], h2: NDArray[np.int64]) -> NDArray[np.int64]:
        """Index matrix of shape ``(len(h1), k)`` for precomputed hash pairs."""
        return double_hash(h1[:, None], h2[:, None], self._i[None, :], self._i_squared[None, :], self.params.m)

    def insert(self, pattern: bytes) -> BloomFilter:
        self.bits[self.positions(pattern)] = True
        self.inserted += 1
        return self

    def query(self, pattern: bytes) -> bool:
        return bool(self.bits[self.positions(pattern)].all())

    def insert_many(self, h1: NDArray[np.int64], h2: NDArray[np.int64]) -> None:
        self.bits[self.positions_many(h1, h2).ravel()] = True
        self.inserted += len(h1)

    def query_many(self, h1: NDArray[np.int64], h2: NDArray[np.int64]) -> NDArray[np.bool_]:
        if not len(h1):
            return np.zeros(0, dtype=np.bool_)
        return self.bits[self.positions_many(h1, h2)].all(axis=1)

    def gram_hash_pairs(self, payload: bytes, length: int) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
        """Both polynomial hashes of every ``length``-byte window of ``payload``."""
        q, modulus = self.hash_params.q, self.hash_params.M
        return gram_hashes(payload, length, q, modulus), gram_hashes(payload, length, q + 2, modulus)

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    def __contains__(self, pattern: bytes) -> bool:
        return self.query(pattern)


def bloom_insert(bloom: BloomFilter, pattern: bytes) -> BloomFilter:
    return bloom.insert(pattern)


def bloom_query(bloom: BloomFilter, pattern: bytes) -> bool:
    return bloom.query(pattern)


def collision_probability(m: int, k: int, n: int) -> float:
    """Exact false-positive probability ``(1 - (1 - 1/m)^(kn))^k``."""
    if m < 1 or k < 1 or n < 0:
        msg = f'need m >= 1, k >= 1, n >= 0 (got m={m}, k={k}, n={n})'
        raise ConfigurationError(msg)
    if n == 0:
        return 0.0
    if m == 1:
        return 1.0
    # (1 - 1/m)^(kn) through log1p keeps precision for large m
    empty = math.exp(k * n * math.log1p(-1.0 / m))
    return (1.0 - empty) ** k


def collision_probability_approx(m: int, k: int, n: int) -> float:
    """Exponential approximation ``(1 - e^(-kn/m))^k``."""
    if m < 1 or k < 1 or n < 0:
        msg = f'need m >= 1, k >= 1, n >= 0 (got m={m}, k={k}, n={n})'
        raise ConfigurationError(msg)
    return (-math.expm1(-k * n / m)) ** k


def optimal_hash_count(m: int, n: int) -> int:
    """The k in ``[1, 32]`` minimising the exact collision probability."""
    if n <= 0:
        return 1
    return min(range(1, MAX_HASH_COUNT + 1), key=lambda k: collision_probability(m, k, n))


def explain_quoted_rate(
    m: int,
    target: float,
    *,
    tolerance: float = 0.05,
    max_n: int = 5000,
) -> list[tuple[int, int, float]]:
    """List ``(k, n, probability)`` whose exact collision probability is within
    ``tolerance`` (relative) of ``target``.

    For each k the largest qualifying insert count is reported, since the
    probability grows with n.
    """
    found = []
    for k in range(1, MAX_HASH_COUNT + 1):
        best = None
        low, high = 0, max_n
        # probability is non-decreasing in n: binary search the last n <= target * (1 + tolerance)
        while low <= high:
            mid = (low + high) // 2
            if collision_probability(m, k, mid) <= target * (1 + tolerance):
                best = mid
                low = mid + 1
            else:
                high = mid - 1
        if best is None:
            continue
        probability = collision_probability(m, k, best)
        if abs(probability - target) <= tolerance * target:
            found.append((k, best, probability))
    return found
