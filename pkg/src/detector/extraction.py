"""Maximal common byte patterns between packet pairs.

Every ``K_min``-gram of the first payload goes into a fresh Bloom filter and an
exact index (gram hash -> positions). The second payload's grams are probed
against the filter; surviving candidates are verified byte for byte and extended
left and right until the aligned run can grow no further. The filter only prunes
candidates, so the output is exact.
"""

from __future__ import annotations

import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import StrEnum
from typing import TYPE_CHECKING

import numpy as np

from config.exceptions import ConfigurationError
from detector.bloom import BloomFilter, BloomParams
from detector.hashing import DEFAULT_MIN_LENGTH, HashParams, hash_pattern

if TYPE_CHECKING:
    from collections.abc import Iterator

    from capture.packets import Packet, PacketSet

logger = logging.getLogger(__name__)


class Pairing(StrEnum):
    ADJACENT_DISJOINT = 'adjacent-disjoint'
    ALL_PAIRS = 'all-pairs'


@dataclass(frozen=True)
class ExtractionConfig:
    K_min: int = DEFAULT_MIN_LENGTH
    K_max: int | None = None
    pairing: Pairing = Pairing.ADJACENT_DISJOINT

    def __post_init__(self) -> None:
        if self.K_min < 1:
            msg = f'K_min must be at least 1, got {self.K_min}'
            raise ConfigurationError(msg)
        if self.K_max is not None and self.K_max < self.K_min:
            msg = f'K_max ({self.K_max}) must not be below K_min ({self.K_min})'
            raise ConfigurationError(msg)
        try:
            object.__setattr__(self, 'pairing', Pairing(self.pairing))
        except ValueError:
            msg = f'unknown pairing strategy {self.pairing!r}'
            raise ConfigurationError(msg) from None


@dataclass(frozen=True, order=True)
class Pattern:
    """A byte string common to at least one packet pair."""

    data: bytes
    hash: int = field(compare=False)

    @classmethod
    def of(cls, data: bytes, params: HashParams) -> Pattern:
        return cls(data, hash_pattern(data, params))

    @property
    def length(self) -> int:
        return len(self.data)

    def hex(self) -> str:
        return self.data.hex()


@dataclass(frozen=True, order=True)
class PatternOccurrence:
    pair: tuple[int, int]
    pattern: Pattern


def default_params(config: ExtractionConfig, bloom_params: BloomParams | None = None) -> tuple[HashParams, BloomParams]:
    bloom_params = bloom_params or BloomParams()
    return HashParams(M=bloom_params.m, K_min=config.K_min), bloom_params


def pair_packets(packet_set: PacketSet, strategy: Pairing | str = Pairing.ADJACENT_DISJOINT) -> list[tuple[int, int]]:
    """Index pairs to compare; an odd trailing packet stays unpaired under adjacent-disjoint."""
    count = len(packet_set.packets)
    if count < 2:
        return []
    if Pairing(strategy) is Pairing.ALL_PAIRS:
        return list(itertools.combinations(range(count), 2))
    return [(i, i + 1) for i in range(0, count - 1, 2)]


def maximal_runs(
    a: bytes,
    b: bytes,
    k: int,
    hash_params: HashParams,
    bloom_params: BloomParams,
) -> set[tuple[int, int, int]]:
    """All maximal aligned runs ``(start_a, start_b, length)`` with ``length >= k``."""
    if len(a) < k or len(b) < k:
        return set()

    bloom = BloomFilter(bloom_params, hash_params)
    h1_a, h2_a = bloom.gram_hash_pairs(a, k)
    bloom.insert_many(h1_a, h2_a)
    positions: defaultdict[int, list[int]] = defaultdict(list)
    for i, h in enumerate(h1_a.tolist()):
        positions[h].append(i)

    h1_b, h2_b = bloom.gram_hash_pairs(b, k)
    candidates = np.flatnonzero(bloom.query_many(h1_b, h2_b)).tolist()
    h1_b_list = h1_b.tolist()

    covered: defaultdict[int, list[tuple[int, int]]] = defaultdict(list)
    runs: set[tuple[int, int, int]] = set()
    for j in candidates:
        gram = b[j : j + k]
        for i in positions.get(h1_b_list[j], ()):
            diagonal = i - j
            if any(start <= i < end for start, end in covered[diagonal]):
                continue
            if a[i : i + k] != gram:
                continue
            start_a, start_b = i, j
            while start_a > 0 and start_b > 0 and a[start_a - 1] == b[start_b - 1]:
                start_a -= 1
                start_b -= 1
            end_a, end_b = i + k, j + k
            while end_a < len(a) and end_b < len(b) and a[end_a] == b[end_b]:
                end_a += 1
                end_b += 1
            covered[diagonal].append((start_a, end_a))
            runs.add((start_a, start_b, end_a - start_a))
    return runs


def split_run(run: bytes, k_min: int, k_max: int | None) -> Iterator[bytes]:
    """Cut a run longer than ``k_max`` into ``k_max`` windows; keep a remainder of at least ``k_min``."""
    if k_max is None or len(run) <= k_max:
        yield run
        return
    for start in range(0, len(run), k_max):
        window = run[start : start + k_max]
        if len(window) >= k_min:
            yield window


def extract_common_patterns(
    p1: Packet,
    p2: Packet,
    config: ExtractionConfig | None = None,
    *,
    hash_params: HashParams | None = None,
    bloom_params: BloomParams | None = None,
) -> set[Pattern]:
    """Maximal byte patterns of at least ``K_min`` bytes shared by both payloads."""
    config = config or ExtractionConfig()
    if hash_params is None:
        hash_params, bloom_params = default_params(config, bloom_params)
    bloom_params = bloom_params or BloomParams(m=hash_params.M)

    a, b = p1.payload, p2.payload
    found: set[bytes] = set()
    for start_a, _start_b, length in maximal_runs(a, b, config.K_min, hash_params, bloom_params):
        found.update(split_run(a[start_a : start_a + length], config.K_min, config.K_max))
    return {Pattern.of(data, hash_params) for data in found}


def extract_set_patterns(
    packet_set: PacketSet,
    config: ExtractionConfig | None = None,
    *,
    hash_params: HashParams | None = None,
    bloom_params: BloomParams | None = None,
) -> list[PatternOccurrence]:
    """One occurrence per (pattern, pair), ordered by pair index then pattern bytes."""
    config = config or ExtractionConfig()
    if hash_params is None:
        hash_params, bloom_params = default_params(config, bloom_params)

    occurrences = []
    packets = packet_set.packets
    for pair in pair_packets(packet_set, config.pairing):
        first, second = packets[pair[0]], packets[pair[1]]
        patterns = extract_common_patterns(
            first, second, config, hash_params=hash_params, bloom_params=bloom_params
        )
        occurrences.extend(PatternOccurrence(pair, pattern) for pattern in patterns)
    occurrences.sort()
    logger.debug('Packet set of %d packets yielded %d pattern occurrences', len(packets), len(occurrences))
    return occurrences
