"""Coincidence count tables and the suspect filter.

One table per packet set. ``S`` counts the analysed pairs a pattern was found
in; ``f_Q = sqrt(S / N)`` with ``N`` the packets in the set. Suspects are
entries with ``f_Q >= tau`` that, on a large enough table, also lie more than
``c`` standard deviations above the mean ``f_Q`` of the whole table.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from config.exceptions import ArgumentError, ConfigurationError

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator, Sequence

    from detector.extraction import Pattern, PatternOccurrence

logger = logging.getLogger(__name__)


def coincidence_fraction(s: int, n: int) -> float:
    """``sqrt(S / N)``.

    Raises:
        ArgumentError: if ``n`` is not positive or ``s`` is negative.
    """
    if n <= 0:
        msg = f'N must be positive, got {n}'
        raise ArgumentError(msg)
    if s < 0:
        msg = f'S cannot be negative, got {s}'
        raise ArgumentError(msg)
    return math.sqrt(s / n)


@dataclass(frozen=True)
class FilterPolicy:
    tau: float = 0.3
    c: float = 3.0
    min_population: int = 10

    def __post_init__(self) -> None:
        if not 0 < self.tau <= 1:
            msg = f'tau must be in (0, 1], got {self.tau}'
            raise ConfigurationError(msg)
        if self.c <= 0:
            msg = f'deviation multiplier c must be positive, got {self.c}'
            raise ConfigurationError(msg)
        if self.min_population < 2:
            msg = f'min_population must be at least 2, got {self.min_population}'
            raise ConfigurationError(msg)


@dataclass
class CoincidenceEntry:
    pattern: Pattern
    N: int
    S: int = 1

    @property
    def f_Q(self) -> float:  # noqa: N802
        return coincidence_fraction(self.S, self.N)

    @property
    def sort_key(self) -> tuple[float, bytes]:
        return (-self.f_Q, self.pattern.data)


@dataclass
class CoincidenceTable:
    """Per-packet-set counts keyed by ``(hash, pattern bytes)``; single writer."""

    N: int
    entries: dict[tuple[int, bytes], CoincidenceEntry] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.N < 1:
            msg = f'a coincidence table needs N >= 1, got {self.N}'
            raise ArgumentError(msg)

    @classmethod
    def from_occurrences(cls, n: int, occurrences: Iterable[PatternOccurrence]) -> CoincidenceTable:
        table = cls(n)
        for occurrence in occurrences:
            table.record(occurrence.pattern)
        return table

    def record(self, pattern: Pattern) -> CoincidenceTable:
        key = (pattern.hash, pattern.data)
        entry = self.entries.get(key)
        if entry is None:
            self.entries[key] = CoincidenceEntry(pattern, self.N)
        else:
            entry.S += 1
        return self

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[CoincidenceEntry]:
        return iter(self.entries.values())

    def get(self, data: bytes) -> CoincidenceEntry | None:
        return next((entry for entry in self.entries.values() if entry.pattern.data == data), None)


def record_pattern(table: CoincidenceTable, pattern: Pattern) -> CoincidenceTable:
    return table.record(pattern)


def flag_suspects(table: CoincidenceTable, policy: FilterPolicy | None = None) -> list[CoincidenceEntry]:
    """Entries above ``tau`` and, on populous tables, above ``mean + c * std`` of all ``f_Q``."""
    policy = policy or FilterPolicy()
    entries = list(table.entries.values())
    if not entries:
        return []

    candidates = [entry for entry in entries if entry.f_Q >= policy.tau]
    if len(entries) >= policy.min_population and candidates:
        values = np.fromiter((entry.f_Q for entry in entries), dtype=np.float64, count=len(entries))
        mean, std = float(values.mean()), float(values.std())
        cutoff = mean + policy.c * std
        logger.debug('Deviation stage over %d entries: mean=%.4f std=%.4f cutoff=%.4f', len(entries), mean, std, cutoff)
        candidates = [entry for entry in candidates if entry.f_Q > cutoff]
    return sorted(candidates, key=lambda entry: entry.sort_key)


def aggregate_corpus_suspects(
    tables: Sequence[CoincidenceTable],
    policy: FilterPolicy | None = None,
) -> list[CoincidenceEntry]:
    """Union of every table's suspects, one per pattern bytes, keeping the highest ``f_Q``.

    Raises:
        ArgumentError: if no tables are given.
    """
    if not tables:
        msg = 'aggregation needs at least one coincidence table'
        raise ArgumentError(msg)

    best: dict[bytes, CoincidenceEntry] = {}
    for table in tables:
        for entry in flag_suspects(table, policy):
            current = best.get(entry.pattern.data)
            if current is None or entry.f_Q > current.f_Q:
                best[entry.pattern.data] = entry
    return sorted(best.values(), key=lambda entry: entry.sort_key)
