"""Packets, packet sets and corpora: the units the detector analyses."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from config.exceptions import ConfigurationError

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

logger = logging.getLogger(__name__)

MAX_PAYLOAD = 65535
DEFAULT_SET_SIZE = 100
DEFAULT_SETS_PER_CORPUS = 10


@dataclass(frozen=True)
class Packet:
    """An application payload captured off the wire."""

    payload: bytes
    source_id: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.payload, bytes):
            # bytearray / memoryview would leave the payload mutable
            object.__setattr__(self, 'payload', bytes(self.payload))
        if len(self.payload) > MAX_PAYLOAD:
            msg = f'payload is {len(self.payload)} bytes, the maximum is {MAX_PAYLOAD}'
            raise ConfigurationError(msg)

    def __len__(self) -> int:
        return len(self.payload)


@dataclass(frozen=True)
class PacketSet:
    """A fixed-size group of packets; one coincidence table is kept per set."""

    packets: tuple[Packet, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'packets', tuple(self.packets))
        if not self.packets:
            msg = 'a packet set needs at least one packet'
            raise ConfigurationError(msg)

    @property
    def N(self) -> int:  # noqa: N802
        return len(self.packets)

    def __len__(self) -> int:
        return len(self.packets)


@dataclass(frozen=True)
class Corpus:
    """Packet sets transferred and analysed together."""

    sets: tuple[PacketSet, ...]
    created_at: int = field(default_factory=lambda: int(time.time()))

    def __post_init__(self) -> None:
        object.__setattr__(self, 'sets', tuple(self.sets))
        if self.created_at < 0:
            msg = 'created_at must be a unix timestamp'
            raise ConfigurationError(msg)

    @property
    def packet_count(self) -> int:
        return sum(len(packet_set) for packet_set in self.sets)


def packets_from_payloads(payloads: Iterable[bytes]) -> list[Packet]:
    """Wrap raw payloads as packets, dropping empty ones."""
    return [Packet(payload, source_id=str(index)) for index, payload in enumerate(payloads) if payload]


def build_packet_sets(packets: Sequence[Packet], n: int = DEFAULT_SET_SIZE) -> list[PacketSet]:
    """Chunk packets into sets of exactly ``n``; a trailing partial chunk is discarded.

    Empty payloads are skipped before chunking since they cannot share a pattern.

    Raises:
        ConfigurationError: if ``n`` is smaller than 2.
    """
    if n < 2:
        msg = f'packet set size must be at least 2, got {n}'
        raise ConfigurationError(msg)

    usable = [packet for packet in packets if packet.payload]
    full = len(usable) - len(usable) % n
    if full < len(usable):
        logger.debug('Discarding %d trailing packets that do not fill a set of %d', len(usable) - full, n)
    return [PacketSet(tuple(usable[start : start + n])) for start in range(0, full, n)]


def build_corpus(
    sets: Sequence[PacketSet],
    per_corpus: int = DEFAULT_SETS_PER_CORPUS,
    *,
    created_at: int | None = None,
) -> list[Corpus]:
    """Group consecutive packet sets into corpora of ``per_corpus`` sets.

    Raises:
        ConfigurationError: if ``per_corpus`` is smaller than 1.
    """
    if per_corpus < 1:
        msg = f'sets per corpus must be at least 1, got {per_corpus}'
        raise ConfigurationError(msg)

    stamp = int(time.time()) if created_at is None else created_at
    full = len(sets) - len(sets) % per_corpus
    if full < len(sets):
        logger.debug('Discarding %d trailing packet sets', len(sets) - full)
    return [Corpus(tuple(sets[start : start + per_corpus]), created_at=stamp) for start in range(0, full, per_corpus)]
