"""Seeded synthetic honeypot traffic with an optional planted payload."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from capture.packets import (
    DEFAULT_SET_SIZE,
    DEFAULT_SETS_PER_CORPUS,
    MAX_PAYLOAD,
    Corpus,
    Packet,
    PacketSet,
)
from config.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

# The standard 68-byte antivirus test file.
EICAR = rb'X5O!P%@AP[4\PZX54(P^)7CC)7}$EICAR-STANDARD-ANTIVIRUS-TEST-FILE!$H+H*'


@dataclass(frozen=True)
class SimScenario:
    n_sets: int = DEFAULT_SETS_PER_CORPUS
    packets_per_set: int = DEFAULT_SET_SIZE
    packet_len: int = 1500
    inject_fraction: float = 0.0
    inject_payload: bytes = EICAR
    seed: int = 0
    created_at: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.inject_fraction <= 1.0:
            msg = f'inject_fraction must lie in [0, 1], got {self.inject_fraction}'
            raise ConfigurationError(msg)
        if self.n_sets < 1:
            msg = f'n_sets must be at least 1, got {self.n_sets}'
            raise ConfigurationError(msg)
        if self.packets_per_set < 2:
            msg = f'packets_per_set must be at least 2, got {self.packets_per_set}'
            raise ConfigurationError(msg)
        if not 1 <= self.packet_len <= MAX_PAYLOAD:
            msg = f'packet_len must lie in [1, {MAX_PAYLOAD}], got {self.packet_len}'
            raise ConfigurationError(msg)
        if self.packet_len < len(self.inject_payload):
            msg = f'packet_len {self.packet_len} cannot hold a {len(self.inject_payload)} byte payload'
            raise ConfigurationError(msg)
        if self.seed < 0:
            msg = f'seed must be non-negative, got {self.seed}'
            raise ConfigurationError(msg)

    @property
    def total_packets(self) -> int:
        return self.n_sets * self.packets_per_set


@dataclass(frozen=True, eq=False)
class GeneratedTraffic:
    corpus: Corpus
    injected: np.ndarray

    @property
    def injected_count(self) -> int:
        return int(self.injected.sum())


def generate_traffic(scenario: SimScenario) -> GeneratedTraffic:
    """Uniform-random packets; each one independently carries the payload with ``inject_fraction``."""
    rng = np.random.default_rng(scenario.seed)
    total = scenario.total_packets
    payloads = rng.integers(0, 256, size=(total, scenario.packet_len), dtype=np.uint8)
    injected = rng.random(total) < scenario.inject_fraction
    width = len(scenario.inject_payload)
    offsets = rng.integers(0, scenario.packet_len - width + 1, size=total)

    if width:
        planted = np.frombuffer(scenario.inject_payload, dtype=np.uint8)
        for row in np.flatnonzero(injected):
            payloads[row, offsets[row] : offsets[row] + width] = planted
    else:
        injected[:] = False

    sets = tuple(
        PacketSet(
            tuple(
                Packet(payloads[row].tobytes(), source_id=str(row))
                for row in range(start, start + scenario.packets_per_set)
            )
        )
        for start in range(0, total, scenario.packets_per_set)
    )
    traffic = GeneratedTraffic(Corpus(sets, created_at=scenario.created_at), injected)
    logger.info(
        'Generated %d sets x %d packets of %d bytes, payload planted in %d',
        scenario.n_sets,
        scenario.packets_per_set,
        scenario.packet_len,
        traffic.injected_count,
    )
    return traffic


def random_file_bytes(seed: int, stream: int, size: int, *, plant: bytes = b'', at: int = 0) -> bytes:
    """Filler bytes for a scan-root test file, optionally with ``plant`` written at offset ``at``."""
    rng = np.random.default_rng([seed, stream])
    data = bytearray(rng.integers(0, 256, size=size, dtype=np.uint8).tobytes())
    if plant:
        data[at : at + len(plant)] = plant
    return bytes(data)
