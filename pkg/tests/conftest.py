"""
Shared pytest fixtures available to all tests.

pytest-django picks up ``config.settings`` from pyproject.toml, so tests that touch
the database (run recording, dashboard views) only need ``@pytest.mark.django_db``.
Everything else (codecs, hashing, extraction, services) runs without a database and
builds its inputs from the small factories below.

Conventions:
  - ``rng`` is a seeded numpy Generator; tests that need their own stream derive
    one with ``np.random.default_rng([seed, n])`` so cases stay independent.
  - Services are started on 127.0.0.1 port 0 and report the port they bound.
"""

from collections.abc import Callable, Sequence

import numpy as np
import pytest

from capture.packets import Corpus, Packet, PacketSet
from detector.bloom import BloomParams
from detector.extraction import ExtractionConfig
from detector.hashing import HashParams


def packet_set(*payloads: bytes) -> PacketSet:
    return PacketSet(tuple(Packet(payload) for payload in payloads))


@pytest.fixture
def make_set() -> Callable[..., PacketSet]:
    return packet_set


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def hash_params() -> HashParams:
    return HashParams()


@pytest.fixture
def bloom_params() -> BloomParams:
    return BloomParams()


@pytest.fixture
def extraction_config() -> ExtractionConfig:
    return ExtractionConfig()


@pytest.fixture
def random_payloads(rng: np.random.Generator) -> Callable[[int, int], list[bytes]]:
    """Factory for ``count`` uniform-random payloads of ``length`` bytes."""

    def make(count: int, length: int) -> list[bytes]:
        return [rng.integers(0, 256, size=length, dtype=np.uint8).tobytes() for _ in range(count)]

    return make


@pytest.fixture
def make_corpus() -> Callable[..., Corpus]:
    """Factory turning nested payload lists into a Corpus."""

    def make(sets: Sequence[Sequence[bytes]], created_at: int = 1_700_000_000) -> Corpus:
        return Corpus(tuple(packet_set(*payloads) for payloads in sets), created_at=created_at)

    return make
