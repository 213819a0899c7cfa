import numpy as np
import pytest

from capture.packets import Packet
from config.exceptions import ConfigurationError
from detector.extraction import (
    ExtractionConfig,
    Pairing,
    Pattern,
    PatternOccurrence,
    extract_common_patterns,
    extract_set_patterns,
    pair_packets,
    split_run,
)
from detector.hashing import HashParams, hash_pattern

P1 = b'ABCDEFGHIJK'
P2 = b'AMNBCDOPQGHIJR'


def brute_force(a: bytes, b: bytes, k_min: int, k_max: int | None = None) -> set[bytes]:
    """Every aligned run that cannot be extended on either side, at least ``k_min`` long."""
    found = set()
    for i in range(len(a)):
        for j in range(len(b)):
            if i and j and a[i - 1] == b[j - 1]:
                continue
            length = 0
            while i + length < len(a) and j + length < len(b) and a[i + length] == b[j + length]:
                length += 1
            if length >= k_min:
                found.update(split_run(a[i : i + length], k_min, k_max))
    return found


def extract(a: bytes, b: bytes, k_min: int, k_max: int | None = None) -> set[bytes]:
    patterns = extract_common_patterns(Packet(a), Packet(b), ExtractionConfig(K_min=k_min, K_max=k_max))
    return {pattern.data for pattern in patterns}


def test_config_defaults_and_validation() -> None:
    config = ExtractionConfig()

    assert (config.K_min, config.K_max, config.pairing) == (20, None, Pairing.ADJACENT_DISJOINT)
    with pytest.raises(ConfigurationError):
        ExtractionConfig(K_min=0)
    with pytest.raises(ConfigurationError):
        ExtractionConfig(K_min=20, K_max=10)


@pytest.mark.parametrize(
    ('count', 'strategy', 'expected'),
    [
        (4, Pairing.ADJACENT_DISJOINT, [(0, 1), (2, 3)]),
        (5, Pairing.ADJACENT_DISJOINT, [(0, 1), (2, 3)]),
        (4, Pairing.ALL_PAIRS, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
        (1, Pairing.ALL_PAIRS, []),
        (1, Pairing.ADJACENT_DISJOINT, []),
    ],
)
def test_pair_packets(make_set, count: int, strategy: Pairing, expected: list[tuple[int, int]]) -> None:
    packet_set = make_set(*(bytes([index]) for index in range(count)))

    assert pair_packets(packet_set, strategy) == expected


def test_pairing_accepts_tag_strings(make_set) -> None:
    assert len(pair_packets(make_set(b'a', b'b', b'c'), 'all-pairs')) == 3


def test_worked_example() -> None:
    assert extract(P1, P2, 3) == {b'BCD', b'GHIJ'}


def test_identical_payloads() -> None:
    assert extract(b'XYZW', b'XYZW', 3) == {b'XYZW'}


def test_disjoint_alphabets() -> None:
    assert extract(b'a' * 50, b'b' * 50, 3) == set()


def test_planted_substring(rng: np.random.Generator) -> None:
    a = bytearray(rng.integers(0, 256, size=64, dtype=np.uint8).tobytes())
    b = bytearray(rng.integers(0, 256, size=64, dtype=np.uint8).tobytes())
    a[5:15] = b'MALPAYLOAD'
    b[40:50] = b'MALPAYLOAD'

    found = extract(bytes(a), bytes(b), 5)

    assert found == brute_force(bytes(a), bytes(b), 5)
    assert any(b'MALPAYLOAD' in pattern for pattern in found)


def test_patterns_carry_their_hash() -> None:
    (pattern,) = extract_common_patterns(Packet(P1), Packet(P2), ExtractionConfig(K_min=4))

    assert pattern == Pattern(b'GHIJ', 0)
    assert pattern.hash == hash_pattern(b'GHIJ', HashParams(K_min=4))
    assert pattern.length == 4


@pytest.mark.parametrize(
    ('k_min', 'k_max', 'expected'),
    [
        (10, 20, [20, 20, 10]),
        (15, 20, [20, 20]),
        (10, None, [50]),
        (10, 50, [50]),
    ],
)
def test_split_run_windows(k_min: int, k_max: int | None, expected: list[int]) -> None:
    run = bytes(range(50))

    windows = list(split_run(run, k_min, k_max))

    assert [len(window) for window in windows] == expected
    assert b''.join(windows) == run[: sum(expected)]


def test_k_max_splits_long_common_runs(rng: np.random.Generator) -> None:
    shared = rng.integers(0, 256, size=45, dtype=np.uint8).tobytes()
    a = b'\x00' * 7 + shared + b'\x01'
    b = b'\x02' + shared + b'\x03' * 9

    assert extract(a, b, 10, 20) == {shared[:20], shared[20:40]}


def random_pair(rng: np.random.Generator, alphabet: int) -> tuple[bytes, bytes]:
    symbols = np.frombuffer(b'ACGT' if alphabet == 4 else bytes(range(256)), dtype=np.uint8)[:alphabet]
    lengths = rng.integers(1, 201, size=2)
    return (
        rng.choice(symbols, size=lengths[0]).astype(np.uint8).tobytes(),
        rng.choice(symbols, size=lengths[1]).astype(np.uint8).tobytes(),
    )


def periodic_pair(rng: np.random.Generator) -> tuple[bytes, bytes]:
    unit = rng.integers(0, 256, size=int(rng.integers(1, 5)), dtype=np.uint8).tobytes()
    stream = unit * 400
    start_a, start_b = rng.integers(0, len(unit) + 1, size=2)
    len_a, len_b = rng.integers(1, 201, size=2)
    a = stream[start_a : start_a + len_a]
    b = bytearray(stream[start_b : start_b + len_b])
    if len(b) > 10 and rng.random() < 0.5:
        b[len(b) // 2] ^= 0xFF
    return a, bytes(b)


@pytest.mark.parametrize('kind', ['binary', 'dna', 'bytes', 'periodic'])
def test_matches_brute_force(kind: str) -> None:
    rng = np.random.default_rng(['binary', 'dna', 'bytes', 'periodic'].index(kind))
    for _ in range(250):
        if kind == 'periodic':
            a, b = periodic_pair(rng)
        else:
            a, b = random_pair(rng, {'binary': 2, 'dna': 4, 'bytes': 256}[kind])
        k_min = int(rng.integers(1, 12)) if kind != 'bytes' else int(rng.integers(1, 4))
        k_max = None if rng.random() < 0.7 else k_min + int(rng.integers(0, 10))

        found = extract(a, b, k_min, k_max)

        assert found == brute_force(a, b, k_min, k_max), (a, b, k_min, k_max)
        assert all(len(pattern) >= k_min and pattern in a and pattern in b for pattern in found)


def test_symmetric(rng: np.random.Generator) -> None:
    for _ in range(50):
        a, b = random_pair(rng, 2)
        assert extract(a, b, 4) == extract(b, a, 4)


def test_extract_set_patterns_identical_packets(make_set) -> None:
    payload = b'ABCDEFGHIJKLMNOPQRSTUVWXYZ'
    occurrences = extract_set_patterns(make_set(payload, payload, payload, payload))

    assert [(o.pattern.data, o.pair) for o in occurrences] == [(payload, (0, 1)), (payload, (2, 3))]


def test_extract_set_patterns_worked_example(make_set) -> None:
    occurrences = extract_set_patterns(make_set(P1, P2), ExtractionConfig(K_min=3))

    assert [(o.pattern.data, o.pair) for o in occurrences] == [(b'BCD', (0, 1)), (b'GHIJ', (0, 1))]
    assert all(isinstance(o, PatternOccurrence) for o in occurrences)


def test_random_set_has_no_patterns(make_set, random_payloads) -> None:
    payloads = random_payloads(10, 200)

    assert extract_set_patterns(make_set(*payloads), ExtractionConfig(pairing=Pairing.ALL_PAIRS)) == []
    assert all(not brute_force(payloads[i], payloads[i + 1], 20) for i in range(0, 10, 2))


def test_one_occurrence_per_pair(make_set) -> None:
    token = b'repeated-token-0123456789'
    first = token + b'|' + token + b'#' + token
    second = b'@' + token + b'!'

    occurrences = extract_set_patterns(make_set(first, second))

    assert [(o.pattern.data, o.pair) for o in occurrences] == [(token, (0, 1))]
