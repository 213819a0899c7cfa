"""Polynomial pattern hashing.

``H = c1*q^(k-1) + c2*q^(k-2) + ... + ck (mod M)`` evaluated with Horner's rule,
reduced at every step so intermediate values stay below ``q * M``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from config.exceptions import ArgumentError, ConfigurationError

if TYPE_CHECKING:
    from numpy.typing import NDArray

DEFAULT_BASE = 257
DEFAULT_MODULUS = 10_000
DEFAULT_MIN_LENGTH = 20

# the vectorised dot product must not overflow int64: length * 255 * M < 2**63
_INT64_LIMIT = 2**63 - 1


@dataclass(frozen=True)
class HashParams:
    q: int = DEFAULT_BASE
    M: int = DEFAULT_MODULUS
    K_min: int = DEFAULT_MIN_LENGTH

    def __post_init__(self) -> None:
        if self.q < 2:
            msg = f'hash base q must be at least 2, got {self.q}'
            raise ConfigurationError(msg)
        if self.M < 2:
            msg = f'hash modulus M must be at least 2, got {self.M}'
            raise ConfigurationError(msg)
        if self.K_min < 1:
            msg = f'K_min must be at least 1, got {self.K_min}'
            raise ConfigurationError(msg)


def polynomial_hash(pattern: bytes, base: int, modulus: int) -> int:
    if not pattern:
        msg = 'cannot hash an empty pattern'
        raise ArgumentError(msg)
    value = 0
    for byte in pattern:
        value = (value * base + byte) % modulus
    return value


def hash_pattern(pattern: bytes, params: HashParams) -> int:
    """Hash a pattern into ``[0, M)``.

    Raises:
        ArgumentError: if the pattern is empty.
    """
    return polynomial_hash(pattern, params.q, params.M)


def gram_hashes(payload: bytes, length: int, base: int, modulus: int) -> NDArray[np.int64]:
    """Hash every ``length``-byte window of ``payload``.

    Element ``i`` equals ``polynomial_hash(payload[i:i + length], base, modulus)``.
    """
    if length < 1:
        msg = f'window length must be at least 1, got {length}'
        raise ArgumentError(msg)
    count = len(payload) - length + 1
    if count <= 0:
        return np.empty(0, dtype=np.int64)

    powers = [pow(base, length - 1 - t, modulus) for t in range(length)]
    if length * 255 * (modulus - 1) > _INT64_LIMIT:
        # rolling evaluation in Python integers for oversized moduli
        top = powers[0]
        out = np.empty(count, dtype=np.int64)
        value = polynomial_hash(payload[:length], base, modulus)
        out[0] = value
        for i in range(1, count):
            value = ((value - payload[i - 1] * top) * base + payload[i + length - 1]) % modulus
            out[i] = value
        return out

    data = np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
    windows = np.lib.stride_tricks.sliding_window_view(data, length)
    return (windows @ np.asarray(powers, dtype=np.int64)) % modulus
