"""AMP1 anti-malware packet encoding, shared by the wire and the client's disk DB.

``b'AMP1'``, version u16, count u16, then per signature: pattern length u32,
pattern bytes, hash u64, created_at u64. Big-endian throughout.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from config.exceptions import FormatError
from detector.pipeline import Signature

MAGIC = b'AMP1'
VERSION = 1
MAX_SIGNATURES = 0xFFFF

_HEADER = struct.Struct('>4sHH')
_LENGTH = struct.Struct('>I')
_TRAILER = struct.Struct('>QQ')


@dataclass(frozen=True)
class AntiMalwarePacket:
    signatures: tuple[Signature, ...] = ()
    version: int = VERSION

    def __post_init__(self) -> None:
        object.__setattr__(self, 'signatures', tuple(self.signatures))
        if len(self.signatures) > MAX_SIGNATURES:
            raise FormatError('count', f'{len(self.signatures)} signatures exceed {MAX_SIGNATURES}')
        if any(not signature.pattern for signature in self.signatures):
            raise FormatError('pattern_len', 'signature patterns cannot be empty')


def encode_packet(packet: AntiMalwarePacket) -> bytes:
    if packet.version != VERSION:
        raise FormatError('version', f'cannot encode version {packet.version}')
    parts = [_HEADER.pack(MAGIC, packet.version, len(packet.signatures))]
    for signature in packet.signatures:
        parts.append(_LENGTH.pack(len(signature.pattern)))
        parts.append(signature.pattern)
        parts.append(_TRAILER.pack(signature.hash, signature.created_at))
    return b''.join(parts)


def decode_packet(data: bytes) -> AntiMalwarePacket:
    """Parse AMP1 bytes.

    Raises:
        FormatError: naming the field that is wrong or truncated.
    """
    view = memoryview(data)
    if len(view) < _HEADER.size:
        field = 'truncated' if MAGIC.startswith(bytes(view[:4])) else 'magic'
        raise FormatError(field, f'{len(view)} bytes cannot hold an AMP1 header', offset=0)
    magic, version, count = _HEADER.unpack_from(view)
    if magic != MAGIC:
        raise FormatError('magic', f'expected {MAGIC!r}, got {magic!r}', offset=0)
    if version != VERSION:
        raise FormatError('version', f'unsupported AMP1 version {version}', offset=4)

    pos = _HEADER.size
    signatures = []
    for index in range(count):
        if pos + _LENGTH.size > len(view):
            raise FormatError('truncated', f'signature {index} length is missing', offset=pos)
        (length,) = _LENGTH.unpack_from(view, pos)
        pos += _LENGTH.size
        if length == 0:
            raise FormatError('pattern_len', f'signature {index} has an empty pattern', offset=pos - _LENGTH.size)
        if pos + length + _TRAILER.size > len(view):
            raise FormatError('truncated', f'signature {index} needs {length + _TRAILER.size} bytes', offset=pos)
        pattern = bytes(view[pos : pos + length])
        pos += length
        hash_value, created_at = _TRAILER.unpack_from(view, pos)
        pos += _TRAILER.size
        signatures.append(Signature(pattern, hash_value, created_at))
    if pos != len(view):
        raise FormatError('trailing', f'{len(view) - pos} bytes after the last signature', offset=pos)
    return AntiMalwarePacket(tuple(signatures), version)
