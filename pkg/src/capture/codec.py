"""CORP / PSET binary encoding of corpora.

CORP: ``b'CORP'``, version u16, created_at u64, set_count u16, then per set a u32
block length followed by a PSET block. PSET: ``b'PSET'``, version u16,
packet_count u32, then per packet a u32 length and the raw payload.
All integers are big-endian.
"""

from __future__ import annotations

import struct

from capture.packets import MAX_PAYLOAD, Corpus, Packet, PacketSet
from config.exceptions import FormatError

CORP_MAGIC = b'CORP'
PSET_MAGIC = b'PSET'
VERSION = 1

_CORP_HEADER = struct.Struct('>4sHQH')
_PSET_HEADER = struct.Struct('>4sHI')
_U32 = struct.Struct('>I')


def encode_packet_set(packet_set: PacketSet) -> bytes:
    parts = [_PSET_HEADER.pack(PSET_MAGIC, VERSION, len(packet_set.packets))]
    for packet in packet_set.packets:
        parts.append(_U32.pack(len(packet.payload)))
        parts.append(packet.payload)
    return b''.join(parts)


def write_corpus(corpus: Corpus) -> bytes:
    """Serialize a corpus; ``read_corpus`` restores it field for field."""
    if len(corpus.sets) > 0xFFFF:
        raise FormatError('set_count', f'{len(corpus.sets)} sets do not fit a u16')
    parts = [_CORP_HEADER.pack(CORP_MAGIC, VERSION, corpus.created_at, len(corpus.sets))]
    for packet_set in corpus.sets:
        block = encode_packet_set(packet_set)
        parts.append(_U32.pack(len(block)))
        parts.append(block)
    return b''.join(parts)


class _Reader:
    """Cursor over a byte buffer that reports truncation with the failing offset."""

    def __init__(self, data: bytes, base: int = 0) -> None:
        self.data = memoryview(data)
        self.pos = 0
        self.base = base

    @property
    def offset(self) -> int:
        return self.base + self.pos

    @property
    def remaining(self) -> int:
        return len(self.data) - self.pos

    def take(self, size: int, field: str) -> bytes:
        if size > self.remaining:
            raise FormatError(
                'truncated',
                f'{field} needs {size} bytes, only {self.remaining} left',
                offset=self.offset,
            )
        chunk = bytes(self.data[self.pos : self.pos + size])
        self.pos += size
        return chunk

    def unpack(self, fmt: struct.Struct, field: str) -> tuple:
        return fmt.unpack(self.take(fmt.size, field))


def decode_packet_set(block: bytes, *, base: int = 0) -> PacketSet:
    reader = _Reader(block, base)
    magic, version, count = reader.unpack(_PSET_HEADER, 'PSET header')
    if magic != PSET_MAGIC:
        raise FormatError('magic', f'expected {PSET_MAGIC!r}, got {magic!r}', offset=base)
    if version != VERSION:
        raise FormatError('version', f'unsupported PSET version {version}', offset=base + 4)
    if count == 0:
        raise FormatError('packet_count', 'a packet set cannot be empty', offset=base + 6)

    packets = []
    for _ in range(count):
        (length,) = reader.unpack(_U32, 'payload_len')
        if length > MAX_PAYLOAD:
            raise FormatError('payload_len', f'{length} exceeds {MAX_PAYLOAD}', offset=reader.offset - 4)
        packets.append(Packet(reader.take(length, 'payload')))
    if reader.remaining:
        raise FormatError('trailing', f'{reader.remaining} bytes after the last packet', offset=reader.offset)
    return PacketSet(tuple(packets))


def read_corpus(data: bytes) -> Corpus:
    """Parse CORP bytes.

    Raises:
        FormatError: on a bad magic, version or length field, naming the field.
    """
    reader = _Reader(data)
    if len(data) < 4 or bytes(data[:4]) != CORP_MAGIC:
        raise FormatError('magic', f'expected {CORP_MAGIC!r}, got {bytes(data[:4])!r}', offset=0)
    _, version, created_at, set_count = reader.unpack(_CORP_HEADER, 'CORP header')
    if version != VERSION:
        raise FormatError('version', f'unsupported CORP version {version}', offset=4)

    sets = []
    for _ in range(set_count):
        (block_len,) = reader.unpack(_U32, 'block_len')
        start = reader.offset
        sets.append(decode_packet_set(reader.take(block_len, 'PSET block'), base=start))
    if reader.remaining:
        raise FormatError('trailing', f'{reader.remaining} bytes after the last set', offset=reader.offset)
    return Corpus(tuple(sets), created_at=created_at)
