"""Transport payload extraction from classic libpcap captures.

Record framing is read here so truncation can be reported with its byte offset;
frames are decoded with dpkt. Only Ethernet -> IPv4 -> TCP/UDP payloads are kept.
"""

from __future__ import annotations

import logging
import struct
from typing import TYPE_CHECKING, BinaryIO

import dpkt

from capture.packets import Packet
from config.exceptions import FormatError

if TYPE_CHECKING:
    from collections.abc import Iterator

logger = logging.getLogger(__name__)

LINKTYPE_ETHERNET = 1

# magic as read big-endian -> (byte order of the file, nanosecond timestamps)
_MAGICS = {
    0xA1B2C3D4: ('>', False),
    0xD4C3B2A1: ('<', False),
    0xA1B23C4D: ('>', True),
    0x4D3CB2A1: ('<', True),
}
_GLOBAL_HEADER_LEN = 24
_RECORD_HEADER_LEN = 16
_MAX_RECORD = 0x40000


def _read_exact(stream: BinaryIO, size: int) -> bytes:
    chunks = []
    while size:
        chunk = stream.read(size)
        if not chunk:
            break
        chunks.append(chunk)
        size -= len(chunk)
    return b''.join(chunks)


def iter_frames(stream: BinaryIO) -> Iterator[tuple[int, bytes]]:
    """Yield ``(record index, frame bytes)`` for every record of a pcap stream.

    Raises:
        FormatError: on a malformed global header or a truncated record.
    """
    header = _read_exact(stream, _GLOBAL_HEADER_LEN)
    if len(header) < 4:
        raise FormatError('magic', 'stream too short for a pcap magic number', offset=0)
    (magic,) = struct.unpack('>I', header[:4])
    if magic not in _MAGICS:
        raise FormatError('magic', f'not a pcap file (magic 0x{magic:08x})', offset=0)
    if len(header) < _GLOBAL_HEADER_LEN:
        raise FormatError('truncated', 'incomplete pcap global header', offset=len(header))

    order, _nanoseconds = _MAGICS[magic]
    major, _minor, _zone, _sigfigs, _snaplen, linktype = struct.unpack(f'{order}HHiIII', header[4:])
    if major != 2:
        raise FormatError('version', f'unsupported pcap major version {major}', offset=4)
    if linktype != LINKTYPE_ETHERNET:
        raise FormatError('linktype', f'link type {linktype} is not Ethernet', offset=20)

    record_header = struct.Struct(f'{order}IIII')
    offset = _GLOBAL_HEADER_LEN
    index = 0
    while True:
        raw = _read_exact(stream, _RECORD_HEADER_LEN)
        if not raw:
            return
        if len(raw) < _RECORD_HEADER_LEN:
            raise FormatError('truncated', f'record {index} header is incomplete', offset=offset)
        _sec, _frac, incl_len, _orig_len = record_header.unpack(raw)
        if incl_len > _MAX_RECORD:
            raise FormatError('incl_len', f'record {index} claims {incl_len} bytes', offset=offset + 8)
        frame = _read_exact(stream, incl_len)
        if len(frame) < incl_len:
            raise FormatError(
                'truncated',
                f'record {index} holds {len(frame)} of {incl_len} bytes',
                offset=offset + _RECORD_HEADER_LEN,
            )
        yield index, frame
        offset += _RECORD_HEADER_LEN + incl_len
        index += 1


def transport_payload(frame: bytes) -> bytes | None:
    """Return the TCP/UDP payload of an Ethernet/IPv4 frame, or None for anything else."""
    try:
        eth = dpkt.ethernet.Ethernet(frame)
    except (dpkt.dpkt.UnpackError, struct.error):
        return None
    ip = eth.data
    if not isinstance(ip, dpkt.ip.IP):
        return None
    segment = ip.data
    if not isinstance(segment, (dpkt.tcp.TCP, dpkt.udp.UDP)):
        return None
    return bytes(segment.data)


def ingest_pcap(stream: BinaryIO) -> list[Packet]:
    """Extract one Packet per Ethernet/IPv4/TCP|UDP frame with a non-empty payload."""
    packets = []
    skipped = 0
    for index, frame in iter_frames(stream):
        payload = transport_payload(frame)
        if not payload:
            skipped += 1
            continue
        packets.append(Packet(payload, source_id=str(index)))
    logger.info('Ingested %d payloads from pcap (%d frames skipped)', len(packets), skipped)
    return packets
