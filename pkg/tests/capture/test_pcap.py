import io
import struct

import pytest

from capture.pcap import ingest_pcap, iter_frames, transport_payload
from config.exceptions import FormatError

SRC_MAC = bytes.fromhex('020000000001')
DST_MAC = bytes.fromhex('020000000002')


def ipv4(protocol: int, segment: bytes) -> bytes:
    header = struct.pack(
        '>BBHHHBBH4s4s',
        0x45,
        0,
        20 + len(segment),
        1,
        0,
        64,
        protocol,
        0,
        bytes([10, 0, 0, 1]),
        bytes([10, 0, 0, 2]),
    )
    return header + segment


def udp_frame(payload: bytes) -> bytes:
    segment = struct.pack('>HHHH', 40000, 53, 8 + len(payload), 0) + payload
    return DST_MAC + SRC_MAC + b'\x08\x00' + ipv4(17, segment)


def tcp_frame(payload: bytes) -> bytes:
    segment = struct.pack('>HHIIBBHHH', 40000, 80, 1, 0, 5 << 4, 0x18, 65535, 0, 0) + payload
    return DST_MAC + SRC_MAC + b'\x08\x00' + ipv4(6, segment)


def arp_frame() -> bytes:
    return DST_MAC + SRC_MAC + b'\x08\x06' + bytes(28)


def pcap(frames: list[bytes], *, order: str = '<', magic: int = 0xA1B2C3D4, linktype: int = 1) -> bytes:
    out = [struct.pack(f'{order}IHHiIII', magic, 2, 4, 0, 0, 65535, linktype)]
    for second, frame in enumerate(frames):
        out.append(struct.pack(f'{order}IIII', second, 0, len(frame), len(frame)))
        out.append(frame)
    return b''.join(out)


def test_header_only_capture_is_empty() -> None:
    assert ingest_pcap(io.BytesIO(pcap([]))) == []


@pytest.mark.parametrize('order', ['<', '>'])
@pytest.mark.parametrize('magic', [0xA1B2C3D4, 0xA1B23C4D])
def test_single_udp_frame(order: str, magic: int) -> None:
    packets = ingest_pcap(io.BytesIO(pcap([udp_frame(b'HELLO')], order=order, magic=magic)))

    assert [packet.payload for packet in packets] == [b'HELLO']
    assert packets[0].source_id == '0'


def test_skips_non_ip_and_empty_payloads() -> None:
    frames = [arp_frame(), tcp_frame(b''), tcp_frame(b'GET / HTTP/1.0\r\n'), udp_frame(b'dns')]

    packets = ingest_pcap(io.BytesIO(pcap(frames)))

    assert [(p.payload, p.source_id) for p in packets] == [(b'GET / HTTP/1.0\r\n', '2'), (b'dns', '3')]
    assert len(packets) <= len(frames)


def test_zero_magic_is_rejected() -> None:
    with pytest.raises(FormatError) as excinfo:
        ingest_pcap(io.BytesIO(bytes(24)))

    assert excinfo.value.field == 'magic'


def test_non_ethernet_linktype_is_rejected() -> None:
    with pytest.raises(FormatError) as excinfo:
        ingest_pcap(io.BytesIO(pcap([], linktype=101)))

    assert excinfo.value.field == 'linktype'


def test_truncated_record_reports_offset() -> None:
    data = pcap([udp_frame(b'HELLO'), udp_frame(b'WORLD')])
    cut = data[:-3]

    with pytest.raises(FormatError) as excinfo:
        list(iter_frames(io.BytesIO(cut)))

    first_record = 16 + len(udp_frame(b'HELLO'))
    assert excinfo.value.field == 'truncated'
    assert excinfo.value.offset == 24 + first_record + 16


def test_truncated_global_header() -> None:
    with pytest.raises(FormatError) as excinfo:
        list(iter_frames(io.BytesIO(pcap([])[:10])))

    assert excinfo.value.field == 'truncated'


def test_transport_payload_ignores_garbage() -> None:
    assert transport_payload(b'\x00\x01') is None
