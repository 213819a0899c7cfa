"""Datagram delivery of anti-malware packets to thin clients."""

from __future__ import annotations

import logging
import socket
from dataclasses import dataclass
from typing import TYPE_CHECKING

from config.exceptions import ArgumentError
from distribution.wire import AntiMalwarePacket, encode_packet

if TYPE_CHECKING:
    from collections.abc import Sequence

    from detector.pipeline import Signature

logger = logging.getLogger(__name__)

MAX_DATAGRAM = 65507


@dataclass(frozen=True)
class Delivery:
    endpoint: tuple[str, int]
    ok: bool
    error: str | None = None


@dataclass(frozen=True)
class DeliveryReport:
    deliveries: tuple[Delivery, ...]
    payload: bytes = b''

    @property
    def succeeded(self) -> list[Delivery]:
        return [delivery for delivery in self.deliveries if delivery.ok]

    @property
    def failed(self) -> list[Delivery]:
        return [delivery for delivery in self.deliveries if not delivery.ok]

    def __len__(self) -> int:
        return len(self.deliveries)


def broadcast_signatures(
    signatures: Sequence[Signature],
    endpoints: Sequence[tuple[str, int]],
    *,
    broadcast: bool = False,
) -> DeliveryReport:
    """Send one AMP1 packet to every endpoint; a failing endpoint never stops the rest.

    Raises:
        ArgumentError: if there is nothing to send.
    """
    if not signatures:
        msg = 'refusing to broadcast an empty signature list'
        raise ArgumentError(msg)
    payload = encode_packet(AntiMalwarePacket(tuple(signatures)))
    deliveries = []
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
        if broadcast:
            sock.setsockopt(socket.SOL_SOCKET, socket.SO_BROADCAST, 1)
        for endpoint in endpoints:
            if len(payload) > MAX_DATAGRAM:
                deliveries.append(Delivery(endpoint, ok=False, error=f'{len(payload)} bytes exceed one datagram'))
                continue
            try:
                sock.sendto(payload, endpoint)
            except OSError as exc:
                logger.warning('Delivery to %s:%s failed: %s', endpoint[0], endpoint[1], exc)
                deliveries.append(Delivery(endpoint, ok=False, error=str(exc)))
            else:
                deliveries.append(Delivery(endpoint, ok=True))
    report = DeliveryReport(tuple(deliveries), payload)
    logger.info(
        'Broadcast %d signatures: %d delivered, %d failed',
        len(signatures),
        len(report.succeeded),
        len(report.failed),
    )
    return report
