"""The long-running honeypot side: CXFR corpus intake and the periodic detection loop."""

from __future__ import annotations

import logging
import socket
import socketserver
import struct
import threading
import uuid
from pathlib import Path
from typing import TYPE_CHECKING

from capture.codec import read_corpus
from config.exceptions import ConfigurationError, FormatError
from detector.pipeline import (
    SPOOL_SUFFIX,
    DetectionReport,
    Signature,
    append_suspects,
    generate_signatures,
    receive_corpus,
    run_detection,
)

if TYPE_CHECKING:
    from collections.abc import Callable

    from detector.bloom import BloomParams
    from detector.coincidence import FilterPolicy
    from detector.extraction import ExtractionConfig
    from detector.hashing import HashParams

logger = logging.getLogger(__name__)

CXFR_MAGIC = b'CXFR'
ACCEPTED = 0x00
MALFORMED = 0x01
MAX_TRANSFER = 256 << 20

_CXFR_HEADER = struct.Struct('>4sQ')


def write_spool_file(spool: Path, data: bytes) -> Path:
    """Write ``data`` under a dot-prefixed name, then rename it into place as ``*.corp``."""
    spool.mkdir(parents=True, exist_ok=True)
    name = uuid.uuid4().hex
    temp = spool / f'.{name}.part'
    temp.write_bytes(data)
    return temp.rename(spool / f'{name}{SPOOL_SUFFIX}')


class CorpusTransferHandler(socketserver.StreamRequestHandler):
    server: CorpusReceiver

    def handle(self) -> None:
        peer = self.client_address[0]
        header = self.rfile.read(_CXFR_HEADER.size)
        if len(header) < _CXFR_HEADER.size:
            logger.warning('CXFR from %s: connection closed inside the header', peer)
            return
        magic, length = _CXFR_HEADER.unpack(header)
        if magic != CXFR_MAGIC:
            logger.warning('CXFR from %s: bad magic %r', peer, magic)
            self.reply(MALFORMED)
            return
        if length > self.server.max_transfer:
            logger.warning('CXFR from %s: %d bytes exceed the %d byte cap', peer, length, self.server.max_transfer)
            self.reply(MALFORMED)
            return

        payload = self.rfile.read(length)
        if len(payload) < length:
            logger.warning('CXFR from %s: payload truncated at %d of %d bytes', peer, len(payload), length)
            self.reply(MALFORMED)
            return
        try:
            read_corpus(payload)
        except FormatError as exc:
            logger.warning('CXFR from %s: rejected corpus: %s', peer, exc)
            self.reply(MALFORMED)
            return

        path = write_spool_file(self.server.spool, payload)
        self.server.received += 1
        logger.info('CXFR from %s: spooled %d bytes as %s', peer, length, path.name)
        self.reply(ACCEPTED)

    def reply(self, code: int) -> None:
        try:
            self.wfile.write(bytes([code]))
        except OSError as exc:
            logger.debug('CXFR reply to %s lost: %s', self.client_address[0], exc)


class CorpusReceiver(socketserver.ThreadingTCPServer):
    """Threaded CXFR server that lands accepted corpora in the spool."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address: tuple[str, int], spool: Path | str, *, max_transfer: int = MAX_TRANSFER) -> None:
        self.spool = Path(spool)
        self.max_transfer = max_transfer
        self.received = 0
        super().__init__(address, CorpusTransferHandler)

    @property
    def address(self) -> tuple[str, int]:
        host, port = self.server_address[:2]
        return str(host), int(port)

    def start(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, kwargs={'poll_interval': 0.2}, daemon=True)
        thread.start()
        logger.info('Corpus receiver listening on %s:%s', *self.address)
        return thread


def push_corpus(data: bytes | Path | str, address: tuple[str, int], *, timeout: float = 30.0) -> int:
    """Send a corpus over CXFR and return the server's reply byte.

    Raises:
        OSError: on connection failure or when the server closes without replying.
    """
    payload = Path(data).read_bytes() if isinstance(data, (str, Path)) else data
    with socket.create_connection(address, timeout=timeout) as sock:
        sock.sendall(_CXFR_HEADER.pack(CXFR_MAGIC, len(payload)) + payload)
        sock.shutdown(socket.SHUT_WR)
        reply = sock.recv(1)
    if not reply:
        msg = f'{address[0]}:{address[1]} closed the connection without a reply'
        raise ConnectionError(msg)
    logger.info('Pushed %d bytes to %s:%s, reply 0x%02x', len(payload), address[0], address[1], reply[0])
    return reply[0]


def _notify(callback: Callable[..., object] | None, *args: object) -> None:
    if callback is None:
        return
    try:
        callback(*args)
    except Exception:
        logger.exception('Service callback %s failed', getattr(callback, '__name__', callback))


def _log_suspects(report: DetectionReport, log: Path | str) -> bool:
    try:
        append_suspects(report, log)
    except OSError:
        logger.exception('Suspect log %s is not writable, corpus %s kept for retry', log, report.corpus_id)
        return False
    return True


def drain_spool(
    spool: Path | str,
    log: Path | str,
    config: ExtractionConfig,
    policy: FilterPolicy,
    *,
    stop: threading.Event | None = None,
    on_signatures: Callable[[list[Signature]], object] | None = None,
    on_report: Callable[[DetectionReport, list[Signature]], object] | None = None,
    hash_params: HashParams | None = None,
    bloom_params: BloomParams | None = None,
    unlogged: list[DetectionReport] | None = None,
) -> list[DetectionReport]:
    """Process every corpus currently in the spool, oldest first.

    Reports whose suspects could not be appended to ``log`` still produce
    signatures and callbacks; they are collected in ``unlogged`` and written
    first on the next call that passes the same list.
    """
    if unlogged is None:
        unlogged = []
    unlogged[:] = [report for report in unlogged if not _log_suspects(report, log)]

    reports = []
    while stop is None or not stop.is_set():
        try:
            spooled = receive_corpus(spool)
        except OSError:
            logger.exception('Spool %s could not be read', spool)
            break
        if spooled is None:
            break
        try:
            report = run_detection(
                spooled.corpus,
                config,
                policy,
                corpus_id=spooled.corpus_id,
                hash_params=hash_params,
                bloom_params=bloom_params,
            )
        except Exception:
            logger.exception('Corpus %s failed and was skipped', spooled.corpus_id)
            continue
        if not _log_suspects(report, log):
            unlogged.append(report)
        signatures = generate_signatures(report)
        reports.append(report)
        _notify(on_report, report, signatures)
        if signatures:
            _notify(on_signatures, signatures)
    return reports


def run_service(
    spool: Path | str,
    log: Path | str,
    period: float,
    config: ExtractionConfig,
    policy: FilterPolicy,
    *,
    stop: threading.Event | None = None,
    on_signatures: Callable[[list[Signature]], object] | None = None,
    on_report: Callable[[DetectionReport, list[Signature]], object] | None = None,
    hash_params: HashParams | None = None,
    bloom_params: BloomParams | None = None,
    max_cycles: int | None = None,
) -> int:
    """Drain the spool every ``period`` seconds until ``stop`` is set.

    The first cycle runs immediately. Returns the number of cycles completed.
    """
    if period < 1:
        msg = f'period must be at least 1 second, got {period}'
        raise ConfigurationError(msg)
    stop = stop or threading.Event()
    Path(spool).mkdir(parents=True, exist_ok=True)
    logger.info('Detector service watching %s every %ss', spool, period)

    cycles = 0
    unlogged: list[DetectionReport] = []
    while not stop.is_set():
        reports = drain_spool(
            spool,
            log,
            config,
            policy,
            stop=stop,
            on_signatures=on_signatures,
            on_report=on_report,
            hash_params=hash_params,
            bloom_params=bloom_params,
            unlogged=unlogged,
        )
        cycles += 1
        logger.debug('Cycle %d processed %d corpora', cycles, len(reports))
        if max_cycles is not None and cycles >= max_cycles:
            break
        stop.wait(period)
    logger.info('Detector service stopped after %d cycles', cycles)
    return cycles
