"""In-process end-to-end run: traffic, CXFR push, detector loop, broadcast, thin clients."""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

from capture.codec import write_corpus
from config.exceptions import ArgumentError
from config.runtime import RuntimeConfig
from console.traffic import SimScenario, generate_traffic, random_file_bytes
from detector.service import ACCEPTED, CorpusReceiver, push_corpus, run_service
from distribution.broadcast import broadcast_signatures
from distribution.client import ThinClient, client_service
from distribution.wire import AntiMalwarePacket, encode_packet

if TYPE_CHECKING:
    from detector.pipeline import DetectionReport, Signature

logger = logging.getLogger(__name__)

LOOPBACK = '127.0.0.1'
DEFAULT_TIMEOUT = 60.0
DEFAULT_CLIENTS = 2
SERVICE_PERIOD = 1
SCAN_FILE_SIZE = 4096
PLANT_OFFSET = 1024
POLL_INTERVAL = 0.05


@dataclass
class ClientSandbox:
    """One thin client with its own scan root, quarantine and signature database."""

    index: int
    root: Path
    infected: Path
    clean: Path
    clean_bytes: bytes
    client: ThinClient
    thread: threading.Thread | None = None
    quarantined_at: float | None = None

    @property
    def quarantine_dir(self) -> Path:
        return self.client.qdir

    def infected_quarantined(self) -> bool:
        if self.infected.exists():
            return False
        return any(self.quarantine_dir.glob(f'{self.infected.name}.*.meta'))

    def clean_intact(self) -> bool:
        return self.clean.is_file() and self.clean.read_bytes() == self.clean_bytes

    def quarantine_count(self) -> int:
        return len(list(self.quarantine_dir.glob('*.meta'))) if self.quarantine_dir.exists() else 0

    def status(self) -> dict[str, Any]:
        return {
            'client': self.index,
            'address': self.client.address,
            'cycles': self.client.cycles,
            'signatures': len(self.client.db),
            'infected_quarantined': self.infected_quarantined(),
            'clean_intact': self.clean_intact(),
            'quarantined_files': self.quarantine_count(),
        }


@dataclass
class _Progress:
    report: DetectionReport | None = None
    signatures: list[Signature] = field(default_factory=list)
    detected_at: float | None = None
    broadcasts: int = 0
    delivered: int = 0
    report_done: threading.Event = field(default_factory=threading.Event)


@dataclass(frozen=True)
class SimulationResult:
    outcome: str
    expected_detection: bool
    success: bool
    suspects: int
    signatures: int
    detection_to_quarantine: float | None
    elapsed: float
    stages: dict[str, str]
    clients: list[dict[str, Any]]


def expects_detection(scenario: SimScenario, config: RuntimeConfig) -> bool:
    return scenario.inject_fraction > 0 and len(scenario.inject_payload) >= config.k_min


def _prepare_client(workdir: Path, scenario: SimScenario, index: int) -> ClientSandbox:
    root = workdir / f'client-{index}'
    scan = root / 'scan'
    scan.mkdir(parents=True)
    size = max(SCAN_FILE_SIZE, PLANT_OFFSET + len(scenario.inject_payload) + 1)
    infected = scan / 'infected.bin'
    infected.write_bytes(
        random_file_bytes(scenario.seed, 2 * index + 1, size, plant=scenario.inject_payload, at=PLANT_OFFSET),
    )
    clean = scan / 'clean.bin'
    clean_bytes = random_file_bytes(scenario.seed, 2 * index + 2, size)
    clean.write_bytes(clean_bytes)
    client = ThinClient(root / 'signatures.amp1', scan, root / 'quarantine')
    return ClientSandbox(index, root, infected, clean, clean_bytes, client)


def _start_client(sandbox: ClientSandbox, stop: threading.Event) -> tuple[str, int]:
    ready = threading.Event()
    sandbox.thread = threading.Thread(
        target=client_service,
        args=((LOOPBACK, 0), sandbox.client.db_path, sandbox.client.scan_root, sandbox.quarantine_dir),
        kwargs={'stop': stop, 'ready': ready, 'client': sandbox.client},
        name=f'thin-client-{sandbox.index}',
        daemon=True,
    )
    sandbox.thread.start()
    if not ready.wait(5) or sandbox.client.address is None:
        msg = f'thin client {sandbox.index} did not bind'
        raise OSError(msg)
    return sandbox.client.address


def run_simulation(  # noqa: PLR0915
    scenario: SimScenario,
    workdir: Path | str,
    config: RuntimeConfig | None = None,
    *,
    clients: int = DEFAULT_CLIENTS,
    timeout: float = DEFAULT_TIMEOUT,
) -> SimulationResult:
    """Drive every stage over the real wire protocols and wait for the clients to quarantine.

    The detector runs with a one-second period. The run ends as soon as the outcome is
    decided: every client quarantined its infected file, or the corpus produced no
    signatures, or ``timeout`` elapsed.

    Raises:
        ArgumentError: if ``workdir`` exists and is not empty.
    """
    config = config or RuntimeConfig()
    workdir = Path(workdir)
    if workdir.exists() and any(workdir.iterdir()):
        msg = f'simulation workdir {workdir} is not empty'
        raise ArgumentError(msg)
    workdir.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()
    deadline = started + timeout
    stages = {'traffic': 'pending', 'push': 'pending', 'detection': 'pending', 'broadcast': 'pending'}

    traffic = generate_traffic(scenario)
    corpus_path = workdir / 'corpus.corp'
    corpus_path.write_bytes(write_corpus(traffic.corpus))
    stages['traffic'] = f'{traffic.corpus.packet_count} packets, payload planted in {traffic.injected_count}'

    spool = workdir / 'spool'
    suspects_log = workdir / 'suspects.log'
    broadcasts = workdir / 'broadcasts'
    broadcasts.mkdir()
    sandboxes = [_prepare_client(workdir, scenario, index) for index in range(clients)]
    progress = _Progress()
    lock = threading.Lock()
    stop = threading.Event()

    def on_report(report: DetectionReport, signatures: list[Signature]) -> None:
        with lock:
            progress.report = report
            progress.signatures = signatures
            if signatures and progress.detected_at is None:
                progress.detected_at = time.monotonic()
            stages['detection'] = f'{len(report.suspects)} suspects, {len(signatures)} signatures'
        progress.report_done.set()

    def on_signatures(signatures: list[Signature]) -> None:
        with lock:
            progress.broadcasts += 1
            sequence = progress.broadcasts
        packet = AntiMalwarePacket(tuple(signatures))
        (broadcasts / f'{sequence:04d}.amp1').write_bytes(encode_packet(packet))
        report = broadcast_signatures(signatures, endpoints)
        with lock:
            progress.delivered += len(report.succeeded)
            stages['broadcast'] = f'{sequence} packets, {progress.delivered} deliveries'

    receiver = CorpusReceiver((LOOPBACK, 0), spool)
    receiver_thread = receiver.start()
    service_thread: threading.Thread | None = None
    outcome = 'timeout'
    try:
        endpoints = [_start_client(sandbox, stop) for sandbox in sandboxes]
        service_thread = threading.Thread(
            target=run_service,
            args=(spool, suspects_log, SERVICE_PERIOD, config.extraction_config(), config.filter_policy()),
            kwargs={
                'stop': stop,
                'on_signatures': on_signatures,
                'on_report': on_report,
                'hash_params': config.hash_params(),
                'bloom_params': config.bloom_params(),
            },
            name='detector-service',
            daemon=True,
        )
        service_thread.start()

        reply = push_corpus(corpus_path, receiver.address, timeout=max(1.0, deadline - time.monotonic()))
        stages['push'] = 'accepted' if reply == ACCEPTED else f'rejected (0x{reply:02x})'
        if reply != ACCEPTED:
            outcome = 'push-rejected'
        else:
            while time.monotonic() < deadline:
                if progress.report_done.is_set():
                    if not progress.signatures:
                        outcome = 'no-detection'
                        break
                    now = time.monotonic()
                    for sandbox in sandboxes:
                        if sandbox.quarantined_at is None and sandbox.infected_quarantined():
                            sandbox.quarantined_at = now
                    if all(sandbox.quarantined_at is not None for sandbox in sandboxes):
                        outcome = 'quarantined'
                        break
                time.sleep(POLL_INTERVAL)
    finally:
        stop.set()
        receiver.shutdown()
        receiver.server_close()
        receiver_thread.join(5)
        for thread in (service_thread, *(sandbox.thread for sandbox in sandboxes)):
            if thread is not None:
                thread.join(5)

    latency = None
    if outcome == 'quarantined' and progress.detected_at is not None:
        latency = max(sandbox.quarantined_at or 0.0 for sandbox in sandboxes) - progress.detected_at

    expected = expects_detection(scenario, config)
    statuses = [sandbox.status() for sandbox in sandboxes]
    clean_ok = all(status['clean_intact'] for status in statuses)
    if outcome == 'quarantined':
        success = expected and clean_ok
    elif outcome == 'no-detection':
        success = not expected and clean_ok and not any(status['quarantined_files'] for status in statuses)
    else:
        success = False

    result = SimulationResult(
        outcome=outcome,
        expected_detection=expected,
        success=success,
        suspects=len(progress.report.suspects) if progress.report else 0,
        signatures=len(progress.signatures),
        detection_to_quarantine=latency,
        elapsed=time.monotonic() - started,
        stages=stages,
        clients=statuses,
    )
    log = logger.info if success else logger.error
    log('Simulation finished: %s (expected detection: %s) in %.2fs', outcome, expected, result.elapsed)
    return result
