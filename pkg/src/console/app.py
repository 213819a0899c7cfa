"""The ``honeysift`` command line: every pipeline stage plus an end-to-end simulation."""

from __future__ import annotations

import logging
import os
import signal
import threading
from contextlib import contextmanager
from pathlib import Path
from typing import TYPE_CHECKING, Annotated

from cyclopts import App, Parameter
from rich.panel import Panel
from rich.table import Table

from capture.codec import read_corpus, write_corpus
from capture.packets import DEFAULT_SET_SIZE, DEFAULT_SETS_PER_CORPUS, build_corpus, build_packet_sets
from capture.pcap import ingest_pcap
from config.exceptions import ArgumentError, HoneysiftError
from config.runtime import RuntimeConfig, load_config, parse_address
from console.output import configure_logging, events, stderr_console
from console.simulate import DEFAULT_CLIENTS, run_simulation
from console.traffic import EICAR, SimScenario, generate_traffic
from detector.bloom import collision_probability, explain_quoted_rate, optimal_hash_count
from detector.pipeline import append_suspects, run_detection
from detector.service import ACCEPTED, CorpusReceiver, push_corpus, run_service
from distribution.broadcast import broadcast_signatures
from distribution.client import ThinClient, client_service

if TYPE_CHECKING:
    from collections.abc import Callable, Iterator

    from django.conf import LazySettings

    from capture.packets import Corpus
    from detector.pipeline import DetectionReport, Signature

logger = logging.getLogger(__name__)

app = App(name='honeysift', help='Honeypot payload signatures: detect, distribute, quarantine.')

ConfigOption = Annotated[Path | None, Parameter(name=['--config', '-c'], help='Runtime key=value config file.')]
SeedOption = Annotated[int, Parameter(name='--seed', help='RNG seed (unsigned 64-bit).')]


@contextmanager
def failures() -> Iterator[None]:
    """Turn domain and I/O errors into a one-line message on stderr and exit status 1."""
    try:
        yield
    except (HoneysiftError, OSError) as error:
        stderr_console.print(f'[red]✗[/red] {error}')
        raise SystemExit(1) from error
    except KeyboardInterrupt as error:
        stderr_console.print('\n[red]✗[/red] Interrupted.')
        raise SystemExit(130) from error


def project_settings() -> LazySettings:
    """Django settings, which carry the ``.env`` values the CLI honours."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')
    from django.conf import settings  # noqa: PLC0415

    return settings


def resolve_config(path: Path | None) -> RuntimeConfig:
    """``--config`` wins; otherwise ``HONEYSIFT_CONFIG`` when that file exists; otherwise built-in defaults."""
    if path is None:
        configured = Path(project_settings().HONEYSIFT_CONFIG)
        path = configured if configured.is_file() else None
    return load_config(path)


def resolve_payload(payload: str | None, payload_hex: str | None) -> bytes:
    if payload is not None and payload_hex is not None:
        msg = '--payload and --payload-hex are mutually exclusive'
        raise ArgumentError(msg)
    if payload_hex is not None:
        try:
            return bytes.fromhex(payload_hex)
        except ValueError as error:
            msg = f'--payload-hex: {error}'
            raise ArgumentError(msg) from error
    return EICAR if payload is None else payload.encode()


def stop_on_signals() -> threading.Event:
    stop = threading.Event()

    def handler(signum: int, _frame: object) -> None:
        logger.info('Received %s, shutting down', signal.Signals(signum).name)
        stop.set()

    for signum in (signal.SIGINT, signal.SIGTERM):
        signal.signal(signum, handler)
    return stop


def report_recorder() -> Callable[[DetectionReport, list[Signature]], object]:
    project_settings()
    import django  # noqa: PLC0415

    django.setup()
    from detector.recording import record_report  # noqa: PLC0415

    return record_report


def emit_report(report: DetectionReport) -> None:
    for rank, entry in enumerate(report.suspects):
        events.emit(
            'suspect',
            corpus_id=report.corpus_id,
            rank=rank,
            f_q=round(entry.f_Q, 4),
            coincidences=entry.S,
            packets=entry.N,
            length=entry.pattern.length,
            hex=entry.pattern.hex(),
        )
    events.emit(
        'detection',
        corpus_id=report.corpus_id,
        sets=report.set_count,
        suspects=len(report.suspects),
        elapsed=round(report.elapsed, 4),
        config=report.config_snapshot,
    )


@app.command(name='gen-traffic')
def gen_traffic(
    *,
    out: Annotated[Path, Parameter(name=['--out', '-o'], help='CORP file to write.')],
    seed: SeedOption = 0,
    sets: Annotated[int, Parameter(help='Packet sets in the corpus.')] = DEFAULT_SETS_PER_CORPUS,
    packets: Annotated[int, Parameter(help='Packets per set.')] = DEFAULT_SET_SIZE,
    length: Annotated[int, Parameter(help='Bytes per packet.')] = 1500,
    fraction: Annotated[float, Parameter(help='Probability that a packet carries the payload.')] = 0.0,
    payload: Annotated[str | None, Parameter(help='Payload text to plant (default: EICAR).')] = None,
    payload_hex: Annotated[str | None, Parameter(name='--payload-hex', help='Payload as hex.')] = None,
    created_at: Annotated[int, Parameter(name='--created-at', help='Corpus timestamp.')] = 0,
) -> None:
    """Write a seeded synthetic corpus of uniform-random packets."""
    with failures():
        scenario = SimScenario(
            n_sets=sets,
            packets_per_set=packets,
            packet_len=length,
            inject_fraction=fraction,
            inject_payload=resolve_payload(payload, payload_hex),
            seed=seed,
            created_at=created_at,
        )
        traffic = generate_traffic(scenario)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(write_corpus(traffic.corpus))
    events.emit(
        'corpus_written',
        path=out,
        sets=sets,
        packets=traffic.corpus.packet_count,
        injected=traffic.injected_count,
        seed=seed,
    )
    stderr_console.print(
        f'[green]✓[/green] {out}: {traffic.corpus.packet_count} packets, {traffic.injected_count} planted'
    )


def load_input(path: Path, *, pcap: bool, set_size: int) -> list[Corpus]:
    if not pcap:
        return [read_corpus(path.read_bytes())]
    with path.open('rb') as stream:
        packets = ingest_pcap(stream)
    sets = build_packet_sets(packets, set_size)
    return build_corpus(sets, max(1, len(sets)), created_at=int(path.stat().st_mtime)) if sets else []


@app.command
def detect(
    corpus: Annotated[Path, Parameter(help='CORP file, or a pcap capture with --pcap.')],
    *,
    config: ConfigOption = None,
    log: Annotated[Path | None, Parameter(help='Suspects log (default: log_path from the config).')] = None,
    pcap: Annotated[bool, Parameter(help='Read a classic pcap capture instead of a CORP file.')] = False,
    set_size: Annotated[
        int, Parameter(name='--set-size', help='Packets per set when reading pcap.')
    ] = DEFAULT_SET_SIZE,
) -> None:
    """Run detection on one corpus and append its suspects to the log."""
    with failures():
        runtime = resolve_config(config)
        corpora = load_input(corpus, pcap=pcap, set_size=set_size)
        suspects_log = log or runtime.log_path
        total = 0
        for index, item in enumerate(corpora):
            report = run_detection(
                item,
                runtime.extraction_config(),
                runtime.filter_policy(),
                corpus_id=corpus.stem if len(corpora) == 1 else f'{corpus.stem}-{index}',
                hash_params=runtime.hash_params(),
                bloom_params=runtime.bloom_params(),
            )
            append_suspects(report, suspects_log)
            emit_report(report)
            total += len(report.suspects)
    stderr_console.print(f'{total} suspects')


@app.command
def serve(
    *,
    config: ConfigOption = None,
    record: Annotated[bool, Parameter(help='Store runs and signatures in the Django database.')] = False,
) -> None:
    """Run the CXFR receiver and the periodic detector until interrupted."""
    with failures():
        runtime = resolve_config(config)
        recorder = report_recorder() if record or project_settings().HONEYSIFT_RECORD_RUNS else None
        stop = stop_on_signals()

        def on_report(report: DetectionReport, signatures: list[Signature]) -> None:
            emit_report(report)
            if recorder is not None:
                recorder(report, signatures)

        def on_signatures(signatures: list[Signature]) -> None:
            if not runtime.endpoints:
                logger.info('%d signatures generated, no endpoints configured', len(signatures))
                return
            delivery = broadcast_signatures(signatures, runtime.endpoints, broadcast=runtime.broadcast)
            events.emit(
                'broadcast',
                signatures=len(signatures),
                delivered=['{}:{}'.format(*item.endpoint) for item in delivery.succeeded],
                failed=['{}:{}'.format(*item.endpoint) for item in delivery.failed],
            )

        receiver = CorpusReceiver(runtime.listen, runtime.spool_dir)
        receiver.start()
        events.emit('serving', listen='{}:{}'.format(*receiver.address), spool=runtime.spool_dir)
        try:
            run_service(
                runtime.spool_dir,
                runtime.log_path,
                runtime.period_seconds,
                runtime.extraction_config(),
                runtime.filter_policy(),
                stop=stop,
                on_signatures=on_signatures,
                on_report=on_report,
                hash_params=runtime.hash_params(),
                bloom_params=runtime.bloom_params(),
            )
        finally:
            receiver.shutdown()
            receiver.server_close()
    events.emit('stopped', service='detector')


@app.command
def push(
    corpus: Annotated[Path, Parameter(help='CORP file to send.')],
    *,
    address: Annotated[str | None, Parameter(help='Detector host:port (default: listen from the config).')] = None,
    config: ConfigOption = None,
) -> None:
    """Send a corpus to a running detector over CXFR."""
    with failures():
        target = parse_address(address) if address else resolve_config(config).listen
        reply = push_corpus(corpus, target)
    events.emit('push', path=corpus, address='{}:{}'.format(*target), reply=reply, accepted=reply == ACCEPTED)
    if reply != ACCEPTED:
        stderr_console.print(f'[red]✗[/red] {target[0]}:{target[1]} rejected {corpus} (0x{reply:02x})')
        raise SystemExit(1)
    stderr_console.print(f'[green]✓[/green] {corpus} accepted')


@app.command
def client(*, config: ConfigOption = None) -> None:
    """Run a thin client: receive signature broadcasts, scan, quarantine."""
    with failures():
        runtime = resolve_config(config)
        stop = stop_on_signals()
        thin = ThinClient(runtime.db_path, runtime.scan_root, runtime.quarantine_dir)
        events.emit('client_started', listen='{}:{}'.format(*runtime.client_listen), signatures=len(thin.db))
        client_service(
            runtime.client_listen,
            runtime.db_path,
            runtime.scan_root,
            runtime.quarantine_dir,
            stop=stop,
            client=thin,
        )
    events.emit('stopped', service='client', cycles=thin.cycles, signatures=len(thin.db))


@app.command
def simulate(
    workdir: Annotated[Path, Parameter(help='Empty directory for the audit trail.')],
    *,
    config: ConfigOption = None,
    seed: SeedOption = 7,
    sets: int = DEFAULT_SETS_PER_CORPUS,
    packets: int = DEFAULT_SET_SIZE,
    length: int = 1500,
    fraction: float = 0.5,
    payload: Annotated[str | None, Parameter(help='Payload text to plant (default: EICAR).')] = None,
    payload_hex: Annotated[str | None, Parameter(name='--payload-hex', help='Payload as hex.')] = None,
    clients: int = DEFAULT_CLIENTS,
    timeout: Annotated[float | None, Parameter(help='Seconds before giving up (default: timeout_seconds).')] = None,
) -> None:
    """Generate traffic, detect, broadcast and quarantine, all in one process."""
    with failures():
        runtime = resolve_config(config)
        scenario = SimScenario(
            n_sets=sets,
            packets_per_set=packets,
            packet_len=length,
            inject_fraction=fraction,
            inject_payload=resolve_payload(payload, payload_hex),
            seed=seed,
        )
        result = run_simulation(
            scenario,
            workdir,
            runtime,
            clients=clients,
            timeout=runtime.timeout_seconds if timeout is None else timeout,
        )

    events.emit(
        'simulation',
        outcome=result.outcome,
        expected_detection=result.expected_detection,
        success=result.success,
        suspects=result.suspects,
        signatures=result.signatures,
        detection_to_quarantine=result.detection_to_quarantine,
        elapsed=round(result.elapsed, 3),
        stages=result.stages,
        clients=result.clients,
    )
    if result.success:
        latency = result.detection_to_quarantine
        detail = f'detection to quarantine {latency:.2f}s' if latency is not None else 'nothing to detect, as expected'
        stderr_console.print(Panel.fit(f'[green]✓[/green] {result.outcome}: {detail}', border_style='green'))
        return

    table = Table(title=f'Simulation {result.outcome}')
    table.add_column('stage')
    table.add_column('status')
    for stage, status in result.stages.items():
        table.add_row(stage, status)
    for status in result.clients:
        table.add_row(
            f'client-{status["client"]}',
            f'cycles={status["cycles"]} quarantined={status["infected_quarantined"]} clean={status["clean_intact"]}',
        )
    stderr_console.print(table)
    raise SystemExit(1)


@app.command(name='sweep-bloom')
def sweep_bloom(
    *,
    m: Annotated[int, Parameter(help='Bloom filter size in bits.')] = 10_000,
    target: Annotated[float, Parameter(help='Quoted collision probability.')] = 6.1e-4,
    tolerance: Annotated[float, Parameter(help='Relative tolerance around the target.')] = 0.05,
    max_n: Annotated[int, Parameter(name='--max-n', help='Largest insert count to try.')] = 5000,
) -> None:
    """List (k, n) settings whose collision probability matches a quoted figure for m bits."""
    fits = explain_quoted_rate(m, target, tolerance=tolerance, max_n=max_n)
    for k, n, probability in fits:
        optimal = optimal_hash_count(m, n)
        events.emit(
            'bloom_fit',
            m=m,
            k=k,
            n=n,
            probability=probability,
            optimal_k=optimal,
            optimal_probability=collision_probability(m, optimal, n),
        )
    stderr_console.print(f'{len(fits)} (k, n) settings within {tolerance:.0%} of {target:g} for m={m}')


def main() -> None:
    configure_logging(project_settings().LOG_LEVEL)
    app()


if __name__ == '__main__':
    main()
