"""The thin client: signature database, file scanner, quarantine and datagram service."""

from __future__ import annotations

import errno
import logging
import os
import shutil
import socket
import threading
import time
from dataclasses import dataclass, field
from datetime import UTC, datetime
from pathlib import Path
from typing import TYPE_CHECKING

import ahocorasick

from config.exceptions import FormatError, PersistenceError, QuarantineError
from distribution.wire import AntiMalwarePacket, decode_packet, encode_packet

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator

    from detector.pipeline import Signature

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 1 << 20
RECV_BUFFER = 65535


@dataclass(frozen=True)
class SignatureDB:
    """Signatures deduplicated by pattern bytes, kept sorted by pattern."""

    entries: tuple[Signature, ...] = ()
    updated_at: int = 0

    def __post_init__(self) -> None:
        unique = {}
        for signature in self.entries:
            unique.setdefault(signature.pattern, signature)
        object.__setattr__(self, 'entries', tuple(unique[key] for key in sorted(unique)))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, pattern: bytes) -> bool:
        return any(signature.pattern == pattern for signature in self.entries)

    @property
    def patterns(self) -> set[bytes]:
        return {signature.pattern for signature in self.entries}

    def merge(self, signatures: Iterable[Signature], *, now: int | None = None) -> tuple[SignatureDB, int]:
        known = self.patterns
        added = []
        for signature in signatures:
            if signature.pattern not in known:
                known.add(signature.pattern)
                added.append(signature)
        stamp = int(time.time()) if now is None else now
        return SignatureDB((*self.entries, *added), updated_at=stamp), len(added)

    @classmethod
    def load(cls, path: Path | str) -> SignatureDB:
        """Read an AMP1-encoded database; a missing file is an empty database."""
        path = Path(path)
        if not path.exists():
            return cls()
        packet = decode_packet(path.read_bytes())
        return cls(packet.signatures, updated_at=int(path.stat().st_mtime))

    def save(self, path: Path | str) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        temp = path.with_name(f'.{path.name}.tmp')
        temp.write_bytes(encode_packet(AntiMalwarePacket(self.entries)))
        temp.replace(path)


def client_update_db(
    db: SignatureDB,
    packet: AntiMalwarePacket,
    path: Path | str,
) -> tuple[SignatureDB, int]:
    """Merge a packet into the database and persist it before returning.

    Raises:
        PersistenceError: if the database cannot be written; ``db`` is left as it was.
    """
    updated, added = db.merge(packet.signatures)
    try:
        updated.save(path)
    except OSError as exc:
        msg = f'could not persist signature database to {path}: {exc}'
        raise PersistenceError(msg) from exc
    logger.info('Signature database now holds %d signatures (%d new)', len(updated), added)
    return updated, added


@dataclass(frozen=True)
class ScanMatch:
    file: Path
    signature: Signature
    offset: int


def build_automaton(patterns: Iterable[bytes]) -> ahocorasick.Automaton:
    """Aho-Corasick automaton over the latin-1 view of ``patterns``; each word maps to its bytes."""
    automaton = ahocorasick.Automaton()
    for pattern in patterns:
        automaton.add_word(pattern.decode('latin-1'), pattern)
    automaton.make_automaton()
    return automaton


def _first_offsets(path: Path, automaton: ahocorasick.Automaton, longest: int, chunk_size: int) -> dict[bytes, int]:
    """Offset of the first occurrence of each pattern, one automaton pass over overlapping chunks."""
    overlap = longest - 1
    total = len(automaton)
    found: dict[bytes, int] = {}
    carry = b''
    base = 0
    with path.open('rb') as handle:
        while chunk := handle.read(chunk_size):
            window = carry + chunk
            for end, pattern in automaton.iter(window.decode('latin-1')):
                if pattern not in found:
                    found[pattern] = base + end - len(pattern) + 1
            if len(found) == total:
                break
            keep = min(overlap, len(window))
            carry = window[len(window) - keep :] if keep else b''
            base += len(window) - keep
    return found


def _walk(root: Path, exclude: Iterable[Path]) -> Iterator[Path]:
    excluded = [path.resolve() for path in exclude]
    for path in sorted(root.rglob('*')):
        if path.is_symlink() or not path.is_file():
            continue
        resolved = path.resolve()
        if any(resolved.is_relative_to(skip) for skip in excluded):
            continue
        yield path


def scan_path(
    db: SignatureDB,
    root: Path | str,
    *,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    exclude: Iterable[Path] = (),
) -> list[ScanMatch]:
    """Every (file, signature) pair where the file contains the signature bytes, first offset only.

    Ordered by path, then signature bytes. Unreadable files are skipped.
    """
    root = Path(root)
    by_pattern = {signature.pattern: signature for signature in db.entries if signature.pattern}
    if not by_pattern:
        return []
    patterns = sorted(by_pattern)
    automaton = build_automaton(patterns)
    longest = max(len(pattern) for pattern in patterns)

    matches = []
    for path in _walk(root, exclude):
        try:
            offsets = _first_offsets(path, automaton, longest, chunk_size)
        except OSError as exc:
            logger.warning('Skipping unreadable file %s: %s', path, exc)
            continue
        matches.extend(
            ScanMatch(path, by_pattern[pattern], offsets[pattern]) for pattern in patterns if pattern in offsets
        )
    logger.info('Scanned %s: %d matches', root, len(matches))
    return matches


@dataclass(frozen=True)
class QuarantineRecord:
    original: Path
    quarantined: Path
    sidecar: Path
    signature_hash: int
    offset: int
    at: datetime = field(default_factory=lambda: datetime.now(UTC))

    def sidecar_line(self) -> str:
        stamp = self.at.strftime('%Y-%m-%dT%H:%M:%SZ')
        return f'{stamp}\t{self.original}\t{self.signature_hash}\t{self.offset}\n'


def _quarantine_name(qdir: Path, name: str) -> Path:
    counter = 1
    while True:
        candidate = qdir / f'{name}.{counter}'
        if not candidate.exists() and not candidate.with_name(f'{candidate.name}.meta').exists():
            return candidate
        counter += 1


def quarantine(match: ScanMatch, qdir: Path | str) -> QuarantineRecord | None:
    """Move the matched file into ``qdir`` and write a ``.meta`` sidecar next to it.

    Returns None when the file has already disappeared.

    Raises:
        QuarantineError: if ``qdir`` cannot receive the file, in which case the file
            stays where it was, or if the sidecar cannot be written after the move.
    """
    qdir = Path(qdir)
    source = match.file
    if not source.exists():
        logger.info('Nothing to quarantine, %s is gone', source)
        return None
    try:
        qdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        msg = f'cannot create quarantine directory {qdir}: {exc}'
        raise QuarantineError(msg) from exc
    if not os.access(qdir, os.W_OK | os.X_OK):
        msg = f'quarantine directory {qdir} is not writable'
        raise QuarantineError(msg)

    original = source.resolve()
    target = _quarantine_name(qdir, source.name)
    try:
        source.rename(target)
    except FileNotFoundError:
        logger.info('Nothing to quarantine, %s vanished', source)
        return None
    except OSError as exc:
        if exc.errno != errno.EXDEV:
            msg = f'cannot move {source} into quarantine: {exc}'
            raise QuarantineError(msg) from exc
        shutil.move(source, target)

    record = QuarantineRecord(
        original=original,
        quarantined=target,
        sidecar=target.with_name(f'{target.name}.meta'),
        signature_hash=match.signature.hash,
        offset=match.offset,
    )
    try:
        record.sidecar.write_text(record.sidecar_line(), encoding='utf-8')
    except OSError as exc:
        msg = f'{source} is in quarantine as {target.name} but its sidecar could not be written: {exc}'
        raise QuarantineError(msg) from exc
    logger.warning('Quarantined %s as %s (signature hash %d)', original, target.name, match.signature.hash)
    return record


@dataclass(frozen=True)
class CycleResult:
    added: int
    matches: tuple[ScanMatch, ...]
    quarantined: tuple[QuarantineRecord, ...]


class ThinClient:
    """Runs update -> scan -> quarantine cycles, one at a time."""

    def __init__(self, db_path: Path | str, scan_root: Path | str, qdir: Path | str) -> None:
        self.db_path = Path(db_path)
        self.scan_root = Path(scan_root)
        self.qdir = Path(qdir)
        self.db = SignatureDB.load(self.db_path)
        self.address: tuple[str, int] | None = None
        self._lock = threading.Lock()
        self.cycles = 0

    def handle_packet(self, packet: AntiMalwarePacket) -> CycleResult:
        with self._lock:
            self.db, added = client_update_db(self.db, packet, self.db_path)
            matches = scan_path(self.db, self.scan_root, exclude=[self.qdir])
            records = []
            handled: set[Path] = set()
            for match in matches:
                if match.file in handled:
                    continue
                handled.add(match.file)
                try:
                    record = quarantine(match, self.qdir)
                except QuarantineError:
                    logger.exception('Quarantine failed for %s', match.file)
                    continue
                if record is not None:
                    records.append(record)
            self.cycles += 1
            return CycleResult(added, tuple(matches), tuple(records))

    def handle_datagram(self, data: bytes) -> CycleResult | None:
        """Decode and apply one datagram; malformed input is dropped."""
        try:
            packet = decode_packet(data)
        except FormatError as exc:
            logger.warning('Dropping malformed datagram (%d bytes): %s', len(data), exc)
            return None
        try:
            return self.handle_packet(packet)
        except PersistenceError:
            logger.exception('Signature update failed')
            return None


def client_service(
    listen: tuple[str, int],
    db_path: Path | str,
    scan_root: Path | str,
    qdir: Path | str,
    *,
    stop: threading.Event | None = None,
    ready: threading.Event | None = None,
    client: ThinClient | None = None,
) -> None:
    """Receive AMP1 datagrams on ``listen`` and run a cycle for each until ``stop`` is set.

    ``ready`` is set once the socket is bound; the bound address is then in ``client.address``.
    """
    stop = stop or threading.Event()
    client = client or ThinClient(db_path, scan_root, qdir)
    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
        sock.bind(listen)
        sock.settimeout(0.2)
        client.address = sock.getsockname()
        logger.info('Thin client listening on %s:%s', *client.address)
        if ready is not None:
            ready.set()
        while not stop.is_set():
            try:
                data, sender = sock.recvfrom(RECV_BUFFER)
            except TimeoutError:
                continue
            except OSError:
                logger.exception('Datagram receive failed')
                continue
            logger.debug('Datagram of %d bytes from %s', len(data), sender[0])
            try:
                client.handle_datagram(data)
            except Exception:
                logger.exception('Update cycle failed')
    logger.info('Thin client on %s:%s stopped', *listen)
