"""Honeypot-side detection: spool intake, per-corpus analysis, suspects log, signatures."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from datetime import UTC, datetime
from pathlib import Path
from typing import TYPE_CHECKING

from capture.codec import read_corpus
from config.exceptions import FormatError
from detector.coincidence import (
    CoincidenceEntry,
    CoincidenceTable,
    FilterPolicy,
    aggregate_corpus_suspects,
)
from detector.extraction import ExtractionConfig, default_params, extract_set_patterns

if TYPE_CHECKING:
    from capture.packets import Corpus
    from detector.bloom import BloomParams
    from detector.hashing import HashParams

logger = logging.getLogger(__name__)

SPOOL_SUFFIX = '.corp'
PROCESSED_DIR = 'processed'
REJECTED_DIR = 'rejected'


@dataclass(frozen=True)
class Signature:
    """A distributable byte pattern."""

    pattern: bytes
    hash: int
    created_at: int

    def hex(self) -> str:
        return self.pattern.hex()


@dataclass(frozen=True)
class DetectionReport:
    corpus_id: str
    suspects: tuple[CoincidenceEntry, ...]
    started_at: datetime
    finished_at: datetime
    config: ExtractionConfig = field(default_factory=ExtractionConfig)
    policy: FilterPolicy = field(default_factory=FilterPolicy)
    set_count: int = 0

    @property
    def config_snapshot(self) -> dict[str, object]:
        return {
            'k_min': self.config.K_min,
            'k_max': self.config.K_max,
            'pairing': self.config.pairing.value,
            'tau': self.policy.tau,
            'c': self.policy.c,
            'min_population': self.policy.min_population,
        }

    @property
    def elapsed(self) -> float:
        return (self.finished_at - self.started_at).total_seconds()


@dataclass(frozen=True)
class SpooledCorpus:
    corpus_id: str
    corpus: Corpus


def _move_unique(path: Path, directory: Path) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / path.name
    counter = 1
    while target.exists():
        target = directory / f'{path.name}.{counter}'
        counter += 1
    return path.rename(target)


def spool_candidates(spool: Path) -> list[Path]:
    """Complete corpus files; dot-prefixed names are transfers still in flight."""
    return sorted(
        path
        for path in spool.iterdir()
        if path.is_file() and path.suffix == SPOOL_SUFFIX and not path.name.startswith('.')
    )


def receive_corpus(spool: Path | str) -> SpooledCorpus | None:
    """Take the oldest valid corpus out of the spool.

    Malformed files are moved to ``rejected/``; the chosen file goes to ``processed/``.
    """
    spool = Path(spool)
    oldest: tuple[int, str, Path, Corpus] | None = None
    for path in spool_candidates(spool):
        try:
            corpus = read_corpus(path.read_bytes())
        except (FormatError, OSError) as exc:
            logger.error('Rejecting spool file %s: %s', path.name, exc)
            try:
                _move_unique(path, spool / REJECTED_DIR)
            except OSError:
                logger.exception('Could not move %s out of the spool', path.name)
            continue
        key = (corpus.created_at, path.name)
        if oldest is None or key < oldest[:2]:
            oldest = (*key, path, corpus)

    if oldest is None:
        return None
    _, _, path, corpus = oldest
    _move_unique(path, spool / PROCESSED_DIR)
    logger.info('Received corpus %s (%d sets, created_at=%d)', path.stem, len(corpus.sets), corpus.created_at)
    return SpooledCorpus(path.stem, corpus)


def run_detection(
    corpus: Corpus,
    config: ExtractionConfig | None = None,
    policy: FilterPolicy | None = None,
    *,
    corpus_id: str = '',
    hash_params: HashParams | None = None,
    bloom_params: BloomParams | None = None,
) -> DetectionReport:
    """Pair, extract and count every packet set, then aggregate the suspects of the corpus."""
    config = config or ExtractionConfig()
    policy = policy or FilterPolicy()
    if hash_params is None:
        hash_params, bloom_params = default_params(config, bloom_params)

    started_at = datetime.now(UTC)
    tables = []
    for packet_set in corpus.sets:
        occurrences = extract_set_patterns(packet_set, config, hash_params=hash_params, bloom_params=bloom_params)
        tables.append(CoincidenceTable.from_occurrences(packet_set.N, occurrences))

    suspects = aggregate_corpus_suspects(tables, policy) if tables else []
    finished_at = datetime.now(UTC)
    report = DetectionReport(
        corpus_id=corpus_id,
        suspects=tuple(CoincidenceEntry(entry.pattern, entry.N, entry.S) for entry in suspects),
        started_at=started_at,
        finished_at=finished_at,
        config=config,
        policy=policy,
        set_count=len(corpus.sets),
    )
    logger.info(
        'Corpus %s: %d sets analysed, %d suspects in %.2fs',
        corpus_id or '-',
        len(tables),
        len(report.suspects),
        report.elapsed,
    )
    return report


def format_timestamp(moment: datetime) -> str:
    return moment.astimezone(UTC).strftime('%Y-%m-%dT%H:%M:%SZ')


def suspect_lines(report: DetectionReport) -> list[str]:
    stamp = format_timestamp(report.finished_at)
    return [f'{stamp}\t{entry.f_Q:.4f}\t{entry.pattern.hex()}\n' for entry in report.suspects]


def append_suspects(report: DetectionReport, log: Path | str) -> int:
    """Append one hex-encoded line per suspect; the log is append-only.

    Raises:
        OSError: if the log cannot be written; the report is untouched.
    """
    log = Path(log)
    lines = suspect_lines(report)
    log.parent.mkdir(parents=True, exist_ok=True)
    with log.open('a', encoding='ascii') as handle:
        handle.write(''.join(lines))
    return len(lines)


def generate_signatures(report: DetectionReport, *, now: int | None = None) -> list[Signature]:
    """One signature per distinct suspect pattern, in report order."""
    created_at = int(time.time()) if now is None else now
    seen: set[bytes] = set()
    signatures = []
    for entry in report.suspects:
        if entry.pattern.data in seen:
            continue
        seen.add(entry.pattern.data)
        signatures.append(Signature(entry.pattern.data, entry.pattern.hash, created_at))
    return signatures

