from datetime import UTC, datetime

import numpy as np
import pytest

from capture.codec import write_corpus
from console.traffic import EICAR, SimScenario, generate_traffic
from detector.coincidence import CoincidenceEntry
from detector.extraction import Pattern
from detector.hashing import HashParams
from detector.pipeline import (
    PROCESSED_DIR,
    REJECTED_DIR,
    DetectionReport,
    append_suspects,
    generate_signatures,
    receive_corpus,
    run_detection,
)

MARKER = bytes(range(100, 132))


def embed(rng: np.random.Generator, index: int) -> bytes:
    """Random filler around MARKER, fenced by bytes unique to ``index`` so runs stop at the marker."""
    head = rng.integers(0, 256, size=40 + 3 * index, dtype=np.uint8).tobytes()
    tail = rng.integers(0, 256, size=60, dtype=np.uint8).tobytes()
    return head + bytes([index]) + MARKER + bytes([index + 50]) + tail


def report_with(*patterns: tuple[bytes, int, int]) -> DetectionReport:
    params = HashParams()
    moment = datetime(2024, 1, 2, 3, 4, 5, tzinfo=UTC)
    return DetectionReport(
        corpus_id='c1',
        suspects=tuple(CoincidenceEntry(Pattern.of(data, params), n, s) for data, n, s in patterns),
        started_at=moment,
        finished_at=moment,
    )


def test_receive_from_empty_spool(tmp_path) -> None:
    assert receive_corpus(tmp_path) is None


def test_receive_takes_oldest_and_moves_it(tmp_path, make_corpus) -> None:
    newer = make_corpus([[b'abc', b'abd']], created_at=200)
    older = make_corpus([[b'xyz', b'xyw']], created_at=100)
    (tmp_path / 'a.corp').write_bytes(write_corpus(newer))
    (tmp_path / 'b.corp').write_bytes(write_corpus(older))

    spooled = receive_corpus(tmp_path)

    assert spooled.corpus_id == 'b'
    assert spooled.corpus == older
    assert (tmp_path / PROCESSED_DIR / 'b.corp').exists()
    assert receive_corpus(tmp_path).corpus_id == 'a'
    assert receive_corpus(tmp_path) is None


def test_receive_rejects_corrupt_file(tmp_path, make_corpus) -> None:
    (tmp_path / 'bad.corp').write_bytes(b'CORP\x00\x01garbage')
    (tmp_path / 'good.corp').write_bytes(write_corpus(make_corpus([[b'abc', b'abd']])))

    spooled = receive_corpus(tmp_path)

    assert spooled.corpus_id == 'good'
    assert (tmp_path / REJECTED_DIR / 'bad.corp').exists()
    assert not (tmp_path / 'bad.corp').exists()


def test_receive_ignores_in_flight_files(tmp_path, make_corpus) -> None:
    (tmp_path / '.pending.corp').write_bytes(write_corpus(make_corpus([[b'abc', b'abd']])))
    (tmp_path / 'notes.txt').write_text('not a corpus')

    assert receive_corpus(tmp_path) is None
    assert (tmp_path / '.pending.corp').exists()


def test_shared_marker_is_the_only_suspect(rng, make_corpus) -> None:
    corpus = make_corpus([[embed(rng, index) for index in range(10)] for _ in range(3)])

    report = run_detection(corpus, corpus_id='marker')

    assert [entry.pattern.data for entry in report.suspects] == [MARKER]
    assert report.suspects[0].S == 5
    assert report.suspects[0].f_Q == pytest.approx(np.sqrt(0.5))
    assert report.set_count == 3


def test_random_corpus_has_no_suspects(make_corpus, random_payloads) -> None:
    corpus = make_corpus([random_payloads(20, 200) for _ in range(5)])

    assert run_detection(corpus).suspects == ()


def test_empty_corpus(make_corpus) -> None:
    report = run_detection(make_corpus([]))

    assert report.suspects == ()
    assert report.set_count == 0


@pytest.mark.slow
def test_planted_payload_is_detected_across_seeds() -> None:
    hits = 0
    for seed in range(20):
        report = run_detection(generate_traffic(SimScenario(inject_fraction=0.5, seed=seed)).corpus)
        hits += any(EICAR in entry.pattern.data for entry in report.suspects)

    assert hits >= 19


@pytest.mark.slow
@pytest.mark.parametrize('seed', range(20))
def test_clean_traffic_has_no_suspects(seed: int) -> None:
    report = run_detection(generate_traffic(SimScenario(inject_fraction=0.0, seed=seed)).corpus)

    assert report.suspects == ()


def test_suspects_log_lines(tmp_path) -> None:
    report = report_with((b'worm', 100, 49), (b'tail', 100, 25))
    log = tmp_path / 'logs' / 'suspects.log'

    assert append_suspects(report, log) == 2
    assert log.read_text() == ('2024-01-02T03:04:05Z\t0.7000\t776f726d\n2024-01-02T03:04:05Z\t0.5000\t7461696c\n')


def test_suspects_log_is_append_only(tmp_path) -> None:
    log = tmp_path / 'suspects.log'
    log.write_text('earlier\n')

    append_suspects(report_with((b'worm', 100, 49)), log)
    append_suspects(report_with(), log)

    assert log.read_text().splitlines() == ['earlier', '2024-01-02T03:04:05Z\t0.7000\t776f726d']


def test_signatures_are_deduplicated() -> None:
    report = report_with((b'worm', 100, 49), (b'tail', 100, 25), (b'worm', 100, 16))

    signatures = generate_signatures(report, now=1_700_000_000)

    assert [signature.pattern for signature in signatures] == [b'worm', b'tail']
    assert all(signature.created_at == 1_700_000_000 for signature in signatures)
    assert signatures[0].hash == Pattern.of(b'worm', HashParams()).hash


def test_no_suspects_no_signatures() -> None:
    assert generate_signatures(report_with()) == []
