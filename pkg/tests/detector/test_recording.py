from datetime import UTC, datetime

import pytest

from detector.coincidence import CoincidenceEntry
from detector.extraction import Pattern
from detector.hashing import HashParams
from detector.models import DetectionRun, SignatureRecord
from detector.pipeline import DetectionReport, Signature
from detector.recording import record_report

STARTED = datetime(2024, 3, 1, 12, 0, 0, tzinfo=UTC)
FINISHED = datetime(2024, 3, 1, 12, 0, 3, tzinfo=UTC)


def make_report(*patterns: tuple[bytes, int], corpus_id: str = 'corpus-1') -> DetectionReport:
    params = HashParams()
    return DetectionReport(
        corpus_id=corpus_id,
        suspects=tuple(CoincidenceEntry(Pattern.of(data, params), 100, s) for data, s in patterns),
        started_at=STARTED,
        finished_at=FINISHED,
        set_count=10,
    )


@pytest.mark.django_db
def test_run_is_stored_with_ranked_suspects() -> None:
    report = make_report((b'first-pattern', 64), (b'second-pattern', 36))

    run = record_report(report)

    assert run.elapsed == 3.0
    assert run.config['k_min'] == 20
    assert [(suspect.rank, bytes(suspect.pattern), suspect.coincidences) for suspect in run.suspects.all()] == [
        (0, b'first-pattern', 64),
        (1, b'second-pattern', 36),
    ]
    assert run.suspects.first().f_q == pytest.approx(0.8)


@pytest.mark.django_db
def test_signatures_are_recorded_once() -> None:
    signature = Signature(b'first-pattern', 1234, 1_700_000_000)

    first = record_report(make_report((b'first-pattern', 64)), [signature])
    record_report(make_report((b'first-pattern', 64), corpus_id='corpus-2'), [signature])

    record = SignatureRecord.objects.get()
    assert record.first_run == first
    assert record.length == len(b'first-pattern')
    assert record.created_at == datetime.fromtimestamp(1_700_000_000, UTC)
    assert DetectionRun.objects.count() == 2


@pytest.mark.django_db
def test_quiet_run_is_still_recorded() -> None:
    run = record_report(make_report())

    assert run.suspects.count() == 0
    assert str(run) == 'corpus-1 @ 2024-03-01 12:00:03'
