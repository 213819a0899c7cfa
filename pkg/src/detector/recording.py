"""Persisting detection reports and signatures to the Django database."""

from __future__ import annotations

import hashlib
import logging
from datetime import UTC, datetime
from typing import TYPE_CHECKING

from django.db import transaction

from detector.models import DetectionRun, SignatureRecord, SuspectPattern

if TYPE_CHECKING:
    from collections.abc import Iterable

    from detector.pipeline import DetectionReport, Signature

logger = logging.getLogger(__name__)


@transaction.atomic
def record_report(report: DetectionReport, signatures: Iterable[Signature] = ()) -> DetectionRun:
    """Store one run with its ranked suspects; signatures already on record are kept as they are."""
    run = DetectionRun.objects.create(
        corpus_id=report.corpus_id,
        started_at=report.started_at,
        finished_at=report.finished_at,
        set_count=report.set_count,
        config=report.config_snapshot,
    )
    SuspectPattern.objects.bulk_create(
        SuspectPattern(
            run=run,
            rank=rank,
            pattern=entry.pattern.data,
            pattern_hash=entry.pattern.hash,
            coincidences=entry.S,
            packets=entry.N,
            f_q=entry.f_Q,
        )
        for rank, entry in enumerate(report.suspects)
    )

    created = 0
    for signature in signatures:
        _, is_new = SignatureRecord.objects.get_or_create(
            digest=hashlib.sha256(signature.pattern).hexdigest(),
            defaults={
                'pattern': signature.pattern,
                'length': len(signature.pattern),
                'pattern_hash': signature.hash,
                'created_at': datetime.fromtimestamp(signature.created_at, UTC),
                'first_run': run,
            },
        )
        created += is_new
    logger.info('Recorded run %d: %d suspects, %d new signatures', run.pk, len(report.suspects), created)
    return run
