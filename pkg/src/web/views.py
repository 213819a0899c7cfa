from django.db.models import Count
from django.http import JsonResponse
from django.http.request import HttpRequest
from django.views.decorators.http import require_GET

from detector.models import DetectionRun, SignatureRecord, SuspectPattern

DEFAULT_LIMIT = 20
MAX_LIMIT = 200


def _limit(request: HttpRequest) -> int:
    try:
        value = int(request.GET.get('limit', DEFAULT_LIMIT))
    except ValueError:
        return DEFAULT_LIMIT
    return max(1, min(value, MAX_LIMIT))


@require_GET
def health(request: HttpRequest) -> JsonResponse:
    return JsonResponse({'status': 'ok'})


@require_GET
def overview(request: HttpRequest) -> JsonResponse:
    latest = DetectionRun.objects.first()
    return JsonResponse(
        {
            'runs': DetectionRun.objects.count(),
            'suspects': SuspectPattern.objects.count(),
            'signatures': SignatureRecord.objects.count(),
            'latest_run': latest.finished_at.isoformat() if latest else None,
        }
    )


@require_GET
def runs(request: HttpRequest) -> JsonResponse:
    """Latest detection runs, newest first, each with its ranked suspects."""
    queryset = (
        DetectionRun.objects.annotate(suspect_count=Count('suspects'))
        .prefetch_related('suspects')
        .order_by('-finished_at', '-id')[: _limit(request)]
    )
    payload = [
        {
            'id': run.pk,
            'corpus_id': run.corpus_id,
            'started_at': run.started_at.isoformat(),
            'finished_at': run.finished_at.isoformat(),
            'elapsed': run.elapsed,
            'set_count': run.set_count,
            'config': run.config,
            'suspect_count': run.suspect_count,
            'suspects': [
                {
                    'rank': suspect.rank,
                    'f_q': round(suspect.f_q, 4),
                    'coincidences': suspect.coincidences,
                    'hex': suspect.hex,
                }
                for suspect in run.suspects.all()
            ],
        }
        for run in queryset
    ]
    return JsonResponse({'runs': payload})


@require_GET
def signatures(request: HttpRequest) -> JsonResponse:
    queryset = SignatureRecord.objects.all()[: _limit(request)]
    payload = [
        {
            'hash': record.pattern_hash,
            'length': record.length,
            'created_at': record.created_at.isoformat(),
            'first_run': record.first_run_id,
            'hex': record.hex,
        }
        for record in queryset
    ]
    return JsonResponse({'signatures': payload})
