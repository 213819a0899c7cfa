"""Tests for the read-only JSON views in web.views."""

from datetime import UTC, datetime, timedelta
from http import HTTPStatus

import pytest
from django.test import Client
from django.urls import reverse

from detector.models import DetectionRun, SignatureRecord, SuspectPattern


@pytest.fixture
def recorded_runs() -> list[DetectionRun]:
    base = datetime(2024, 5, 1, tzinfo=UTC)
    runs = []
    for index in range(3):
        run = DetectionRun.objects.create(
            corpus_id=f'corpus-{index}',
            started_at=base + timedelta(minutes=index),
            finished_at=base + timedelta(minutes=index, seconds=2),
            set_count=10,
            config={'k_min': 20},
        )
        SuspectPattern.objects.create(
            run=run,
            rank=0,
            pattern=b'\xde\xad',
            pattern_hash=7,
            coincidences=49,
            packets=100,
            f_q=0.7,
        )
        runs.append(run)
    SignatureRecord.objects.create(
        digest='0' * 64,
        pattern=b'\xde\xad',
        length=2,
        pattern_hash=7,
        created_at=base,
        first_run=runs[0],
    )
    return runs


def test_health_status_code(client: Client) -> None:
    """GET /health/ returns HTTP 200 OK."""
    response = client.get(reverse('web:health'))
    assert response.status_code == HTTPStatus.OK


def test_health_payload(client: Client) -> None:
    """The health endpoint returns a minimal non-sensitive payload."""
    response = client.get(reverse('web:health'))
    assert response.json() == {'status': 'ok'}


def test_views_are_read_only(client: Client) -> None:
    response = client.post(reverse('web:health'))
    assert response.status_code == HTTPStatus.METHOD_NOT_ALLOWED


@pytest.mark.django_db
def test_overview_on_empty_database(client: Client) -> None:
    response = client.get(reverse('web:overview'))
    assert response.json() == {'runs': 0, 'suspects': 0, 'signatures': 0, 'latest_run': None}


@pytest.mark.django_db
@pytest.mark.usefixtures('recorded_runs')
def test_overview_counts(client: Client) -> None:
    payload = client.get(reverse('web:overview')).json()
    assert (payload['runs'], payload['suspects'], payload['signatures']) == (3, 3, 1)


@pytest.mark.django_db
@pytest.mark.usefixtures('recorded_runs')
def test_runs_newest_first(client: Client) -> None:
    payload = client.get(reverse('web:runs')).json()
    assert [run['corpus_id'] for run in payload['runs']] == ['corpus-2', 'corpus-1', 'corpus-0']


@pytest.mark.django_db
@pytest.mark.usefixtures('recorded_runs')
def test_runs_include_suspects(client: Client) -> None:
    latest = client.get(reverse('web:runs')).json()['runs'][0]
    assert latest['suspect_count'] == 1
    assert latest['suspects'] == [{'rank': 0, 'f_q': 0.7, 'coincidences': 49, 'hex': 'dead'}]


@pytest.mark.django_db
@pytest.mark.usefixtures('recorded_runs')
@pytest.mark.parametrize(('limit', 'expected'), [('1', 1), ('0', 1), ('junk', 3)])
def test_runs_limit(client: Client, limit: str, expected: int) -> None:
    payload = client.get(reverse('web:runs'), {'limit': limit}).json()
    assert len(payload['runs']) == expected


@pytest.mark.django_db
def test_signatures_listing(client: Client, recorded_runs: list[DetectionRun]) -> None:
    payload = client.get(reverse('web:signatures')).json()
    assert payload['signatures'] == [
        {
            'hash': 7,
            'length': 2,
            'created_at': '2024-05-01T00:00:00+00:00',
            'first_run': recorded_runs[0].pk,
            'hex': 'dead',
        }
    ]
