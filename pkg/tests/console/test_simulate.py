import pytest

from config.exceptions import ArgumentError
from config.runtime import RuntimeConfig
from console.simulate import expects_detection, run_simulation
from console.traffic import SimScenario

SMALL = {'n_sets': 2, 'packets_per_set': 20, 'packet_len': 200}


@pytest.mark.parametrize(
    ('scenario', 'expected'),
    [
        (SimScenario(inject_fraction=0.5), True),
        (SimScenario(inject_fraction=0.0), False),
        (SimScenario(inject_fraction=0.5, inject_payload=b'short'), False),
    ],
)
def test_expects_detection(scenario: SimScenario, expected: bool) -> None:
    assert expects_detection(scenario, RuntimeConfig()) is expected


def test_workdir_must_be_empty(tmp_path) -> None:
    (tmp_path / 'leftover.txt').write_text('x')

    with pytest.raises(ArgumentError):
        run_simulation(SimScenario(**SMALL), tmp_path)


def test_clean_traffic_ends_without_detection(tmp_path) -> None:
    result = run_simulation(SimScenario(**SMALL, seed=3), tmp_path / 'sim', timeout=30)

    assert result.outcome == 'no-detection'
    assert result.success
    assert result.signatures == 0
    assert all(status['clean_intact'] and not status['infected_quarantined'] for status in result.clients)
    assert (tmp_path / 'sim' / 'corpus.corp').exists()


def test_payload_below_minimum_length_is_not_detected(tmp_path) -> None:
    scenario = SimScenario(**SMALL, inject_fraction=0.5, inject_payload=b'tiny-worm', seed=4)

    result = run_simulation(scenario, tmp_path / 'sim', timeout=30)

    assert (result.outcome, result.expected_detection, result.success) == ('no-detection', False, True)


@pytest.mark.slow
def test_planted_payload_reaches_quarantine(tmp_path) -> None:
    scenario = SimScenario(inject_fraction=0.5, seed=7)

    result = run_simulation(scenario, tmp_path / 'sim', clients=2, timeout=60)

    assert result.outcome == 'quarantined'
    assert result.success
    assert result.detection_to_quarantine is not None
    assert result.detection_to_quarantine < 30
    assert all(status['infected_quarantined'] and status['clean_intact'] for status in result.clients)
    assert len(list((tmp_path / 'sim' / 'broadcasts').glob('*.amp1'))) >= 1
    assert (tmp_path / 'sim' / 'suspects.log').read_text()
