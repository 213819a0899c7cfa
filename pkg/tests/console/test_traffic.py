import numpy as np
import pytest

from config.exceptions import ConfigurationError
from console.traffic import EICAR, SimScenario, generate_traffic, random_file_bytes


def test_eicar_is_the_standard_test_string() -> None:
    assert len(EICAR) == 68
    assert EICAR.startswith(b'X5O!P%@AP[4\\PZX54(P^)7CC)7}$EICAR')


def test_same_seed_same_corpus() -> None:
    scenario = SimScenario(n_sets=2, packets_per_set=10, packet_len=200, inject_fraction=0.3, seed=11)

    first, second = generate_traffic(scenario), generate_traffic(scenario)

    assert first.corpus == second.corpus
    assert np.array_equal(first.injected, second.injected)


def test_different_seeds_differ() -> None:
    first = generate_traffic(SimScenario(n_sets=1, packets_per_set=4, packet_len=100, seed=1))
    second = generate_traffic(SimScenario(n_sets=1, packets_per_set=4, packet_len=100, seed=2))

    assert first.corpus != second.corpus


def test_shape() -> None:
    traffic = generate_traffic(SimScenario(n_sets=3, packets_per_set=7, packet_len=90, seed=0))

    assert len(traffic.corpus.sets) == 3
    assert all(packet_set.N == 7 for packet_set in traffic.corpus.sets)
    assert {len(packet) for packet_set in traffic.corpus.sets for packet in packet_set.packets} == {90}
    assert traffic.injected_count == 0


def test_full_fraction_plants_everywhere() -> None:
    traffic = generate_traffic(SimScenario(n_sets=2, packets_per_set=5, packet_len=120, inject_fraction=1.0, seed=3))

    assert traffic.injected_count == 10
    assert all(EICAR in packet.payload for packet_set in traffic.corpus.sets for packet in packet_set.packets)


def test_planted_share_is_binomial() -> None:
    traffic = generate_traffic(SimScenario(n_sets=10, packets_per_set=100, packet_len=100, inject_fraction=0.5, seed=5))
    packets = [packet for packet_set in traffic.corpus.sets for packet in packet_set.packets]

    assert abs(traffic.injected_count - 500) <= 3 * np.sqrt(1000 * 0.25)
    assert [EICAR in packet.payload for packet in packets] == traffic.injected.tolist()


@pytest.mark.parametrize(
    'kwargs',
    [
        {'inject_fraction': 1.5},
        {'n_sets': 0},
        {'packets_per_set': 1},
        {'packet_len': 20},
        {'seed': -1},
    ],
)
def test_scenario_validation(kwargs: dict) -> None:
    with pytest.raises(ConfigurationError):
        SimScenario(**kwargs)


def test_random_file_bytes() -> None:
    planted = random_file_bytes(7, 1, 256, plant=b'marker', at=100)

    assert len(planted) == 256
    assert planted[100:106] == b'marker'
    assert random_file_bytes(7, 1, 256) == random_file_bytes(7, 1, 256)
    assert random_file_bytes(7, 1, 256) != random_file_bytes(7, 2, 256)
