import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from coverentropy import Cover, MarkovSystem, Partition, WordSet


@pytest.fixture
def fair_coin():
    return MarkovSystem.bernoulli([0.5, 0.5])


@pytest.fixture
def sticky_chain():
    return MarkovSystem.from_matrix([[0.9, 0.1], [0.5, 0.5]])


@pytest.fixture
def binary_partition():
    return Partition(
        (WordSet.from_strings(2, ["0"]), WordSet.from_strings(2, ["1"]))
    )


@pytest.fixture
def overlap_cover():
    return Cover(
        (
            WordSet.from_strings(2, ["00", "01", "10"]),
            WordSet.from_strings(2, ["01", "10", "11"]),
        )
    )
