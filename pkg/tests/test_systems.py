import math

import numpy as np
import pytest

from coverentropy import (
    MarkovSystem,
    MixtureSystem,
    block_system,
    parse_word,
    sample_orbit,
    set_measure,
    stationary_of,
    system_from_config,
    word_measure,
)
from coverentropy.errors import ConfigError

from oracles import brute_cell_measures, brute_word_measure, markov_entropy_rate


def test_stationary_rejects_identity():
    with pytest.raises(ValueError, match="reducible"):
        stationary_of([[1.0, 0.0], [0.0, 1.0]])


def test_stationary_symmetric_chain():
    pi = stationary_of([[0.5, 0.5], [0.5, 0.5]])
    assert pi == pytest.approx([0.5, 0.5], abs=1e-12)


def test_stationary_hand_balance():
    # pi0 * 0.1 = pi1 * 0.5 plus normalization gives (5/6, 1/6)
    pi = stationary_of([[0.9, 0.1], [0.5, 0.5]])
    assert pi == pytest.approx([5 / 6, 1 / 6], abs=1e-11)


def test_stationary_periodic_chain_converges():
    pi = stationary_of([[0.0, 1.0], [1.0, 0.0]])
    assert pi == pytest.approx([0.5, 0.5], abs=1e-11)


def test_stationary_rejects_bad_rows():
    with pytest.raises(ValueError, match="row 1"):
        stationary_of([[0.5, 0.5], [0.6, 0.5]])
    with pytest.raises(ValueError, match="negative"):
        stationary_of([[1.5, -0.5], [0.5, 0.5]])


def test_word_measure_bernoulli(fair_coin):
    assert word_measure(fair_coin, (0, 1, 0)) == pytest.approx(1 / 8)
    assert word_measure(fair_coin, (1,)) == pytest.approx(0.5)


def test_word_measure_markov(sticky_chain):
    assert word_measure(sticky_chain, (0, 1)) == pytest.approx((5 / 6) * 0.1)
    assert word_measure(sticky_chain, (0,)) == pytest.approx(5 / 6)


def test_word_measure_matches_oracle():
    rng = np.random.default_rng(7)
    P = rng.random((3, 3)) + 0.1
    P /= P.sum(axis=1, keepdims=True)
    system = MarkovSystem.from_matrix(P)
    for trial in range(20):
        word = tuple(int(x) for x in rng.integers(0, 3, size=1 + trial % 5))
        expected = brute_word_measure(P.tolist(), system.stationary.tolist(), word)
        assert word_measure(system, word) == pytest.approx(expected, rel=1e-12)


def test_cylinder_measures_match_oracle_and_sum_to_one():
    rng = np.random.default_rng(3)
    P = rng.random((2, 2)) + 0.1
    P /= P.sum(axis=1, keepdims=True)
    system = MarkovSystem.from_matrix(P)
    got = system.cylinder_measures(5)
    want = brute_cell_measures(P.tolist(), system.stationary.tolist(), 2, 5)
    assert got == pytest.approx(want, rel=1e-12)
    assert float(got.sum()) == pytest.approx(1.0, abs=1e-10)
    assert float(system.cylinder_measures(12).sum()) == pytest.approx(1.0, abs=1e-10)


def test_depth_totals_wider_alphabet():
    rng = np.random.default_rng(11)
    P = rng.random((4, 4)) + 0.05
    P /= P.sum(axis=1, keepdims=True)
    system = MarkovSystem.from_matrix(P)
    assert float(system.cylinder_measures(9).sum()) == pytest.approx(1.0, abs=1e-10)


def test_set_measure_examples(fair_coin):
    words = [parse_word(t, 2) for t in ("00", "01", "10")]
    assert set_measure(fair_coin, words) == pytest.approx(0.75)
    assert set_measure(fair_coin, []) == 0.0
    full = [(a, b) for a in range(2) for b in range(2)]
    assert set_measure(fair_coin, full) == pytest.approx(1.0)


def test_set_measure_rejects_mixed_depths(fair_coin):
    with pytest.raises(ValueError, match="mixed depths"):
        set_measure(fair_coin, [(0,), (0, 1)])


def test_shift_invariance(sticky_chain):
    word = (0, 1, 1)
    mid = word_measure(sticky_chain, word)
    left = sum(word_measure(sticky_chain, (a,) + word) for a in range(2))
    right = sum(word_measure(sticky_chain, word + (b,)) for b in range(2))
    assert left == pytest.approx(mid, abs=1e-10)
    assert right == pytest.approx(mid, abs=1e-10)


def test_mixture_linearity(fair_coin, sticky_chain):
    mix = MixtureSystem((fair_coin, sticky_chain), np.array([0.25, 0.75]))
    words = [(0, 1), (1, 1)]
    want = 0.25 * set_measure(fair_coin, words) + 0.75 * set_measure(sticky_chain, words)
    assert set_measure(mix, words) == pytest.approx(want, abs=1e-12)


def test_mixture_validation(fair_coin):
    with pytest.raises(ValueError, match="sum"):
        MixtureSystem((fair_coin,), np.array([0.5]))


def test_sample_orbit_deterministic(sticky_chain):
    a = sample_orbit(sticky_chain, 50, seed=9)
    b = sample_orbit(sticky_chain, 50, seed=9)
    assert a == b
    assert len(a) == 50


def test_sample_orbit_point_mass():
    degenerate = MarkovSystem.bernoulli([1.0, 0.0])
    assert sample_orbit(degenerate, 10, seed=1) == (0,) * 10


def test_sample_orbit_frequencies(fair_coin):
    orbit = sample_orbit(fair_coin, 20000, seed=5)
    ones = sum(orbit) / len(orbit)
    assert abs(ones - 0.5) < 0.02


def test_entropy_rate_closed_form(sticky_chain):
    want = markov_entropy_rate(
        sticky_chain.transition.tolist(), sticky_chain.stationary.tolist()
    )
    assert sticky_chain.entropy_rate() == pytest.approx(want, abs=1e-12)
    assert want == pytest.approx(0.5574963279911702, abs=1e-12)


def test_block_system_consistency(sticky_chain):
    blocked = block_system(sticky_chain, 2)
    assert blocked.alphabet_size == 4
    # block stationary mass equals the base cylinder measure
    assert blocked.stationary[1] == pytest.approx(word_measure(sticky_chain, (0, 1)))
    # two block steps reproduce a length-4 cylinder measure
    assert word_measure(blocked, (1, 2)) == pytest.approx(
        word_measure(sticky_chain, (0, 1, 1, 0))
    )


def test_period_detection(sticky_chain):
    assert sticky_chain.period == 1
    swap = MarkovSystem.from_matrix([[0.0, 1.0], [1.0, 0.0]])
    assert swap.period == 2


def test_system_from_config_paths():
    sys1 = system_from_config({"type": "bernoulli", "probs": [0.5, 0.5]})
    assert isinstance(sys1, MarkovSystem)
    sys2 = system_from_config(
        {
            "type": "mixture",
            "components": [
                {"type": "bernoulli", "probs": [0.5, 0.5]},
                {"type": "markov", "matrix": [[0.9, 0.1], [0.5, 0.5]]},
            ],
            "weights": [0.5, 0.5],
        }
    )
    assert isinstance(sys2, MixtureSystem)
    with pytest.raises(ConfigError, match="system.type"):
        system_from_config({"type": "gaussian"})
    with pytest.raises(ConfigError, match="system.matrix"):
        system_from_config({"type": "markov"})
