import numpy as np
import pytest

from coverentropy import (
    Assignment,
    CapacityError,
    Cover,
    Partition,
    WordSet,
    binary_entropy,
    dyn_join,
    induced_partition,
    join,
    pullback,
    static_cover_entropy_exact,
    static_cover_entropy_heuristic,
)
from coverentropy.verify import random_cover, random_system, split_cover

from oracles import brute_assignment_entropy


def exact(system, cover, depth=None, budget=24):
    value, assignment = static_cover_entropy_exact(system, cover, depth, exact_budget=budget)
    return value, assignment


def test_partition_input_is_forced(fair_coin, binary_partition):
    value, assignment = exact(fair_coin, binary_partition)
    assert value == pytest.approx(1.0, abs=1e-12)
    assert assignment.choice == (0, 1)
    heur, _ = static_cover_entropy_heuristic(fair_coin, binary_partition)
    assert heur == pytest.approx(value, abs=1e-12)


def test_cover_containing_everything_scores_zero(fair_coin):
    U = Cover(
        (WordSet.from_strings(2, ["0", "1"]), WordSet.from_strings(2, ["1"]))
    )
    value, assignment = exact(fair_coin, U)
    assert value == pytest.approx(0.0, abs=1e-12)
    assert set(assignment.choice) == {0}
    heur, _ = static_cover_entropy_heuristic(fair_coin, U)
    assert heur == pytest.approx(0.0, abs=1e-12)


def test_overlap_cover_spec_value(fair_coin, overlap_cover):
    value, assignment = exact(fair_coin, overlap_cover)
    assert value == pytest.approx(binary_entropy(0.25), abs=1e-12)
    # lexicographically smallest optimum sends both shared words to element 0
    assert assignment.choice == (0, 0, 0, 1)
    heur, _ = static_cover_entropy_heuristic(fair_coin, overlap_cover, restarts=2)
    assert heur == pytest.approx(value, abs=1e-12)


def test_exact_matches_bruteforce_random():
    rng = np.random.default_rng(13)
    for _ in range(25):
        alphabet = int(rng.integers(2, 4))
        depth = int(rng.integers(1, 3))
        system = random_system(rng, alphabet)
        cover = random_cover(rng, alphabet, depth, max_elements=3)
        got, _ = exact(system, cover)
        cells = system.cylinder_measures(depth).tolist()
        want, _ = brute_assignment_entropy(cells, [el.members for el in cover.elements])
        assert got == pytest.approx(want, abs=1e-9)


def test_exact_budget_error(fair_coin, overlap_cover):
    joined, _ = dyn_join(overlap_cover, 5)
    with pytest.raises(CapacityError, match="heuristic"):
        static_cover_entropy_exact(fair_coin, joined, exact_budget=10)


def test_induced_partition(fair_coin, overlap_cover):
    _, assignment = exact(fair_coin, overlap_cover)
    part = induced_partition(assignment)
    assert isinstance(part, Partition)
    assert part.element_sets() == frozenset(
        {frozenset({0, 1, 2}), frozenset({3})}
    )


def test_assignment_validation(overlap_cover):
    with pytest.raises(ValueError, match="not contained"):
        Assignment(overlap_cover, 2, (1, 0, 0, 1))


def test_refinement_monotonicity():
    rng = np.random.default_rng(29)
    for _ in range(10):
        system = random_system(rng, 2)
        V = random_cover(rng, 2, 2, max_elements=3)
        U = split_cover(rng, V)
        hu, _ = exact(system, U)
        hv, _ = exact(system, V)
        assert hu >= hv - 1e-9


def test_join_subadditivity():
    rng = np.random.default_rng(31)
    for _ in range(10):
        system = random_system(rng, 2)
        U = random_cover(rng, 2, 2, max_elements=3)
        V = random_cover(rng, 2, 2, max_elements=3)
        hj, _ = exact(system, join(U, V))
        hu, _ = exact(system, U)
        hv, _ = exact(system, V)
        assert hj <= hu + hv + 1e-9


def test_pullback_invariance():
    rng = np.random.default_rng(37)
    for _ in range(8):
        system = random_system(rng, 2)
        U = random_cover(rng, 2, 1, max_elements=3)
        h0, _ = exact(system, U)
        h1, _ = exact(system, pullback(U, 1))
        assert h1 == pytest.approx(h0, abs=1e-9)


def test_heuristic_never_beats_exact():
    rng = np.random.default_rng(41)
    for trial in range(15):
        system = random_system(rng, 2)
        U = random_cover(rng, 2, 2)
        hx, _ = exact(system, U)
        hh, _ = static_cover_entropy_heuristic(system, U, seed=trial, restarts=2)
        assert hh >= hx - 1e-9


def test_deepening_never_hurts():
    rng = np.random.default_rng(43)
    for _ in range(8):
        system = random_system(rng, 2)
        U = random_cover(rng, 2, 1, max_elements=3)
        shallow, _ = exact(system, U)
        deep, _ = exact(system, U, depth=U.depth + 1)
        assert deep <= shallow + 1e-9


def test_zero_mass_blocks_ignored():
    degenerate = np.array([[1.0, 0.0], [1.0, 0.0]])
    from coverentropy import MarkovSystem

    system = MarkovSystem(degenerate, np.array([1.0, 0.0]))
    U = Cover((WordSet.from_strings(2, ["0"]), WordSet.from_strings(2, ["0", "1"])))
    value, _ = exact(system, U)
    assert value == pytest.approx(0.0, abs=1e-12)
