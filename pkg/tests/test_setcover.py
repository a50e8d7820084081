import itertools

import numpy as np
import pytest

from coverentropy import (
    CapacityError,
    Cover,
    CoverInstance,
    Partition,
    WordSet,
    covered_measure,
    dyn_join,
    n_exact,
    n_greedy,
)
from coverentropy.verify import random_cover, random_system

from oracles import brute_setcover


def quad_partition():
    return Partition(
        tuple(WordSet.from_strings(2, [w]) for w in ("00", "01", "10", "11"))
    )


def test_partition_partial_cover_count(fair_coin):
    inst = CoverInstance.from_cover(fair_coin, quad_partition(), 0.3)
    count, witness = n_exact(inst)
    assert count == 3
    assert covered_measure(inst, witness) > 0.7


def test_full_cover_of_partition_needs_all(fair_coin):
    inst = CoverInstance.from_cover(fair_coin, quad_partition(), 0.0)
    count, witness = n_exact(inst)
    assert count == 4
    assert witness == (0, 1, 2, 3)


def test_whole_space_element_wins(fair_coin):
    U = Cover((WordSet.from_strings(2, ["0", "1"]), WordSet.from_strings(2, ["1"])))
    for eps in (0.0, 0.2, 0.9):
        inst = CoverInstance.from_cover(fair_coin, U, eps)
        assert n_exact(inst)[0] == 1
        assert n_greedy(inst)[0] == 1


def test_strict_threshold(fair_coin):
    # exactly reaching 1 - eps must not qualify: 0.75 covered vs eps=0.25
    inst = CoverInstance.from_cover(fair_coin, quad_partition(), 0.25)
    count, _ = n_exact(inst)
    assert count == 4


def test_exact_matches_bruteforce_random():
    rng = np.random.default_rng(19)
    for _ in range(20):
        alphabet = int(rng.integers(2, 4))
        system = random_system(rng, alphabet)
        U = random_cover(rng, alphabet, 1, max_elements=4)
        joined, _ = dyn_join(U, 2)
        weights = system.cylinder_measures(joined.depth)
        sets = [el.members for el in joined.elements]
        for eps in (0.0, 0.25, 0.5):
            inst = CoverInstance.from_cover(system, joined, eps)
            got, witness = n_exact(inst)
            want, _ = brute_setcover(weights.tolist(), sets, eps)
            assert got == want
            if eps == 0.0:
                union = frozenset().union(*(sets[i] for i in witness))
                assert len(union) == weights.size
            else:
                assert covered_measure(inst, witness) > 1 - eps


def test_epsilon_monotone_and_partial_le_full():
    rng = np.random.default_rng(23)
    for _ in range(10):
        system = random_system(rng, 2)
        U = random_cover(rng, 2, 2, max_elements=4)
        joined, _ = dyn_join(U, 2)
        full = n_exact(CoverInstance.from_cover(system, joined, 0.0))[0]
        prev = full
        for eps in (0.1, 0.25, 0.5):
            count = n_exact(CoverInstance.from_cover(system, joined, eps))[0]
            assert count <= prev
            prev = count


def test_greedy_upper_bound_and_validity():
    rng = np.random.default_rng(27)
    for _ in range(10):
        system = random_system(rng, 3)
        U = random_cover(rng, 3, 1, max_elements=4)
        joined, _ = dyn_join(U, 2)
        for eps in (0.0, 0.25):
            inst = CoverInstance.from_cover(system, joined, eps)
            exact_count, _ = n_exact(inst)
            greedy_count, witness = n_greedy(inst)
            assert exact_count <= greedy_count
            if eps:
                assert covered_measure(inst, witness) > inst.target


def test_greedy_within_one_on_three_set_sweep():
    subsets = [
        frozenset(s)
        for r in range(1, 5)
        for s in itertools.combinations(range(4), r)
    ]
    weights = np.full(4, 0.25)
    checked = 0
    for combo in itertools.product(range(len(subsets)), repeat=3):
        sets = [subsets[i] for i in combo]
        if frozenset().union(*sets) != frozenset(range(4)):
            continue
        checked += 1
        for eps in (0.0, 0.3, 0.6):
            inst = CoverInstance(weights, tuple(sets), eps)
            exact_count, _ = n_exact(inst)
            greedy_count, _ = n_greedy(inst)
            assert greedy_count <= exact_count + 1
    assert checked > 1000


def test_set_budget_error(fair_coin):
    inst = CoverInstance.from_cover(fair_coin, quad_partition(), 0.0)
    with pytest.raises(CapacityError, match="n_greedy"):
        n_exact(inst, set_budget=2)


def test_instance_validation():
    with pytest.raises(ValueError, match="not covered"):
        CoverInstance(np.array([0.5, 0.5]), (frozenset([0]),), 0.0)
    with pytest.raises(ValueError, match="sum"):
        CoverInstance(np.array([0.5, 0.4]), (frozenset([0, 1]),), 0.0)
    with pytest.raises(ValueError, match="epsilon"):
        CoverInstance(np.array([0.5, 0.5]), (frozenset([0, 1]),), 1.0)
