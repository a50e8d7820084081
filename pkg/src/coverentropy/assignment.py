"""Static entropy of a cover by optimal assignment of cells to elements.

The entropy of a cover is the least Shannon entropy of a partition
refining it. For a depth-D cylinder cover that infimum is attained by
assigning every depth-D word to one of the elements containing it (the
feasible fractional splits form a product of simplices and entropy is
concave, so the minimum sits at an integral vertex). The exact solver
below runs a branch-and-bound over the words contained in two or more
elements; the heuristic is a greedy start plus first-improvement local
search and always upper-bounds the exact value.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2

import numpy as np

from .covers import Cover, Partition, WordSet
from .errors import CapacityError
from .seeding import derive_seed
from .systems import System

DEFAULT_EXACT_WORD_BUDGET = 20
DEFAULT_NODE_BUDGET = 2_000_000
_TIE_EPS = 1e-12


def _term(p: float) -> float:
    return -p * log2(p) if p > 0.0 else 0.0


def entropy_bits(masses) -> float:
    """Shannon entropy of a (sub)probability vector, 0 log 0 = 0."""
    return float(sum(_term(float(p)) for p in masses))


@dataclass(frozen=True)
class Assignment:
    """A choice, for every depth-D word, of a cover element containing it."""

    cover: Cover
    depth: int
    choice: tuple

    def __post_init__(self):
        if self.depth < self.cover.depth:
            raise ValueError("assignment depth must be >= cover depth")
        num = self.cover.alphabet_size**self.depth
        choice = tuple(int(c) for c in self.choice)
        if len(choice) != num:
            raise ValueError(f"choice has {len(choice)} entries, expected {num}")
        elig = _eligibility(self.cover, self.depth)
        for w, c in enumerate(choice):
            if not (0 <= c < len(self.cover.elements)):
                raise ValueError(f"choice[{w}] = {c} is not an element index")
            if c not in elig.of(w):
                raise ValueError(f"word index {w} is not contained in element {c}")
        object.__setattr__(self, "choice", choice)

    def block_ids(self) -> np.ndarray:
        return np.asarray(self.choice, dtype=np.int64)


def induced_partition(assignment: Assignment) -> Partition:
    """The partition whose blocks collect the words sent to each element."""
    M = assignment.cover.alphabet_size
    blocks = {}
    for w, c in enumerate(assignment.choice):
        blocks.setdefault(c, set()).add(w)
    elements = tuple(
        WordSet(M, assignment.depth, frozenset(blocks[c])) for c in sorted(blocks)
    )
    return Partition(elements)


class _Eligibility:
    """Per-word containing elements, with equal elements merged onto the
    smallest original index so duplicated elements never multiply the search."""

    def __init__(self, cover: Cover, depth: int):
        lifted = [el.lift(depth) for el in cover.elements]
        first_of = {}
        for i, el in enumerate(lifted):
            first_of.setdefault(el.members, i)
        representatives = sorted(set(first_of.values()))
        num = cover.alphabet_size**depth
        table = [[] for _ in range(num)]
        for i in representatives:
            for w in lifted[i].members:
                table[w].append(i)
        self.table = table
        self.num_words = num
        self.num_elements = len(cover.elements)

    def of(self, w: int):
        return self.table[w]


def _eligibility(cover: Cover, depth: int) -> _Eligibility:
    return _Eligibility(cover, depth)


def _setup(system: System, cover: Cover, depth):
    depth = cover.depth if depth is None else depth
    if depth < cover.depth:
        raise ValueError("depth must be >= the cover's depth")
    elig = _eligibility(cover, depth)
    measures = system.cylinder_measures(depth)
    choice = [e[0] for e in elig.table]
    free = [w for w in range(elig.num_words) if len(elig.of(w)) > 1 and measures[w] > 0.0]
    return depth, elig, measures, choice, free


def _masses_for(choice, free, measures, num_elements) -> np.ndarray:
    masses = np.zeros(num_elements)
    skip = set(free)
    for w, c in enumerate(choice):
        if w not in skip:
            masses[c] += measures[w]
    return masses


def static_cover_entropy_exact(
    system: System,
    cover: Cover,
    depth: int | None = None,
    exact_budget: int = DEFAULT_EXACT_WORD_BUDGET,
    node_budget: int = DEFAULT_NODE_BUDGET,
):
    """Least partition entropy over depth-D assignments, with a witness.

    Branch-and-bound over the multi-covered words of positive measure
    (all other words are forced, or pinned to their first eligible
    element when they carry no mass). Among equal-entropy optima the
    lexicographically smallest choice vector wins. Raises CapacityError
    when more than `exact_budget` words need branching, or when the
    search tree outgrows `node_budget`.
    """
    depth, elig, measures, choice, free = _setup(system, cover, depth)
    if len(free) > exact_budget:
        raise CapacityError(
            f"{len(free)} multi-covered words exceed the exact budget of {exact_budget}; "
            "use static_cover_entropy_heuristic"
        )
    masses = _masses_for(choice, free, measures, elig.num_elements)

    if not free:
        value = entropy_bits(masses)
        return value, Assignment(cover, depth, tuple(choice))

    # Seed the bound with the heuristic; its leaf is revisited by the
    # search, so the lexicographic tie-break is unaffected.
    seed_value, seed_choice = _search_heuristic(
        elig, measures, list(choice), free, masses.copy(), seed=0, restarts=1
    )

    suffix = np.zeros(len(free) + 1)
    for t in range(len(free) - 1, -1, -1):
        suffix[t] = suffix[t + 1] + measures[free[t]]

    entropy_sum = entropy_bits(masses)
    best_value = seed_value
    best_free_choice = None
    current = [0] * len(free)
    nodes = 0

    def descend(t: int, ent_sum: float, mass_max: float):
        nonlocal nodes, best_value, best_free_choice
        nodes += 1
        if nodes > node_budget:
            raise CapacityError(
                f"assignment search exceeded the node budget of {node_budget}; "
                "use static_cover_entropy_heuristic"
            )
        if t == len(free):
            if best_value - ent_sum > _TIE_EPS:
                best_value = ent_sum
                best_free_choice = current.copy()
            elif best_free_choice is None and ent_sum - best_value <= _TIE_EPS:
                best_value = min(best_value, ent_sum)
                best_free_choice = current.copy()
            return
        w = free[t]
        mu = float(measures[w])
        rest = float(suffix[t + 1])
        for b in elig.of(w):
            old = float(masses[b])
            new_sum = ent_sum - _term(old) + _term(old + mu)
            new_max = max(mass_max, old + mu)
            bound = new_sum - _term(new_max) + _term(new_max + rest)
            if bound - best_value > _TIE_EPS:
                continue
            masses[b] = old + mu
            current[t] = b
            descend(t + 1, new_sum, new_max)
            masses[b] = old

    descend(0, entropy_sum, float(masses.max()))
    assert best_free_choice is not None
    for t, w in enumerate(free):
        choice[w] = best_free_choice[t]
    assignment = Assignment(cover, depth, tuple(choice))
    final = _masses_for(choice, [], measures, elig.num_elements)
    return entropy_bits(final), assignment


def _local_search(elig, measures, choice, free, masses):
    """First-improvement single-word moves until no move lowers entropy."""
    improved = True
    passes = 0
    while improved and passes < 1000:
        improved = False
        passes += 1
        for w in free:
            mu = float(measures[w])
            a = choice[w]
            base_a = float(masses[a])
            for b in elig.of(w):
                if b == a:
                    continue
                base_b = float(masses[b])
                delta = (
                    _term(base_a - mu)
                    + _term(base_b + mu)
                    - _term(base_a)
                    - _term(base_b)
                )
                if delta < -1e-13:
                    masses[a] = base_a - mu
                    masses[b] = base_b + mu
                    choice[w] = b
                    a = b
                    base_a = float(masses[b])
                    improved = True
    return entropy_bits(masses)


def _search_heuristic(elig, measures, choice, free, base_masses, seed, restarts):
    order = sorted(free, key=lambda w: (-measures[w], w))
    outcomes = []
    for r in range(max(1, restarts)):
        masses = base_masses.copy()
        trial = list(choice)
        if r == 0:
            for w in order:
                b = max(elig.of(w), key=lambda e: (masses[e], -e))
                trial[w] = b
                masses[b] += measures[w]
        else:
            rng = np.random.default_rng(derive_seed(seed, f"assignment-restart-{r}"))
            for w in free:
                opts = elig.of(w)
                b = opts[int(rng.integers(len(opts)))]
                trial[w] = b
                masses[b] += measures[w]
        value = _local_search(elig, measures, trial, free, masses)
        outcomes.append((value, tuple(trial)))
    best_value, best_choice = outcomes[0]
    for value, trial in outcomes[1:]:
        if value < best_value - _TIE_EPS or (
            abs(value - best_value) <= _TIE_EPS and trial < best_choice
        ):
            best_value, best_choice = value, trial
    return best_value, list(best_choice)


def static_cover_entropy_heuristic(
    system: System,
    cover: Cover,
    depth: int | None = None,
    seed: int = 0,
    restarts: int = 1,
):
    """Upper bound on the exact value; equals it whenever the cover is a
    partition (every word is forced) and deterministically given the seed."""
    depth, elig, measures, choice, free = _setup(system, cover, depth)
    masses = _masses_for(choice, free, measures, elig.num_elements)
    if not free:
        return entropy_bits(masses), Assignment(cover, depth, tuple(choice))
    value, solved = _search_heuristic(elig, measures, choice, free, masses, seed, restarts)
    return value, Assignment(cover, depth, tuple(solved))


def heuristic_assignment_pool(
    system: System,
    cover: Cover,
    depth: int | None = None,
    seed: int = 0,
    restarts: int = 1,
):
    """Locally optimal assignments from the greedy start and each random
    restart, duplicates dropped; used to seed rate searches."""
    depth, elig, measures, choice, free = _setup(system, cover, depth)
    if not free:
        return [Assignment(cover, depth, tuple(choice))]
    masses = _masses_for(choice, free, measures, elig.num_elements)
    pool = []
    seen = set()
    for r in range(max(1, restarts)):
        _, solved = _search_heuristic(
            elig, measures, list(choice), free, masses.copy(), seed, restarts=1
        ) if r == 0 else _one_restart(elig, measures, list(choice), free, masses.copy(), seed, r)
        key = tuple(solved)
        if key not in seen:
            seen.add(key)
            pool.append(Assignment(cover, depth, key))
    return pool


def _one_restart(elig, measures, choice, free, masses, seed, r):
    rng = np.random.default_rng(derive_seed(seed, f"assignment-restart-{r}"))
    for w in free:
        opts = elig.of(w)
        b = opts[int(rng.integers(len(opts)))]
        choice[w] = b
        masses[b] += measures[w]
    value = _local_search(elig, measures, choice, free, masses)
    return value, list(choice)


def static_cover_entropy(
    system: System,
    cover: Cover,
    depth: int | None = None,
    exact_budget: int = DEFAULT_EXACT_WORD_BUDGET,
    node_budget: int = DEFAULT_NODE_BUDGET,
    seed: int = 0,
    restarts: int = 1,
):
    """Exact value when budgets allow, heuristic otherwise.

    Returns (bits, assignment, method) with method "exact" or "heuristic".
    """
    try:
        value, assignment = static_cover_entropy_exact(
            system, cover, depth, exact_budget=exact_budget, node_budget=node_budget
        )
        return value, assignment, "exact"
    except CapacityError:
        value, assignment = static_cover_entropy_heuristic(
            system, cover, depth, seed=seed, restarts=restarts
        )
        return value, assignment, "heuristic"


def enumerate_assignments(cover: Cover, depth: int, measures, limit: int):
    """All assignments that differ on positive-measure multi-covered words.

    Zero-measure words are pinned to their first eligible element (they
    cannot change any block mass). Raises CapacityError when the product
    of choice counts exceeds `limit`.
    """
    elig = _eligibility(cover, depth)
    choice = [e[0] for e in elig.table]
    free = [w for w in range(elig.num_words) if len(elig.of(w)) > 1 and measures[w] > 0.0]
    count = 1
    for w in free:
        count *= len(elig.of(w))
        if count > limit:
            raise CapacityError(
                f"assignment enumeration needs {count}+ candidates, over the limit of {limit}"
            )
    out = []

    def descend(t: int):
        if t == len(free):
            out.append(tuple(choice))
            return
        w = free[t]
        for b in elig.of(w):
            choice[w] = b
            descend(t + 1)
        choice[w] = elig.of(w)[0]

    descend(0)
    return out
