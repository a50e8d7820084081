"""Minimum number of cover elements needed to cover the space, exactly or
up to a set of measure less than epsilon.

Exact counts come from branch and bound: for full covers the search
branches on an uncovered cell with the fewest remaining coverers; for
partial covers it extends a chosen family one set at a time in order of
decreasing measure, pruning with prefix sums of set measures. The greedy
routine upper-bounds the exact count and is the fallback for instances
over budget.
"""

from __future__ import annotations

import heapq
import sys
from dataclasses import dataclass

import numpy as np

from .covers import Cover
from .errors import CapacityError
from .systems import System

DEFAULT_SET_BUDGET = 4096
DEFAULT_NODE_BUDGET = 10_000_000
_SLACK = 1e-12


@dataclass(frozen=True)
class CoverInstance:
    """Atoms with measures, element membership, and the coverage demand.

    epsilon = 0 demands a set-theoretic cover of every atom (including
    measure-zero ones); epsilon > 0 demands covered measure strictly
    above 1 - epsilon.
    """

    weights: np.ndarray
    sets: tuple
    epsilon: float

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1 or weights.size == 0:
            raise ValueError("weights must be a nonempty vector")
        if (weights < 0).any():
            raise ValueError("atom weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-10:
            raise ValueError(f"atom weights sum to {weights.sum()!r}, not 1")
        if not (0.0 <= self.epsilon < 1.0):
            raise ValueError("epsilon must lie in [0, 1)")
        sets = tuple(frozenset(int(a) for a in s) for s in self.sets)
        if not sets:
            raise ValueError("instance needs at least one set")
        covered = frozenset().union(*sets)
        if len(covered) != weights.size:
            missing = next(a for a in range(weights.size) if a not in covered)
            raise ValueError(f"atom {missing} is not covered by any set")
        for s in sets:
            if s and (min(s) < 0 or max(s) >= weights.size):
                raise ValueError("set contains an out-of-range atom index")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "sets", sets)

    @property
    def target(self) -> float:
        return 1.0 - self.epsilon

    @classmethod
    def from_cover(cls, system: System | None, cover: Cover, epsilon: float) -> "CoverInstance":
        """Instance over the cover's depth-d cells; uniform weights when no
        system is given (the count for epsilon = 0 never depends on them)."""
        num = cover.alphabet_size**cover.depth
        if system is None:
            weights = np.full(num, 1.0 / num)
        else:
            weights = system.cylinder_measures(cover.depth)
        return cls(weights, tuple(el.members for el in cover.elements), epsilon)


def covered_measure(instance: CoverInstance, chosen) -> float:
    atoms = frozenset().union(*(instance.sets[i] for i in chosen)) if chosen else frozenset()
    if not atoms:
        return 0.0
    idx = np.fromiter(atoms, dtype=np.int64, count=len(atoms))
    return float(instance.weights[idx].sum())


def _dedupe(sets):
    keep, seen = [], {}
    for i, s in enumerate(sets):
        if s not in seen:
            seen[s] = i
            keep.append(i)
    return keep


def _drop_dominated(indices, sets, cap: int = 2048):
    """Remove sets strictly contained in another surviving set."""
    if len(indices) > cap:
        return indices
    order = sorted(indices, key=lambda i: (-len(sets[i]), i))
    kept = []
    for i in order:
        if not any(sets[i] < sets[j] or (sets[i] == sets[j] and j < i) for j in kept):
            kept.append(i)
    return sorted(kept)


def _disjoint(indices, sets) -> bool:
    total = sum(len(sets[i]) for i in indices)
    union = frozenset().union(*(sets[i] for i in indices))
    return total == len(union)


def n_exact(
    instance: CoverInstance,
    set_budget: int = DEFAULT_SET_BUDGET,
    node_budget: int = DEFAULT_NODE_BUDGET,
):
    """Minimum family size with a witness, certified by exhausted search."""
    sets = instance.sets
    if len(sets) > set_budget:
        raise CapacityError(
            f"{len(sets)} sets exceed the exact budget of {set_budget}; use n_greedy"
        )
    indices = _dedupe(sets)
    indices = _drop_dominated(indices, sets)

    if _disjoint(indices, sets):
        return _exact_disjoint(instance, indices)
    # include chains can run as deep as the optimum family is large
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, len(sets) * 3 + 1000))
    try:
        if instance.epsilon == 0.0:
            return _exact_full(instance, indices, node_budget)
        return _exact_partial(instance, indices, node_budget)
    finally:
        sys.setrecursionlimit(limit)


def _exact_disjoint(instance: CoverInstance, indices):
    sets, weights = instance.sets, instance.weights
    if instance.epsilon == 0.0:
        chosen = sorted(i for i in indices if sets[i])
        return len(chosen), tuple(chosen)
    sizes = [(-float(sum(weights[a] for a in sets[i])), i) for i in indices]
    sizes.sort()
    covered = 0.0
    chosen = []
    for negw, i in sizes:
        chosen.append(i)
        covered -= negw
        if covered > instance.target:
            return len(chosen), tuple(sorted(chosen))
    raise AssertionError("disjoint instance failed to reach its target")


def _greedy_core(instance: CoverInstance, indices):
    """Lazy-heap greedy: marginal gains only shrink as atoms get covered,
    so a popped entry whose recomputed key still beats the next stale key
    is the true argmax."""
    sets, weights = instance.sets, instance.weights
    full = instance.epsilon == 0.0
    uncovered = set(range(weights.size))
    covered_w = 0.0
    chosen = []

    def key_of(i):
        gain_atoms = sets[i] & uncovered
        gain_w = float(sum(weights[a] for a in gain_atoms))
        return (-gain_w, -len(gain_atoms), i), gain_atoms, gain_w

    heap = []
    for i in indices:
        key, _, _ = key_of(i)
        heapq.heappush(heap, key)
    while True:
        if full:
            if not uncovered:
                break
        elif covered_w > instance.target:
            break
        while True:
            stale = heapq.heappop(heap)
            i = stale[2]
            fresh, gain_atoms, gain_w = key_of(i)
            if not heap or fresh <= heap[0]:
                break
            heapq.heappush(heap, fresh)
        chosen.append(i)
        uncovered -= gain_atoms
        covered_w += gain_w
    return chosen


def n_greedy(instance: CoverInstance):
    """Greedy upper bound: repeatedly take the set covering the most
    uncovered measure (lowest index on ties) until the demand is met."""
    chosen = _greedy_core(instance, range(len(instance.sets)))
    return len(chosen), tuple(sorted(chosen))


def _atom_greedy_full(sets, universe, candidates):
    """Greedy full cover by uncovered-cell count (ties by lower index)."""
    uncovered = set(universe)
    chosen = []
    pool = list(candidates)
    while uncovered:
        best = None
        for i in pool:
            gain = len(sets[i] & uncovered)
            if best is None or gain > best[0] or (gain == best[0] and i < best[1]):
                best = (gain, i)
        gain, pick = best
        if gain == 0:
            raise AssertionError("universe not coverable by candidates")
        chosen.append(pick)
        pool.remove(pick)
        uncovered -= sets[pick]
    return chosen


def _force_and_reduce(sets, indices):
    """Repeatedly include sets that uniquely cover some cell, then drop
    candidates dominated on the still-uncovered cells."""
    universe = frozenset().union(*(sets[i] for i in indices))
    uncovered = set(universe)
    candidates = list(indices)
    base = []
    changed = True
    while changed:
        changed = False
        coverers = {}
        for i in candidates:
            for a in sets[i] & uncovered:
                coverers.setdefault(a, []).append(i)
        forced = sorted({lst[0] for lst in coverers.values() if len(lst) == 1})
        if forced:
            changed = True
            for i in forced:
                if uncovered & sets[i]:
                    base.append(i)
                    uncovered -= sets[i]
            candidates = [i for i in candidates if i not in set(forced)]
        live = {}
        kept = []
        for i in candidates:
            core = sets[i] & uncovered
            if not core or core in live:
                continue
            live[core] = i
            kept.append(i)
        reduced = []
        cores = {i: sets[i] & uncovered for i in kept}
        order = sorted(kept, key=lambda i: (-len(cores[i]), i))
        for i in order:
            if not any(cores[i] < cores[j] for j in reduced):
                reduced.append(i)
        reduced.sort()
        if len(reduced) != len(candidates):
            changed = True
        candidates = reduced
    return sorted(base), candidates, uncovered


def _exact_full(instance: CoverInstance, indices, node_budget: int):
    sets = instance.sets
    base, candidates, uncovered_set = _force_and_reduce(sets, indices)
    if not uncovered_set:
        return len(base), tuple(base)

    num_atoms = instance.weights.size
    coverers = [[] for _ in range(num_atoms)]
    for i in candidates:
        for a in sets[i] & uncovered_set:
            coverers[a].append(i)

    greedy = _atom_greedy_full(sets, uncovered_set, candidates)
    best_count = len(base) + len(greedy)
    best_witness = tuple(sorted(base + greedy))

    available = {i: True for i in candidates}
    cover_count = [len(c) for c in coverers]
    covered = [a not in uncovered_set for a in range(num_atoms)]
    n_uncovered = len(uncovered_set)
    max_size = max(len(sets[i] & uncovered_set) for i in candidates)
    chosen = list(base)
    nodes = 0

    def include(i):
        nonlocal n_uncovered
        newly = []
        for a in sets[i]:
            if not covered[a]:
                covered[a] = True
                newly.append(a)
        n_uncovered -= len(newly)
        chosen.append(i)
        return newly

    def undo_include(i, newly):
        nonlocal n_uncovered
        for a in newly:
            covered[a] = False
        n_uncovered += len(newly)
        chosen.pop()

    def descend():
        nonlocal nodes, best_count, best_witness
        nodes += 1
        if nodes > node_budget:
            raise CapacityError(
                f"set-cover search exceeded the node budget of {node_budget}; use n_greedy"
            )
        if n_uncovered == 0:
            if len(chosen) < best_count:
                best_count = len(chosen)
                best_witness = tuple(sorted(chosen))
            return
        if len(chosen) + -(-n_uncovered // max_size) >= best_count:
            return
        pivot, pivot_count = -1, None
        for a in range(num_atoms):
            if not covered[a] and (pivot_count is None or cover_count[a] < pivot_count):
                pivot, pivot_count = a, cover_count[a]
                if pivot_count <= 1:
                    break
        if pivot_count == 0:
            return
        banned = []
        for i in coverers[pivot]:
            if not available[i]:
                continue
            newly = include(i)
            descend()
            undo_include(i, newly)
            available[i] = False
            for a in sets[i]:
                cover_count[a] -= 1
            banned.append(i)
        for i in banned:
            available[i] = True
            for a in sets[i]:
                cover_count[a] += 1

    descend()
    return best_count, best_witness


def _exact_partial(instance: CoverInstance, indices, node_budget: int):
    """Include/exclude branch and bound on the current max-gain set.

    The lower bound at each node resorts the live marginal gains and asks
    how many of the largest could even reach the missing measure, which
    stays valid because a family's joint gain never exceeds the sum of
    its members' current gains.
    """
    sets, weights = instance.sets, instance.weights
    target = instance.target
    live = list(indices)
    matrix = np.zeros((len(live), weights.size), dtype=np.float32)
    set_arrays = [np.fromiter(sets[i], dtype=np.int64, count=len(sets[i])) for i in live]
    for row, idx in enumerate(set_arrays):
        matrix[row, idx] = 1.0

    greedy = _greedy_core(instance, indices)
    best_count = len(greedy)
    best_witness = tuple(sorted(greedy))
    uncovered_w = weights.astype(np.float64).copy()
    available = np.ones(len(live), dtype=bool)
    gains = matrix @ uncovered_w  # refreshed from a saved copy on backtrack
    chosen = []
    nodes = 0

    def descend(covered_w: float):
        nonlocal nodes, best_count, best_witness, gains
        nodes += 1
        if nodes > node_budget:
            raise CapacityError(
                f"set-cover search exceeded the node budget of {node_budget}; use n_greedy"
            )
        needed = target - covered_w
        live_gains = np.where(available, gains, 0.0)
        order = np.argsort(-live_gains, kind="stable")
        take = 0.0
        extra = 0
        for row in order:
            g = float(live_gains[row])
            if g <= _SLACK:
                break
            extra += 1
            take += g
            if take > needed - _SLACK:
                break
        if take <= needed - _SLACK or len(chosen) + extra >= best_count:
            return
        pivot = int(order[0])
        gain = float(live_gains[pivot])

        # include branch: covering atoms shrinks other sets' gains
        idx = set_arrays[pivot]
        fresh = idx[uncovered_w[idx] > 0.0]
        saved_w = uncovered_w[fresh].copy()
        saved_gains = gains
        gains = gains - matrix[:, fresh] @ saved_w
        uncovered_w[fresh] = 0.0
        available[pivot] = False
        chosen.append(live[pivot])
        new_cov = covered_w + gain
        if new_cov > target:
            if len(chosen) < best_count:
                best_count = len(chosen)
                best_witness = tuple(sorted(chosen))
        else:
            descend(new_cov)
        chosen.pop()
        uncovered_w[fresh] = saved_w
        gains = saved_gains

        # exclude branch: the pivot stays masked for this whole subtree
        descend(covered_w)
        available[pivot] = True

    descend(0.0)
    return best_count, best_witness
