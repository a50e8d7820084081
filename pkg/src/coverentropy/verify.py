"""Randomized and exhaustive-small property suites behind `verify`.

Every suite draws its instances deterministically from the root seed via
labeled sub-seeds, so a rerun with the same seed reproduces the report
byte for byte. A failed property reports the first (smallest) failing
instance; generation ramps sizes upward so that instance is minimal-ish.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import log2

import numpy as np

from .assignment import (
    static_cover_entropy_exact,
    static_cover_entropy_heuristic,
)
from .combinatorics import (
    IntervalFamily,
    IntervalLevel,
    LevelDensities,
    binom_tail,
    check_separated,
    extract_separated,
    extraction_slacks,
    hypothesis_report,
    is_word_packed,
    packing_census,
)
from .covers import (
    Cover,
    Partition,
    WordSet,
    block_cover,
    dyn_join,
    full_word_set,
    join,
    lift_depth,
    pullback,
    refines,
)
from .errors import CapacityError
from .estimators import h_c_trace, h_minus_trace
from .seeding import derive_seed
from .setcover import CoverInstance, covered_measure, n_exact, n_greedy
from .systems import MarkovSystem, MixtureSystem, block_system, set_measure

SUITE_NAMES = ("cover-algebra", "assignment", "setcover", "combinatorics", "estimators")


# ---------------------------------------------------------------------------
# instance generators


def random_system(rng: np.random.Generator, alphabet_size: int) -> MarkovSystem:
    P = rng.random((alphabet_size, alphabet_size)) + 0.05
    P /= P.sum(axis=1, keepdims=True)
    return MarkovSystem.from_matrix(P)


def random_cover(
    rng: np.random.Generator, alphabet_size: int, depth: int, max_elements: int = 4
) -> Cover:
    num = alphabet_size**depth
    m = int(rng.integers(2, max_elements + 1))
    owner = rng.integers(0, m, size=num)
    members = [set(map(int, np.flatnonzero(owner == i))) for i in range(m)]
    extra = rng.random((num, m)) < 0.3
    for w in range(num):
        for i in range(m):
            if extra[w, i]:
                members[i].add(w)
    elements = [
        WordSet(alphabet_size, depth, frozenset(s)) for s in members if s
    ]
    return Cover(tuple(elements))


def random_partition(
    rng: np.random.Generator, alphabet_size: int, depth: int, max_blocks: int = 4
) -> Partition:
    num = alphabet_size**depth
    m = int(rng.integers(2, max_blocks + 1))
    owner = rng.integers(0, m, size=num)
    blocks = [set(map(int, np.flatnonzero(owner == i))) for i in range(m)]
    elements = [WordSet(alphabet_size, depth, frozenset(b)) for b in blocks if b]
    if len(elements) == 1:
        half = sorted(elements[0].members)
        elements = [
            WordSet(alphabet_size, depth, frozenset(half[: num // 2])),
            WordSet(alphabet_size, depth, frozenset(half[num // 2 :])),
        ]
    return Partition(tuple(elements))


def split_cover(rng: np.random.Generator, cover: Cover) -> Cover:
    """A cover refining the input, made by splitting elements in two."""
    elements = []
    for el in cover.elements:
        words = sorted(el.members)
        if len(words) >= 2 and rng.random() < 0.7:
            cut = int(rng.integers(1, len(words)))
            perm = rng.permutation(len(words))
            part = {words[i] for i in perm[:cut]}
            elements.append(WordSet(cover.alphabet_size, cover.depth, frozenset(part)))
            elements.append(
                WordSet(cover.alphabet_size, cover.depth, frozenset(set(words) - part))
            )
        else:
            elements.append(el)
    return Cover(tuple(elements))


def periodic_interval_family(
    seed: int,
    horizon: int = 100_000,
    lengths=(10, 300, 9000),
    densities=(0.5, 0.5, 0.5),
    epsilon: float = 0.05,
) -> IntervalFamily:
    """Equally spaced intervals with seeded phases, resampled per level
    until the per-level covered fraction sits safely inside epsilon."""
    rng = np.random.default_rng(derive_seed(seed, "interval-family"))
    eta = 1.0 / horizon
    levels = []
    for length, lam in zip(lengths, densities):
        period = int(round(length / lam))
        starts = None
        for _ in range(200):
            phase = int(rng.integers(0, period))
            trial = tuple(range(phase, horizon - length + 1, period))
            frac = len(trial) * length / horizon
            if trial and abs(frac - lam) < 0.9 * epsilon:
                starts = trial
                break
        if starts is None:
            raise RuntimeError("could not place a periodic level inside epsilon")
        levels.append(IntervalLevel(length, starts, lam, eta))
    family = IntervalFamily(horizon, tuple(levels), epsilon)
    if hypothesis_report(family):
        raise RuntimeError("periodic family unexpectedly violates the hypotheses")
    return family


# ---------------------------------------------------------------------------
# property framework


@dataclass(frozen=True)
class PropertyResult:
    suite: str
    name: str
    checked: int
    failure: str | None

    @property
    def passed(self) -> bool:
        return self.failure is None


def _run_property(suite, name, seed, count, case):
    """Run `case(rng, i)` for i < count; case returns None or a failure text."""
    for i in range(count):
        rng = np.random.default_rng(derive_seed(seed, f"{suite}/{name}/{i}"))
        try:
            failure = case(rng, i)
        except Exception as exc:  # a crash is a failure with the instance index
            failure = f"instance {i}: raised {type(exc).__name__}: {exc}"
        if failure:
            return PropertyResult(suite, name, i + 1, failure)
    return PropertyResult(suite, name, count, None)


def _cover_shape(i: int):
    alphabet = 2 + (i % 2)
    depth = 1 + ((i // 2) % 2)
    return alphabet, depth


# ---------------------------------------------------------------------------
# cover-algebra


def _prop_measure_consistency(rng, i):
    alphabet, depth = _cover_shape(i)
    system = random_system(rng, alphabet)
    total = float(system.cylinder_measures(depth + 2).sum())
    if abs(total - 1.0) > 1e-10:
        return f"instance {i}: depth-{depth + 2} measures sum to {total}"
    word = tuple(int(x) for x in rng.integers(0, alphabet, size=depth))
    left = set_measure(system, [(a,) + word for a in range(alphabet)])
    right = set_measure(system, [word + (b,) for b in range(alphabet)])
    mid = set_measure(system, [word])
    if abs(left - mid) > 1e-10 or abs(right - mid) > 1e-10:
        return f"instance {i}: shift invariance broke on word {word}"
    mix = MixtureSystem((system, random_system(rng, alphabet)), np.array([0.3, 0.7]))
    ws = random_cover(rng, alphabet, depth).elements[0]
    direct = ws.measure(mix)
    weighted = 0.3 * ws.measure(mix.components[0]) + 0.7 * ws.measure(mix.components[1])
    if abs(direct - weighted) > 1e-12:
        return f"instance {i}: mixture linearity broke on {ws.strings()}"
    return None


def _prop_join_laws(rng, i):
    alphabet, depth = _cover_shape(i)
    U = random_cover(rng, alphabet, depth)
    V = random_cover(rng, alphabet, depth)
    W = random_cover(rng, alphabet, depth)
    J = join(U, V)
    if not (refines(J, U) and refines(J, V)):
        return f"instance {i}: join does not refine both inputs"
    if join(U, V).element_sets() != join(V, U).element_sets():
        return f"instance {i}: join is not commutative"
    if join(join(U, V), W).element_sets() != join(U, join(V, W)).element_sets():
        return f"instance {i}: join is not associative"
    trivial = Cover((full_word_set(alphabet, depth),))
    if join(U, trivial).element_sets() != U.element_sets():
        return f"instance {i}: trivial cover is not a join identity"
    if not refines(U, U) or not refines(U, trivial):
        return f"instance {i}: refinement sanity broke"
    return None


def _prop_dyn_join_composition(rng, i):
    alphabet = 2 + (i % 2)
    U = random_cover(rng, alphabet, 1, max_elements=3)
    n, m = 1 + (i % 2), 1 + ((i // 2) % 2)
    whole, _ = dyn_join(U, n + m)
    left, _ = dyn_join(U, n)
    right, _ = dyn_join(U, m)
    lifted = lift_depth(left, n + m + U.depth - 1)
    shifted = pullback(right, n)
    if join(lifted, shifted).element_sets() != whole.element_sets():
        return f"instance {i}: join of shifted joins mismatch at n={n}, m={m}"
    return None


def _prop_partition_closure(rng, i):
    alphabet, depth = _cover_shape(i)
    P = random_partition(rng, alphabet, depth)
    Q = random_partition(rng, alphabet, depth)
    if not join(P, Q).is_partition():
        return f"instance {i}: join of partitions is not a partition"
    joined, _ = dyn_join(P, 2)
    if not isinstance(joined, Partition) or not joined.is_partition():
        return f"instance {i}: dynamical join of a partition is not a partition"
    return None


def _prop_pullback_and_lift_measures(rng, i):
    alphabet, depth = _cover_shape(i)
    system = random_system(rng, alphabet)
    U = random_cover(rng, alphabet, depth)
    k = 1 + (i % 2)
    for el, back in zip(U.elements, pullback(U, k).elements):
        if abs(el.measure(system) - back.measure(system)) > 1e-10:
            return f"instance {i}: pullback changed a measure"
    for el, up in zip(U.elements, lift_depth(U, depth + 1).elements):
        if abs(el.measure(system) - up.measure(system)) > 1e-10:
            return f"instance {i}: lift changed a measure"
    return None


# ---------------------------------------------------------------------------
# assignment


def _exact_bits(system, cover, depth=None):
    value, _ = static_cover_entropy_exact(system, cover, depth, exact_budget=24)
    return value


def _prop_refinement_monotone(rng, i):
    alphabet, depth = _cover_shape(i)
    system = random_system(rng, alphabet)
    V = random_cover(rng, alphabet, depth, max_elements=3)
    U = split_cover(rng, V)
    if _exact_bits(system, U) < _exact_bits(system, V) - 1e-9:
        return f"instance {i}: refinement lowered the static entropy"
    return None


def _prop_join_subadditive(rng, i):
    alphabet, depth = _cover_shape(i)
    system = random_system(rng, alphabet)
    U = random_cover(rng, alphabet, depth, max_elements=3)
    V = random_cover(rng, alphabet, depth, max_elements=3)
    if _exact_bits(system, join(U, V)) > _exact_bits(system, U) + _exact_bits(system, V) + 1e-9:
        return f"instance {i}: join entropy exceeded the sum"
    return None


def _prop_pullback_invariant(rng, i):
    alphabet, depth = _cover_shape(i)
    system = random_system(rng, alphabet)
    U = random_cover(rng, alphabet, depth, max_elements=3)
    if abs(_exact_bits(system, pullback(U, 1)) - _exact_bits(system, U)) > 1e-9:
        return f"instance {i}: pullback changed the static entropy"
    return None


def _prop_heuristic_bounds(rng, i):
    alphabet, depth = _cover_shape(i)
    system = random_system(rng, alphabet)
    U = random_cover(rng, alphabet, depth, max_elements=3)
    exact = _exact_bits(system, U)
    measures = system.cylinder_measures(U.depth)
    multi = _count_free_words(U, measures)
    heur, _ = static_cover_entropy_heuristic(system, U, seed=i, restarts=2)
    if heur < exact - 1e-9:
        return f"instance {i}: heuristic beat the exact optimum"
    if multi <= 6 and heur > exact + 1e-9:
        return f"instance {i}: heuristic missed the optimum with {multi} free words"
    return None


def _count_free_words(cover: Cover, measures) -> int:
    import collections

    containing = collections.Counter()
    distinct = {el.members for el in cover.elements}
    for members in distinct:
        for w in members:
            containing[w] += 1
    return sum(1 for w, c in containing.items() if c > 1 and measures[w] > 0)


def _prop_deepening(rng, i):
    alphabet, depth = _cover_shape(i)
    system = random_system(rng, alphabet)
    U = random_cover(rng, alphabet, depth, max_elements=3)
    if _exact_bits(system, U, U.depth + 1) > _exact_bits(system, U) + 1e-9:
        return f"instance {i}: deeper assignments increased the optimum"
    return None


# ---------------------------------------------------------------------------
# setcover


def _setcover_instance(rng, i, n=2):
    alphabet, depth = _cover_shape(i)
    system = random_system(rng, alphabet)
    U = random_cover(rng, alphabet, depth, max_elements=3)
    joined, _ = dyn_join(U, n)
    return system, joined


def _prop_epsilon_monotone(rng, i):
    system, joined = _setcover_instance(rng, i)
    counts = []
    for eps in (0.0, 0.1, 0.25, 0.5):
        inst = CoverInstance.from_cover(system, joined, eps)
        counts.append(n_exact(inst)[0])
    if any(a < b for a, b in zip(counts, counts[1:])):
        return f"instance {i}: counts {counts} increase with epsilon"
    return None


def _prop_witness_valid(rng, i):
    system, joined = _setcover_instance(rng, i)
    for eps in (0.0, 0.25):
        inst = CoverInstance.from_cover(system, joined, eps)
        count, witness = n_exact(inst)
        if len(witness) != count:
            return f"instance {i}: witness size disagrees with the count"
        if eps == 0.0:
            union = frozenset().union(*(inst.sets[j] for j in witness))
            if len(union) != inst.weights.size:
                return f"instance {i}: full-cover witness leaves atoms uncovered"
        elif covered_measure(inst, witness) <= inst.target:
            return f"instance {i}: witness does not exceed the target"
    return None


def _prop_exact_le_greedy(rng, i):
    system, joined = _setcover_instance(rng, i)
    for eps in (0.0, 0.25):
        inst = CoverInstance.from_cover(system, joined, eps)
        exact_count, _ = n_exact(inst)
        greedy_count, greedy_witness = n_greedy(inst)
        if exact_count > greedy_count:
            return f"instance {i}: exact {exact_count} above greedy {greedy_count}"
        if eps and covered_measure(inst, greedy_witness) <= inst.target:
            return f"instance {i}: greedy witness invalid"
    return None


def _prop_greedy_within_one_exhaustive(rng, i):
    subsets = [frozenset(s) for r in range(1, 5) for s in itertools.combinations(range(4), r)]
    combos = itertools.product(range(len(subsets)), repeat=3)
    picked = list(itertools.islice(combos, i * 7, i * 7 + 7))
    weights = np.full(4, 0.25)
    for combo in picked:
        sets = [subsets[j] for j in combo]
        if len(frozenset().union(*sets)) != 4:
            continue
        for eps in (0.0, 0.3):
            inst = CoverInstance(weights, tuple(sets), eps)
            exact_count, _ = n_exact(inst)
            greedy_count, _ = n_greedy(inst)
            if greedy_count > exact_count + 1:
                return f"sets {sets}, eps {eps}: greedy {greedy_count} vs exact {exact_count}"
    return None


# ---------------------------------------------------------------------------
# combinatorics


def _prop_density_products(rng, i):
    l = 2 + (i % 5)
    dens = LevelDensities(tuple(float(x) for x in rng.uniform(0.05, 0.95, size=l)))
    for j in range(1, l):
        total = sum(dens.densities[r - 1] * dens.leftover(r + 1) for r in range(j + 1, l + 1))
        if abs(total - (1.0 - dens.leftover(j + 1))) > 1e-12:
            return f"instance {i}: telescoped sum broke at level {j}"
    head = sum(dens.densities[r - 1] * dens.leftover(r + 1) for r in range(1, l + 1))
    if abs(head - dens.reachable_fraction) > 1e-12:
        return f"instance {i}: full telescoped sum misses the reachable fraction"
    return None


def _prop_extraction(rng, i):
    family = periodic_interval_family(
        derive_seed(1234, f"verify-extract-{i}"),
        horizon=40_000,
        lengths=(10, 240, 3600),
    )
    result = extract_separated(family)
    if result.warnings:
        return f"instance {i}: generated family violates hypotheses: {result.warnings[0]}"
    spans = []
    for sel, lvl in zip(result.selected, family.levels):
        spans.extend((s, s + lvl.length) for s in sel)
    if not check_separated(spans):
        return f"instance {i}: extraction output is not separated"
    dens = family.densities()
    for j, (sel, lvl, slack) in enumerate(
        zip(result.selected, family.levels, result.level_slacks), start=1
    ):
        got = len(sel) * lvl.length / family.horizon
        want = lvl.density * dens.leftover(j + 1)
        if abs(got - want) > slack:
            return f"instance {i}: level {j} density {got:.4f} misses {want:.4f} by more than {slack:.4f}"
    if abs(result.covered_fraction - dens.reachable_fraction) > result.total_slack:
        return f"instance {i}: coverage {result.covered_fraction:.4f} outside the slack"
    return None


def _prop_slack_limit(rng, i):
    values = []
    for t in range(1, 7):
        eps = 0.2 / 2**t
        n1 = 10 * 2**t
        ratio = 50 * 2**t
        lengths = (n1, n1 * ratio, n1 * ratio * ratio)
        etas = tuple(1.0 / (length * 8**t) for length in lengths)
        _, total = extraction_slacks(lengths, etas, eps)
        values.append(total)
    if any(b > a + 1e-12 for a, b in zip(values, values[1:])):
        return f"slack sequence is not decreasing: {values}"
    if values[-1] > 0.05:
        return f"slack sequence stalls at {values[-1]}"
    return None


def _prop_binom_grid(rng, i):
    K = int(rng.integers(4, 65))
    delta = float(rng.uniform(0.01, 0.499))
    exact, bound = binom_tail(K, delta)
    if exact > bound:
        return f"K={K}, delta={delta}: tail {exact} above bound {bound}"
    return None


def _prop_census_bound(rng, i):
    alphabet = 2
    n = 1 + (i % 2)
    k = int(rng.integers(n + 1, 9))
    delta = float(rng.uniform(0.05, 0.49))
    raw = rng.random(alphabet**n) + 0.05
    raw /= raw.sum()
    mu = {}
    for idx, p in enumerate(raw):
        block = []
        v = idx
        for _ in range(n):
            v, s = divmod(v, alphabet)
            block.append(s)
        mu[tuple(reversed(block))] = float(p)
    count, bound = packing_census(alphabet, n, k, delta, mu)
    if count > bound:
        return f"n={n}, k={k}, delta={delta:.3f}: count {count} above bound {bound}"
    brute = 0
    for widx in range(alphabet**k):
        word = []
        v = widx
        for _ in range(k):
            v, s = divmod(v, alphabet)
            word.append(s)
        packed, _ = is_word_packed(tuple(reversed(word)), n, delta, mu)
        brute += packed
    if brute != count:
        return f"n={n}, k={k}: census {count} disagrees with the per-word sweep {brute}"
    return None


# ---------------------------------------------------------------------------
# estimators


def _prop_chain_per_n(rng, i):
    alphabet, depth = _cover_shape(i)
    system = random_system(rng, alphabet)
    U = random_cover(rng, alphabet, depth, max_elements=3)
    for n in (1, 2, 3):
        joined, _ = dyn_join(U, n)
        try:
            bits, _ = static_cover_entropy_exact(system, joined, exact_budget=24)
        except CapacityError:
            continue
        count, _ = n_exact(CoverInstance.from_cover(system, joined, 0.0))
        if bits > log2(count) + 1e-9:
            return f"instance {i}: H {bits:.6f} above log2 N {log2(count):.6f} at n={n}"
    return None


def _prop_trace_subadditive(rng, i):
    alphabet = 2 + (i % 2)
    system = random_system(rng, alphabet)
    U = random_cover(rng, alphabet, 1, max_elements=3)
    H = {}
    logN = {}
    for n in (1, 2, 3, 4):
        joined, _ = dyn_join(U, n)
        try:
            H[n], _ = static_cover_entropy_exact(system, joined, exact_budget=24)
        except CapacityError:
            pass
        logN[n] = log2(n_exact(CoverInstance.from_cover(None, joined, 0.0))[0])
    for n in (1, 2):
        for m in (1, 2):
            if n + m in H and n in H and m in H and H[n + m] > H[n] + H[m] + 1e-9:
                return f"instance {i}: H subadditivity broke at ({n},{m})"
            if logN[n + m] > logN[n] + logN[m] + 1e-9:
                return f"instance {i}: log N subadditivity broke at ({n},{m})"
    return None


def _prop_blocked_consistency(rng, i):
    alphabet = 2
    system = random_system(rng, alphabet)
    U = random_cover(rng, alphabet, 1, max_elements=3)
    m = 2
    base = h_minus_trace(system, U, 4, seed=i)
    joined, _ = dyn_join(U, m)
    blocked_cover = block_cover(joined, m)
    blocked = h_minus_trace(block_system(system, m), blocked_cover, 2, seed=i)
    for n in (1, 2):
        if all(r.method == "exact" for r in (blocked.records[n - 1], base.records[m * n - 1])):
            lhs = blocked.records[n - 1].value_bits
            rhs = m * base.records[m * n - 1].value_bits
            if abs(lhs - rhs) > 1e-9:
                return f"instance {i}: blocked value {lhs:.9f} vs scaled base {rhs:.9f} at n={n}"
    return None


def _prop_partition_consistency(rng, i):
    alphabet = 2 + (i % 2)
    system = random_system(rng, alphabet)
    part = Partition(
        tuple(WordSet(alphabet, 1, frozenset([a])) for a in range(alphabet))
    )
    rate = system.entropy_rate()
    first = -float(
        np.sum(system.stationary * np.log2(np.where(system.stationary > 0, system.stationary, 1)))
    )
    trace = h_minus_trace(system, part, 5)
    for r in trace.records:
        want = rate + (first - rate) / r.n
        if r.method != "exact" or abs(r.value_bits - want) > 1e-9:
            return f"instance {i}: partition trace value {r.value_bits:.9f} vs {want:.9f} at n={r.n}"
    hc = h_c_trace(part, 4)
    for r in hc.records:
        if abs(r.value_bits - log2(alphabet)) > 1e-12:
            return f"instance {i}: full-shift count rate {r.value_bits} at n={r.n}"
    return None


# ---------------------------------------------------------------------------
# registry and runner

SUITES = {
    "cover-algebra": (
        ("measure_consistency", _prop_measure_consistency),
        ("join_laws", _prop_join_laws),
        ("dyn_join_composition", _prop_dyn_join_composition),
        ("partition_closure", _prop_partition_closure),
        ("pullback_lift_measures", _prop_pullback_and_lift_measures),
    ),
    "assignment": (
        ("refinement_monotone", _prop_refinement_monotone),
        ("join_subadditive", _prop_join_subadditive),
        ("pullback_invariant", _prop_pullback_invariant),
        ("heuristic_bounds", _prop_heuristic_bounds),
        ("deepening_never_hurts", _prop_deepening),
    ),
    "setcover": (
        ("epsilon_monotone", _prop_epsilon_monotone),
        ("witness_valid", _prop_witness_valid),
        ("exact_le_greedy", _prop_exact_le_greedy),
        ("greedy_within_one_exhaustive", _prop_greedy_within_one_exhaustive),
    ),
    "combinatorics": (
        ("density_products", _prop_density_products),
        ("extraction", _prop_extraction),
        ("slack_limit", _prop_slack_limit),
        ("binom_grid", _prop_binom_grid),
        ("census_bound", _prop_census_bound),
    ),
    "estimators": (
        ("chain_per_n", _prop_chain_per_n),
        ("trace_subadditive", _prop_trace_subadditive),
        ("blocked_consistency", _prop_blocked_consistency),
        ("partition_consistency", _prop_partition_consistency),
    ),
}

_EXPENSIVE = {
    "extraction": 12,
    "census_bound": 20,
    "slack_limit": 1,
    "blocked_consistency": 20,
    "chain_per_n": 60,
    "trace_subadditive": 40,
    "greedy_within_one_exhaustive": 60,
    "partition_consistency": 30,
}


def run_suite(suite: str, seed: int, instances: int):
    """Results for one suite (or all), deterministic in (seed, instances)."""
    names = SUITE_NAMES if suite == "all" else (suite,)
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from {SUITE_NAMES + ('all',)}")
    results = []
    for name in names:
        for prop_name, prop in SUITES[name]:
            count = min(instances, _EXPENSIVE.get(prop_name, instances))
            results.append(_run_property(name, prop_name, seed, count, prop))
    return results


def render_report(results, suite: str, seed: int, instances: int) -> str:
    lines = [f"verify suite={suite} seed={seed} instances={instances}"]
    failures = 0
    for r in results:
        if r.passed:
            lines.append(f"PASS {r.suite}/{r.name} checked={r.checked}")
        else:
            failures += 1
            lines.append(f"FAIL {r.suite}/{r.name} checked={r.checked} :: {r.failure}")
    lines.append(
        f"RESULT {'PASS' if failures == 0 else 'FAIL'} "
        f"({len(results)} properties, {failures} failures)"
    )
    return "\n".join(lines) + "\n"
