import math

import numpy as np
import pytest

from coverentropy import (
    Budgets,
    CapacityError,
    Cover,
    EntropyTrace,
    MarkovSystem,
    MixtureSystem,
    Partition,
    TraceRecord,
    TraceTruncated,
    WordSet,
    block_cover,
    block_system,
    decompose,
    dyn_join,
    full_word_set,
    h_c_trace,
    h_e_trace,
    h_minus_trace,
    h_plus_trace,
    read_trace_csv,
    write_trace_csv,
)
from coverentropy.verify import random_cover, random_system

from oracles import entropy as brute_entropy
from oracles import markov_entropy_rate


def trivial_cover(alphabet, depth=1):
    return Cover((full_word_set(alphabet, depth),))


def test_h_minus_trivial_cover_is_zero(fair_coin):
    trace = h_minus_trace(fair_coin, trivial_cover(2), 5)
    assert trace.values() == (0.0,) * 5
    assert trace.extrapolated == 0.0
    assert trace.monotone


def test_h_minus_fair_coin_partition(fair_coin, binary_partition):
    trace = h_minus_trace(fair_coin, binary_partition, 8)
    assert all(v == pytest.approx(1.0, abs=1e-12) for v in trace.values())
    assert all(m == "exact" for m in trace.methods())
    assert trace.extrapolated == pytest.approx(1.0, abs=1e-12)


def test_h_minus_markov_decreases_to_rate(sticky_chain, binary_partition):
    trace = h_minus_trace(sticky_chain, binary_partition, 10)
    rate = markov_entropy_rate(
        sticky_chain.transition.tolist(), sticky_chain.stationary.tolist()
    )
    first = brute_entropy(sticky_chain.stationary.tolist())
    values = trace.values()
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    for n, v in enumerate(values, start=1):
        assert v == pytest.approx(rate + (first - rate) / n, abs=1e-9)
    assert trace.running_infimum()[-1] == pytest.approx(values[-1])


def test_h_minus_subadditive_exact_records(fair_coin, overlap_cover):
    trace = h_minus_trace(fair_coin, overlap_cover, 3, budgets=Budgets(exact_words=24))
    values = trace.values()
    assert all(m == "exact" for m in trace.methods())
    # n * value_n is subadditive on the exact prefix
    H = {n: n * v for n, v in zip((1, 2, 3), values)}
    assert H[2] <= 2 * H[1] + 1e-9
    assert H[3] <= H[1] + H[2] + 1e-9


def test_h_plus_cover_with_whole_space(fair_coin):
    U = Cover((WordSet.from_strings(2, ["0", "1"]), WordSet.from_strings(2, ["1"])))
    trace = h_plus_trace(fair_coin, U, 4)
    assert trace.values() == (0.0,) * 4


def test_h_plus_partition_is_conditional_rate(sticky_chain, binary_partition):
    trace = h_plus_trace(sticky_chain, binary_partition, 6)
    rate = sticky_chain.entropy_rate()
    assert trace.values()[0] == pytest.approx(
        brute_entropy(sticky_chain.stationary.tolist()), abs=1e-9
    )
    for v in trace.values()[1:]:
        assert v == pytest.approx(rate, abs=1e-9)
    assert trace.monotone


def test_h_plus_overlap_upper_bounds_h_minus(fair_coin, overlap_cover):
    plus = h_plus_trace(fair_coin, overlap_cover, 6, depth=2)
    minus = h_minus_trace(fair_coin, overlap_cover, 6, budgets=Budgets(exact_words=24))
    for p, m in zip(plus.values(), minus.values()):
        assert p >= m - 1e-9
    assert plus.records[0].value_bits == pytest.approx(0.811278124, abs=1e-9)
    assert plus.records[-1].alt_value_bits >= plus.records[-1].value_bits - 1e-9


def test_h_e_trivial_and_epsilon_validation(fair_coin):
    trace = h_e_trace(fair_coin, trivial_cover(2), 0.25, 4)
    assert trace.values() == (0.0,) * 4
    with pytest.raises(ValueError, match="epsilon"):
        h_e_trace(fair_coin, trivial_cover(2), 0.0, 4)


def test_h_e_fair_coin_partition_count(fair_coin, binary_partition):
    trace = h_e_trace(fair_coin, binary_partition, 0.25, 12)
    # equal atoms: need strictly more than 3/4 of 4096 cells
    assert trace.values()[-1] == pytest.approx(math.log2(3073) / 12, abs=1e-12)
    assert trace.records[-1].epsilon == 0.25


def test_h_e_epsilon_traces_approach(fair_coin, binary_partition):
    lo = h_e_trace(fair_coin, binary_partition, 0.1, 12)
    hi = h_e_trace(fair_coin, binary_partition, 0.5, 12)
    gaps = [a - b for a, b in zip(lo.values(), hi.values())]
    assert all(g >= -1e-12 for g in gaps)
    assert gaps[-1] < 0.08


def test_h_c_full_shift_value(binary_partition):
    trace = h_c_trace(binary_partition, 8)
    assert all(v == pytest.approx(1.0, abs=1e-12) for v in trace.values())
    tri = Partition(
        tuple(WordSet.from_strings(3, [str(a)]) for a in range(3))
    )
    trace3 = h_c_trace(tri, 6)
    assert all(v == pytest.approx(math.log2(3), abs=1e-12) for v in trace3.values())


def test_h_c_trivial_cover():
    trace = h_c_trace(trivial_cover(2), 5)
    assert trace.values() == (0.0,) * 5


def test_h_c_overlap_counts(fair_coin, overlap_cover):
    trace = h_c_trace(overlap_cover, 6)
    assert all(m == "exact" for m in trace.methods())
    counts = [round(2 ** (n * v)) for n, v in zip(range(1, 7), trace.values())]
    # full cover needs both elements at n=1 (neither contains everything)
    assert counts[0] == 2
    assert all(a <= b for a, b in zip(counts, counts[1:]))
    # log-subadditivity of the exact counts
    logs = [n * v for n, v in zip(range(1, 7), trace.values())]
    for n in range(1, 4):
        for m in range(1, 4):
            assert logs[n + m - 1] <= logs[n - 1] + logs[m - 1] + 1e-9


def test_chain_h_le_log_n(fair_coin, overlap_cover):
    from coverentropy import CoverInstance, n_exact, static_cover_entropy_exact

    for n in (1, 2, 3):
        joined, _ = dyn_join(overlap_cover, n)
        bits, _ = static_cover_entropy_exact(fair_coin, joined, exact_budget=24)
        count, _ = n_exact(CoverInstance.from_cover(fair_coin, joined, 0.0))
        assert bits <= math.log2(count) + 1e-9


def test_blocked_system_identity():
    rng = np.random.default_rng(51)
    for _ in range(5):
        system = random_system(rng, 2)
        U = random_cover(rng, 2, 1, max_elements=3)
        m = 2
        base = h_minus_trace(system, U, 4, budgets=Budgets(exact_words=24))
        joined, _ = dyn_join(U, m)
        blocked = h_minus_trace(
            block_system(system, m), block_cover(joined, m), 2,
            budgets=Budgets(exact_words=24),
        )
        for n in (1, 2):
            if (
                blocked.records[n - 1].method == "exact"
                and base.records[m * n - 1].method == "exact"
            ):
                assert blocked.records[n - 1].value_bits == pytest.approx(
                    m * base.records[m * n - 1].value_bits, abs=1e-9
                )


def test_decompose_trivial_gaps(fair_coin, binary_partition):
    single = MixtureSystem((fair_coin,), np.array([1.0]))
    assert decompose(single, binary_partition, 3, "h_minus").gap_bits == 0.0
    double = MixtureSystem((fair_coin, fair_coin), np.array([0.5, 0.5]))
    assert decompose(double, binary_partition, 3, "h_minus").gap_bits == 0.0


def test_decompose_bernoulli_mixture(binary_partition):
    mix = MixtureSystem(
        (MarkovSystem.bernoulli([0.5, 0.5]), MarkovSystem.bernoulli([0.9, 0.1])),
        np.array([0.5, 0.5]),
    )
    gaps = [decompose(mix, binary_partition, n, "h_minus") for n in (4, 8, 12)]
    assert gaps[0].weighted_bits == pytest.approx(0.7344978, abs=1e-6)
    assert gaps[0].gap_bits > gaps[1].gap_bits > gaps[2].gap_bits > 0
    assert gaps[2].gap_bits < 0.08
    plus = decompose(mix, binary_partition, 3, "h_plus")
    assert plus.gap_bits >= -1e-9


def test_decompose_validation(fair_coin, binary_partition):
    with pytest.raises(ValueError, match="Mixture"):
        decompose(fair_coin, binary_partition, 3, "h_minus")
    mix = MixtureSystem((fair_coin,), np.array([1.0]))
    with pytest.raises(ValueError, match="notion"):
        decompose(mix, binary_partition, 3, "h_e")


def test_trace_truncation_carries_partial_records(fair_coin, overlap_cover):
    with pytest.raises(TraceTruncated) as info:
        h_minus_trace(fair_coin, overlap_cover, 10, budgets=Budgets(names=16))
    exc = info.value
    assert exc.failed_n == 5  # 2**5 candidate names exceed a budget of 16
    assert [r.n for r in exc.records] == [1, 2, 3, 4]


def test_trace_csv_roundtrip(tmp_path, fair_coin, binary_partition):
    trace = h_e_trace(fair_coin, binary_partition, 0.25, 4)
    path = tmp_path / "trace.csv"
    write_trace_csv(path, trace)
    notion, records, truncated = read_trace_csv(path)
    assert notion == "h_e"
    assert truncated is None
    assert len(records) == 4
    for got, want in zip(records, trace.records):
        assert got.n == want.n
        assert got.method == want.method
        assert got.epsilon == want.epsilon
        assert got.value_bits == pytest.approx(want.value_bits, abs=1e-8)
    write_trace_csv(path, trace.records[:2], notion="h_e", truncated_at=3)
    notion2, records2, truncated2 = read_trace_csv(path)
    assert truncated2 == 3
    assert len(records2) == 2


def test_trace_validation():
    with pytest.raises(ValueError, match="notion"):
        EntropyTrace("h_top", (), 0.0, True)
    with pytest.raises(ValueError, match="increasing"):
        EntropyTrace(
            "h_c",
            (TraceRecord(2, 1.0, "exact"), TraceRecord(1, 1.0, "exact")),
            1.0,
            True,
        )


def test_threads_do_not_change_traces(sticky_chain, binary_partition):
    one = h_minus_trace(sticky_chain, binary_partition, 6, threads=1)
    four = h_minus_trace(sticky_chain, binary_partition, 6, threads=4)
    assert one.values() == four.values()
    assert one.methods() == four.methods()
