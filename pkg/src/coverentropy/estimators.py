"""Finite-horizon traces of the cover entropy notions.

Four notions are traced against n: the normalized static entropy of the
n-fold dynamical join (h_minus), the best per-symbol rate over refining
partitions probed through candidate assignments (h_plus), the growth of
the epsilon-partial covering number (h_e), and the growth of the exact
covering number (h_c, measure independent). Every record carries a
method tag so downstream checks can filter to exact values.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import log2

import numpy as np

from .assignment import (
    DEFAULT_EXACT_WORD_BUDGET,
    enumerate_assignments,
    heuristic_assignment_pool,
    static_cover_entropy,
    static_cover_entropy_exact,
)
from .assignment import DEFAULT_NODE_BUDGET as ASSIGNMENT_NODE_BUDGET
from .covers import Cover, DEFAULT_NAME_BUDGET, dyn_join
from .errors import CapacityError
from .setcover import (
    DEFAULT_NODE_BUDGET as SETCOVER_NODE_BUDGET,
    DEFAULT_SET_BUDGET,
    CoverInstance,
    n_exact,
    n_greedy,
)
from .systems import MixtureSystem, System

NOTIONS = ("h_minus", "h_plus", "h_e", "h_c")


@dataclass(frozen=True)
class Budgets:
    """Knobs shared by the trace estimators, all overridable per call."""

    exact_words: int = DEFAULT_EXACT_WORD_BUDGET
    assignment_nodes: int = ASSIGNMENT_NODE_BUDGET
    setcover_sets: int = DEFAULT_SET_BUDGET
    setcover_nodes: int = SETCOVER_NODE_BUDGET
    names: int = DEFAULT_NAME_BUDGET
    candidates: int = 4096


@dataclass(frozen=True)
class TraceRecord:
    n: int
    value_bits: float
    method: str  # exact | heuristic | greedy
    epsilon: float | None = None
    depth: int | None = None
    alt_value_bits: float | None = None  # audit channel, not serialized


@dataclass(frozen=True)
class EntropyTrace:
    notion: str
    records: tuple
    extrapolated: float
    monotone: bool

    def __post_init__(self):
        if self.notion not in NOTIONS:
            raise ValueError(f"unknown notion {self.notion!r}")
        records = tuple(self.records)
        ns = [r.n for r in records]
        if ns != sorted(set(ns)):
            raise ValueError("record horizons must be strictly increasing")
        for r in records:
            if not np.isfinite(r.value_bits) or r.value_bits < -1e-12:
                raise ValueError(f"value at n={r.n} is not a finite nonnegative number")
        object.__setattr__(self, "records", records)

    def values(self) -> tuple:
        return tuple(r.value_bits for r in self.records)

    def running_infimum(self) -> tuple:
        out, cur = [], float("inf")
        for r in self.records:
            cur = min(cur, r.value_bits)
            out.append(cur)
        return tuple(out)

    def methods(self) -> tuple:
        return tuple(r.method for r in self.records)


def _finish_trace(notion: str, records, subadditive_exact: bool) -> EntropyTrace:
    values = [r.value_bits for r in records]
    monotone = all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    all_exact = records and all(r.method == "exact" for r in records)
    if records and subadditive_exact and all_exact:
        extrapolated = min(values)
    elif records:
        extrapolated = values[-1]
    else:
        extrapolated = float("nan")
    return EntropyTrace(notion, tuple(records), extrapolated, monotone)


class TraceTruncated(CapacityError):
    """A budget broke mid-trace; carries the records computed so far."""

    def __init__(self, notion: str, records, failed_n: int, reason: str):
        super().__init__(f"{notion} trace stopped at n={failed_n}: {reason}")
        self.notion = notion
        self.records = tuple(records)
        self.failed_n = failed_n
        self.reason = reason


def _map_ordered(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, x) for x in items]
        return [f.result() for f in futures]


def _collect(notion: str, fn, n_values, threads: int):
    """Run fn per n; on a capacity error keep every record before the break."""
    records = []
    if threads <= 1:
        for n in n_values:
            try:
                records.append(fn(n))
            except CapacityError as exc:
                raise TraceTruncated(notion, records, n, str(exc)) from exc
        return records
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [(n, pool.submit(fn, n)) for n in n_values]
        for n, fut in futures:
            try:
                records.append(fut.result())
            except CapacityError as exc:
                raise TraceTruncated(notion, records, n, str(exc)) from exc
    return records


def h_minus_trace(
    system: System,
    cover: Cover,
    n_max: int,
    budgets: Budgets = Budgets(),
    seed: int = 0,
    restarts: int = 2,
    threads: int = 1,
) -> EntropyTrace:
    """Normalized static entropy of the n-fold join, for n = 1..n_max.

    Values use the exact assignment optimum while the budget holds and
    the tagged heuristic upper bound beyond it. The extrapolated figure
    is the running infimum when every record is exact (the unnormalized
    sequence is subadditive), otherwise the last value.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")

    def one(n: int) -> TraceRecord:
        joined, _ = dyn_join(cover, n, name_budget=budgets.names)
        value, _, method = static_cover_entropy(
            system,
            joined,
            exact_budget=budgets.exact_words,
            node_budget=budgets.assignment_nodes,
            seed=seed,
            restarts=restarts,
        )
        return TraceRecord(n=n, value_bits=value / n, method=method, depth=joined.depth)

    records = _collect("h_minus", one, range(1, n_max + 1), threads)
    return _finish_trace("h_minus", records, subadditive_exact=True)


def _partition_entropy_sequence(system: System, block_ids: np.ndarray, depth: int, n_max: int):
    """H of the n-fold join of the depth-D partition with the given block
    ids, for n = 0..n_max (index 0 is 0.0)."""
    M = system.alphabet_size
    B = int(block_ids.max()) + 1
    out = [0.0]
    for n in range(1, n_max + 1):
        L = n + depth - 1
        measures = system.cylinder_measures(L)
        idx = np.arange(M**L, dtype=np.int64)
        name_id = np.zeros(M**L, dtype=np.int64)
        for j in range(n):
            window = (idx // (M ** (L - j - depth))) % (M**depth)
            name_id = name_id * B + block_ids[window]
        _, inverse = np.unique(name_id, return_inverse=True)
        probs = np.bincount(inverse, weights=measures)
        probs = probs[probs > 0]
        out.append(float(-(probs * np.log2(probs)).sum()))
    return out


def h_plus_trace(
    system: System,
    cover: Cover,
    n_max: int,
    depth: int | None = None,
    budgets: Budgets = Budgets(),
    seed: int = 0,
    restarts: int = 2,
    threads: int = 1,
) -> EntropyTrace:
    """Best conditional-entropy rate over candidate refining partitions.

    Candidates are depth-D assignments: the full enumeration when it fits
    the candidate budget, otherwise the heuristic minimizer with seeded
    restarts. The per-n value is the least H(join_n) - H(join_{n-1})
    across candidates, a nonincreasing upper bound on the best rate; the
    audit channel carries H(join_n)/n for the same candidate set.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    D = cover.depth if depth is None else depth
    measures = system.cylinder_measures(D)
    try:
        choices = enumerate_assignments(cover, D, measures, budgets.candidates)
        method = "exact"
    except CapacityError:
        pool = heuristic_assignment_pool(system, cover, D, seed=seed, restarts=restarts)
        choices = [a.choice for a in pool]
        method = "heuristic"

    signatures = {}
    for choice in choices:
        ids = np.asarray(choice, dtype=np.int64)
        _, compact = np.unique(ids, return_inverse=True)
        signatures.setdefault(tuple(compact), compact)
    candidates = list(signatures.values())

    def sequence_for(compact) -> list:
        return _partition_entropy_sequence(system, np.asarray(compact), D, n_max)

    sequences = _map_ordered(sequence_for, candidates, threads)
    records = []
    for n in range(1, n_max + 1):
        best = max(0.0, min(seq[n] - seq[n - 1] for seq in sequences))
        alt = min(seq[n] for seq in sequences) / n
        records.append(
            TraceRecord(n=n, value_bits=best, method=method, depth=D, alt_value_bits=alt)
        )
    return _finish_trace("h_plus", records, subadditive_exact=False)


def _instance_for(system: System | None, joined: Cover, epsilon: float) -> CoverInstance:
    return CoverInstance.from_cover(system, joined, epsilon)


def h_e_trace(
    system: System,
    cover: Cover,
    epsilon: float,
    n_max: int,
    budgets: Budgets = Budgets(),
    threads: int = 1,
) -> EntropyTrace:
    """Growth of the number of join elements needed to cover all but
    epsilon of the space; exact counts while budgets hold, greedy after."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie strictly between 0 and 1")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")

    def one(n: int) -> TraceRecord:
        joined, _ = dyn_join(cover, n, name_budget=budgets.names)
        instance = _instance_for(system, joined, epsilon)
        try:
            count, _ = n_exact(
                instance, set_budget=budgets.setcover_sets, node_budget=budgets.setcover_nodes
            )
            method = "exact"
        except CapacityError:
            count, _ = n_greedy(instance)
            method = "greedy"
        return TraceRecord(
            n=n, value_bits=log2(count) / n, method=method, epsilon=epsilon, depth=joined.depth
        )

    records = _collect("h_e", one, range(1, n_max + 1), threads)
    return _finish_trace("h_e", records, subadditive_exact=False)


def h_c_trace(
    cover: Cover,
    n_max: int,
    budgets: Budgets = Budgets(),
    threads: int = 1,
) -> EntropyTrace:
    """Growth of the exact covering number of the join; measure free."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")

    def one(n: int) -> TraceRecord:
        joined, _ = dyn_join(cover, n, name_budget=budgets.names)
        instance = _instance_for(None, joined, 0.0)
        try:
            count, _ = n_exact(
                instance, set_budget=budgets.setcover_sets, node_budget=budgets.setcover_nodes
            )
            method = "exact"
        except CapacityError:
            count, _ = n_greedy(instance)
            method = "greedy"
        return TraceRecord(n=n, value_bits=log2(count) / n, method=method, depth=joined.depth)

    records = _collect("h_c", one, range(1, n_max + 1), threads)
    return _finish_trace("h_c", records, subadditive_exact=True)


@dataclass(frozen=True)
class DecompositionGap:
    notion: str
    n: int
    mixture_bits: float
    weighted_bits: float

    @property
    def gap_bits(self) -> float:
        return self.mixture_bits - self.weighted_bits


def decompose(
    mixture: MixtureSystem,
    cover: Cover,
    n: int,
    notion: str = "h_minus",
    budgets: Budgets = Budgets(),
    depth: int | None = None,
) -> DecompositionGap:
    """Finite-n gap between the mixture value and the weighted component
    values; the gap shrinks with n as the components separate."""
    if notion not in ("h_minus", "h_plus"):
        raise ValueError("decompose supports the h_minus and h_plus notions")
    if not isinstance(mixture, MixtureSystem):
        raise ValueError("decompose needs a MixtureSystem")

    def value(system: System) -> float:
        if notion == "h_minus":
            joined, _ = dyn_join(cover, n, name_budget=budgets.names)
            bits, _ = static_cover_entropy_exact(
                system,
                joined,
                exact_budget=budgets.exact_words,
                node_budget=budgets.assignment_nodes,
            )
            return bits / n
        trace = h_plus_trace(system, cover, n, depth=depth, budgets=budgets)
        return trace.records[-1].value_bits

    mixture_bits = value(mixture)
    weighted = sum(
        w * value(comp) for w, comp in zip(mixture.weights, mixture.components)
    )
    return DecompositionGap(notion, n, mixture_bits, float(weighted))


CSV_HEADER = ("notion", "n", "value_bits", "method", "epsilon", "depth")


def _format_value(x: float) -> str:
    return f"{x:.9g}"


def write_trace_csv(path, trace_or_records, notion: str | None = None, truncated_at=None):
    """One row per record at 9 significant digits; a truncation marker row
    (empty value, method "truncated") closes a partial trace."""
    if isinstance(trace_or_records, EntropyTrace):
        records = trace_or_records.records
        notion = trace_or_records.notion
    else:
        records = tuple(trace_or_records)
        if notion is None:
            raise ValueError("notion is required when writing bare records")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(
                [
                    notion,
                    r.n,
                    _format_value(r.value_bits),
                    r.method,
                    "" if r.epsilon is None else f"{r.epsilon:.9g}",
                    "" if r.depth is None else r.depth,
                ]
            )
        if truncated_at is not None:
            writer.writerow([notion, truncated_at, "", "truncated", "", ""])


def read_trace_csv(path):
    """Inverse of write_trace_csv: (notion, records, truncated_at or None)."""
    records = []
    notion = None
    truncated_at = None
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        for row in reader:
            notion = row[0]
            if row[3] == "truncated":
                truncated_at = int(row[1])
                continue
            records.append(
                TraceRecord(
                    n=int(row[1]),
                    value_bits=float(row[2]),
                    method=row[3],
                    epsilon=float(row[4]) if row[4] else None,
                    depth=int(row[5]) if row[5] else None,
                )
            )
    return notion, tuple(records), truncated_at
