"""Combinatorial machinery: binomial tail bounds, extraction of a
separated interval family from layered families, and the census of words
admitting a block packing with a prescribed empirical distribution.

Intervals are half-open integer ranges [start, start + length) inside a
horizon [0, K); two intervals are separated when some integer lies
strictly between them, i.e. the later start is at least the earlier stop
plus one. Indexing is 0-based throughout.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .covers import WordSet
from .errors import CapacityError
from .systems import Word

DEFAULT_CENSUS_BITS = 24


def binary_entropy(delta: float) -> float:
    """-d log2 d - (1-d) log2 (1-d) in bits; 0 at the endpoints."""
    if not (0.0 <= delta <= 1.0):
        raise ValueError(f"binary_entropy needs a probability, got {delta!r}")
    if delta in (0.0, 1.0):
        return 0.0
    return float(-delta * math.log2(delta) - (1.0 - delta) * math.log2(1.0 - delta))


def binom_tail(K: int, delta: float):
    """(exact sum of C(K, j) for j <= delta*K, bound 2**(H(delta)*K)).

    The exact sum is a big integer; the bound dominates it whenever
    delta < 1/2.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    jmax = min(K, math.floor(delta * K))
    total = sum(math.comb(K, j) for j in range(0, max(jmax, -1) + 1)) if jmax >= 0 else 0
    exponent = binary_entropy(min(max(delta, 0.0), 1.0)) * K
    bound = float("inf") if exponent > 1000 else 2.0**exponent
    return total, bound


def check_separated(intervals: Iterable) -> bool:
    """True iff the (start, stop) ranges are pairwise separated."""
    spans = sorted((int(s), int(t)) for s, t in intervals)
    for (s1, t1), (s2, t2) in zip(spans, spans[1:]):
        if t1 <= s1:
            raise ValueError(f"empty interval ({s1}, {t1})")
        if s2 < t1 + 1:
            return False
    return True


@dataclass(frozen=True)
class LevelDensities:
    """Per-level coverage densities with their leftover products."""

    densities: tuple

    def __post_init__(self):
        dens = tuple(float(x) for x in self.densities)
        if not dens:
            raise ValueError("at least one density is required")
        if any(not (0.0 < x < 1.0) for x in dens):
            raise ValueError("densities must lie strictly between 0 and 1")
        object.__setattr__(self, "densities", dens)

    @property
    def levels(self) -> int:
        return len(self.densities)

    def leftover(self, r: int) -> float:
        """Product of (1 - density) over levels r..l (1-based); 1 beyond l."""
        if r < 1:
            raise ValueError("levels are 1-based")
        out = 1.0
        for x in self.densities[r - 1 :]:
            out *= 1.0 - x
        return out

    @property
    def reachable_fraction(self) -> float:
        """Fraction of the horizon the extraction targets: 1 - leftover(1)."""
        return 1.0 - self.leftover(1)


@dataclass(frozen=True)
class IntervalLevel:
    """One layer: equal-length intervals given by their starts, plus the
    density it is believed to cover and its distribution slack eta."""

    length: int
    starts: tuple
    density: float
    eta: float

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("interval length must be >= 1")
        if not (0.0 < self.density < 1.0):
            raise ValueError("density must lie strictly between 0 and 1")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        starts = tuple(sorted(int(s) for s in self.starts))
        object.__setattr__(self, "starts", starts)

    def spans(self) -> tuple:
        return tuple((s, s + self.length) for s in self.starts)


@dataclass(frozen=True)
class IntervalFamily:
    """Layered separated interval families over a common horizon [0, K)."""

    horizon: int
    levels: tuple
    epsilon: float

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        levels = tuple(self.levels)
        if not levels:
            raise ValueError("at least one level is required")
        last = 0
        for j, lvl in enumerate(levels):
            if not isinstance(lvl, IntervalLevel):
                raise ValueError("levels must be IntervalLevel instances")
            if lvl.length <= last:
                raise ValueError("interval lengths must be strictly increasing")
            last = lvl.length
            for s in lvl.starts:
                if s < 0 or s + lvl.length > self.horizon:
                    raise ValueError(
                        f"level {j + 1} interval at {s} leaves the horizon [0, {self.horizon})"
                    )
            if lvl.starts and not check_separated(lvl.spans()):
                raise ValueError(f"level {j + 1} intervals are not separated")
        object.__setattr__(self, "levels", levels)

    def densities(self) -> LevelDensities:
        return LevelDensities(tuple(lvl.density for lvl in self.levels))


def extraction_slacks(lengths: Sequence[int], etas: Sequence[float], epsilon: float):
    """Per-level slack bounds f_j and their total, from the sizes alone.

    f at the top level is epsilon; descending, each level pays for the
    intervals ruled out by the levels above it, via both the lower and
    the upper counting estimate (the max of the two).
    """
    l = len(lengths)
    if len(etas) != l:
        raise ValueError("lengths and etas must have equal length")
    f = [0.0] * l
    f[l - 1] = epsilon
    for j in range(l - 2, -1, -1):
        low = epsilon
        high = epsilon
        for r in range(j + 1, l):
            ratio = lengths[j] / lengths[r]
            low += (
                epsilon
                + (1.0 + epsilon) * f[r]
                + 2.0 * ratio * (1.0 + f[r])
                + etas[r] * (lengths[r] + 2.0 * lengths[j])
            )
            high += f[r] + epsilon * (1.0 + f[r]) + etas[r] * lengths[r] * (1.0 + epsilon)
        f[j] = max(low, high)
    return tuple(f), float(sum(f))


def hypothesis_report(family: IntervalFamily) -> tuple:
    """Warnings for violated extraction hypotheses (empty when all hold).

    Checks that each level's total length sits within epsilon of its
    density, and that for each pair j < r almost every length-N_r window
    sees close to the level-j density inside it (at most eta_r * K bad
    windows).
    """
    warnings = []
    K = family.horizon
    eps = family.epsilon
    for j, lvl in enumerate(family.levels, start=1):
        got = len(lvl.starts) * lvl.length / K
        if abs(got - lvl.density) >= eps:
            warnings.append(
                f"level {j}: covered fraction {got:.6g} is not within "
                f"{eps:.6g} of density {lvl.density:.6g}"
            )
    for r in range(2, len(family.levels) + 1):
        outer = family.levels[r - 1]
        win = outer.length
        if win > K:
            continue
        for j in range(1, r):
            inner = family.levels[j - 1]
            marks = np.zeros(K + 1, dtype=np.int64)
            for s in inner.starts:
                if s + inner.length <= K:
                    marks[s] += 1
            csum = np.cumsum(marks)
            positions = np.arange(0, K - win + 1)
            hi = positions + win - inner.length
            counts = np.where(
                hi >= positions,
                csum[np.clip(hi, 0, K)] - np.where(positions > 0, csum[positions - 1], 0),
                0,
            )
            dens = counts * inner.length / win
            bad = int(np.count_nonzero(np.abs(dens - inner.density) >= eps))
            if bad >= outer.eta * K:
                warnings.append(
                    f"levels ({j},{r}): {bad} windows of length {win} miss the "
                    f"level-{j} density, allowed fewer than {outer.eta * K:.6g}"
                )
    return tuple(warnings)


@dataclass(frozen=True)
class ExtractionResult:
    selected: tuple  # per level, the surviving starts
    covered_fraction: float
    level_slacks: tuple
    total_slack: float
    warnings: tuple


def extract_separated(family: IntervalFamily) -> ExtractionResult:
    """Extract a cross-level separated family, top level first.

    The top level is kept whole; each lower level keeps exactly those
    intervals separated from everything already kept above it. The
    returned slacks bound how far each level's kept fraction may sit
    from density_j * leftover(j+1), and their sum bounds the distance of
    the total covered fraction from the reachable fraction.
    """
    warnings = hypothesis_report(family)
    levels = family.levels
    l = len(levels)
    kept_starts: list = []  # sorted starts of all intervals kept so far
    kept_stops: list = []
    selected = [None] * l

    def is_clear(start: int, stop: int) -> bool:
        pos = bisect.bisect_left(kept_starts, start)
        if pos > 0 and kept_stops[pos - 1] + 1 > start:
            return False
        if pos < len(kept_starts) and kept_starts[pos] < stop + 1:
            return False
        return True

    for j in range(l - 1, -1, -1):
        lvl = levels[j]
        if j == l - 1:
            chosen = list(lvl.starts)
        else:
            chosen = [s for s in lvl.starts if is_clear(s, s + lvl.length)]
        selected[j] = tuple(chosen)
        for s in chosen:
            pos = bisect.bisect_left(kept_starts, s)
            kept_starts.insert(pos, s)
            kept_stops.insert(pos, s + lvl.length)

    covered = sum(len(sel) * lvl.length for sel, lvl in zip(selected, levels))
    slacks, total = extraction_slacks(
        [lvl.length for lvl in levels], [lvl.eta for lvl in levels], family.epsilon
    )
    return ExtractionResult(
        selected=tuple(selected),
        covered_fraction=covered / family.horizon,
        level_slacks=slacks,
        total_slack=total,
        warnings=warnings,
    )


@dataclass(frozen=True)
class Packing:
    """Disjoint placement of length-n blocks filling most of a length-k word."""

    block_length: int
    word_length: int
    delta: float
    positions: tuple
    blocks: tuple

    def __post_init__(self):
        n, k = self.block_length, self.word_length
        if n < 1 or k < n:
            raise ValueError("need word_length >= block_length >= 1")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie strictly between 0 and 1")
        pos = tuple(int(p) for p in self.positions)
        blocks = tuple(tuple(b) for b in self.blocks)
        if len(pos) != len(blocks):
            raise ValueError("positions and blocks must pair up")
        for p in pos:
            if not (0 <= p <= k - n):
                raise ValueError(f"position {p} out of range")
        for a, b in zip(pos, pos[1:]):
            if b < a + n:
                raise ValueError("blocks must be disjoint and ordered")
        for b in blocks:
            if len(b) != n:
                raise ValueError("every block must have the block length")
        if len(pos) * n <= (1.0 - self.delta) * k:
            raise ValueError("packing leaves more than delta*k letters unfilled")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "blocks", blocks)


def packing_distribution(packing: Packing) -> dict:
    """Empirical distribution of the packed blocks."""
    m = len(packing.blocks)
    if m == 0:
        raise ValueError("packing has no blocks")
    out: dict = {}
    for b in packing.blocks:
        out[b] = out.get(b, 0.0) + 1.0 / m
    return out


def sup_distance(mu1: Mapping, mu2: Mapping) -> float:
    keys = set(mu1) | set(mu2)
    return max((abs(mu1.get(g, 0.0) - mu2.get(g, 0.0)) for g in keys), default=0.0)


def _check_distribution(mu: Mapping, alphabet_size: int, block_length: int) -> dict:
    out = {}
    for key, val in mu.items():
        block = tuple(key)
        if len(block) != block_length or any(not (0 <= s < alphabet_size) for s in block):
            raise ValueError(f"distribution key {key!r} is not a valid block")
        if val < 0:
            raise ValueError("distribution values must be nonnegative")
        out[block] = float(val)
    if abs(sum(out.values()) - 1.0) > 1e-9:
        raise ValueError(f"distribution sums to {sum(out.values())!r}, not 1")
    return out


def uniform_block_distribution(alphabet_size: int, block_length: int) -> dict:
    total = alphabet_size**block_length
    p = 1.0 / total
    out = {}
    for idx in range(total):
        block = []
        v = idx
        for _ in range(block_length):
            v, s = divmod(v, alphabet_size)
            block.append(s)
        out[tuple(reversed(block))] = p
    return out


def _min_blocks(k: int, n: int, delta: float) -> int:
    for m in range(0, k // n + 1):
        if m * n > (1.0 - delta) * k:
            return m
    return k // n + 1


@lru_cache(maxsize=None)
def _position_sets(k: int, n: int, m_min: int) -> tuple:
    out = []
    acc: list = []

    def descend(start: int):
        if len(acc) >= m_min:
            out.append(tuple(acc))
        for s in range(start, k - n + 1):
            remaining = 1 + (k - n - s) // n
            if len(acc) + remaining < m_min:
                break
            acc.append(s)
            descend(s + n)
            acc.pop()

    descend(0)
    return tuple(out)


def is_word_packed(word: Word, block_length: int, delta: float, mu: Mapping):
    """Decide whether the word admits a packing whose block distribution
    sits within delta of mu in sup distance; returns a witness if so."""
    word = tuple(word)
    k, n = len(word), block_length
    if k < n:
        raise ValueError("word must be at least one block long")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie strictly between 0 and 1")
    alphabet = max(2, max(word) + 1, max((max(b) + 1 for b in map(tuple, mu)), default=2))
    mu = _check_distribution(mu, alphabet, n)
    m_min = _min_blocks(k, n, delta)
    if m_min > k // n:
        return False, None
    for positions in _position_sets(k, n, m_min):
        m = len(positions)
        blocks = tuple(word[p : p + n] for p in positions)
        freq: dict = {}
        for b in blocks:
            freq[b] = freq.get(b, 0.0) + 1.0 / m
        if sup_distance(freq, mu) < delta:
            return True, Packing(n, k, delta, positions, blocks)
    return False, None


def mean_block_entropy(mu: Mapping, block_length: int) -> float:
    """Entropy of the block distribution divided by the block length, bits."""
    h = -sum(p * math.log2(p) for p in mu.values() if p > 0)
    return float(h / block_length)


def census_margin(delta: float, mu: Mapping, block_length: int, alphabet_size: int) -> float:
    """Exponent margin added to the mean block entropy in the census bound.

    The continuity modulus is instantiated as the explicit Lipschitz
    bound delta * sum |log2 mu| over the support, which dominates the
    true modulus and keeps the bound computable.
    """
    lipschitz = delta * sum(abs(math.log2(p)) for p in mu.values() if p > 0)
    return float(
        lipschitz / block_length + binary_entropy(delta) + delta * math.log2(alphabet_size)
    )


def packing_census(
    alphabet_size: int,
    block_length: int,
    word_length: int,
    delta: float,
    mu: Mapping,
    bits_budget: int = DEFAULT_CENSUS_BITS,
):
    """(number of packable words of the given length, census bound).

    Exhaustive over all alphabet_size**word_length words; the bound is
    2**(k*(h0 + margin)) and dominates the count whenever delta < 1/2.
    """
    M, n, k = alphabet_size, block_length, word_length
    if M < 2 or n < 1 or k < n:
        raise ValueError("need alphabet_size >= 2 and word_length >= block_length >= 1")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie strictly between 0 and 1")
    if k * math.log2(M) > bits_budget + 1e-9:
        raise CapacityError(
            f"census over {M}**{k} words exceeds the budget of {bits_budget} bits"
        )
    mu = _check_distribution(mu, M, n)
    h0 = mean_block_entropy(mu, n)
    exponent = k * (h0 + census_margin(delta, mu, n, M))
    bound = float("inf") if exponent > 1000 else 2.0**exponent

    m_min = _min_blocks(k, n, delta)
    if m_min > k // n:
        return 0, bound
    gamma = M**n
    mu_vec = np.zeros(gamma)
    for block, p in mu.items():
        idx = 0
        for s in block:
            idx = idx * M + s
        mu_vec[idx] = p
    psets = _position_sets(k, n, m_min)

    total = 0
    chunk = 1 << 16
    for lo in range(0, M**k, chunk):
        hi = min(lo + chunk, M**k)
        idx = np.arange(lo, hi, dtype=np.int64)
        rows = np.arange(hi - lo)
        symbols = [(idx // (M ** (k - 1 - t))) % M for t in range(k)]
        block_at = []
        for s in range(k - n + 1):
            b = np.zeros(hi - lo, dtype=np.int64)
            for t in range(n):
                b = b * M + symbols[s + t]
            block_at.append(b)
        packed = np.zeros(hi - lo, dtype=bool)
        for positions in psets:
            m = len(positions)
            counts = np.zeros((hi - lo, gamma))
            for s in positions:
                counts[rows, block_at[s]] += 1.0
            ok = (np.abs(counts / m - mu_vec) < delta).all(axis=1)
            packed |= ok
            if packed.all():
                break
        total += int(packed.sum())
    return total, bound


def visit_intervals(orbit: Word, base: WordSet, interval_length: int) -> tuple:
    """Start positions m <= K - N at which the orbit's window enters `base`,
    each carrying the interval [m, m + N)."""
    orbit = tuple(orbit)
    d = base.depth
    if interval_length < d:
        raise ValueError("interval length must be at least the base depth")
    K = len(orbit)
    M = base.alphabet_size
    members = base.members
    out = []
    for m in range(K - interval_length + 1):
        idx = 0
        for t in range(d):
            idx = idx * M + orbit[m + t]
        if idx in members:
            out.append(m)
    return tuple(out)
