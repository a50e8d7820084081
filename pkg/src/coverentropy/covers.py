"""Covers and partitions of the shift as families of word sets.

A WordSet is a depth-d cylinder event stored as the set of indices of its
member words; a Cover is a finite family of same-depth WordSets whose
union is everything. The dynamical join materializes the cover obtained
by intersecting shifted copies: its elements are indexed by names, i.e.
functions from time steps to cover-element indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import CapacityError, ConfigError
from .systems import System, Word, format_word, index_word, parse_word, word_index

DEFAULT_NAME_BUDGET = 1 << 24


@dataclass(frozen=True)
class WordSet:
    """A set of words of one common depth, stored by word index."""

    alphabet_size: int
    depth: int
    members: frozenset

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise ValueError("alphabet size must be at least 2")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        members = frozenset(int(w) for w in self.members)
        if members:
            lo, hi = min(members), max(members)
            if lo < 0 or hi >= self.alphabet_size**self.depth:
                raise ValueError(
                    f"word index {lo if lo < 0 else hi} out of range for depth {self.depth}"
                )
        object.__setattr__(self, "members", members)

    @classmethod
    def from_words(cls, alphabet_size: int, words: Iterable[Word]) -> "WordSet":
        words = [tuple(w) for w in words]
        if not words:
            raise ValueError("cannot infer depth of an empty word set; pass indices instead")
        depth = len(words[0])
        idx = set()
        for w in words:
            if len(w) != depth:
                raise ValueError(f"mixed depths: {format_word(words[0])!r} vs {format_word(w)!r}")
            idx.add(word_index(w, alphabet_size))
        return cls(alphabet_size, depth, frozenset(idx))

    @classmethod
    def from_strings(cls, alphabet_size: int, texts: Iterable[str]) -> "WordSet":
        return cls.from_words(alphabet_size, [parse_word(t, alphabet_size) for t in texts])

    @property
    def size(self) -> int:
        return len(self.members)

    def words(self) -> tuple:
        return tuple(index_word(i, self.depth, self.alphabet_size) for i in sorted(self.members))

    def strings(self) -> tuple:
        return tuple(format_word(w) for w in self.words())

    def mask(self) -> np.ndarray:
        out = np.zeros(self.alphabet_size**self.depth, dtype=bool)
        if self.members:
            out[np.fromiter(self.members, dtype=np.int64, count=len(self.members))] = True
        return out

    def measure(self, system: System) -> float:
        if not self.members:
            return 0.0
        vec = system.cylinder_measures(self.depth)
        idx = np.fromiter(self.members, dtype=np.int64, count=len(self.members))
        return float(vec[idx].sum())

    def lift(self, depth: int) -> "WordSet":
        """Replace each member by all its extensions to the given depth."""
        if depth < self.depth:
            raise ValueError("can only lift to a greater or equal depth")
        if depth == self.depth:
            return self
        step = self.alphabet_size ** (depth - self.depth)
        members = frozenset(w * step + t for w in self.members for t in range(step))
        return WordSet(self.alphabet_size, depth, members)

    def pullback(self, k: int) -> "WordSet":
        """Prepend k free symbols: the event shifted k steps into the future."""
        if k < 0:
            raise ValueError("k must be >= 0")
        if k == 0:
            return self
        base = self.alphabet_size**self.depth
        members = frozenset(
            p * base + w for p in range(self.alphabet_size**k) for w in self.members
        )
        return WordSet(self.alphabet_size, self.depth + k, members)

    def __and__(self, other: "WordSet") -> "WordSet":
        self._check_compatible(other)
        return WordSet(self.alphabet_size, self.depth, self.members & other.members)

    def __or__(self, other: "WordSet") -> "WordSet":
        self._check_compatible(other)
        return WordSet(self.alphabet_size, self.depth, self.members | other.members)

    def __le__(self, other: "WordSet") -> bool:
        self._check_compatible(other)
        return self.members <= other.members

    def _check_compatible(self, other: "WordSet"):
        if self.alphabet_size != other.alphabet_size or self.depth != other.depth:
            raise ValueError(
                f"incompatible word sets: depth {self.depth}/M={self.alphabet_size} vs "
                f"depth {other.depth}/M={other.alphabet_size}"
            )


def full_word_set(alphabet_size: int, depth: int) -> WordSet:
    return WordSet(alphabet_size, depth, frozenset(range(alphabet_size**depth)))


@dataclass(frozen=True)
class Cover:
    """An ordered family of same-depth word sets whose union is everything."""

    elements: tuple

    def __post_init__(self):
        elements = tuple(self.elements)
        if not elements:
            raise ValueError("a cover needs at least one element")
        first = elements[0]
        for el in elements:
            if not isinstance(el, WordSet):
                raise ValueError("cover elements must be WordSet instances")
            if el.alphabet_size != first.alphabet_size or el.depth != first.depth:
                raise ValueError("cover elements must share one alphabet and depth")
        union = frozenset().union(*(el.members for el in elements))
        total = first.alphabet_size**first.depth
        if len(union) != total:
            missing = next(i for i in range(total) if i not in union)
            word = format_word(index_word(missing, first.depth, first.alphabet_size))
            raise ValueError(f"cover does not cover the space: word {word!r} is uncovered")
        object.__setattr__(self, "elements", elements)

    @property
    def alphabet_size(self) -> int:
        return self.elements[0].alphabet_size

    @property
    def depth(self) -> int:
        return self.elements[0].depth

    def element_sets(self) -> frozenset:
        """The elements as a set of sets (order and duplicates forgotten)."""
        return frozenset(el.members for el in self.elements)

    def is_partition(self) -> bool:
        sizes = sum(el.size for el in self.elements)
        return sizes == self.alphabet_size**self.depth and all(el.size for el in self.elements)


@dataclass(frozen=True)
class Partition(Cover):
    """A cover with pairwise disjoint, nonempty elements."""

    def __post_init__(self):
        super().__post_init__()
        if any(el.size == 0 for el in self.elements):
            raise ValueError("partition elements must be nonempty")
        if sum(el.size for el in self.elements) != self.alphabet_size**self.depth:
            raise ValueError("partition elements must be pairwise disjoint")


@dataclass(frozen=True)
class Name:
    """An assignment of one cover element per time step with its realized event.

    `realized` holds the words of depth n + d - 1 whose every length-d
    window sits inside the element named at that position.
    """

    base: Cover
    assignments: tuple
    realized: WordSet


def _as_cover(template: Cover, elements: Iterable[WordSet]) -> Cover:
    cls = Partition if isinstance(template, Partition) else Cover
    return cls(tuple(elements))


def lift_depth(cover: Cover, depth: int) -> Cover:
    """Re-express the cover at a greater depth; measures are unchanged."""
    if depth < cover.depth:
        raise ValueError("can only lift to a greater or equal depth")
    if depth == cover.depth:
        return cover
    return _as_cover(cover, (el.lift(depth) for el in cover.elements))


def refines(finer: Cover, coarser: Cover) -> bool:
    """True iff every element of `finer` lies inside some element of `coarser`."""
    if finer.depth != coarser.depth or finer.alphabet_size != coarser.alphabet_size:
        raise ValueError("refinement check needs a common depth; lift_depth first")
    return all(
        any(a.members <= b.members for b in coarser.elements) for a in finer.elements
    )


def join(left: Cover, right: Cover) -> Cover:
    """Cover of all nonempty pairwise intersections; refines both inputs."""
    if left.depth != right.depth or left.alphabet_size != right.alphabet_size:
        raise ValueError("join needs a common depth; lift_depth first")
    elements = []
    for a in left.elements:
        for b in right.elements:
            meet = a.members & b.members
            if meet:
                elements.append(WordSet(left.alphabet_size, left.depth, meet))
    if isinstance(left, Partition) and isinstance(right, Partition):
        return Partition(tuple(elements))
    return Cover(tuple(elements))


def pullback(cover: Cover, k: int) -> Cover:
    """The cover k steps into the future, at depth d + k; measures unchanged."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return cover
    return _as_cover(cover, (el.pullback(k) for el in cover.elements))


def dyn_join(cover: Cover, n: int, name_budget: int = DEFAULT_NAME_BUDGET):
    """Join of the cover with its next n-1 shifts, materialized through names.

    Returns (joined cover, names) where the i-th element of the joined
    cover is the realized event of the i-th name; names with empty
    realizations are dropped. The candidate count len(cover)**n must stay
    within `name_budget`. Results are cached: traces for several notions
    over one cover share the joins.
    """
    return _dyn_join_cached(cover, n, name_budget)


@lru_cache(maxsize=16)
def _dyn_join_cached(cover: Cover, n: int, name_budget: int):
    if n < 1:
        raise ValueError("n must be >= 1")
    m = len(cover.elements)
    if m**n > name_budget:
        raise CapacityError(
            f"dynamical join at n={n} would enumerate {m}**{n} candidate names, over the "
            f"budget of {name_budget}; raise the budget or use greedy/streaming estimators"
        )
    M = cover.alphabet_size
    d = cover.depth
    window = M**d
    masks = [el.mask() for el in cover.elements]
    starts = [
        np.fromiter(sorted(el.members), dtype=np.int64, count=el.size) for el in cover.elements
    ]
    symbols = np.arange(M, dtype=np.int64)
    names = []

    def descend(assigned: tuple, indices: np.ndarray, step: int):
        if step == n:
            realized = WordSet(M, n + d - 1, frozenset(map(int, indices)))
            names.append(Name(cover, assigned, realized))
            return
        if step == 0:
            for i in range(m):
                if starts[i].size:
                    descend((i,), starts[i], 1)
            return
        extended = (indices[:, None] * M + symbols).ravel()
        windows = extended % window
        for i in range(m):
            kept = extended[masks[i][windows]]
            if kept.size:
                descend(assigned + (i,), kept, step + 1)

    descend((), np.empty(0, dtype=np.int64), 0)
    joined = _as_cover(cover, (nm.realized for nm in names))
    return joined, tuple(names)


def block_cover(cover: Cover, block: int) -> Cover:
    """Reinterpret a cover over the alphabet of length-`block` words.

    Elements are padded to the next multiple of `block` and re-indexed;
    positional values agree, so membership indices carry over verbatim.
    """
    if block < 1:
        raise ValueError("block must be >= 1")
    groups = -(-cover.depth // block)
    lifted = lift_depth(cover, groups * block)
    big = cover.alphabet_size**block
    elements = tuple(
        WordSet(big, groups, el.members) for el in lifted.elements
    )
    return Partition(elements) if isinstance(cover, Partition) else Cover(elements)


def cover_from_config(cfg: dict, alphabet_size: int) -> Cover:
    """Build a cover from {"depth": d, "elements": [[word, ...], ...]}."""
    if not isinstance(cfg, dict):
        raise ConfigError(f"cover: expected an object, got {type(cfg).__name__}")
    depth = cfg.get("depth")
    if not isinstance(depth, int) or depth < 1:
        raise ConfigError(f"cover.depth: expected a positive integer, got {depth!r}")
    rows = cfg.get("elements")
    if not isinstance(rows, list) or not rows:
        raise ConfigError("cover.elements: must be a nonempty list of word lists")
    elements = []
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise ConfigError(f"cover.elements[{i}]: expected a list of word strings")
        idx = set()
        for text in row:
            try:
                w = parse_word(str(text), alphabet_size)
            except ValueError as exc:
                raise ConfigError(f"cover.elements[{i}]: {exc}") from exc
            if len(w) != depth:
                raise ConfigError(
                    f"cover.elements[{i}]: word '{text}' has depth {len(w)}, expected {depth}"
                )
            idx.add(word_index(w, alphabet_size))
        elements.append(WordSet(alphabet_size, depth, frozenset(idx)))
    try:
        return Cover(tuple(elements))
    except ValueError as exc:
        raise ConfigError(f"cover: {exc}") from exc
