"""Stationary Markov and mixture measures on full shift spaces.

Every event handled by this package is a finite-depth cylinder (a set of
words over the alphabet), so probabilities are evaluated exactly from the
transition matrix and stationary vector; nothing is estimated from
samples. Logarithms are base 2 throughout and entropies are in bits.

Words are plain tuples of symbols (ints below the alphabet size) and
serialize as digit strings like "0121". Systems are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ConfigError

ROW_SUM_TOL = 1e-12
BALANCE_TOL = 1e-10
WEIGHT_TOL = 1e-12

Word = tuple


def _check_transition(matrix) -> np.ndarray:
    P = np.asarray(matrix, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError(f"transition matrix must be square, got shape {P.shape}")
    if P.shape[0] < 2:
        raise ValueError("alphabet size must be at least 2")
    if (P < 0).any():
        i, j = map(int, np.argwhere(P < 0)[0])
        raise ValueError(f"transition[{i}][{j}] = {P[i, j]} is negative")
    sums = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        i = int(bad[0])
        raise ValueError(f"row {i} of transition sums to {sums[i]!r}, not 1")
    return P


def _strongly_connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    for mat in (adj, adj.T):
        seen = np.zeros(n, dtype=bool)
        queue = deque([0])
        seen[0] = True
        while queue:
            u = queue.popleft()
            for v in np.flatnonzero(mat[u]):
                if not seen[v]:
                    seen[v] = True
                    queue.append(int(v))
        if not seen.all():
            return False
    return True


def stationary_of(transition, tol: float = 1e-13, max_iter: int = 100_000) -> np.ndarray:
    """Unique stationary vector of an irreducible row-stochastic matrix.

    Power iteration on the lazy matrix (P + I)/2, which has the same
    fixed points as P but also converges for periodic chains; the result
    is normalized exactly at the end. Reducible matrices are rejected
    because they have no unique stationary vector.
    """
    P = _check_transition(transition)
    if not _strongly_connected(P > 0):
        raise ValueError("transition matrix is reducible: no unique stationary vector")
    M = P.shape[0]
    lazy = 0.5 * (P + np.eye(M))
    pi = np.full(M, 1.0 / M)
    for _ in range(max_iter):
        nxt = pi @ lazy
        if np.abs(nxt - pi).max() < tol:
            pi = nxt
            break
        pi = nxt
    else:
        raise ValueError(
            f"power iteration did not reach tolerance {tol} within {max_iter} steps"
        )
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    if np.abs(pi @ P - pi).max() > BALANCE_TOL:
        raise ValueError("power iterate does not balance the transition matrix")
    return pi


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class MarkovSystem:
    """A stationary Markov measure on the full shift over M symbols.

    Periodic irreducible chains are accepted; for them every entropy
    notion computed downstream comes out 0 along the ordinary code path
    (their cylinder measures concentrate on finitely many words per
    depth), so no special casing is needed.
    """

    transition: np.ndarray
    stationary: np.ndarray

    def __post_init__(self):
        P = _check_transition(self.transition)
        pi = np.asarray(self.stationary, dtype=float)
        if pi.shape != (P.shape[0],):
            raise ValueError(
                f"stationary vector has shape {pi.shape}, expected ({P.shape[0]},)"
            )
        if (pi < -WEIGHT_TOL).any():
            raise ValueError("stationary vector has a negative entry")
        if abs(pi.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"stationary vector sums to {pi.sum()!r}, not 1")
        if np.abs(pi @ P - pi).max() > BALANCE_TOL:
            raise ValueError("stationary vector does not balance the transition matrix")
        object.__setattr__(self, "transition", _freeze(P))
        object.__setattr__(self, "stationary", _freeze(np.clip(pi, 0.0, None)))
        object.__setattr__(self, "_cylinders", {})

    @classmethod
    def from_matrix(cls, transition) -> "MarkovSystem":
        P = _check_transition(transition)
        return cls(P, stationary_of(P))

    @classmethod
    def bernoulli(cls, probs: Sequence[float]) -> "MarkovSystem":
        """Product (i.i.d.) measure with the given symbol probabilities."""
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ValueError("probs must be a vector of length >= 2")
        if abs(p.sum() - 1.0) > ROW_SUM_TOL:
            raise ValueError(f"probs sum to {p.sum()!r}, not 1")
        return cls(np.tile(p, (p.size, 1)), p)

    @property
    def alphabet_size(self) -> int:
        return self.stationary.shape[0]

    @property
    def period(self) -> int:
        """gcd of cycle lengths through state 0 (1 means aperiodic)."""
        P = self.transition > 0
        n = P.shape[0]
        level = -np.ones(n, dtype=int)
        level[0] = 0
        queue = deque([0])
        g = 0
        while queue:
            u = queue.popleft()
            for v in np.flatnonzero(P[u]):
                if level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(int(v))
                else:
                    g = math.gcd(g, level[u] + 1 - level[v])
        return abs(g) if g else 0

    def cylinder_measures(self, depth: int) -> np.ndarray:
        """Measures of all M**depth words of the given depth, word-indexed.

        Word index is the mixed-radix value with the first symbol most
        significant, so extending a word appends least-significant digits.
        """
        if depth < 1:
            raise ValueError("depth must be >= 1")
        cache = self._cylinders
        if depth not in cache:
            known = max((d for d in cache if d < depth), default=0)
            vec = cache.get(known, self.stationary)
            M = self.alphabet_size
            for d in range(known or 1, depth):
                last = np.arange(vec.size) % M
                vec = (vec[:, None] * self.transition[last]).ravel()
            out = _freeze(vec)
            cache[depth] = out
        return cache[depth]

    def entropy_rate(self) -> float:
        """Per-symbol entropy in bits: sum_i pi_i * H(row_i)."""
        P = self.transition
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(P > 0, -P * np.log2(np.where(P > 0, P, 1.0)), 0.0)
        return float(self.stationary @ terms.sum(axis=1))


@dataclass(frozen=True, eq=False)
class MixtureSystem:
    """Finite convex mixture of Markov systems over one alphabet."""

    components: tuple
    weights: np.ndarray

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        for c in comps:
            if not isinstance(c, MarkovSystem):
                raise ValueError("mixture components must be MarkovSystem instances")
        M = comps[0].alphabet_size
        if any(c.alphabet_size != M for c in comps):
            raise ValueError("mixture components must share one alphabet")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(comps),):
            raise ValueError(f"weights shape {w.shape} does not match {len(comps)} components")
        if (w < 0).any():
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", _freeze(w))

    @property
    def alphabet_size(self) -> int:
        return self.components[0].alphabet_size

    def cylinder_measures(self, depth: int) -> np.ndarray:
        vec = np.zeros(self.alphabet_size**depth)
        for w, comp in zip(self.weights, self.components):
            vec += w * comp.cylinder_measures(depth)
        return vec


System = Union[MarkovSystem, MixtureSystem]


def parse_word(text: str, alphabet_size: int) -> Word:
    """Parse a digit-string word like "0121"; names the bad symbol on error."""
    if not text:
        raise ValueError("empty word")
    out = []
    for ch in text:
        if not ch.isdigit() or int(ch) >= alphabet_size:
            raise ValueError(
                f"word '{text}': symbol '{ch}' outside alphabet of size {alphabet_size}"
            )
        out.append(int(ch))
    return tuple(out)


def format_word(word: Word) -> str:
    return "".join(str(s) for s in word)


def word_index(word: Word, alphabet_size: int) -> int:
    idx = 0
    for s in word:
        idx = idx * alphabet_size + s
    return idx


def index_word(index: int, depth: int, alphabet_size: int) -> Word:
    out = []
    for _ in range(depth):
        index, s = divmod(index, alphabet_size)
        out.append(s)
    return tuple(reversed(out))


def _check_word(word: Word, alphabet_size: int) -> Word:
    word = tuple(word)
    if not word:
        raise ValueError("word must have depth >= 1")
    for s in word:
        if not (0 <= int(s) < alphabet_size):
            raise ValueError(
                f"word {format_word(word)!r}: symbol {s} outside alphabet of size {alphabet_size}"
            )
    return word


def word_measure(system: System, word: Word) -> float:
    """Measure of the cylinder fixed by `word` at the origin."""
    word = _check_word(word, system.alphabet_size)
    if isinstance(system, MixtureSystem):
        return float(
            sum(w * word_measure(c, word) for w, c in zip(system.weights, system.components))
        )
    p = float(system.stationary[word[0]])
    for a, b in zip(word, word[1:]):
        p *= float(system.transition[a, b])
    return p


def set_measure(system: System, words: Iterable[Word]) -> float:
    """Measure of a finite union of same-depth cylinders."""
    words = [tuple(w) for w in words]
    if not words:
        return 0.0
    depth = len(words[0])
    for w in words:
        if len(w) != depth:
            raise ValueError(
                f"mixed depths in word set: {format_word(words[0])!r} vs {format_word(w)!r}"
            )
    return float(sum(word_measure(system, w) for w in set(words)))


def sample_orbit(system: System, length: int, seed: int) -> Word:
    """Deterministic sample path of the given length for the given seed."""
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = np.random.default_rng(seed)
    if isinstance(system, MixtureSystem):
        comp = system.components[int(rng.choice(len(system.components), p=system.weights))]
        return _sample_markov(comp, length, rng)
    return _sample_markov(system, length, rng)


def _sample_markov(system: MarkovSystem, length: int, rng: np.random.Generator) -> Word:
    M = system.alphabet_size
    out = [int(rng.choice(M, p=system.stationary))]
    for _ in range(length - 1):
        out.append(int(rng.choice(M, p=system.transition[out[-1]])))
    return tuple(out)


def block_system(system: System, block: int) -> System:
    """The same measure viewed on the alphabet of length-`block` words.

    Symbols of the new system are base words of length `block`; its
    transition law is the `block`-step law and its stationary vector
    assigns each block word its cylinder measure.
    """
    if block < 1:
        raise ValueError("block must be >= 1")
    if isinstance(system, MixtureSystem):
        return MixtureSystem(
            tuple(block_system(c, block) for c in system.components), system.weights
        )
    M = system.alphabet_size
    size = M**block
    pi = np.array([word_measure(system, index_word(i, block, M)) for i in range(size)])
    P = np.zeros((size, size))
    for a in range(size):
        wa = index_word(a, block, M)
        for b in range(size):
            wb = index_word(b, block, M)
            p = float(system.transition[wa[-1], wb[0]])
            for x, y in zip(wb, wb[1:]):
                p *= float(system.transition[x, y])
            P[a, b] = p
    return MarkovSystem(P, pi)


def system_from_config(cfg: dict) -> System:
    """Build a system from a JSON-compatible mapping.

    Accepted shapes: {"type": "bernoulli", "probs": [...]},
    {"type": "markov", "matrix": [[...], ...]} and
    {"type": "mixture", "components": [...], "weights": [...]}.
    """
    if not isinstance(cfg, dict):
        raise ConfigError(f"system: expected an object, got {type(cfg).__name__}")
    kind = cfg.get("type")
    if kind == "bernoulli":
        if "probs" not in cfg:
            raise ConfigError("system.probs: missing for type 'bernoulli'")
        try:
            return MarkovSystem.bernoulli(cfg["probs"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"system.probs: {exc}") from exc
    if kind == "markov":
        if "matrix" not in cfg:
            raise ConfigError("system.matrix: missing for type 'markov'")
        try:
            return MarkovSystem.from_matrix(cfg["matrix"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"system.matrix: {exc}") from exc
    if kind == "mixture":
        comps = cfg.get("components")
        if not isinstance(comps, list) or not comps:
            raise ConfigError("system.components: must be a nonempty list")
        built = []
        for i, sub in enumerate(comps):
            if isinstance(sub, dict) and sub.get("type") == "mixture":
                raise ConfigError(f"system.components[{i}]: nested mixtures are not supported")
            comp = system_from_config(sub)
            built.append(comp)
        try:
            return MixtureSystem(tuple(built), np.asarray(cfg.get("weights"), dtype=float))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"system.weights: {exc}") from exc
    raise ConfigError(f"system.type: expected bernoulli|markov|mixture, got {kind!r}")
