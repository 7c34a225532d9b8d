"""Binomials, colex ranking of k-subsets, and uniform sampling.

Sets are 1-based (elements of ``[n] = {1..n}``).  Internally a set is also
carried as a bitmask with bit ``e - 1`` standing for element ``e``, which
makes disjointness a single ``&``.

Colex rank of ``{e_0 < e_1 < ... < e_{k-1}}`` is ``sum_i C(e_i - 1, i + 1)``.

RNG contract: every sampler takes a :class:`numpy.random.Generator`
(PCG64 via :func:`numpy.random.default_rng`).  Reproducible substreams are
derived with :func:`substream`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ValidationError

UINT64_MAX = 2**64 - 1


class BinomialTable:
    """Immutable table of exact binomials ``C(a, b)`` for ``0 <= a <= n_max``.

    Only columns ``b <= k_max`` are stored (all of them by default).  Any
    stored entry that does not fit in an unsigned 64-bit integer makes the
    constructor raise :class:`OverflowError`.
    """

    __slots__ = ("n_max", "k_max", "_rows")

    def __init__(self, n_max: int, k_max: int | None = None):
        if n_max < 0:
            raise ValidationError(f"n_max must be >= 0, got {n_max}")
        k_max = n_max if k_max is None else min(k_max, n_max)
        if k_max < 0:
            raise ValidationError(f"k_max must be >= 0, got {k_max}")
        rows: list[tuple[int, ...]] = []
        prev: tuple[int, ...] = ()
        for a in range(n_max + 1):
            width = min(a, k_max) + 1
            row = [1] * width
            for b in range(1, width):
                left = prev[b - 1]
                right = prev[b] if b < len(prev) else 0
                row[b] = left + right
                if row[b] > UINT64_MAX:
                    raise OverflowError(
                        f"C({a},{b}) = {row[b]} exceeds the unsigned 64-bit range"
                    )
            prev = tuple(row)
            rows.append(prev)
        self.n_max = n_max
        self.k_max = k_max
        self._rows = tuple(rows)

    def __call__(self, n: int, k: int) -> int:
        if k < 0 or n < 0:
            raise ValidationError(f"binomial arguments must be >= 0, got ({n}, {k})")
        if k > n:
            return 0
        if n > self.n_max or k > self.k_max:
            raise ValidationError(
                f"C({n},{k}) is outside the table (n_max={self.n_max}, k_max={self.k_max})"
            )
        return self._rows[n][k]

    def __repr__(self) -> str:
        return f"BinomialTable(n_max={self.n_max}, k_max={self.k_max})"


@lru_cache(maxsize=64)
def table_for(n: int, k: int) -> BinomialTable:
    """Shared table large enough for all binomials a k-subset of [n] needs."""
    return BinomialTable(n, k)


def binomial(n: int, k: int) -> int:
    """Exact ``C(n, k)`` of any size; 0 when ``k > n``."""
    if k < 0 or n < 0:
        raise ValidationError(f"binomial arguments must be >= 0, got ({n}, {k})")
    return math.comb(n, k)


def elements_to_mask(elements: Iterable[int]) -> int:
    mask = 0
    for e in elements:
        mask |= 1 << (e - 1)
    return mask


def mask_to_elements(mask: int) -> tuple[int, ...]:
    out = []
    e = 1
    while mask:
        if mask & 1:
            out.append(e)
        mask >>= 1
        e += 1
    return tuple(out)


@dataclass(frozen=True, slots=True)
class KSubset:
    """A k-element subset of [n], elements strictly increasing."""

    elements: tuple[int, ...]
    n: int
    mask: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        elems = tuple(int(e) for e in self.elements)
        object.__setattr__(self, "elements", elems)
        if not elems:
            raise ValidationError("a KSubset needs at least one element")
        if len(elems) > self.n:
            raise ValidationError(f"{len(elems)} elements do not fit in [{self.n}]")
        prev = 0
        for e in elems:
            if e <= prev:
                raise ValidationError(f"elements must be strictly increasing: {elems}")
            prev = e
        if elems[-1] > self.n:
            raise ValidationError(f"element {elems[-1]} outside [1..{self.n}]")
        object.__setattr__(self, "mask", elements_to_mask(elems))

    @property
    def k(self) -> int:
        return len(self.elements)

    @classmethod
    def from_mask(cls, mask: int, n: int) -> KSubset:
        return cls(mask_to_elements(mask), n)

    @classmethod
    def parse(cls, text: str, n: int) -> KSubset:
        """Parse the text form ``"1 3 7"``."""
        try:
            elems = tuple(int(tok) for tok in text.split())
        except ValueError as exc:
            raise ValidationError(f"not a list of integers: {text!r}") from exc
        return cls(elems, n)

    def __str__(self) -> str:
        return " ".join(map(str, self.elements))

    def __iter__(self) -> Iterator[int]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, e: object) -> bool:
        return isinstance(e, int) and 1 <= e <= self.n and bool(self.mask >> (e - 1) & 1)


def rank(s: KSubset) -> int:
    """Colexicographic rank of ``s`` among the k-subsets of [n]."""
    table = table_for(s.n, s.k)
    return sum(table(e - 1, i + 1) for i, e in enumerate(s.elements))


def rank_mask(mask: int, n: int, k: int) -> int:
    table = table_for(n, k)
    r = 0
    i = 1
    e = 0
    while mask:
        if mask & 1:
            r += table(e, i)
            i += 1
        mask >>= 1
        e += 1
    return r


def _unrank_elements(idx: int, n: int, k: int) -> list[int]:
    table = table_for(n, k)
    total = table(n, k)
    if not 0 <= idx < total:
        raise ValidationError(f"rank {idx} outside [0, C({n},{k}) = {total})")
    out = [0] * k
    a = n
    for i in range(k, 0, -1):
        # largest a with C(a, i) <= idx; element is a + 1
        a -= 1
        while table(a, i) > idx:
            a -= 1
        idx -= table(a, i)
        out[i - 1] = a + 1
    return out


def unrank(idx: int, n: int, k: int) -> KSubset:
    """Inverse of :func:`rank`."""
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= k <= n, got n={n}, k={k}")
    return KSubset(tuple(_unrank_elements(int(idx), n, k)), n)


def unrank_mask(idx: int, n: int, k: int) -> int:
    return elements_to_mask(_unrank_elements(int(idx), n, k))


@lru_cache(maxsize=16)
def colex_masks(n: int, k: int) -> np.ndarray:
    """Bitmasks of all k-subsets of [n], indexed by colex rank (read-only).

    dtype is uint64 for ``n <= 64`` and Python ints (object) beyond.
    """
    if n < 0 or k < 0:
        raise ValidationError(f"need n, k >= 0, got n={n}, k={k}")
    dtype = np.uint64 if n <= 64 else object
    # column b holds the colex list of b-subsets of [a]; grow a = 0..n
    cols = [np.zeros(1, dtype=dtype)] + [np.zeros(0, dtype=dtype) for _ in range(k)]
    for a in range(n):
        bit = 1 << a
        for b in range(min(k, a + 1), 0, -1):
            cols[b] = np.concatenate([cols[b], cols[b - 1] | bit])
    out = cols[k]
    out.flags.writeable = False
    return out


def iter_ksubsets(n: int, k: int) -> Iterator[KSubset]:
    """All k-subsets of [n] in colex order."""
    for idx in range(binomial(n, k)):
        yield unrank(idx, n, k)


def _check_nk(n: int, k: int) -> None:
    if not 1 <= k <= n:
        raise ValidationError(f"need n >= k >= 1, got n={n}, k={k}")


def sample_rank(n: int, k: int, rng: np.random.Generator) -> int:
    _check_nk(n, k)
    return int(rng.integers(0, binomial(n, k), dtype=np.uint64))


def sample_ranks(n: int, k: int, m: int, rng: np.random.Generator) -> list[int]:
    """``m`` independent uniform colex ranks (with replacement)."""
    _check_nk(n, k)
    if m < 0:
        raise ValidationError(f"sample count must be >= 0, got {m}")
    return [int(x) for x in rng.integers(0, binomial(n, k), size=m, dtype=np.uint64)]


def sample_ksubset(n: int, k: int, rng: np.random.Generator) -> KSubset:
    """Uniform k-subset of [n] by unranking a uniform index."""
    return unrank(sample_rank(n, k, rng), n, k)


def sample_disjoint_pair_masks(n: int, k: int, rng: np.random.Generator) -> tuple[int, int]:
    if n < 2 * k:
        raise ValidationError(f"no disjoint pair of {k}-subsets exists in [{n}]")
    _check_nk(n, k)
    a_mask = unrank_mask(int(rng.integers(0, binomial(n, k), dtype=np.uint64)), n, k)
    rest = [e for e in range(1, n + 1) if not a_mask >> (e - 1) & 1]
    picks = _unrank_elements(int(rng.integers(0, binomial(n - k, k), dtype=np.uint64)), n - k, k)
    b_mask = elements_to_mask(rest[p - 1] for p in picks)
    return a_mask, b_mask


def sample_disjoint_pair(n: int, k: int, rng: np.random.Generator) -> tuple[KSubset, KSubset]:
    """Uniform unordered pair of disjoint k-subsets.

    ``A`` is uniform over all k-subsets and ``B`` uniform over the k-subsets
    of the complement, so the ordered pair is uniform over ordered disjoint
    pairs and the unordered pair is uniform as well.  The pair is returned
    ordered by colex rank.
    """
    a_mask, b_mask = sample_disjoint_pair_masks(n, k, rng)
    a, b = KSubset.from_mask(a_mask, n), KSubset.from_mask(b_mask, n)
    return (a, b) if rank(a) < rank(b) else (b, a)


def are_disjoint(a: KSubset, b: KSubset) -> bool:
    if a.n != b.n:
        raise ValidationError(f"universe mismatch: [{a.n}] vs [{b.n}]")
    return a.mask & b.mask == 0


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, key...)``.

    Uses ``SeedSequence(seed, spawn_key=key)``, i.e. the same stream
    ``SeedSequence(seed).spawn`` would hand out, but addressable by index so
    results do not depend on scheduling order.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def substream_seed(seed: int, *key: int) -> int:
    """64-bit integer seed derived from ``(seed, key...)``."""
    state = np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1, np.uint64)
    return int(state[0])


def as_generator(rng: np.random.Generator | int | None) -> tuple[np.random.Generator, int | None]:
    """Accept a Generator or an integer seed; return the generator and the seed if known."""
    if isinstance(rng, np.random.Generator):
        return rng, None
    if rng is None:
        raise ValidationError("an rng or integer seed is required")
    seed = int(rng)
    if not 0 <= seed <= UINT64_MAX:
        raise ValidationError(f"seed must fit in 64 unsigned bits, got {seed}")
    return np.random.default_rng(seed), seed


def subset_mask(elements: Sequence[int] | frozenset[int] | set[int], n: int) -> int:
    """Bitmask for an arbitrary subset of [n] (any size, including empty)."""
    mask = 0
    for e in elements:
        e = int(e)
        if not 1 <= e <= n:
            raise ValidationError(f"element {e} outside [1..{n}]")
        mask |= 1 << (e - 1)
    return mask
