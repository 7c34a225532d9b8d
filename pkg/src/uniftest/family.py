"""Family representations and instance generators.

An :class:`ExplicitFamily` is a bitmap over the colex ranks of all
k-subsets of [n].  Testers never touch it directly; they go through a
:class:`FamilyOracle`, which counts and logs every query.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .combinatorics import (
    KSubset,
    binomial,
    colex_masks,
    elements_to_mask,
    mask_to_elements,
    rank,
    rank_mask,
    subset_mask,
    unrank,
)
from .errors import FamilyParseError, InsufficientMatching, ValidationError
from .rational import as_fraction

MAX_BITMAP_BITS = 2**26


def _check_family_params(n: int, k: int) -> None:
    if k < 1 or n < 2 * k:
        raise ValidationError(f"families need n >= 2k >= 2, got n={n}, k={k}")


class ExplicitFamily:
    """A subfamily of the k-subsets of [n], stored as a read-only bitmap."""

    __slots__ = ("n", "k", "bits", "member_count")

    def __init__(self, n: int, k: int, bits: np.ndarray | None = None, *, allow_large: bool = False):
        _check_family_params(n, k)
        total = binomial(n, k)
        if total > MAX_BITMAP_BITS and not allow_large:
            raise ValidationError(
                f"C({n},{k}) = {total} exceeds the 2^26-bit bitmap cap (pass allow_large=True)"
            )
        if bits is None:
            arr = np.zeros(total, dtype=bool)
        else:
            arr = np.array(bits, dtype=bool, copy=True).reshape(-1)
            if arr.shape[0] != total:
                raise ValidationError(f"bitmap length {arr.shape[0]} != C({n},{k}) = {total}")
        arr.flags.writeable = False
        self.n = n
        self.k = k
        self.bits = arr
        self.member_count = int(arr.sum())

    @classmethod
    def from_ranks(cls, n: int, k: int, ranks: Iterable[int], **kw) -> ExplicitFamily:
        bits = np.zeros(binomial(n, k), dtype=bool)
        idx = np.fromiter((int(r) for r in ranks), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= bits.size):
            raise ValidationError("rank out of range")
        bits[idx] = True
        return cls(n, k, bits, **kw)

    @classmethod
    def from_sets(cls, n: int, k: int, sets: Iterable[Iterable[int]], **kw) -> ExplicitFamily:
        ranks = []
        for s in sets:
            ks = s if isinstance(s, KSubset) else KSubset(tuple(sorted(s)), n)
            if ks.k != k or ks.n != n:
                raise ValidationError(f"{ks} is not a {k}-subset of [{n}]")
            ranks.append(rank(ks))
        return cls.from_ranks(n, k, ranks, **kw)

    @classmethod
    def full(cls, n: int, k: int) -> ExplicitFamily:
        return cls(n, k, np.ones(binomial(n, k), dtype=bool))

    @property
    def total(self) -> int:
        return self.bits.shape[0]

    def ranks(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def masks(self) -> np.ndarray:
        """Bitmasks of the members, in colex order."""
        return colex_masks(self.n, self.k)[self.bits]

    def member_masks(self) -> list[int]:
        return [int(x) for x in self.masks()]

    def members(self) -> Iterator[KSubset]:
        for r in self.ranks():
            yield unrank(int(r), self.n, self.k)

    def contains_rank(self, r: int) -> bool:
        return bool(self.bits[r])

    def __contains__(self, s: object) -> bool:
        if not isinstance(s, KSubset) or s.n != self.n or s.k != self.k:
            return False
        return bool(self.bits[rank(s)])

    def __len__(self) -> int:
        return self.member_count

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExplicitFamily):
            return NotImplemented
        return self.n == other.n and self.k == other.k and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.n, self.k, self.bits.tobytes()))

    def __repr__(self) -> str:
        return f"ExplicitFamily(n={self.n}, k={self.k}, members={self.member_count}/{self.total})"

    def is_intersecting(self) -> bool:
        ms = self.masks()
        for i in range(ms.shape[0]):
            if np.any((ms[i + 1:] & ms[i]) == 0):
                return False
        return True


@dataclass
class FamilyOracle:
    """Counted query access to ``f : C([n], k) -> {0, 1}``.

    ``source`` is either an :class:`ExplicitFamily` or a membership predicate
    on :class:`KSubset`; predicate oracles need no bitmap, so they work past
    the bitmap cap.
    """

    n: int
    k: int
    source: ExplicitFamily | Callable[[KSubset], bool]
    queries_used: int = 0
    query_log: list[tuple[int, int]] = field(default_factory=list)

    @classmethod
    def of(cls, family: ExplicitFamily) -> FamilyOracle:
        return cls(family.n, family.k, family)

    @classmethod
    def from_predicate(cls, n: int, k: int, predicate: Callable[[KSubset], bool]) -> FamilyOracle:
        _check_family_params(n, k)
        return cls(n, k, predicate)

    def _answer(self, r: int) -> int:
        if isinstance(self.source, ExplicitFamily):
            return int(self.source.bits[r])
        return int(bool(self.source(unrank(r, self.n, self.k))))

    def query_rank(self, r: int) -> int:
        r = int(r)
        if not 0 <= r < binomial(self.n, self.k):
            raise ValidationError(f"rank {r} out of range for C({self.n},{self.k})")
        ans = self._answer(r)
        self.queries_used += 1
        self.query_log.append((r, ans))
        return ans

    def query(self, s: KSubset) -> int:
        if s.n != self.n or s.k != self.k:
            raise ValidationError(
                f"query {s} is not a {self.k}-subset of [{self.n}]"
            )
        return self.query_rank(rank(s))

    def reset(self) -> None:
        self.queries_used = 0
        self.query_log.clear()


def star_oracle(n: int, k: int, center: int) -> FamilyOracle:
    """Predicate oracle for the star at ``center``; no bitmap needed."""
    if not 1 <= center <= n:
        raise ValidationError(f"center {center} outside [1..{n}]")
    return FamilyOracle.from_predicate(n, k, lambda s: center in s)


def constant_oracle(n: int, k: int, value: bool) -> FamilyOracle:
    return FamilyOracle.from_predicate(n, k, lambda s: value)


@dataclass(frozen=True)
class Junta:
    """Coordinates ``coords`` (J) and admitted traces ``traces`` (S)."""

    coords: frozenset[int]
    traces: frozenset[frozenset[int]]

    def __init__(self, coords: Iterable[int], traces: Iterable[Iterable[int]]):
        c = frozenset(int(x) for x in coords)
        t = frozenset(frozenset(int(x) for x in tr) for tr in traces)
        for tr in t:
            if not tr <= c:
                raise ValidationError(f"trace {sorted(tr)} is not a subset of J = {sorted(c)}")
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "traces", t)

    @property
    def j(self) -> int:
        return len(self.coords)

    @property
    def coord_mask(self) -> int:
        return elements_to_mask(self.coords)

    @property
    def trace_masks(self) -> frozenset[int]:
        return frozenset(elements_to_mask(t) for t in self.traces)

    def is_intersecting_certified(self) -> bool:
        """Empty trace excluded and all admitted traces pairwise intersect."""
        ms = list(self.trace_masks)
        if 0 in ms:
            return False
        return all(a & b for a, b in itertools.combinations(ms, 2))

    def contains_mask(self, mask: int) -> bool:
        return (mask & self.coord_mask) in self.trace_masks

    def __contains__(self, s: object) -> bool:
        return isinstance(s, KSubset) and self.contains_mask(s.mask)

    def __repr__(self) -> str:
        tr = sorted(sorted(t) for t in self.traces)
        return f"Junta(J={sorted(self.coords)}, S={tr})"


def star_family(n: int, k: int, center: int) -> ExplicitFamily:
    _check_family_params(n, k)
    if not 1 <= center <= n:
        raise ValidationError(f"center {center} outside [1..{n}]")
    return ExplicitFamily(n, k, (colex_masks(n, k) & (1 << (center - 1))) != 0)


def junta_family(n: int, k: int, junta: Junta) -> ExplicitFamily:
    """All k-subsets F with ``F & J`` in ``S``."""
    _check_family_params(n, k)
    if any(not 1 <= c <= n for c in junta.coords):
        raise ValidationError(f"junta coordinates {sorted(junta.coords)} outside [1..{n}]")
    traces = colex_masks(n, k) & junta.coord_mask
    allowed = junta.trace_masks
    return ExplicitFamily(n, k, np.fromiter((int(t) in allowed for t in traces), dtype=bool, count=traces.shape[0]))


def random_family(n: int, k: int, p: float, rng: np.random.Generator) -> ExplicitFamily:
    """Each k-subset independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"p must lie in [0, 1], got {p}")
    _check_family_params(n, k)
    return ExplicitFamily(n, k, rng.random(binomial(n, k)) < p)


# -- Kneser-graph matchings -------------------------------------------------

Pair = tuple[KSubset, KSubset]


def _complement_pairing(n: int, k: int) -> list[tuple[int, int]]:
    masks = colex_masks(n, k)
    full = (1 << n) - 1
    out = []
    for r, m in enumerate(masks):
        m = int(m)
        if m & 1:
            out.append((r, rank_mask(full ^ m, n, k)))
    return out


def _greedy_matching(masks: np.ndarray, rng: np.random.Generator, tries: int = 8) -> np.ndarray:
    """Randomized greedy maximal matching in the disjointness graph on ``masks``.

    Returns ``mate`` with ``mate[i] = j`` or -1.
    """
    size = masks.shape[0]
    mate = np.full(size, -1, dtype=np.int64)
    free = np.ones(size, dtype=bool)
    for u in rng.permutation(size):
        if not free[u]:
            continue
        mu = masks[u]
        v = -1
        # cheap random probes before a full scan
        for cand in rng.integers(0, size, size=tries):
            if free[cand] and cand != u and (masks[cand] & mu) == 0:
                v = int(cand)
                break
        if v < 0:
            cands = np.flatnonzero(free & ((masks & mu) == 0))
            if cands.size == 0:
                continue
            v = int(cands[rng.integers(0, cands.size)])
        mate[u], mate[v] = v, u
        free[u] = free[v] = False
    return mate


def _augment_short_paths(masks: np.ndarray, mate: np.ndarray, rng: np.random.Generator) -> int:
    """Grow the matching along augmenting paths of length 3.

    For a free ``u`` with matched neighbour ``v = mate[w]``, rematch
    ``(u, v)`` and ``(w, x)`` when ``w`` has a free neighbour ``x != u``.
    Returns the number of augmentations made.
    """
    gained = 0
    progress = True
    while progress:
        progress = False
        free_idx = np.flatnonzero(mate < 0)
        for u in rng.permutation(free_idx):
            if mate[u] >= 0:
                continue
            free = mate < 0
            nbrs = np.flatnonzero((masks & masks[u]) == 0)
            done = False
            for v in nbrs:
                w = mate[v]
                if w < 0:
                    if v != u:
                        mate[u], mate[v] = v, u
                        done = True
                        break
                    continue
                xs = np.flatnonzero(free & ((masks & masks[w]) == 0))
                xs = xs[xs != u]
                if xs.size:
                    x = int(xs[0])
                    mate[u], mate[v] = v, u
                    mate[w], mate[x] = x, w
                    done = True
                    break
            if done:
                gained += 1
                progress = True
    return gained


def _matching_pairs(mate: np.ndarray) -> list[tuple[int, int]]:
    return [(int(i), int(mate[i])) for i in range(mate.shape[0]) if mate[i] > i]


def kneser_matching_ranks(
    n: int, k: int, target: int, rng: np.random.Generator, restarts: int = 32
) -> list[tuple[int, int]]:
    """Pairs of colex ranks forming a matching of K(n, k) with >= ``target`` edges."""
    _check_family_params(n, k)
    total = binomial(n, k)
    if target < 0 or target > total // 2:
        raise ValidationError(f"target {target} outside [0, floor(C({n},{k})/2) = {total // 2}]")
    if n == 2 * k:
        return _complement_pairing(n, k)
    masks = colex_masks(n, k)
    best: list[tuple[int, int]] = []
    for _ in range(max(1, restarts)):
        mate = _greedy_matching(masks, rng)
        if int((mate >= 0).sum()) // 2 < target:
            _augment_short_paths(masks, mate, rng)
        pairs = _matching_pairs(mate)
        if len(pairs) > len(best):
            best = pairs
        if len(best) >= target:
            return best
    raise InsufficientMatching(
        f"found a matching of {len(best)} < {target} edges in K({n},{k}) after {restarts} restarts"
    )


def kneser_matching(
    n: int, k: int, target: int, rng: np.random.Generator, restarts: int = 32
) -> list[Pair]:
    """Pairwise-disjoint unordered pairs of disjoint k-subsets.

    For ``n == 2k`` this is the complement pairing (a perfect matching);
    otherwise randomized greedy plus length-3 augmentations, restarted up to
    ``restarts`` times.
    """
    return [
        (unrank(a, n, k), unrank(b, n, k))
        for a, b in kneser_matching_ranks(n, k, target, rng, restarts)
    ]


def dno_size(n: int, k: int, eps) -> int:
    """Smallest integer N with N > eps * C(n, k)."""
    e = as_fraction(eps)
    return math.floor(e * binomial(n, k)) + 1


def sample_dno(
    n: int,
    k: int,
    eps,
    rng: np.random.Generator,
    matching: Sequence[tuple[int, int]] | None = None,
) -> tuple[ExplicitFamily, list[tuple[int, int]]]:
    """Draw from the hard distribution; also return the planted rank pairs.

    ``matching`` (rank pairs) may be supplied to reuse one matching across
    draws, which is what the distribution prescribes: the matching is fixed
    and only the choice of N of its pairs is random.
    """
    _check_family_params(n, k)
    e = as_fraction(eps)
    total = binomial(n, k)
    if not (Fraction(1, total) <= e < Fraction(1, 2)):
        raise ValidationError(f"eps must satisfy 1/C(n,k) <= eps < 1/2, got {e}")
    size = dno_size(n, k, e)
    if matching is None:
        matching = kneser_matching_ranks(n, k, size, rng)
    if len(matching) < size:
        raise InsufficientMatching(f"matching has {len(matching)} < {size} pairs")
    chosen = rng.choice(len(matching), size=size, replace=False)
    chosen.sort()
    planted = [matching[int(i)] for i in chosen]
    bits = np.zeros(total, dtype=bool)
    for a, b in planted:
        bits[a] = bits[b] = True
    return ExplicitFamily(n, k, bits), planted


def dno_family(n: int, k: int, eps, rng: np.random.Generator, matching=None) -> ExplicitFamily:
    return sample_dno(n, k, eps, rng, matching)[0]


# -- text format ------------------------------------------------------------


def format_family(family: ExplicitFamily) -> str:
    lines = [f"{family.n} {family.k}"]
    lines.extend(" ".join(map(str, mask_to_elements(m))) for m in family.member_masks())
    return "\n".join(lines) + "\n"


def parse_family(text: str, path: str | None = None) -> ExplicitFamily:
    header = None
    ranks: set[int] = set()
    n = k = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            nums = [int(tok) for tok in line.split()]
        except ValueError:
            raise FamilyParseError(f"non-integer token in {line!r}", lineno, path) from None
        if header is None:
            if len(nums) != 2:
                raise FamilyParseError(f"header must be 'n k', got {line!r}", lineno, path)
            n, k = nums
            if k < 1 or n < 2 * k:
                raise FamilyParseError(f"invalid header n={n}, k={k}", lineno, path)
            header = (n, k)
            continue
        if len(nums) != k:
            raise FamilyParseError(f"expected {k} elements, got {len(nums)}", lineno, path)
        if any(b <= a for a, b in zip(nums, nums[1:])):
            raise FamilyParseError(f"elements not strictly increasing: {line!r}", lineno, path)
        if nums[0] < 1 or nums[-1] > n:
            raise FamilyParseError(f"element outside [1..{n}]: {line!r}", lineno, path)
        r = rank_mask(subset_mask(nums, n), n, k)
        if r in ranks:
            raise FamilyParseError(f"duplicate member {line!r}", lineno, path)
        ranks.add(r)
    if header is None:
        raise FamilyParseError("missing header line 'n k'", None, path)
    return ExplicitFamily.from_ranks(n, k, sorted(ranks))


def write_family(family: ExplicitFamily, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_family(family))


def read_family(path: str | os.PathLike) -> ExplicitFamily:
    with open(path, encoding="utf-8") as fh:
        return parse_family(fh.read(), str(path))
