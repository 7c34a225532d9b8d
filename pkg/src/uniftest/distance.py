"""Exact ground-truth oracles on explicit families.

Distance to intersecting is the minimum vertex cover of the disjointness
graph (members adjacent iff disjoint).  Cross-intersecting distance is a
bipartite vertex cover, i.e. a maximum matching by König's theorem.

Graphs here are small, so adjacency is kept as Python-int bitsets over
vertex indices.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .combinatorics import binomial, colex_masks, elements_to_mask, mask_to_elements
from .errors import BudgetExceeded, ValidationError
from .family import ExplicitFamily, _check_family_params
from .rational import as_fraction, below, exceeds

DEFAULT_MAX_EDGES = 20_000


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


@dataclass(frozen=True)
class DisjointnessGraph:
    """Members of a family (by colex rank) joined when disjoint."""

    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[int, ...]

    @classmethod
    def from_family(cls, family: ExplicitFamily, max_edges: int | None = DEFAULT_MAX_EDGES):
        ranks = tuple(int(r) for r in family.ranks())
        masks = family.masks()
        size = len(ranks)
        # count before materializing so oversized instances fail fast
        n_edges = 0
        for i in range(size):
            n_edges += int(np.count_nonzero((masks[i + 1:] & masks[i]) == 0))
            if max_edges is not None and n_edges > max_edges:
                raise BudgetExceeded(
                    f"instance too large for exact oracle: more than {max_edges} disjoint pairs"
                )
        adj = [0] * size
        edges = []
        for i in range(size):
            for off in np.flatnonzero((masks[i + 1:] & masks[i]) == 0):
                j = i + 1 + int(off)
                adj[i] |= 1 << j
                adj[j] |= 1 << i
                edges.append((ranks[i], ranks[j]))
        return cls(ranks, tuple(edges), tuple(adj))


# -- minimum vertex cover -----------------------------------------------------


def _greedy_matching_size(adj: Sequence[int], alive: int) -> int:
    size = 0
    rest = alive
    while rest:
        v = (rest & -rest).bit_length() - 1
        rest &= ~(1 << v)
        nb = adj[v] & rest
        if nb:
            u = (nb & -nb).bit_length() - 1
            rest &= ~(1 << u)
            size += 1
    return size


def _clique_cover_size(adj: Sequence[int], alive: int) -> int:
    """Greedy partition of ``alive`` into cliques; bounds the independence number."""
    count = 0
    rest = alive
    while rest:
        v = (rest & -rest).bit_length() - 1
        clique = 1 << v
        cand = adj[v] & rest
        while cand:
            u = (cand & -cand).bit_length() - 1
            clique |= 1 << u
            cand &= adj[u]
        rest &= ~clique
        count += 1
    return count


def _lower_bound(adj: Sequence[int], alive: int) -> int:
    size = _popcount(alive)
    return max(_greedy_matching_size(adj, alive), size - _clique_cover_size(adj, alive))


def _reduce(adj: Sequence[int], alive: int) -> tuple[int, int]:
    """Drop isolated vertices and take the neighbour of every pendant vertex."""
    taken = 0
    changed = True
    while changed:
        changed = False
        for v in _bits(alive):
            if not alive >> v & 1:
                continue
            nb = adj[v] & alive
            if nb == 0:
                alive &= ~(1 << v)
                changed = True
            elif nb & (nb - 1) == 0:
                alive &= ~(nb | (1 << v))
                taken += 1
                changed = True
    return alive, taken


def _components(adj: Sequence[int], alive: int) -> list[int]:
    comps = []
    rest = alive
    while rest:
        seed = rest & -rest
        comp = seed
        frontier = seed
        while frontier:
            nxt = 0
            for v in _bits(frontier):
                nxt |= adj[v]
            nxt &= rest & ~comp
            comp |= nxt
            frontier = nxt
        comps.append(comp)
        rest &= ~comp
    return comps


def _greedy_cover(adj: Sequence[int], alive: int) -> int:
    taken = 0
    while True:
        alive, t = _reduce(adj, alive)
        taken += t
        if not alive:
            return taken
        v = max(_bits(alive), key=lambda x: _popcount(adj[x] & alive))
        alive &= ~(1 << v)
        taken += 1


def _cover_component(adj: Sequence[int], alive: int) -> int:
    best = _greedy_cover(adj, alive)

    def search(alive: int, cost: int) -> None:
        nonlocal best
        alive, t = _reduce(adj, alive)
        cost += t
        if not alive:
            best = min(best, cost)
            return
        if cost + _lower_bound(adj, alive) >= best:
            return
        comps = _components(adj, alive)
        if len(comps) > 1:
            # components are independent; solve each exactly and add up
            total = cost + sum(_cover_component(adj, c) for c in comps)
            best = min(best, total)
            return
        v = max(_bits(alive), key=lambda x: _popcount(adj[x] & alive))
        nb = adj[v] & alive
        search(alive & ~(nb | (1 << v)), cost + _popcount(nb))
        search(alive & ~(1 << v), cost + 1)

    search(alive, 0)
    return best


def min_vertex_cover_size(adj: Sequence[int]) -> int:
    """Exact minimum vertex cover of a graph given as bitset adjacency."""
    alive, taken = _reduce(adj, (1 << len(adj)) - 1)
    return taken + sum(_cover_component(adj, c) for c in _components(adj, alive))


def exact_distance(family: ExplicitFamily, max_edges: int | None = DEFAULT_MAX_EDGES) -> int:
    """Minimum number of members to delete so the rest is intersecting."""
    graph = DisjointnessGraph.from_family(family, max_edges)
    return min_vertex_cover_size(graph.adjacency)


def is_far(family: ExplicitFamily, eps, max_edges: int | None = DEFAULT_MAX_EDGES) -> bool:
    return exceeds(exact_distance(family, max_edges), as_fraction(eps), family.total)


# -- matchings ------------------------------------------------------------------


def _greedy_disjoint_matching(masks: np.ndarray) -> list[tuple[int, int]]:
    size = masks.shape[0]
    free = np.ones(size, dtype=bool)
    pairs = []
    for i in range(size):
        if not free[i]:
            continue
        cand = np.flatnonzero(free[i + 1:] & ((masks[i + 1:] & masks[i]) == 0))
        if cand.size:
            j = i + 1 + int(cand[0])
            free[i] = free[j] = False
            pairs.append((i, j))
    return pairs


def matching_bounds(family: ExplicitFamily) -> tuple[int, int]:
    """``(|M|, 2|M|)`` for a greedy maximal matching M of disjoint members.

    Any matching forces ``|M|`` deletions and deleting both ends of a
    maximal one leaves an intersecting family, so the exact distance lies
    in between.
    """
    size = len(_greedy_disjoint_matching(family.masks()))
    return size, 2 * size


def matching_certificate(family: ExplicitFamily, pairs: Iterable[tuple[int, int]]) -> int:
    """Validate planted rank pairs as a matching of disjoint members; return its size.

    The size is a lower bound on the distance to intersecting.
    """
    seen: set[int] = set()
    count = 0
    masks = colex_masks(family.n, family.k)
    for a, b in pairs:
        a, b = int(a), int(b)
        if a in seen or b in seen or a == b:
            raise ValidationError(f"pair ({a}, {b}) reuses a set")
        if not (family.bits[a] and family.bits[b]):
            raise ValidationError(f"pair ({a}, {b}) is not inside the family")
        if int(masks[a]) & int(masks[b]):
            raise ValidationError(f"pair ({a}, {b}) is not disjoint")
        seen.update((a, b))
        count += 1
    return count


class _HopcroftKarp:
    """Maximum bipartite matching; left vertices 0..L-1 with neighbour lists."""

    def __init__(self, left_adj: Sequence[Sequence[int]], n_right: int):
        self.adj = left_adj
        self.n_left = len(left_adj)
        self.match_l = [-1] * self.n_left
        self.match_r = [-1] * n_right
        self.dist = [0] * self.n_left

    def _bfs(self) -> bool:
        q = deque()
        inf = float("inf")
        found = False
        for u in range(self.n_left):
            if self.match_l[u] < 0:
                self.dist[u] = 0
                q.append(u)
            else:
                self.dist[u] = inf
        while q:
            u = q.popleft()
            for v in self.adj[u]:
                w = self.match_r[v]
                if w < 0:
                    found = True
                elif self.dist[w] == inf:
                    self.dist[w] = self.dist[u] + 1
                    q.append(w)
        return found

    def _dfs(self, u: int) -> bool:
        for v in self.adj[u]:
            w = self.match_r[v]
            if w < 0 or (self.dist[w] == self.dist[u] + 1 and self._dfs(w)):
                self.match_l[u] = v
                self.match_r[v] = u
                return True
        self.dist[u] = float("inf")
        return False

    def run(self) -> int:
        size = 0
        while self._bfs():
            for u in range(self.n_left):
                if self.match_l[u] < 0 and self._dfs(u):
                    size += 1
        return size


def cross_cover_size(left: np.ndarray, right: np.ndarray, max_edges: int | None = DEFAULT_MAX_EDGES) -> int:
    """Minimum deletions making every ``left`` mask meet every ``right`` mask."""
    left_adj = [np.flatnonzero((right & m) == 0).tolist() for m in left]
    n_edges = sum(len(a) for a in left_adj)
    if max_edges is not None and n_edges > max_edges:
        raise BudgetExceeded(
            f"instance too large for exact oracle: {n_edges} cross-disjoint pairs > {max_edges}"
        )
    return _HopcroftKarp(left_adj, int(right.shape[0])).run()


def cross_distance(
    f1: ExplicitFamily, f2: ExplicitFamily, max_edges: int | None = DEFAULT_MAX_EDGES
) -> int:
    """Distance of ``(f1, f2)`` from cross-intersecting.

    A set in both families is two separate vertices and is counted once per
    side if removed from both.
    """
    if (f1.n, f1.k) != (f2.n, f2.k):
        raise ValidationError("families live in different universes")
    return cross_cover_size(f1.masks(), f2.masks(), max_edges)


# -- restrictions and capture ------------------------------------------------------


@dataclass(frozen=True)
class RestrictionSpec:
    """Fix the intersection with ``A`` to be exactly ``B``."""

    A: frozenset[int]
    B: frozenset[int]

    def __init__(self, A: Iterable[int], B: Iterable[int]):
        a, b = frozenset(int(x) for x in A), frozenset(int(x) for x in B)
        if not b <= a:
            raise ValidationError(f"B = {sorted(b)} is not a subset of A = {sorted(a)}")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)


def _restrict_bits(family: ExplicitFamily, a_mask: int, b_mask: int) -> np.ndarray:
    traces = colex_masks(family.n, family.k) & a_mask
    return family.bits & (traces == b_mask)


def restriction(family: ExplicitFamily, spec: RestrictionSpec) -> ExplicitFamily:
    """Members ``F`` with ``F & A == B``."""
    if spec.A and (min(spec.A) < 1 or max(spec.A) > family.n):
        raise ValidationError(f"A = {sorted(spec.A)} is not a subset of [1..{family.n}]")
    return ExplicitFamily(
        family.n, family.k, _restrict_bits(family, elements_to_mask(spec.A), elements_to_mask(spec.B))
    )


def captures(family: ExplicitFamily, A: Iterable[int], eps) -> bool:
    """True iff fewer than ``eps * C(n, k)`` members avoid ``A``."""
    avoiding = int(_restrict_bits(family, elements_to_mask(A), 0).sum())
    return below(avoiding, as_fraction(eps), family.total)


def useful_sets(family: ExplicitFamily, threshold) -> int:
    """Number of members disjoint from at least ``threshold`` members."""
    masks = family.masks()
    if threshold <= 0:
        return int(masks.shape[0])
    count = 0
    for m in masks:
        if np.count_nonzero((masks & m) == 0) >= threshold:
            count += 1
    return count


# -- far restrictions -----------------------------------------------------------


def _subsets_upto(elements: Sequence[int], size: int):
    for s in range(size + 1):
        yield from itertools.combinations(elements, s)


def _disjoint_trace_pairs(elements: Sequence[int]):
    """All (B, C) with B, C disjoint subsets of ``elements``, in lexicographic order."""
    out = []
    for labels in itertools.product((0, 1, 2), repeat=len(elements)):
        b = tuple(e for e, l in zip(elements, labels) if l == 1)
        c = tuple(e for e, l in zip(elements, labels) if l == 2)
        out.append((b, c))
    out.sort()
    return out


@dataclass(frozen=True)
class FarRestriction:
    """Triple ``(A, B, C)`` plus the certificates it was accepted with."""

    A: frozenset[int]
    B: frozenset[int]
    C: frozenset[int]
    level: Fraction
    cross_distance: int

    def __iter__(self):
        return iter((self.A, self.B, self.C))


def check_far_restriction(
    family: ExplicitFamily, A: Iterable[int], B: Iterable[int], C: Iterable[int], r: int, eps
) -> bool:
    """Re-verify both certificates of a triple at level ``eps / 3^(r^2)``.

    1. ``(F(A|B), F(A|C))`` is far from cross-intersecting at that level;
    2. no subset of ``[n] - A`` of size ``<= r - 1`` captures ``F(A|C)`` at that level.
    """
    e = as_fraction(eps)
    level = e / 3 ** (r * r)
    A, B, C = frozenset(A), frozenset(B), frozenset(C)
    if not (B <= A and C <= A and not B & C):
        return False
    a, b, c = elements_to_mask(A), elements_to_mask(B), elements_to_mask(C)
    masks = family.masks()
    traces = masks & a
    f1 = masks[traces == b]
    f2 = masks[traces == c]
    if not exceeds(cross_cover_size(f1, f2, None), level, family.total):
        return False
    outside = [x for x in range(1, family.n + 1) if x not in A]
    for sub in _subsets_upto(outside, r - 1):
        if below(int(np.count_nonzero((f2 & elements_to_mask(sub)) == 0)), level, family.total):
            return False
    return True


def search_far_restriction(
    family: ExplicitFamily,
    r: int,
    eps,
    max_sets: int = 120,
    max_universe: int = 10,
) -> FarRestriction | None:
    """Find ``(A, B, C)`` with a far restricted pair and no small capturing set.

    Follows the inductive construction: starting from ``A = B = C = {}``, for
    ``t = 1..r`` look for a set ``A'`` outside ``A`` of size ``<= r`` that
    captures ``F(A|C)`` at level ``eps / 3^(r t)``; if there is none, stop;
    otherwise split ``A'`` into disjoint traces ``(B', C')`` keeping the
    restricted pair far at that level and recurse.  Candidate ``A'`` are tried
    by size then lexicographically, trace pairs by decreasing exact
    cross-distance then lexicographically; the search backtracks when the
    final certificates fail.  Returns ``None`` when ``(F, F)`` is not
    ``eps``-far from cross-intersecting.
    """
    if r < 1:
        raise ValidationError(f"r must be >= 1, got {r}")
    if family.total > max_sets or family.n > max_universe:
        raise BudgetExceeded(
            f"exhaustive search needs C(n,k) <= {max_sets} and n <= {max_universe}, "
            f"got C({family.n},{family.k}) = {family.total}"
        )
    e = as_fraction(eps)
    total = family.total
    masks = family.masks()
    if not exceeds(cross_cover_size(masks, masks, None), e, total):
        return None
    n = family.n

    def split(a_mask: int, x_mask: int):
        traces = masks & a_mask
        return masks[traces == x_mask]

    def dfs(A: tuple[int, ...], B: tuple[int, ...], C: tuple[int, ...], t: int):
        a_mask, c_mask = elements_to_mask(A), elements_to_mask(C)
        f2 = split(a_mask, c_mask)
        capturing = []
        if t <= r:
            level = e / 3 ** (r * t)
            outside = [x for x in range(1, n + 1) if x not in A]
            for sub in _subsets_upto(outside, r):
                avoid = int(np.count_nonzero((f2 & elements_to_mask(sub)) == 0))
                if below(avoid, level, total):
                    capturing.append(sub)
        if not capturing:
            if check_far_restriction(family, A, B, C, r, e):
                return A, B, C
            return None
        for sub in capturing:
            A2 = tuple(sorted(A + sub))
            scored = []
            for b2, c2 in _disjoint_trace_pairs(sub):
                B2, C2 = tuple(sorted(B + b2)), tuple(sorted(C + c2))
                a2 = elements_to_mask(A2)
                d = cross_cover_size(split(a2, elements_to_mask(B2)), split(a2, elements_to_mask(C2)), None)
                if exceeds(d, level, total):
                    scored.append((-d, b2, c2, B2, C2))
            scored.sort(key=lambda s: s[:3])
            for _, _, _, B2, C2 in scored:
                found = dfs(A2, B2, C2, t + 1)
                if found is not None:
                    return found
        return None

    found = dfs((), (), (), 1)
    if found is None:
        return None
    A, B, C = (frozenset(x) for x in found)
    a = elements_to_mask(A)
    d = cross_cover_size(split(a, elements_to_mask(B)), split(a, elements_to_mask(C)), None)
    return FarRestriction(A, B, C, e / 3 ** (r * r), d)


# -- counting step behind the general-r analysis -------------------------------------


def witness_collection(
    family: ExplicitFamily, r: int, rng: np.random.Generator | None = None, avoid: Iterable[int] = ()
) -> list[int] | None:
    """Build the sampled collection R used in the general-r argument.

    Pick ``F`` in the family; for every ``j1`` in ``F - avoid`` a member
    missing ``j1``; for every ``j2`` in that member a member missing
    ``{j1, j2}``; and so on to depth ``r - 1``.  Members are chosen uniformly
    at random when ``rng`` is given, else the first in colex order.  Returns
    the masks of R, or ``None`` if some required member does not exist.
    """
    masks = family.masks()
    avoid_mask = elements_to_mask(avoid)
    if masks.shape[0] == 0:
        return None

    def pick(exclude: int) -> int | None:
        cand = np.flatnonzero((masks & exclude) == 0)
        if cand.size == 0:
            return None
        i = int(cand[rng.integers(0, cand.size)]) if rng is not None else int(cand[0])
        return int(masks[i])

    root = pick(0)
    if root is None:
        return None
    collection = [root]
    level = [(0, root)]  # (chosen elements j1..ji as mask, set to branch on)
    for _ in range(r - 1):
        nxt = []
        for chosen, member in level:
            for j in mask_to_elements(member & ~avoid_mask):
                path = chosen | (1 << (j - 1))
                got = pick(path)
                if got is None:
                    return None
                collection.append(got)
                nxt.append((path, got))
        level = nxt
    return collection


def count_hitting_all(n: int, k: int, collection: Sequence[int]) -> int:
    """Number of k-subsets of [n] meeting every mask in ``collection``."""
    _check_family_params(n, k)
    masks = colex_masks(n, k)
    ok = np.ones(masks.shape[0], dtype=bool)
    for m in collection:
        ok &= (masks & m) != 0
    return int(ok.sum())


def hitting_bound(n: int, k: int, r: int) -> int:
    """``k^r * C(n - r, k - r)``."""
    return k**r * binomial(n - r, k - r)
