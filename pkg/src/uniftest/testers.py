"""The four intersectingness testers and their sample-size rules.

Every tester draws all of its query points from the rng before reading a
single answer, so the multiset of queried ranks depends only on the seed and
the parameters.  Accept/reject thresholds are compared in integer arithmetic.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator


from .combinatorics import (
    binomial,
    rank_mask,
    as_generator,
    sample_disjoint_pair_masks,
    sample_ranks,
    unrank_mask,
)
from .errors import BudgetExceeded, ValidationError
from .family import FamilyOracle, Junta, _check_family_params
from .rational import as_fraction, ceil_fraction

DEFAULT_JUNTA_BUDGET = 10**7


class Verdict(str, enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"


@dataclass(frozen=True)
class JuntaEstimate:
    """Empirical mass of ``F - J`` for one junta: ``alpha = count / m``."""

    junta: Junta
    count: int
    m: int

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.count, self.m)


@dataclass
class TesterReport:
    verdict: Verdict
    queries_used: int
    budget: int
    samples: tuple[int, ...]
    seed: int | None = None
    witness: tuple[int, int] | None = None
    alpha: Fraction | None = None
    estimate: JuntaEstimate | None = None
    params: dict = field(default_factory=dict)

    @property
    def rejected(self) -> bool:
        return self.verdict is Verdict.REJECT


def _check_oracle(oracle: FamilyOracle, n: int, k: int) -> None:
    _check_family_params(n, k)
    if (oracle.n, oracle.k) != (n, k):
        raise ValidationError(
            f"oracle is over C([{oracle.n}], {oracle.k}) but tester was asked for C([{n}], {k})"
        )


def _check_m(m: int, minimum: int = 1) -> int:
    if int(m) != m or m < minimum:
        raise ValidationError(f"sample count m must be an integer >= {minimum}, got {m}")
    return int(m)


# -- sample sizes ------------------------------------------------------------------


def canonical_sample_size(r: int, eps, c=1, k: int | None = None) -> int:
    """Samples for the canonical tester.

    ``r == 2``: ``ceil(12 / eps)``.  Otherwise ``ceil(c * 3^(r^2) * ln(k) / eps)``
    where ``c`` stands for the unspecified constant of the general analysis.
    """
    e = as_fraction(eps)
    if e <= 0:
        raise ValidationError(f"eps must be > 0, got {e}")
    if r == 2:
        return ceil_fraction(12 / e)
    if r < 1:
        raise ValidationError(f"r must be >= 1, got {r}")
    if k is None or k < 1:
        raise ValidationError("general-r sample size needs k >= 1")
    value = float(as_fraction(c)) * 3 ** (r * r) * math.log(k) / float(e)
    return max(1, math.ceil(value))


def junta_sample_size(eps2, j: int, n: int) -> int:
    """``ceil(12 * (j ln n + 2^j + 2) / eps2)``."""
    e = as_fraction(eps2)
    if e <= 0:
        raise ValidationError(f"eps2 must be > 0, got {e}")
    if j < 0 or n < 1:
        raise ValidationError(f"need j >= 0 and n >= 1, got j={j}, n={n}")
    return math.ceil(12 * (j * math.log(n) + 2**j + 2) / float(e))


def density_sample_size(eps2, c=12) -> int:
    """``ceil(c / eps2)``."""
    e = as_fraction(eps2)
    if e <= 0:
        raise ValidationError(f"eps2 must be > 0, got {e}")
    return ceil_fraction(as_fraction(c) / e)


def disjoint_pair_sample_size(eps, c=1) -> int:
    """``ceil(c / eps)`` pairs; ``c = 1`` is the n = 2k analysis."""
    e = as_fraction(eps)
    if e <= 0:
        raise ValidationError(f"eps must be > 0, got {e}")
    return ceil_fraction(as_fraction(c) / e)


# -- junta enumeration -----------------------------------------------------------------


def _intersecting_trace_families(j: int) -> list[tuple[int, ...]]:
    """All trace families over coordinates 0..j-1 (as masks) that are
    empty-free and pairwise intersecting, including the empty family."""
    traces = list(range(1, 1 << j))
    out: list[tuple[int, ...]] = []

    def grow(start: int, chosen: list[int]) -> None:
        out.append(tuple(chosen))
        for i in range(start, len(traces)):
            t = traces[i]
            if all(t & c for c in chosen):
                chosen.append(t)
                grow(i + 1, chosen)
                chosen.pop()

    grow(0, [])
    return out


def _junta_groups(n: int, j: int, budget: int | None):
    if j < 0 or j > n:
        raise ValidationError(f"need 0 <= j <= n, got j={j}, n={n}")
    size = binomial(n, j) * 2 ** (2**j)
    if budget is not None and size > budget:
        raise BudgetExceeded(
            f"junta enumeration C({n},{j}) * 2^(2^{j}) = {size} exceeds budget {budget}"
        )
    families = _intersecting_trace_families(j)
    for coords in itertools.combinations(range(1, n + 1), j):
        yield coords, families


def _expand_trace(coords: tuple[int, ...], local: int) -> tuple[int, ...]:
    return tuple(c for i, c in enumerate(coords) if local >> i & 1)


def enumerate_intersecting_juntas(
    n: int, j: int, budget: int | None = DEFAULT_JUNTA_BUDGET
) -> Iterator[Junta]:
    """Every intersecting-certified j-junta over [n].

    For each j-subset J, every family S of nonempty, pairwise-intersecting
    subsets of J (the empty S included).  Juntas inducing the same family
    under different J are yielded separately.
    """
    for coords, families in _junta_groups(n, j, budget):
        for fam in families:
            yield Junta(coords, [_expand_trace(coords, t) for t in fam])


# -- testers -------------------------------------------------------------------------------


def canonical_tester(
    oracle: FamilyOracle, n: int, k: int, m: int, rng, *, dedupe: bool = False
) -> TesterReport:
    """Sample m uniform k-subsets; reject iff two sampled members are disjoint.

    One-sided: an intersecting family is never rejected.  With ``dedupe`` a
    repeated sample is queried only once (its answer cannot change).
    """
    _check_oracle(oracle, n, k)
    m = _check_m(m)
    gen, seed = as_generator(rng)
    samples = sample_ranks(n, k, m, gen)
    start = oracle.queries_used
    answers: dict[int, int] = {}
    positives: list[tuple[int, int]] = []
    for r in samples:
        if dedupe and r in answers:
            continue
        a = oracle.query_rank(r)
        answers[r] = a
        if a:
            positives.append((r, unrank_mask(r, n, k)))
    witness = None
    for (ra, ma), (rb, mb) in itertools.combinations(positives, 2):
        if ma & mb == 0:
            witness = (ra, rb)
            break
    return TesterReport(
        verdict=Verdict.REJECT if witness else Verdict.ACCEPT,
        queries_used=oracle.queries_used - start,
        budget=m,
        samples=tuple(samples),
        seed=seed,
        witness=witness,
        params={"tester": "canonical", "n": n, "k": k, "m": m, "dedupe": dedupe},
    )


def disjoint_pair_tester(oracle: FamilyOracle, n: int, k: int, m: int, rng) -> TesterReport:
    """Sample m uniform disjoint pairs; reject iff some pair lies in the family.

    Uses 2m queries; ``m = 0`` accepts vacuously.
    """
    _check_oracle(oracle, n, k)
    m = _check_m(m, minimum=0)
    gen, seed = as_generator(rng)
    pairs = []
    for _ in range(m):
        a, b = sample_disjoint_pair_masks(n, k, gen)
        pairs.append((rank_mask(a, n, k), rank_mask(b, n, k)))
    start = oracle.queries_used
    witness = None
    for ra, rb in pairs:
        fa = oracle.query_rank(ra)
        fb = oracle.query_rank(rb)
        if fa and fb and witness is None:
            witness = (ra, rb)
    return TesterReport(
        verdict=Verdict.REJECT if witness else Verdict.ACCEPT,
        queries_used=oracle.queries_used - start,
        budget=2 * m,
        samples=tuple(r for pair in pairs for r in pair),
        seed=seed,
        witness=witness,
        params={"tester": "disjoint_pair", "n": n, "k": k, "m": m},
    )


def density_tester(oracle: FamilyOracle, n: int, k: int, eps2, m: int, rng) -> TesterReport:
    """Accept iff at most an ``eps2 / 2`` fraction of m samples are members.

    Tolerant two-sided tester; the guarantee needs ``eps2 >= 4 (eps1 + k/n)``.
    """
    _check_oracle(oracle, n, k)
    m = _check_m(m)
    e2 = as_fraction(eps2)
    gen, seed = as_generator(rng)
    samples = sample_ranks(n, k, m, gen)
    start = oracle.queries_used
    count = sum(oracle.query_rank(r) for r in samples)
    # count / m <= eps2 / 2
    accept = 2 * count * e2.denominator <= e2.numerator * m
    return TesterReport(
        verdict=Verdict.ACCEPT if accept else Verdict.REJECT,
        queries_used=oracle.queries_used - start,
        budget=m,
        samples=tuple(samples),
        seed=seed,
        alpha=Fraction(count, m),
        params={"tester": "density", "n": n, "k": k, "m": m, "eps2": e2},
    )


def junta_tester(
    oracle: FamilyOracle,
    n: int,
    k: int,
    eps1,
    eps2,
    j: int,
    m: int,
    rng,
    *,
    budget: int | None = DEFAULT_JUNTA_BUDGET,
) -> TesterReport:
    """Accept iff some intersecting j-junta J has ``alpha_J <= eps2 / 2``.

    ``alpha_J`` is the fraction of the m samples that are members and lie
    outside J.  ``eps1`` does not affect the decision; it is only recorded.
    The report carries the junta with the smallest ``alpha_J``.
    """
    _check_oracle(oracle, n, k)
    m = _check_m(m)
    e1, e2 = as_fraction(eps1), as_fraction(eps2)
    if not 0 <= e1 <= e2:
        raise ValidationError(f"need 0 <= eps1 <= eps2, got eps1={e1}, eps2={e2}")
    gen, seed = as_generator(rng)
    samples = sample_ranks(n, k, m, gen)
    start = oracle.queries_used
    positive_masks = [unrank_mask(r, n, k) for r in samples if oracle.query_rank(r)]
    total_pos = len(positive_masks)

    best: tuple[int, tuple[int, ...], tuple[int, ...]] | None = None
    for coords, families in _junta_groups(n, j, budget):
        # histogram of local traces of the positive samples on J
        hist: dict[int, int] = {}
        for pm in positive_masks:
            local = 0
            for i, c in enumerate(coords):
                if pm >> (c - 1) & 1:
                    local |= 1 << i
            hist[local] = hist.get(local, 0) + 1
        for fam in families:
            outside = total_pos - sum(hist.get(t, 0) for t in fam)
            if best is None or outside < best[0]:
                best = (outside, coords, fam)
                if outside == 0:
                    break
        if best is not None and best[0] == 0:
            break

    assert best is not None
    count, coords, fam = best
    estimate = JuntaEstimate(Junta(coords, [_expand_trace(coords, t) for t in fam]), count, m)
    accept = 2 * count * e2.denominator <= e2.numerator * m
    return TesterReport(
        verdict=Verdict.ACCEPT if accept else Verdict.REJECT,
        queries_used=oracle.queries_used - start,
        budget=m,
        samples=tuple(samples),
        seed=seed,
        alpha=estimate.alpha,
        estimate=estimate,
        params={"tester": "junta", "n": n, "k": k, "m": m, "j": j, "eps1": e1, "eps2": e2},
    )
