"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N PASS|FAIL: ...`` line (collected in
the pytest summary) and then asserts.  Statistical criteria compare a 95%
Wilson bound, never the point estimate alone.

Run just this file with ``pytest tests/test_acceptance.py -v``.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from _oracles import (
    brute_cross_distance,
    full_corpus,
    intersecting_corpus,
    max_intersecting_subfamily,
    member_sets,
)
from _verdicts import record
from uniftest.combinatorics import binomial, substream
from uniftest.distance import (
    check_far_restriction,
    cross_distance,
    exact_distance,
    matching_bounds,
    search_far_restriction,
    useful_sets,
)
from uniftest.family import (
    ExplicitFamily,
    FamilyOracle,
    constant_oracle,
    junta_family,
    random_family,
    star_family,
)
from uniftest.harness import ExperimentConfig, run_trials
from uniftest.testers import (
    canonical_tester,
    density_tester,
    disjoint_pair_tester,
    enumerate_intersecting_juntas,
    junta_tester,
)

TWO_THIRDS_SLACK = Fraction(2, 3) - Fraction(5, 100)


def _one_sided_corpus():
    corpus = [(f"n5k2#{i}", f) for i, f in enumerate(intersecting_corpus(5, 2))]
    for n, k, c in [(40, 2, 1), (40, 3, 17), (25, 4, 25), (12, 6, 3), (10, 5, 10)]:
        corpus.append((f"star({n},{k},{c})", star_family(n, k, c)))
    for junta in enumerate_intersecting_juntas(9, 2):
        corpus.append((f"{junta}@(9,3)", junta_family(9, 3, junta)))
    rng = np.random.default_rng(1)
    juntas3 = list(enumerate_intersecting_juntas(20, 3))
    for idx in rng.choice(len(juntas3), size=40, replace=False):
        junta = juntas3[int(idx)]
        corpus.append((f"{junta}@(20,4)", junta_family(20, 4, junta)))
    return corpus


def test_criterion_01_one_sided_exactness():
    corpus = _one_sided_corpus()
    # the corpus itself must be intersecting, checked independently
    assert all(f.is_intersecting() for _, f in corpus)
    rejections = 0
    runs = 0
    for _, fam in corpus:
        o = FamilyOracle.of(fam)
        n, k = fam.n, fam.k
        for seed in range(100):
            rejections += canonical_tester(o, n, k, 30, seed).rejected
            rejections += disjoint_pair_tester(o, n, k, 15, seed).rejected
            runs += 2
    ok = rejections == 0
    record(1, ok, f"{len(corpus)} intersecting families x 100 seeds x 2 testers: {rejections}/{runs} rejections")
    assert ok


def test_criterion_02_canonical_soundness_r2():
    n, k, eps = 50, 3, Fraction(1, 10)
    assert eps >= 2 * Fraction(k * k, n) ** 2
    cfg = ExperimentConfig(
        n=n, k=k, tester="canonical", generator="dno", eps=eps, m=120, trials=1000, seed=2, validate=True
    )
    stats = run_trials(cfg)
    lo = stats.wilson[0]
    ok = stats.certified_far is True and lo >= TWO_THIRDS_SLACK
    record(
        2,
        ok,
        f"dno(50,3,0.1) m=120: rejection {stats.rejections}/1000, Wilson lo {lo:.4f} >= {float(TWO_THIRDS_SLACK):.4f}; "
        f"farness certified by {stats.certification} (distance >= {stats.validated_distance})",
    )
    assert ok


def test_criterion_03_disjoint_pair_at_n_2k():
    n, k, eps, m = 8, 4, Fraction(3, 10), 4
    cfg = ExperimentConfig(
        n=n, k=k, tester="disjoint_pair", generator="dno", eps=eps, m=m, trials=1000, seed=3, validate=True
    )
    stats = run_trials(cfg)
    bound = (1 - 2 * eps) ** m + Fraction(5, 100)
    accept_hi = 1 - stats.wilson[0]
    ok = stats.certification == "exact" and stats.certified_far is True and accept_hi <= bound
    record(
        3,
        ok,
        f"n=8,k=4,eps=0.3,m=4: acceptance {stats.acceptances}/1000, Wilson hi {accept_hi:.4f} <= "
        f"(1-2eps)^m + 0.05 = {float(bound):.4f}; exact distance {stats.validated_distance}",
    )
    assert ok


def test_criterion_04_density_tester():
    n, k = 40, 2
    eps2 = 4 * (0 + Fraction(k, n))
    m = math.ceil(12 / eps2)
    close = run_trials(
        ExperimentConfig(
            n=n, k=k, tester="density", generator="star", eps=0, eps2=eps2, m=m, trials=500, seed=4, validate=True
        )
    )
    far = run_trials(
        ExperimentConfig(
            n=n, k=k, tester="density", generator="dno", eps=eps2, eps2=eps2, m=m, trials=500, seed=4, validate=True
        )
    )
    accept_lo = 1 - close.wilson[1]
    reject_lo = far.wilson[0]
    ok = (
        close.certified_far is False
        and far.certified_far is True
        and accept_lo >= TWO_THIRDS_SLACK
        and reject_lo >= TWO_THIRDS_SLACK
    )
    record(
        4,
        ok,
        f"eps2=0.2 m={m}: star accept {close.acceptances}/500 (Wilson lo {accept_lo:.4f}); "
        f"dno reject {far.rejections}/500 (Wilson lo {reject_lo:.4f}, {far.certification}-certified)",
    )
    assert ok


def test_criterion_05_exact_oracle_identities():
    ekr_cases = [
        (n, k) for n in range(2, 121) for k in range(1, n // 2 + 1) if binomial(n, k) <= 120
    ]
    ekr_bad = [
        (n, k)
        for n, k in ekr_cases
        if exact_distance(ExplicitFamily.full(n, k)) != binomial(n, k) - binomial(n - 1, k - 1)
    ]
    shapes = [(4, 2), (5, 2), (6, 2), (6, 3), (7, 2), (7, 3), (8, 3), (8, 4), (9, 3)]
    rng = np.random.default_rng(5)
    random_bad = 0
    draws = 0
    while draws < 500:
        n, k = shapes[int(rng.integers(len(shapes)))]
        fam = random_family(n, k, float(rng.uniform(0.05, min(1.0, 24 / binomial(n, k)))), rng)
        if len(fam) > 20:
            continue
        draws += 1
        sets = member_sets(fam)
        if exact_distance(fam) != len(sets) - max_intersecting_subfamily(sets):
            random_bad += 1
    ok = not ekr_bad and random_bad == 0
    record(
        5,
        ok,
        f"full-family identity on {len(ekr_cases)} (n,k) pairs, {len(ekr_bad)} mismatches; "
        f"brute force on {draws} random families (|F| <= 20), {random_bad} mismatches",
    )
    assert ok


def test_criterion_06_matching_bracket():
    rng = np.random.default_rng(6)
    failures = 0
    total = 0
    for n, k in [(4, 2), (5, 2), (6, 2), (6, 3)]:
        for _ in range(1000):
            fam = random_family(n, k, float(rng.uniform()), rng)
            lo, hi = matching_bounds(fam)
            d = exact_distance(fam)
            failures += not (lo <= d <= hi == 2 * lo)
            total += 1
    ok = failures == 0
    record(6, ok, f"lower <= exact <= 2*lower on {total} random families: {failures} violations")
    assert ok


def test_criterion_07_useful_sets():
    n, k = 5, 2
    total = binomial(n, k)
    slack = k * k * binomial(n - 2, k - 2)
    checked = violations = 0
    for fam in full_corpus(n, k):
        if len(fam) <= slack:
            continue
        d = exact_distance(fam)
        if d == 0:
            continue
        eps = Fraction(d - 1, total)
        threshold = math.ceil(Fraction(len(fam) - slack, 2))
        # independent recount: members disjoint from at least `threshold` members
        sets = member_sets(fam)
        brute = sum(1 for a in sets if sum(1 for b in sets if not a & b) >= threshold)
        count = useful_sets(fam, threshold)
        checked += 1
        if count != brute or not count > eps / 2 * total:
            violations += 1
    ok = checked > 0 and violations == 0
    record(7, ok, f"{checked} far families at n=5,k=2 with |F| > {slack}: {violations} violations")
    assert ok


def test_criterion_08_koenig_equality():
    rng = np.random.default_rng(8)
    compared = mismatches = 0
    for _ in range(500):
        f1 = random_family(5, 2, float(rng.uniform(0.1, 0.9)), rng)
        f2 = random_family(5, 2, float(rng.uniform(0.1, 0.9)), rng)
        if len(f1) + len(f2) > 16:
            continue
        compared += 1
        if cross_distance(f1, f2) != brute_cross_distance(member_sets(f1), member_sets(f2)):
            mismatches += 1
    ok = compared > 0 and mismatches == 0
    record(8, ok, f"{compared} of 500 random pairs with |F1|+|F2| <= 16: {mismatches} mismatches")
    assert ok


def _independent_far_check(fam, A, B, C, r, eps):
    """Re-verify a triple with brute-force set arithmetic."""
    level = eps / 3 ** (r * r)
    total = fam.total
    sets = member_sets(fam)
    f1 = [s for s in sets if s & A == B]
    f2 = [s for s in sets if s & A == C]
    small, large = sorted((f1, f2), key=len)
    d = brute_cross_distance(small, large) if len(small) <= 14 else cross_distance(
        ExplicitFamily.from_sets(fam.n, fam.k, f1), ExplicitFamily.from_sets(fam.n, fam.k, f2)
    )
    far = d > level * total
    outside = [x for x in range(1, fam.n + 1) if x not in A]
    no_capture = all(
        sum(1 for s in f2 if not s & set(sub)) >= level * total
        for size in range(r)
        for sub in itertools.combinations(outside, size)
    )
    return far and no_capture


def test_criterion_09_far_restrictions():
    rng = np.random.default_rng(9)
    r = 1
    found = verified = 0
    tried = 0
    while found < 50:
        n = int(rng.integers(5, 8))
        fam = random_family(n, 2, float(rng.uniform(0.3, 0.9)), rng)
        d = exact_distance(fam)
        if d == 0:
            continue
        tried += 1
        eps = Fraction(2 * d - 1, 2 * fam.total)  # strictly below d / C, so the family is eps-far
        triple = search_far_restriction(fam, r, eps)
        if triple is None:
            break
        found += 1
        A, B, C = triple
        if check_far_restriction(fam, A, B, C, r, eps) and _independent_far_check(fam, A, B, C, r, eps):
            verified += 1
    ok = found == 50 and verified == 50
    record(9, ok, f"r=1 at n<=7,k=2: {found}/{tried} searches returned a triple, {verified} re-verified")
    assert ok


def test_criterion_10_nonadaptivity_and_budgets():
    n, k, m = 10, 3, 25
    fams = [
        FamilyOracle.of(star_family(n, k, 1)),
        FamilyOracle.of(random_family(n, k, 0.5, substream(10, 0))),
        constant_oracle(n, k, True),
    ]
    testers = {
        "canonical": (lambda o, s: canonical_tester(o, n, k, m, s), m),
        "disjoint_pair": (lambda o, s: disjoint_pair_tester(o, n, k, m, s), 2 * m),
        "density": (lambda o, s: density_tester(o, n, k, Fraction(3, 10), m, s), m),
        "junta": (lambda o, s: junta_tester(o, n, k, 0, Fraction(3, 10), 1, m, s), m),
    }
    problems = []
    for name, (run, budget) in testers.items():
        for seed in range(20):
            reports = []
            for o in fams:
                before = o.queries_used
                rep = run(o, seed)
                if o.queries_used - before != rep.queries_used:
                    problems.append(f"{name}: oracle count disagrees")
                reports.append(rep)
            samples = {tuple(sorted(rep.samples)) for rep in reports}
            if len(samples) != 1:
                problems.append(f"{name} seed {seed}: query multiset depends on the oracle")
            for rep in reports:
                if not rep.queries_used == rep.budget == budget:
                    problems.append(f"{name}: {rep.queries_used} queries, budget {budget}")
    for seed in range(20):
        o = fams[1]
        rep = canonical_tester(o, n, k, m, seed, dedupe=True)
        if rep.queries_used != len(set(rep.samples)):
            problems.append("canonical dedupe: queries != distinct draws")
    ok = not problems
    record(10, ok, f"4 testers x 20 seeds x 3 oracles: {len(problems)} problems" + (f" ({problems[0]})" if problems else ""))
    assert ok
