import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import intersecting_corpus
from uniftest.combinatorics import unrank_mask
from uniftest.errors import BudgetExceeded, ValidationError
from uniftest.family import (
    ExplicitFamily,
    FamilyOracle,
    Junta,
    constant_oracle,
    dno_family,
    junta_family,
    random_family,
    star_family,
    star_oracle,
)
from uniftest.testers import (
    Verdict,
    canonical_sample_size,
    canonical_tester,
    density_sample_size,
    density_tester,
    disjoint_pair_sample_size,
    disjoint_pair_tester,
    enumerate_intersecting_juntas,
    junta_sample_size,
    junta_tester,
)


class TestSampleSizes:
    def test_canonical_r2(self):
        assert canonical_sample_size(2, 0.1) == 120
        assert canonical_sample_size(2, 1.0) == 12
        assert canonical_sample_size(2, Fraction(1, 3)) == 36

    def test_canonical_general(self):
        # 3^9 * ln 8 / 0.5 = 81859.296...
        assert canonical_sample_size(3, 0.5, c=1, k=8) == math.ceil(3**9 * math.log(8) / 0.5) == 81860

    def test_canonical_requires_k_beyond_r2(self):
        with pytest.raises(ValidationError):
            canonical_sample_size(3, 0.5)

    def test_nonpositive_eps(self):
        with pytest.raises(ValidationError):
            canonical_sample_size(2, 0)
        with pytest.raises(ValidationError):
            density_sample_size(-0.5)

    def test_junta_formula(self):
        assert junta_sample_size(0.5, 1, 40) == 185
        assert junta_sample_size(1, 0, 2) == 36
        with pytest.raises(ValidationError):
            junta_sample_size(-0.1, 1, 5)

    def test_junta_scaling(self):
        a = junta_sample_size(Fraction(1, 5), 2, 30)
        b = junta_sample_size(Fraction(1, 10), 2, 30)
        assert b in (2 * a - 1, 2 * a)

    def test_density_and_pair(self):
        assert density_sample_size(0.2) == 60
        assert density_sample_size(0.45, c=24) == 54
        assert disjoint_pair_sample_size(0.3) == 4
        with pytest.raises(ValidationError):
            disjoint_pair_sample_size(0)


class TestJuntaEnumeration:
    def test_counts(self):
        assert len(list(enumerate_intersecting_juntas(5, 1))) == 10
        assert len(list(enumerate_intersecting_juntas(5, 0))) == 1
        # per pair {a, b}: {}, {a}, {b}, {ab}, {a, ab}, {b, ab}
        assert len(list(enumerate_intersecting_juntas(6, 2))) == 15 * 6

    def test_all_certified_and_intersecting(self):
        for junta in enumerate_intersecting_juntas(6, 2):
            assert junta.is_intersecting_certified()
            assert junta_family(6, 2, junta).is_intersecting()

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            list(enumerate_intersecting_juntas(40, 4, budget=1000))

    def test_bad_j(self):
        with pytest.raises(ValidationError):
            list(enumerate_intersecting_juntas(3, 4))


class TestCanonical:
    def test_star_always_accepts(self):
        o = FamilyOracle.of(star_family(20, 3, 5))
        for seed in range(30):
            assert canonical_tester(o, 20, 3, 50, seed).verdict is Verdict.ACCEPT

    def test_m1_accepts(self):
        o = constant_oracle(6, 2, True)
        for seed in range(20):
            assert not canonical_tester(o, 6, 2, 1, seed).rejected

    def test_full_family_rejects_with_witness(self):
        fam = ExplicitFamily.full(8, 3)
        rep = canonical_tester(FamilyOracle.of(fam), 8, 3, 20, 1)
        assert rep.rejected
        a, b = rep.witness
        assert fam.contains_rank(a) and fam.contains_rank(b)
        assert unrank_mask(a, 8, 3) & unrank_mask(b, 8, 3) == 0

    def test_query_accounting(self):
        o = FamilyOracle.of(random_family(6, 2, 0.5, np.random.default_rng(0)))
        rep = canonical_tester(o, 6, 2, 40, 3)
        assert rep.queries_used == rep.budget == 40 == len(rep.samples)
        assert [r for r, _ in o.query_log] == list(rep.samples)

    def test_dedupe_queries_distinct_only(self):
        o = FamilyOracle.of(random_family(5, 2, 0.5, np.random.default_rng(0)))
        rep = canonical_tester(o, 5, 2, 40, 3, dedupe=True)
        assert len(rep.samples) == 40
        assert rep.queries_used == len(set(rep.samples)) <= rep.budget

    def test_report_records_seed(self):
        rep = canonical_tester(constant_oracle(6, 2, False), 6, 2, 5, 99)
        assert rep.seed == 99

    def test_universe_mismatch(self):
        with pytest.raises(ValidationError):
            canonical_tester(star_oracle(6, 2, 1), 7, 2, 5, 0)
        with pytest.raises(ValidationError):
            canonical_tester(star_oracle(6, 2, 1), 6, 2, 0, 0)


class TestDisjointPair:
    def test_star_always_accepts(self):
        o = FamilyOracle.of(star_family(8, 4, 1))
        for seed in range(50):
            assert not disjoint_pair_tester(o, 8, 4, 10, seed).rejected

    def test_m0_vacuous(self):
        rep = disjoint_pair_tester(constant_oracle(6, 2, True), 6, 2, 0, 0)
        assert rep.verdict is Verdict.ACCEPT and rep.queries_used == 0

    def test_query_accounting(self):
        o = constant_oracle(7, 3, False)
        rep = disjoint_pair_tester(o, 7, 3, 9, 5)
        assert rep.queries_used == rep.budget == 18 == len(rep.samples)

    def test_pairs_are_disjoint(self):
        rep = disjoint_pair_tester(constant_oracle(9, 3, False), 9, 3, 30, 5)
        s = rep.samples
        for a, b in zip(s[::2], s[1::2]):
            assert unrank_mask(a, 9, 3) & unrank_mask(b, 9, 3) == 0

    def test_witness_is_valid(self):
        fam = ExplicitFamily.full(8, 4)
        rep = disjoint_pair_tester(FamilyOracle.of(fam), 8, 4, 1, 0)
        assert rep.rejected
        a, b = rep.witness
        assert unrank_mask(a, 8, 4) | unrank_mask(b, 8, 4) == 0xFF

    def test_needs_room(self):
        with pytest.raises(ValidationError):
            disjoint_pair_tester(constant_oracle(5, 2, True), 5, 3, 1, 0)


class TestDensity:
    def test_zero_oracle_accepts(self):
        rep = density_tester(constant_oracle(10, 3, False), 10, 3, 0.2, 30, 1)
        assert rep.verdict is Verdict.ACCEPT and rep.alpha == 0

    def test_full_family_rejects(self):
        rep = density_tester(constant_oracle(10, 3, True), 10, 3, Fraction(19, 10), 30, 1)
        assert rep.rejected and rep.alpha == 1

    def test_threshold_is_exact(self):
        # alpha = 1 exactly at eps2 = 2: accept
        rep = density_tester(constant_oracle(10, 3, True), 10, 3, 2, 7, 1)
        assert rep.verdict is Verdict.ACCEPT

    def test_alpha_denominator(self):
        fam = random_family(8, 3, 0.5, np.random.default_rng(0))
        rep = density_tester(FamilyOracle.of(fam), 8, 3, 0.5, 37, 2)
        assert rep.alpha * 37 == sum(fam.contains_rank(r) for r in rep.samples)
        assert rep.queries_used == 37


class TestJuntaTester:
    def test_zero_oracle_accepts(self):
        rep = junta_tester(constant_oracle(8, 2, False), 8, 2, 0, 0.2, 1, 30, 0)
        assert rep.verdict is Verdict.ACCEPT and rep.alpha == 0

    @given(st.integers(0, 2**32), st.sampled_from(list(enumerate_intersecting_juntas(6, 2))))
    @settings(max_examples=40, deadline=None)
    def test_exact_junta_family_gives_alpha_zero(self, seed, junta):
        fam = junta_family(9, 3, junta)
        rep = junta_tester(FamilyOracle.of(fam), 9, 3, 0, Fraction(1, 100), 2, 40, seed)
        assert rep.alpha == 0
        assert rep.verdict is Verdict.ACCEPT

    def test_far_family_rejects(self):
        fam = dno_family(40, 2, 0.45, np.random.default_rng(0))
        rep = junta_tester(FamilyOracle.of(fam), 40, 2, 0, 0.45, 1, 206, 4)
        assert rep.rejected
        assert rep.witness is None
        assert rep.estimate.alpha == rep.alpha > Fraction(45, 200)

    def test_eps_order(self):
        with pytest.raises(ValidationError):
            junta_tester(constant_oracle(8, 2, False), 8, 2, 0.3, 0.2, 1, 10, 0)

    def test_eps1_does_not_change_decision(self):
        fam = random_family(10, 2, 0.3, np.random.default_rng(1))
        a = junta_tester(FamilyOracle.of(fam), 10, 2, 0, 0.3, 1, 50, 7)
        b = junta_tester(FamilyOracle.of(fam), 10, 2, 0.29, 0.3, 1, 50, 7)
        assert a.verdict == b.verdict and a.alpha == b.alpha
        assert b.params["eps1"] == Fraction(29, 100)

    def test_argmin_junta_reported(self):
        fam = star_family(12, 3, 4)
        rep = junta_tester(FamilyOracle.of(fam), 12, 3, 0, 0.1, 1, 60, 0)
        assert rep.estimate.junta == Junta([4], [[4]])


class TestContracts:
    def test_one_sided_on_small_corpus(self):
        for fam in intersecting_corpus(4, 2):
            o = FamilyOracle.of(fam)
            for seed in range(10):
                assert not canonical_tester(o, 4, 2, 12, seed).rejected
                assert not disjoint_pair_tester(o, 4, 2, 6, seed).rejected

    @pytest.mark.parametrize(
        "run",
        [
            lambda o, s: canonical_tester(o, 9, 3, 25, s),
            lambda o, s: disjoint_pair_tester(o, 9, 3, 12, s),
            lambda o, s: density_tester(o, 9, 3, 0.3, 25, s),
            lambda o, s: junta_tester(o, 9, 3, 0, 0.3, 1, 25, s),
        ],
    )
    def test_samples_independent_of_oracle(self, run):
        a = run(FamilyOracle.of(star_family(9, 3, 1)), 123)
        b = run(constant_oracle(9, 3, True), 123)
        c = run(FamilyOracle.of(random_family(9, 3, 0.5, np.random.default_rng(0))), 123)
        assert a.samples == b.samples == c.samples
        assert run(constant_oracle(9, 3, False), 124).samples != a.samples

    def test_generator_or_seed_equivalent(self):
        o = constant_oracle(9, 3, False)
        a = canonical_tester(o, 9, 3, 10, 5)
        b = canonical_tester(o, 9, 3, 10, np.random.default_rng(5))
        assert a.samples == b.samples and b.seed is None
