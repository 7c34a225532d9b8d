"""Property testers for intersectingness of k-uniform set families."""

from .combinatorics import (
    BinomialTable,
    KSubset,
    binomial,
    rank,
    sample_disjoint_pair,
    sample_ksubset,
    substream,
    unrank,
)
from .distance import (
    cross_distance,
    exact_distance,
    matching_bounds,
    restriction,
    search_far_restriction,
    useful_sets,
)
from .errors import BudgetExceeded, FamilyParseError, UniftestError, ValidationError
from .family import (
    ExplicitFamily,
    FamilyOracle,
    Junta,
    dno_family,
    junta_family,
    kneser_matching,
    random_family,
    star_family,
)
from .harness import ExperimentConfig, TrialStats, emit_report, run_trials, validate_instance
from .testers import (
    TesterReport,
    Verdict,
    canonical_sample_size,
    canonical_tester,
    density_tester,
    disjoint_pair_tester,
    enumerate_intersecting_juntas,
    junta_sample_size,
    junta_tester,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
