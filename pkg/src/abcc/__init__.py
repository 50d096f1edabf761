"""Approval-based committee voting rules, committee noise models, and
exact + Monte Carlo robustness verifiers."""

__version__ = "0.1.0"

from .core import (
    AlternativeSet,
    Committee,
    Profile,
    Universe,
    default_universe,
    enumerate_committees,
    enumerate_subsets,
    feasible_pairs,
    parse_profile,
    format_profile,
)
from .rules import (
    AbccRule,
    has_top_jump,
    is_nontrivial,
    make_rule,
    profile_score,
    vote_score,
    winners,
)
from .metrics import (
    DistanceMetric,
    check_metric_axioms,
    is_alternative_independent,
    is_majority_concentric,
    is_natural,
    is_similarity,
    level_structure,
    make_metric,
    neighborhood_count,
    random_metric,
    taxonomy_report,
)
from .noise import (
    NoiseModel,
    av_refutation_model,
    make_level_model,
    make_mp,
    sample_profile,
    staggered_level_model,
    jump_counterexample,
)
from .oracle import (
    accuracy_classify,
    expected_gap,
    gap_analysis,
    robustness_verdict,
    sample_size_bound,
    uv_bijection,
)
from .experiments import (
    TrialConfig,
    accuracy_trial,
    convergence_curve,
    hierarchy_report,
    mle_committees,
)

__all__ = [name for name in dir() if not name.startswith("_")]
