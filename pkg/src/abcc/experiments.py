"""Monte Carlo validation, convergence curves, MLE cross-checks, and the
cross-rule/metric hierarchy report.

Sampling is the only place randomness enters; every rate is an exact
count fraction, every winner determination exact-rational, so identical
seeds reproduce outputs bit for bit.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .core import (
    DEFAULT_MAX_COMMITTEES,
    AlternativeSet,
    Committee,
    Profile,
    committee_masks,
    frac_str,
)
from .errors import InvalidNoiseParamError, PreconditionError
from .metrics import DistanceMetric, TaxonomyReport, taxonomy_report
from .noise import NoiseModel, sample_vote_masks
from .oracle import RobustnessVerdict, robustness_verdict
from .rules import AbccRule, has_top_jump, is_nontrivial, make_rule, score_from_counts, winners


class TrialRates(NamedTuple):
    recovery: Fraction
    tie: Fraction
    wrong: Fraction


def _winner_masks_from_counts(rule, masks, counts):
    best = None
    best_masks = []
    for cmask in masks:
        total = score_from_counts(rule, cmask, counts)
        if best is None or total > best:
            best, best_masks = total, [cmask]
        elif total == best:
            best_masks.append(cmask)
    return best_masks


def accuracy_trial(
    rule: AbccRule,
    model: NoiseModel,
    n: int,
    trials: int,
    seed,
    max_committees: int = DEFAULT_MAX_COMMITTEES,
) -> TrialRates:
    """Fraction of trials where the ground truth is the unique winner.

    Each trial samples n votes and computes the exact winner set;
    "recovery" means the ground truth wins uniquely, "tie" that it shares
    the win, "wrong" that it is not a winner at all. Trials draw from
    independent child streams of the master seed.
    """
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    masks = committee_masks(rule.m, rule.k, max_committees)
    gmask = model.ground.mask
    recovered = tied = 0
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        counts = Counter(sample_vote_masks(model, n, rng))
        winner_masks = _winner_masks_from_counts(rule, masks, counts)
        if winner_masks == [gmask]:
            recovered += 1
        elif gmask in winner_masks:
            tied += 1
    wrong = trials - recovered - tied
    return TrialRates(
        Fraction(recovered, trials), Fraction(tied, trials), Fraction(wrong, trials)
    )


@dataclass(frozen=True)
class TrialConfig:
    rule: AbccRule
    model: NoiseModel
    n_grid: tuple[int, ...]
    trials: int
    seed: int

    def __post_init__(self):
        if any(n < 1 for n in self.n_grid):
            raise PreconditionError("all grid sizes must be >= 1")
        if self.trials < 1:
            raise PreconditionError("trials must be >= 1")


class CurveRow(NamedTuple):
    n: int
    recovery: Fraction
    tie: Fraction
    wrong: Fraction


@dataclass(frozen=True)
class ConvergenceCurve:
    rows: tuple[CurveRow, ...]
    rule_name: str
    model_kind: str
    trials: int
    seed: int


def convergence_curve(config: TrialConfig) -> ConvergenceCurve:
    """One accuracy_trial row per grid size, on derived per-row streams."""
    rows = []
    for i, n in enumerate(config.n_grid):
        rates = accuracy_trial(
            config.rule, config.model, n, config.trials, [config.seed, i]
        )
        rows.append(CurveRow(n, *rates))
    return ConvergenceCurve(
        tuple(rows),
        config.rule.name,
        config.model.kind,
        config.trials,
        config.seed,
    )


# ---------------------------------------------------------------------------
# Maximum-likelihood cross-check.

class MleResult(NamedTuple):
    by_distance: tuple[Committee, ...]  # total symmetric-difference minimizers
    by_score: tuple[Committee, ...]     # approval-score maximizers

    @property
    def agree(self) -> bool:
        return self.by_distance == self.by_score


def mle_committees(
    profile: Profile,
    p,
    m: int,
    k: int,
    max_committees: int = DEFAULT_MAX_COMMITTEES,
) -> MleResult:
    """Most likely ground committees under the product model, two routes.

    Route one ranks committees by total symmetric-difference distance to
    the votes (an integer comparison: under p > 1/2 the likelihood is a
    decreasing function of that total). Route two takes the approval-score
    winners. The two argmax sets must coincide; the result never depends
    on p inside (1/2, 1].
    """
    p = Fraction(p)
    if not Fraction(1, 2) < p <= 1:
        raise InvalidNoiseParamError(f"p must be in (1/2, 1], got {frac_str(p)}")
    counts = Counter(v.mask for v in profile)
    best = None
    best_masks = []
    for cmask in committee_masks(m, k, max_committees):
        total = sum(((cmask ^ vmask).bit_count()) * mult for vmask, mult in counts.items())
        if best is None or total < best:
            best, best_masks = total, [cmask]
        elif total == best:
            best_masks.append(cmask)
    by_distance = tuple(Committee(AlternativeSet(mask, m), k) for mask in best_masks)
    by_score = tuple(winners(make_rule("av", m, k), profile, max_committees))
    return MleResult(by_distance, by_score)


def mle_equivalence_check(
    p, m: int, k: int, profiles: int, seed, n_max: int = 12
) -> tuple[int, int]:
    """Count how many random profiles make the two routes agree (all should)."""
    agree = 0
    for i in range(profiles):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), i]))
        n = int(rng.integers(1, n_max + 1))
        votes = tuple(
            AlternativeSet(int(mask), m) for mask in rng.integers(0, 1 << m, size=n)
        )
        if mle_committees(Profile(votes), p, m, k).agree:
            agree += 1
    return agree, profiles


# ---------------------------------------------------------------------------
# Hierarchy report.

@dataclass(frozen=True)
class HierarchyReport:
    m: int
    k: int
    rule_names: tuple[str, ...]
    metric_names: tuple[str, ...]
    verdicts: dict  # (rule_name, metric_name) -> RobustnessVerdict
    rule_predicates: dict  # rule_name -> {"is_nontrivial": bool, ...}
    metric_taxonomy: dict  # metric_name -> TaxonomyReport


def hierarchy_report(
    rules: list[AbccRule],
    metrics: list[DistanceMetric],
    threads: int = 1,
) -> HierarchyReport:
    """Verdict matrix over rule x metric, annotated with rule predicates
    and metric taxonomy flags. Cells are independent; `threads` caps the
    worker pool, and results merge in a fixed order either way."""
    if not rules or not metrics:
        raise PreconditionError("need at least one rule and one metric")
    m, k = rules[0].m, rules[0].k
    if any(r.m != m or r.k != k for r in rules) or any(d.m != m for d in metrics):
        raise PreconditionError("all rules and metrics must share the same (m, k)")
    cells = [(rule, metric) for rule in rules for metric in metrics]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda c: robustness_verdict(*c), cells))
    else:
        results = [robustness_verdict(rule, metric) for rule, metric in cells]
    verdicts = {
        (rule.name, metric.name): verdict
        for (rule, metric), verdict in zip(cells, results)
    }
    predicates = {}
    for rule in rules:
        jump = has_top_jump(rule)
        predicates[rule.name] = {
            "is_nontrivial": bool(is_nontrivial(rule)),
            "has_top_jump": bool(jump),
            "top_jump_vacuous": jump.vacuous,
        }
    taxonomy = {metric.name: taxonomy_report(metric, k) for metric in metrics}
    return HierarchyReport(
        m,
        k,
        tuple(r.name for r in rules),
        tuple(d.name for d in metrics),
        verdicts,
        predicates,
        taxonomy,
    )


# ---------------------------------------------------------------------------
# CSV / JSON emission. Rates are exact rationals by default; pass
# approx=True for decimal columns.

def _rate(value: Fraction, approx: bool) -> str:
    return repr(float(value)) if approx else frac_str(value)


def curve_to_csv(curve: ConvergenceCurve, approx: bool = False) -> str:
    lines = ["n,recovery_rate,tie_rate,wrong_rate"]
    for row in curve.rows:
        lines.append(
            f"{row.n},{_rate(row.recovery, approx)},{_rate(row.tie, approx)},"
            f"{_rate(row.wrong, approx)}"
        )
    return "\n".join(lines) + "\n"


def curve_to_json(curve: ConvergenceCurve, approx: bool = False) -> dict:
    return {
        "rule": curve.rule_name,
        "model": curve.model_kind,
        "trials": curve.trials,
        "seed": curve.seed,
        "rows": [
            {
                "n": row.n,
                "recovery_rate": _rate(row.recovery, approx),
                "tie_rate": _rate(row.tie, approx),
                "wrong_rate": _rate(row.wrong, approx),
            }
            for row in curve.rows
        ],
    }


def hierarchy_to_csv(report: HierarchyReport) -> str:
    lines = ["rule," + ",".join(report.metric_names)]
    for rule_name in report.rule_names:
        cells = [
            report.verdicts[(rule_name, metric_name)].status
            for metric_name in report.metric_names
        ]
        lines.append(rule_name + "," + ",".join(cells))
    return "\n".join(lines) + "\n"


def hierarchy_to_json(report: HierarchyReport) -> dict:
    def taxonomy_doc(tax: TaxonomyReport) -> dict:
        return tax.flags()

    return {
        "m": report.m,
        "k": report.k,
        "rules": list(report.rule_names),
        "metrics": list(report.metric_names),
        "matrix": {
            rule_name: {
                metric_name: report.verdicts[(rule_name, metric_name)].status
                for metric_name in report.metric_names
            }
            for rule_name in report.rule_names
        },
        "rule_predicates": report.rule_predicates,
        "metric_taxonomy": {
            name: taxonomy_doc(tax) for name, tax in report.metric_taxonomy.items()
        },
    }
