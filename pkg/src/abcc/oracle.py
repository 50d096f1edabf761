"""Exact expectation analysis and the robustness decision procedure.

The key reduction: for a fixed (ground, rival) pair, the expected score
gap under any level model is a linear functional sum(c_t * p_t) of the
level probabilities, where c_t aggregates the per-vote score gaps over
the sets at distance level t. Summation by parts turns this into
sum(E_j * e_j) over the prefix sums E_j and the non-negative decrements
e_j = p_j - p_{j+1}; since every strictly monotone model has e_j > 0
below the top level, the sign pattern of the prefix sums decides
robustness outright:

* every prefix non-negative and some positive below the last level:
  the gap is positive for every admissible model;
* some prefix negative: concentrating mass up to that level (a vertex of
  the monotone polytope, staggered back to strict decrease) realizes a
  negative gap;
* all prefixes zero below the last level: the gap is zero-mean under
  every strict model, so a unique-winner event cannot reach probability
  one (ties if the gap variable is identically zero, a symmetric-sum
  argument otherwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    DEFAULT_MAX_COMMITTEES,
    DEFAULT_MAX_M,
    AlternativeSet,
    Committee,
    committee_masks,
    frac_str,
)
from .errors import NotAccurateError, PreconditionError, SizeMismatchError
from .metrics import DistanceMetric, LevelStructure, level_structure
from .noise import NoiseModel, make_level_model
from .rules import AbccRule

ACCURATE = "accurate_in_limit"
NOT_ACCURATE = "not_accurate"
INCONCLUSIVE = "inconclusive"

ROBUST = "robust"
NOT_ROBUST = "not_robust"
DEGENERATE_NOT_ROBUST = "degenerate_not_robust"


def expected_gap(rule: AbccRule, model: NoiseModel, ground: Committee, rival: Committee) -> Fraction:
    """Exact E[sc(ground, S) - sc(rival, S)] under the model's distribution."""
    if model.ground != ground:
        raise PreconditionError("model ground truth differs from the given committee")
    if rival.k != rule.k or rival.m != rule.m or ground.k != rule.k:
        raise PreconditionError("committees do not match the rule's (m, k)")
    table = model.prob_table()
    gap, _ = _weighted_gap(rule, table, ground.mask, rival.mask)
    return gap


def _weighted_gap(rule, prob_table, umask, vmask):
    total = Fraction(0)
    support_nonzero = False
    for s, prob in enumerate(prob_table):
        y = s.bit_count()
        g = rule.table[((umask & s).bit_count(), y)] - rule.table[
            ((vmask & s).bit_count(), y)
        ]
        if g and prob:
            total += g * prob
            support_nonzero = True
    return total, support_nonzero


@dataclass(frozen=True)
class AccuracyReport:
    status: str
    ground: Committee
    gaps: dict  # rival Committee -> exact gap
    rival_status: dict  # rival Committee -> "positive"|"negative"|"zero_tie"|"zero_mean"

    def worst(self) -> tuple[Committee, Fraction]:
        rival = min(self.gaps, key=lambda c: (self.gaps[c], c.mask))
        return rival, self.gaps[rival]


def accuracy_classify(
    rule: AbccRule, model: NoiseModel, max_committees: int = DEFAULT_MAX_COMMITTEES
) -> AccuracyReport:
    """Classify whether the rule recovers the model's ground truth in the limit.

    Accurate iff every rival committee has a strictly positive expected
    gap. A zero gap already fails: the recovery event then has limiting
    probability at most 1/2 (a permanent tie when the gap variable is
    identically zero on the support, a zero-mean fluctuation otherwise).
    """
    ground = model.ground
    table = model.prob_table()
    gaps: dict[Committee, Fraction] = {}
    rival_status: dict[Committee, str] = {}
    status = ACCURATE
    for cmask in committee_masks(rule.m, rule.k, max_committees):
        if cmask == ground.mask:
            continue
        rival = Committee(AlternativeSet(cmask, rule.m), rule.k)
        gap, support_nonzero = _weighted_gap(rule, table, ground.mask, cmask)
        gaps[rival] = gap
        if gap > 0:
            rival_status[rival] = "positive"
        elif gap < 0:
            rival_status[rival] = "negative"
            status = NOT_ACCURATE
        else:
            rival_status[rival] = "zero_mean" if support_nonzero else "zero_tie"
            status = NOT_ACCURATE
    return AccuracyReport(status, ground, gaps, rival_status)


# ---------------------------------------------------------------------------
# (ground, rival) bijections.

@dataclass(frozen=True)
class UVBijection:
    """Pointwise swap of ground \\ rival with rival \\ ground, fixing the rest.

    The induced set map preserves cardinality and swaps the two overlap
    counts: |U ∩ mu(S)| = |V ∩ S| and |V ∩ mu(S)| = |U ∩ S|.
    """

    ground: Committee
    rival: Committee
    point_map: tuple[int, ...]

    def map_mask(self, mask: int) -> int:
        out = 0
        for i, target in enumerate(self.point_map):
            if mask >> i & 1:
                out |= 1 << target
        return out

    def map_set(self, s: AlternativeSet) -> AlternativeSet:
        return AlternativeSet(self.map_mask(s.mask), s.m)


def uv_bijection(ground: Committee, rival: Committee) -> UVBijection:
    """Canonical bijection matching the two one-sided differences in index order."""
    if ground.k != rival.k or ground.m != rival.m:
        raise SizeMismatchError("committees must have equal size and universe")
    m = ground.m
    only_u = [i for i in range(m) if ground.mask >> i & 1 and not rival.mask >> i & 1]
    only_v = [i for i in range(m) if rival.mask >> i & 1 and not ground.mask >> i & 1]
    point_map = list(range(m))
    for a, b in zip(only_u, only_v):
        point_map[a], point_map[b] = b, a
    return UVBijection(ground, rival, tuple(point_map))


# ---------------------------------------------------------------------------
# Level gap coefficients and prefix sums.

@dataclass(frozen=True)
class GapAnalysis:
    """Per-level gap coefficients c_t and their prefix sums for one pair."""

    rule_name: str
    metric_name: str
    ground: Committee
    rival: Committee
    levels: LevelStructure
    coefficients: tuple[Fraction, ...]
    prefix: tuple[Fraction, ...]

    def gap_for_level_probs(self, probs) -> Fraction:
        """sum(c_t * p_t) for explicit level probabilities."""
        probs = [Fraction(q) for q in probs]
        if len(probs) != len(self.coefficients):
            raise PreconditionError("probability vector does not match level count")
        return sum(
            (c * q for c, q in zip(self.coefficients, probs)), start=Fraction(0)
        )

    def gap_by_parts(self, probs) -> Fraction:
        """sum(E_j * e_j) with e_j = p_j - p_{j+1} (e_last = p_last)."""
        probs = [Fraction(q) for q in probs]
        decrements = [
            probs[j] - probs[j + 1] for j in range(len(probs) - 1)
        ] + [probs[-1]]
        return sum(
            (e * ej for e, ej in zip(self.prefix, decrements)), start=Fraction(0)
        )


def _level_coefficients(rule, levels, umask, vmask):
    coeffs = [Fraction(0)] * (levels.spn + 1)
    table = rule.table
    for s, lev in enumerate(levels.level_of):
        y = s.bit_count()
        g = table[((umask & s).bit_count(), y)] - table[((vmask & s).bit_count(), y)]
        if g:
            coeffs[lev] += g
    return coeffs


def gap_analysis(
    rule: AbccRule,
    metric: DistanceMetric,
    ground: Committee,
    rival: Committee,
    max_m: int = DEFAULT_MAX_M,
) -> GapAnalysis:
    """Exact level coefficients, prefix sums, and both gap evaluators.

    On construction, the direct and summation-by-parts evaluations are
    cross-checked on one seeded random strict model; a mismatch would be
    an internal bug, not a property of the inputs.
    """
    levels = level_structure(metric, ground, max_m)
    coeffs = _level_coefficients(rule, levels, ground.mask, rival.mask)
    prefix, acc = [], Fraction(0)
    for c in coeffs:
        acc += c
        prefix.append(acc)
    analysis = GapAnalysis(
        rule.name, metric.name, ground, rival, levels, tuple(coeffs), tuple(prefix)
    )
    probs = _random_strict_probs(levels, np.random.default_rng(271828))
    direct = analysis.gap_for_level_probs(probs)
    by_parts = analysis.gap_by_parts(probs)
    if direct != by_parts:
        raise RuntimeError(
            f"summation-by-parts mismatch: {frac_str(direct)} != {frac_str(by_parts)}"
        )
    return analysis


def _random_strict_probs(levels: LevelStructure, rng) -> list[Fraction]:
    # strictly decreasing positive integers, normalized exactly
    increments = rng.integers(1, 8, size=levels.spn + 1)
    weights = list(np.cumsum(increments)[::-1])
    total = sum(int(w) * size for w, size in zip(weights, levels.sizes))
    return [Fraction(int(w), total) for w in weights]


# ---------------------------------------------------------------------------
# The exact robustness verdict.

@dataclass(frozen=True)
class PairSummary:
    ground: Committee
    rival: Committee
    min_prefix: Fraction
    positive_below_last: bool
    degenerate: bool


@dataclass(frozen=True)
class NotRobustWitness:
    ground: Committee
    rival: Committee
    level_index: int
    model: NoiseModel
    gap: Fraction


@dataclass(frozen=True)
class DegenerateWitness:
    ground: Committee
    rival: Committee
    model: NoiseModel
    identically_zero: bool


@dataclass(frozen=True)
class RobustnessVerdict:
    status: str
    rule_name: str
    metric_name: str
    m: int
    k: int
    witness: NotRobustWitness | DegenerateWitness | None
    pair_summaries: tuple[PairSummary, ...]


def robustness_verdict(
    rule: AbccRule,
    metric: DistanceMetric,
    max_committees: int = DEFAULT_MAX_COMMITTEES,
    max_m: int = DEFAULT_MAX_M,
) -> RobustnessVerdict:
    """Decide accuracy in the limit over all monotone models of the metric.

    Robust iff every ordered committee pair has all prefix sums E_j >= 0
    with some E_j > 0 below the last level. A negative prefix yields a
    NotRobust witness model (verified to give a negative exact gap); pairs
    whose prefixes vanish below the last level yield the degenerate status
    with a strict zero-gap model.
    """
    if rule.m != metric.m:
        raise PreconditionError("rule and metric universe sizes differ")
    m, k = rule.m, rule.k
    masks = committee_masks(m, k, max_committees)
    summaries = []
    first_negative = None  # (umask, vmask, j, levels, coeffs, prefix)
    first_degenerate = None
    for umask in masks:
        ground = Committee(AlternativeSet(umask, m), k)
        levels = level_structure(metric, ground, max_m)
        s = levels.spn
        for vmask in masks:
            if vmask == umask:
                continue
            coeffs = _level_coefficients(rule, levels, umask, vmask)
            prefix, acc = [], Fraction(0)
            for c in coeffs:
                acc += c
                prefix.append(acc)
            rival = Committee(AlternativeSet(vmask, m), k)
            min_prefix = min(prefix)
            positive_below_last = any(e > 0 for e in prefix[:s])
            degenerate = min_prefix >= 0 and not positive_below_last
            summaries.append(
                PairSummary(ground, rival, min_prefix, positive_below_last, degenerate)
            )
            if min_prefix < 0 and first_negative is None:
                j = next(i for i, e in enumerate(prefix) if e < 0)
                first_negative = (ground, rival, j, levels, coeffs)
            elif degenerate and first_degenerate is None:
                first_degenerate = (ground, rival, levels, coeffs)

    if first_negative is not None:
        ground, rival, j, levels, coeffs = first_negative
        model, gap = _negative_gap_witness(metric, ground, levels, coeffs, j)
        witness = NotRobustWitness(ground, rival, j, model, gap)
        status = NOT_ROBUST
    elif first_degenerate is not None:
        ground, rival, levels, coeffs = first_degenerate
        model = _zero_tail_model(metric, ground, levels)
        # whether the per-vote gap variable itself vanishes everywhere
        # (permanent tie) or only its level aggregates cancel (zero mean)
        identically_zero = not any(
            rule.table[((ground.mask & s).bit_count(), s.bit_count())]
            != rule.table[((rival.mask & s).bit_count(), s.bit_count())]
            for s in range(1 << m)
        )
        witness = DegenerateWitness(ground, rival, model, identically_zero)
        status = DEGENERATE_NOT_ROBUST
    else:
        witness = None
        status = ROBUST
    return RobustnessVerdict(
        status, rule.name, metric.name, m, k, witness, tuple(summaries)
    )


def _negative_gap_witness(metric, ground, levels, coeffs, j):
    """Vertex of the monotone polytope at level j, staggered to strict decrease.

    The stagger size provably preserves the vertex gap's sign; the exact
    gap of the resulting model is recomputed and checked before return.
    """
    s = levels.spn
    cumulative = levels.cumulative_sizes()
    vertex_mass = Fraction(1, cumulative[j])
    vertex_gap = sum(coeffs[: j + 1], start=Fraction(0)) * vertex_mass
    max_coeff = max(abs(c) for c in coeffs)
    eta = -vertex_gap / (4 * (1 << metric.m) * max_coeff + 1)
    stagger = [Fraction(s + 1 - t, s + 1) for t in range(s + 1)]
    raw = [
        (vertex_mass if t <= j else Fraction(0)) + eta * stagger[t]
        for t in range(s + 1)
    ]
    scale = sum((Fraction(size) * q for size, q in zip(levels.sizes, raw)), Fraction(0))
    probs = [q / scale for q in raw]
    model = make_level_model(metric, ground, probs)
    gap = sum((c * q for c, q in zip(coeffs, probs)), start=Fraction(0))
    if gap >= 0:
        raise RuntimeError("witness stagger failed to preserve the negative gap")
    return model, gap


def _zero_tail_model(metric, ground, levels):
    # strict decrease with zero mass on the farthest level: the gap of a
    # fully-cancelling pair is exactly zero under this model
    s = levels.spn
    weights = [s - t for t in range(s + 1)]
    total = sum(w * size for w, size in zip(weights, levels.sizes))
    return make_level_model(metric, ground, [Fraction(w, total) for w in weights])


# ---------------------------------------------------------------------------
# Sample-size bound from the concentration argument.

@dataclass(frozen=True)
class SampleSizeBound:
    n: int
    mu_min: Fraction
    a_prime: Fraction
    b_prime: Fraction
    worst_rival: Committee


def sample_size_bound(rule: AbccRule, model: NoiseModel, eps) -> SampleSizeBound:
    """Vote count guaranteeing unique recovery with probability >= 1 - eps.

    n = ceil((b' - a')^2 / (2 mu_min^2) * ln(2 m^k / eps)), where [a', b']
    bounds the per-vote score difference f(x1, y) - f(x2, y) over same-y
    feasible pairs and mu_min is the smallest expected gap over rivals.
    """
    eps = float(eps)
    if not 0 < eps < 1:
        raise PreconditionError(f"eps must be in (0, 1), got {eps}")
    report = accuracy_classify(rule, model)
    if report.status != ACCURATE:
        raise NotAccurateError("rule is not accurate in the limit for this model")
    worst_rival, mu_min = report.worst()
    by_y: dict[int, list[Fraction]] = {}
    for (x, y), value in rule.table.items():
        by_y.setdefault(y, []).append(value)
    b_prime = max(max(vals) - min(vals) for vals in by_y.values())
    a_prime = -b_prime
    coefficient = (b_prime - a_prime) ** 2 / (2 * mu_min**2)
    n = math.ceil(float(coefficient) * math.log(2 * rule.m**rule.k / eps))
    return SampleSizeBound(n, mu_min, a_prime, b_prime, worst_rival)


# ---------------------------------------------------------------------------
# Verdict serialization (exact rationals as "p/q" strings).

def verdict_to_json(verdict: RobustnessVerdict, universe) -> dict:
    from .noise import model_to_json

    def labels(committee):
        return list(committee.labels(universe))

    doc = {
        "status": verdict.status,
        "rule": verdict.rule_name,
        "metric": verdict.metric_name,
        "m": verdict.m,
        "k": verdict.k,
        "witness": None,
        "per_pair_summary": [
            {
                "ground": labels(p.ground),
                "rival": labels(p.rival),
                "min_prefix": frac_str(p.min_prefix),
                "positive_below_last": p.positive_below_last,
                "degenerate": p.degenerate,
            }
            for p in verdict.pair_summaries
        ],
    }
    w = verdict.witness
    if isinstance(w, NotRobustWitness):
        doc["witness"] = {
            "ground": labels(w.ground),
            "rival": labels(w.rival),
            "level_index": w.level_index,
            "gap": frac_str(w.gap),
            "model": model_to_json(w.model),
        }
    elif isinstance(w, DegenerateWitness):
        doc["witness"] = {
            "ground": labels(w.ground),
            "rival": labels(w.rival),
            "identically_zero": w.identically_zero,
            "gap": "0",
            "model": model_to_json(w.model),
        }
    return doc
