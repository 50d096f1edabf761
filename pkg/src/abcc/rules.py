"""Counting-based approval committee rules: catalog, scoring, winners.

A rule is a table of exact rational scores f(x, y) over the feasible
pair domain, where a committee earns f(|U ∩ S|, |S|) from each vote S.
All scores are Fractions; winner determination never touches floats,
because downstream robustness verdicts hinge on strict sign comparisons.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .core import (
    DEFAULT_MAX_COMMITTEES,
    AlternativeSet,
    Committee,
    Profile,
    committee_masks,
    enumerate_subsets,
    feasible_pairs,
    frac_str,
    parse_frac,
    default_universe,
)
from .errors import DomainMismatchError, InvalidRuleError, ProfileParseError

RULE_KINDS = (
    "av",
    "cc",
    "pav",
    "sav",
    "mc",
    "thiele",
    "p_geometric",
    "sainte_lague",
    "special6_f",
    "special6_fprime",
    "custom",
)


@dataclass(frozen=True)
class AbccRule:
    """Score table over the feasible (x, y) domain for fixed (m, k)."""

    name: str
    m: int
    k: int
    table: dict[tuple[int, int], Fraction]

    def score(self, x: int, y: int) -> Fraction:
        return self.table[(x, y)]

    @property
    def domain(self):
        return feasible_pairs(self.m, self.k)


class ScoreBreakdown(NamedTuple):
    committee: Committee
    total: Fraction
    per_vote: tuple[Fraction, ...]


class NontrivialityResult(NamedTuple):
    value: bool
    witness: tuple[Committee, Committee] | None

    def __bool__(self) -> bool:
        return self.value


class TopJumpResult(NamedTuple):
    value: bool
    vacuous: bool  # True when m = k and the (k-1, k) pair is infeasible

    def __bool__(self) -> bool:
        return self.value


def _validate_table(m, k, table) -> dict[tuple[int, int], Fraction]:
    domain = feasible_pairs(m, k).pairs
    if set(table) != domain:
        missing = domain - set(table)
        extra = set(table) - domain
        raise InvalidRuleError(
            f"table must be total on the feasible domain; missing={sorted(missing)}, "
            f"extra={sorted(extra)}"
        )
    clean = {}
    for (x, y), value in table.items():
        value = Fraction(value)
        if value < 0:
            raise InvalidRuleError(f"negative score f({x},{y})={value}")
        clean[(x, y)] = value
    for (x, y) in sorted(domain):
        if (x + 1, y) in domain and clean[(x + 1, y)] < clean[(x, y)]:
            raise InvalidRuleError(
                f"score not non-decreasing in x: f({x + 1},{y}) < f({x},{y})"
            )
    return clean


def make_rule(kind: str, m: int, k: int, *, weights=None, p=None, table=None) -> AbccRule:
    """Build a catalog rule or validate a custom table.

    Parameters
    ----------
    kind : str
        One of RULE_KINDS. "thiele" needs `weights` (k non-negative
        rationals), "p_geometric" a rational `p` > 0, "custom" a full
        `table` mapping each feasible (x, y) to a non-negative rational.
        The two special m=4/k=2 rules reject other (m, k).
    """
    domain = feasible_pairs(m, k).pairs

    def from_fn(name, fn):
        return AbccRule(name, m, k, {(x, y): Fraction(fn(x, y)) for x, y in domain})

    if kind == "av":
        return from_fn("av", lambda x, y: x)
    if kind == "cc":
        return from_fn("cc", lambda x, y: min(1, x))
    if kind == "pav":
        return from_fn("pav", lambda x, y: sum(Fraction(1, i) for i in range(1, x + 1)))
    if kind == "sav":
        return from_fn("sav", lambda x, y: Fraction(x, y) if y > 0 else Fraction(0))
    if kind == "mc":
        return from_fn("mc", lambda x, y: 1 if (x, y) == (k, k) else 0)
    def thiele(name, weights):
        w = [Fraction(wi) for wi in weights]
        if len(w) != k:
            raise InvalidRuleError(f"need k={k} weights, got {len(w)}")
        if any(wi < 0 for wi in w):
            raise InvalidRuleError("thiele weights must be non-negative")
        return from_fn(name, lambda x, y: sum(w[:x], Fraction(0)))

    if kind == "thiele":
        if weights is None:
            raise InvalidRuleError("thiele requires a weight vector")
        return thiele("thiele", weights)
    if kind == "p_geometric":
        if p is None:
            raise InvalidRuleError("p_geometric requires p")
        pf = Fraction(p)
        if pf <= 0:
            raise InvalidRuleError("p_geometric requires p > 0")
        # convention: weight of the j-th committee member in a vote is p^j
        return thiele(f"p_geometric({frac_str(pf)})", [pf**j for j in range(1, k + 1)])
    if kind == "sainte_lague":
        # convention: weights 1/(2j - 1)
        return thiele("sainte_lague", [Fraction(1, 2 * j - 1) for j in range(1, k + 1)])
    if kind == "special6_f":
        if (m, k) != (4, 2):
            raise InvalidRuleError("special6_f is defined only for m=4, k=2")
        return from_fn("special6_f", lambda x, y: x if y == 2 else 0)
    if kind == "special6_fprime":
        if (m, k) != (4, 2):
            raise InvalidRuleError("special6_fprime is defined only for m=4, k=2")
        return from_fn("special6_fprime", lambda x, y: 2 * x if y == 2 else x)
    if kind == "custom":
        if table is None:
            raise InvalidRuleError("custom requires a table")
        return AbccRule("custom", m, k, _validate_table(m, k, table))
    raise InvalidRuleError(f"unknown rule kind {kind!r}")


def vote_score(rule: AbccRule, committee: Committee, vote: AlternativeSet) -> Fraction:
    """Exact score the committee earns from a single approval vote."""
    if committee.k != rule.k or committee.m != rule.m:
        raise DomainMismatchError(
            f"committee (m={committee.m}, k={committee.k}) does not match rule "
            f"(m={rule.m}, k={rule.k})"
        )
    if vote.m != rule.m:
        raise DomainMismatchError(f"vote universe size {vote.m} != rule m {rule.m}")
    x = (committee.mask & vote.mask).bit_count()
    return rule.table[(x, vote.size)]


def profile_score(rule: AbccRule, committee: Committee, profile: Profile) -> ScoreBreakdown:
    """Total (and per-vote) exact score of a committee over a profile."""
    per_vote = tuple(vote_score(rule, committee, vote) for vote in profile)
    return ScoreBreakdown(committee, sum(per_vote, Fraction(0)), per_vote)


def score_from_counts(rule: AbccRule, committee_mask: int, counts: Counter) -> Fraction:
    """Score from a {vote mask: multiplicity} tally. Fast path for winners."""
    total = Fraction(0)
    for mask, mult in counts.items():
        x = (committee_mask & mask).bit_count()
        total += rule.table[(x, mask.bit_count())] * mult
    return total


def winners(
    rule: AbccRule, profile: Profile, max_committees: int = DEFAULT_MAX_COMMITTEES
) -> list[Committee]:
    """All committees of maximum total score, ties preserved.

    Returns the full argmax set in ascending bitmask order; an empty
    profile makes every committee tie at zero.
    """
    for vote in profile:
        if vote.m != rule.m:
            raise DomainMismatchError(f"vote universe size {vote.m} != rule m {rule.m}")
    counts = Counter(v.mask for v in profile)
    best: Fraction | None = None
    best_masks: list[int] = []
    for cmask in committee_masks(rule.m, rule.k, max_committees):
        total = score_from_counts(rule, cmask, counts)
        if best is None or total > best:
            best = total
            best_masks = [cmask]
        elif total == best:
            best_masks.append(cmask)
    return [Committee(AlternativeSet(mask, rule.m), rule.k) for mask in best_masks]


def is_nontrivial(rule: AbccRule) -> NontrivialityResult:
    """Whether every ordered committee pair (U, V) has a separating vote.

    True iff for every pair of distinct k-committees there exists a vote S
    with sc(U, S) > sc(V, S); on failure the violating pair is returned.
    """
    universe = default_universe(rule.m)
    subsets = enumerate_subsets(universe)
    masks = committee_masks(rule.m, rule.k)
    for umask in masks:
        for vmask in masks:
            if umask == vmask:
                continue
            for s in subsets:
                y = s.size
                if rule.table[((umask & s.mask).bit_count(), y)] > rule.table[
                    ((vmask & s.mask).bit_count(), y)
                ]:
                    break
            else:
                witness = (
                    Committee(AlternativeSet(umask, rule.m), rule.k),
                    Committee(AlternativeSet(vmask, rule.m), rule.k),
                )
                return NontrivialityResult(False, witness)
    return NontrivialityResult(True, None)


def has_top_jump(rule: AbccRule) -> TopJumpResult:
    """Whether f(k, k) > f(k-1, k); vacuously true when m = k."""
    k = rule.k
    if (k - 1, k) not in rule.table:
        return TopJumpResult(True, True)
    return TopJumpResult(rule.table[(k, k)] > rule.table[(k - 1, k)], False)


# ---------------------------------------------------------------------------
# Custom rule file format:
#   {"m": 4, "k": 2, "table": [{"x": 0, "y": 0, "score": "0"}, ...]}

def rule_to_json(rule: AbccRule) -> dict:
    doc = {
        "m": rule.m,
        "k": rule.k,
        "name": rule.name,
        "table": [
            {"x": x, "y": y, "score": frac_str(v)}
            for (x, y), v in sorted(rule.table.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        ],
    }
    if rule.name.startswith("p_geometric") or rule.name == "sainte_lague":
        doc["weights_convention"] = (
            "p_geometric: w_j = p^j; sainte_lague: w_j = 1/(2j-1)"
        )
    return doc


def rule_from_json(doc: dict) -> AbccRule:
    try:
        m, k = int(doc["m"]), int(doc["k"])
        table = {
            (int(row["x"]), int(row["y"])): parse_frac(str(row["score"]))
            for row in doc["table"]
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise ProfileParseError(f"bad rule file: {exc}") from None
    return make_rule("custom", m, k, table=table)


def load_rule_file(path) -> AbccRule:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProfileParseError(f"bad JSON in rule file: {exc}") from None
    return rule_from_json(doc)
