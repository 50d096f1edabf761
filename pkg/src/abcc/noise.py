"""Noise models over committees and the adversarial constructions.

Two model forms exist. The product form flips each alternative's
membership independently and supports sampling at any m; its exact
probabilities decay geometrically in the symmetric-difference distance
from the ground committee. Level-table models assign one exact
probability per distance level of an arbitrary metric and require the
full 2^m table, so they are capped at desk scale.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import (
    DEFAULT_MAX_M,
    AlternativeSet,
    Committee,
    Profile,
    Universe,
    default_universe,
    frac_str,
    parse_frac,
)
from .errors import (
    CapExceededError,
    DeltaSearchError,
    InvalidNoiseParamError,
    NoCounterexampleError,
    NotMonotonicError,
    NotNormalizedError,
    PreconditionError,
    ProfileParseError,
)
from .metrics import (
    DistanceMetric,
    LevelStructure,
    level_structure,
    make_metric,
    metric_from_json,
    metric_to_json,
    neighborhood_count,
)
from .rules import AbccRule, make_rule

RNG_SCHEME = "numpy-pcg64; per-trial streams via SeedSequence(seed).spawn"


@dataclass(frozen=True)
class NoiseModel:
    """Distribution over all subsets conditioned on a ground committee."""

    kind: str  # "product" | "level"
    universe: Universe
    ground: Committee
    p: Fraction | None = None
    metric: DistanceMetric | None = field(default=None, compare=False)
    level_probs: tuple[Fraction, ...] | None = None
    levels: LevelStructure | None = field(default=None, compare=False)

    @property
    def m(self) -> int:
        return self.ground.m

    @property
    def zero_tail(self) -> bool:
        """Whether the farthest level carries zero probability (admitted, flagged)."""
        return self.kind == "level" and self.level_probs[-1] == 0

    def probability(self, vote: AlternativeSet | int) -> Fraction:
        mask = vote if isinstance(vote, int) else vote.mask
        if self.kind == "product":
            dist = (mask ^ self.ground.mask).bit_count()
            return self.p ** (self.m - dist) * (1 - self.p) ** dist
        return self.level_probs[self.levels.level_of[mask]]

    def prob_table(self, max_m: int = DEFAULT_MAX_M) -> list[Fraction]:
        """Exact probabilities indexed by vote mask."""
        if self.m > max_m:
            raise CapExceededError(f"m={self.m} exceeds enumeration cap {max_m}")
        return [self.probability(mask) for mask in range(1 << self.m)]


def make_mp(p, universe: Universe, ground: Committee) -> NoiseModel:
    """Product model: keep each ground member with probability p, include
    each outsider with probability 1-p. Requires p in (1/2, 1]."""
    p = Fraction(p)
    if not Fraction(1, 2) < p <= 1:
        raise InvalidNoiseParamError(f"p must be in (1/2, 1], got {frac_str(p)}")
    if ground.m != universe.m:
        raise PreconditionError("ground committee does not match universe")
    return NoiseModel("product", universe, ground, p=p)


def make_level_model(
    metric: DistanceMetric,
    ground: Committee,
    level_probs,
    universe: Universe | None = None,
) -> NoiseModel:
    """Model assigning probability level_probs[t] to every set at level t.

    Validates strict decrease across levels (the farthest level may be 0)
    and exact normalization against the level sizes.
    """
    universe = universe or default_universe(metric.m)
    levels = level_structure(metric, ground)
    probs = tuple(Fraction(q) for q in level_probs)
    if len(probs) != levels.spn + 1:
        raise PreconditionError(
            f"need {levels.spn + 1} level probabilities, got {len(probs)}"
        )
    if probs[-1] < 0:
        raise NotMonotonicError("probabilities must be non-negative")
    for t in range(levels.spn):
        if probs[t] <= probs[t + 1]:
            raise NotMonotonicError(
                f"p_{t}={frac_str(probs[t])} must strictly exceed "
                f"p_{t + 1}={frac_str(probs[t + 1])}"
            )
    total = sum(
        (q * size for q, size in zip(probs, levels.sizes)), start=Fraction(0)
    )
    if total != 1:
        raise NotNormalizedError(total - 1)
    return NoiseModel(
        "level", universe, ground, metric=metric, level_probs=probs, levels=levels
    )


def staggered_level_model(
    metric: DistanceMetric,
    ground: Committee,
    universe: Universe | None = None,
    zero_tail: bool = False,
) -> NoiseModel:
    """Canonical strict model with linearly decreasing level probabilities."""
    levels = level_structure(metric, ground)
    s = levels.spn
    weights = [s + 1 - t for t in range(s + 1)] if not zero_tail else [s - t for t in range(s + 1)]
    if zero_tail and s == 0:
        raise PreconditionError("cannot zero the only level")
    total = sum(w * size for w, size in zip(weights, levels.sizes))
    return make_level_model(
        metric, ground, [Fraction(w, total) for w in weights], universe
    )


def audit_d_monotonic(
    model: NoiseModel,
    metric: DistanceMetric | None = None,
    max_m: int = DEFAULT_MAX_M,
) -> tuple[bool, tuple | None]:
    """Pairwise audit of the strict-iff condition.

    Checks Pr[S1|U] > Pr[S2|U] exactly when d(U, S1) < d(U, S2) over all
    ordered pairs of subsets. Product models audit against the
    symmetric-difference metric by default.
    """
    if metric is None:
        metric = model.metric if model.kind == "level" else make_metric(
            "set_difference", model.m
        )
    if model.m > max_m:
        raise CapExceededError(f"m={model.m} exceeds audit cap {max_m}")
    table = model.prob_table(max_m)
    row = metric.row(model.ground.mask)
    # Pairwise iff-condition, checked on the sorted-by-distance order:
    # probability must be constant within a distance class and strictly
    # decreasing across classes. Equivalent to the all-pairs comparison.
    order = sorted(range(1 << model.m), key=lambda s: row[s])
    for prev, cur in zip(order, order[1:]):
        same_distance = row[prev] == row[cur]
        if same_distance and table[prev] != table[cur]:
            return False, (AlternativeSet(prev, model.m), AlternativeSet(cur, model.m))
        if not same_distance and table[prev] <= table[cur]:
            return False, (AlternativeSet(prev, model.m), AlternativeSet(cur, model.m))
    return True, None


# ---------------------------------------------------------------------------
# Sampling.

def sample_vote_masks(model: NoiseModel, n: int, rng: np.random.Generator) -> list[int]:
    """Draw n i.i.d. vote masks. Product models avoid the 2^m table."""
    if n == 0:
        return []
    if model.kind == "product":
        m, gmask = model.m, model.ground.mask
        keep = float(model.p)
        uniforms = rng.random((n, m))
        thresholds = np.array(
            [keep if gmask >> i & 1 else 1.0 - keep for i in range(m)]
        )
        bits = uniforms < thresholds
        if m <= 62:
            weights = np.array([1 << i for i in range(m)], dtype=np.int64)
            return [int(v) for v in bits @ weights]
        return [
            int(sum(1 << i for i in range(m) if row[i])) for row in bits
        ]
    table = model.prob_table()
    cumulative = np.cumsum([float(q) for q in table])
    cumulative[-1] = 1.0  # guard against float round-off at the top
    draws = rng.random(n)
    return [int(i) for i in np.searchsorted(cumulative, draws, side="right")]


def sample_profile(model: NoiseModel, n: int, seed) -> Profile:
    """n i.i.d. votes from the model; deterministic for a given seed."""
    if n < 0:
        raise PreconditionError("n must be non-negative")
    rng = np.random.default_rng(seed)
    masks = sample_vote_masks(model, n, rng)
    m = model.m
    return Profile(tuple(AlternativeSet(mask, m) for mask in masks))


# ---------------------------------------------------------------------------
# Adversarial constructions.

def _direct_gap(rule: AbccRule, model: NoiseModel, umask: int, vmask: int) -> Fraction:
    # plain 2^m summation, kept local so constructions don't depend on oracle
    total = Fraction(0)
    table = model.prob_table()
    for s in range(1 << model.m):
        y = s.bit_count()
        gap = rule.table[((umask & s).bit_count(), y)] - rule.table[
            ((vmask & s).bit_count(), y)
        ]
        if gap:
            total += gap * table[s]
    return total


@dataclass(frozen=True)
class CounterexamplePackage:
    """A metric + model under which the rule prefers a rival to the ground truth."""

    metric: DistanceMetric
    model: NoiseModel
    ground: Committee
    rival: Committee
    expected_gap: Fraction
    jump: tuple[int, int]
    delta: Fraction


def jump_counterexample(rule: AbccRule, max_halvings: int = 64) -> CounterexamplePackage:
    """Adversarial distance metric and model defeating any rule with a
    score jump below the top cell.

    Finds the first feasible (x*, y*) != (k, k) with f(x*, y*) > f(x*-1, y*),
    pins distances d(U,V) = d(U,W) = 1 with every other distance 2, and
    lowers delta by halving until the exact expected gap for the rival V
    turns negative.

    Raises
    ------
    NoCounterexampleError
        When no such jump exists (the modal-committee table), in which
        case no defeating construction exists at all.
    """
    m, k = rule.m, rule.k
    if m <= k:
        raise PreconditionError("need m > k so a rival committee exists")
    jump = None
    for y in range(m + 1):
        for x in range(max(k + y - m, 0), min(y, k) + 1):
            if (x, y) == (k, k) or (x - 1, y) not in rule.table:
                continue
            if rule.table[(x, y)] > rule.table[(x - 1, y)]:
                jump = (x, y)
                break
        if jump:
            break
    if jump is None:
        raise NoCounterexampleError(
            f"rule {rule.name!r} has no score jump outside the top cell"
        )
    xs, ys = jump
    universe = default_universe(m)
    umask = (1 << k) - 1                                   # alternatives 0..k-1
    vmask = ((1 << k) - 1) << 1                            # alternatives 1..k
    wmask = sum(1 << i for i in range(k - xs + 1, ys + k - xs + 1))
    ground = Committee(AlternativeSet(umask, m), k)
    rival = Committee(AlternativeSet(vmask, m), k)

    near = {vmask, wmask}

    def fn(a, b):
        if a == b:
            return Fraction(0)
        if (a == umask and b in near) or (b == umask and a in near):
            return Fraction(1)
        return Fraction(2)

    metric = DistanceMetric(f"jump_adversarial({rule.name})", m, fn=fn)

    sets_total = 1 << m
    delta = Fraction(1, 3 * (sets_total - 1)) / 2
    for _ in range(max_halvings):
        probs = [
            Fraction(1, 3),
            Fraction(1, 3) - delta,
            2 * delta / (sets_total - 3),
        ]
        model = make_level_model(metric, ground, probs, universe)
        gap = _direct_gap(rule, model, umask, vmask)
        if gap < 0:
            audited, pair = audit_d_monotonic(model, metric)
            if not audited:
                raise RuntimeError(f"constructed model failed its own audit at {pair}")
            return CounterexamplePackage(metric, model, ground, rival, gap, jump, delta)
        delta /= 2
    raise DeltaSearchError(
        f"gap still non-negative after {max_halvings} halvings (rule {rule.name!r})"
    )


def av_refutation_model(
    metric: DistanceMetric,
    ground: Committee,
    a: int,
    b: int,
    t_star: int,
    universe: Universe | None = None,
) -> NoiseModel:
    """Model under which a concentricity violation makes AV prefer swapping
    a out for b.

    Requires the violation N^{t*}(a|b) < N^{t*}(b|a) at the given radius
    index. Probabilities form two strictly decreasing blocks: from tau down
    to tau - eps through level t*, then from 2*eps down to eps, with
    eps = 1/(s*8^m); tau comes out of exact normalization. Interior values
    interpolate linearly (any strictly decreasing choice works).
    """
    universe = universe or default_universe(metric.m)
    m = metric.m
    levels = level_structure(metric, ground)
    s = levels.spn
    if not 1 <= t_star <= s - 1:
        raise PreconditionError(f"t*={t_star} outside 1..{s - 1}")
    n_ab = neighborhood_count(metric, ground, a, b, t_star)
    n_ba = neighborhood_count(metric, ground, b, a, t_star)
    if n_ab >= n_ba:
        raise PreconditionError(
            f"no concentricity violation at (a={a}, b={b}, t*={t_star}): "
            f"{n_ab} >= {n_ba}"
        )
    eps = Fraction(1, s * 8**m)
    # block 2 first: fixed once eps is fixed
    tail = {}
    if t_star + 1 == s:
        tail[s] = eps
    else:
        span = s - t_star - 1
        for t in range(t_star + 1, s + 1):
            tail[t] = 2 * eps - eps * Fraction(t - t_star - 1, span)
    # block 1: p_t = tau - eps * t/t*, solve normalization for tau
    head_sizes = levels.sizes[: t_star + 1]
    head_weight = sum(head_sizes)
    head_offset = sum(
        (Fraction(size) * eps * Fraction(t, t_star) for t, size in enumerate(head_sizes)),
        start=Fraction(0),
    )
    tail_mass = sum(
        (Fraction(levels.sizes[t]) * q for t, q in tail.items()), start=Fraction(0)
    )
    tau = (1 - tail_mass + head_offset) / head_weight
    if tau <= Fraction(1, 1 << m):
        raise PreconditionError(f"tau = {frac_str(tau)} not above 1/2^m; degenerate input")
    probs = [tau - eps * Fraction(t, t_star) for t in range(t_star + 1)]
    probs += [tail[t] for t in range(t_star + 1, s + 1)]
    model = make_level_model(metric, ground, probs, universe)

    av = make_rule("av", m, ground.k)
    vmask = ground.mask & ~(1 << a) | (1 << b)
    gap = _direct_gap(av, model, ground.mask, vmask)
    if gap >= 0:
        raise DeltaSearchError(
            f"refutation model failed to produce a negative gap ({frac_str(gap)})"
        )
    return model


# ---------------------------------------------------------------------------
# Model file format:
#   {"type": "mp", "p": "3/4", "ground": ["a","b"], "alternatives": ["a","b","c"]}
#   {"type": "level", "metric": {...}, "ground": [...], "probs": ["p/q", ...]}

def model_to_json(model: NoiseModel) -> dict:
    doc = {
        "type": "mp" if model.kind == "product" else "level",
        "ground": list(model.ground.labels(model.universe)),
        "alternatives": list(model.universe.names),
    }
    if model.kind == "product":
        doc["p"] = frac_str(model.p)
    else:
        doc["metric"] = metric_to_json(model.metric, model.universe)
        doc["probs"] = [frac_str(q) for q in model.level_probs]
        if model.zero_tail:
            doc["zero_tail"] = True
    return doc


def model_from_json(doc: dict, m: int | None = None) -> NoiseModel:
    try:
        names = doc.get("alternatives")
        if names:
            universe = Universe(tuple(names))
        elif m is not None:
            universe = default_universe(m)
        else:
            raise ProfileParseError("model file needs 'alternatives' or an explicit m")
        ground_set = universe.set_of(doc["ground"])
        ground = Committee(ground_set, ground_set.size)
        if doc["type"] == "mp":
            return make_mp(parse_frac(str(doc["p"])), universe, ground)
        if doc["type"] == "level":
            metric_doc = doc["metric"]
            metric = (
                make_metric(metric_doc, universe.m)
                if isinstance(metric_doc, str)
                else metric_from_json(metric_doc)
            )
            probs = [parse_frac(str(q)) for q in doc["probs"]]
            return make_level_model(metric, ground, probs, universe)
    except (KeyError, TypeError) as exc:
        raise ProfileParseError(f"bad model file: {exc}") from None
    raise ProfileParseError(f"unknown model type {doc.get('type')!r}")


def load_model_file(path, m: int | None = None) -> NoiseModel:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProfileParseError(f"bad JSON in model file: {exc}") from None
    return model_from_json(doc, m)
