"""Distance metrics over alternative sets and their taxonomy checkers.

Distances are exact rationals throughout: level grouping, concentricity
counts, and every downstream robustness verdict depend on exact equality
and strict sign comparisons, so floats never enter here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import (
    DEFAULT_MAX_M,
    AlternativeSet,
    Committee,
    Universe,
    committee_masks,
    default_universe,
    frac_str,
    parse_frac,
)
from .errors import (
    CapExceededError,
    MetricAxiomError,
    MetricGenerationError,
    PreconditionError,
    ProfileParseError,
)

METRIC_KINDS = (
    "set_difference",
    "jaccard",
    "zelinka",
    "bunke_shearer",
    "trivial",
    "example2",
    "custom",
)


def _d_set_difference(x: int, y: int) -> Fraction:
    return Fraction((x ^ y).bit_count())


def _d_jaccard(x: int, y: int) -> Fraction:
    union = (x | y).bit_count()
    if union == 0:
        return Fraction(0)  # the 0/0 case, pinned by the identity axiom
    return Fraction((x ^ y).bit_count(), union)


def _d_zelinka(x: int, y: int) -> Fraction:
    return Fraction(max((x & ~y).bit_count(), (y & ~x).bit_count()))


def _d_bunke_shearer(x: int, y: int) -> Fraction:
    top = max(x.bit_count(), y.bit_count())
    if top == 0:
        return Fraction(0)
    return Fraction(max((x & ~y).bit_count(), (y & ~x).bit_count()), top)


def _d_trivial(x: int, y: int) -> Fraction:
    return Fraction(0 if x == y else 1)


_BUILTIN_FNS = {
    "set_difference": _d_set_difference,
    "jaccard": _d_jaccard,
    "zelinka": _d_zelinka,
    "bunke_shearer": _d_bunke_shearer,
    "trivial": _d_trivial,
}


class DistanceMetric:
    """Symmetric exact-valued distance on subsets of an m-alternative universe.

    Backed either by a closed form (builtins and constructions) or by an
    explicit table keyed on unordered mask pairs (custom and random metrics).
    Immutable after construction; level structures are cached per ground set.
    """

    def __init__(self, name, m, *, fn=None, table=None):
        if (fn is None) == (table is None):
            raise ValueError("exactly one of fn/table required")
        self.name = name
        self.m = m
        self._fn = fn
        self._table = table
        self._level_cache: dict[int, LevelStructure] = {}

    def d(self, xmask: int, ymask: int) -> Fraction:
        """Distance between two sets given as masks."""
        if self._fn is not None:
            return self._fn(xmask, ymask)
        if xmask == ymask:
            return Fraction(0)
        key = (xmask, ymask) if xmask < ymask else (ymask, xmask)
        return self._table[key]

    def distance(self, x: AlternativeSet, y: AlternativeSet) -> Fraction:
        if x.m != self.m or y.m != self.m:
            raise PreconditionError("sets do not match the metric's universe size")
        return self.d(x.mask, y.mask)

    def row(self, umask: int) -> list[Fraction]:
        return [self.d(umask, s) for s in range(1 << self.m)]

    def __repr__(self):
        return f"DistanceMetric({self.name!r}, m={self.m})"


def make_metric(kind: str, m: int, *, table=None, name=None) -> DistanceMetric:
    """Build a builtin metric, or wrap a custom table (axioms verified).

    `table` maps unordered mask pairs (a, b) with a < b to positive
    rationals; the diagonal is implicitly zero. example2 is the m=3
    complement-at-distance-one construction and rejects other m.
    """
    if kind in _BUILTIN_FNS:
        return DistanceMetric(kind, m, fn=_BUILTIN_FNS[kind])
    if kind == "example2":
        if m != 3:
            raise PreconditionError("example2 is defined only for m=3")
        full = (1 << m) - 1

        def fn(x, y):
            if x == y:
                return Fraction(0)
            if (x & y) == 0 and (x | y) == full:
                return Fraction(1)
            return Fraction(2)

        return DistanceMetric("example2", m, fn=fn)
    if kind == "custom":
        if table is None:
            raise ValueError("custom metric requires a table")
        metric = DistanceMetric(name or "custom", m, table=_normalize_table(m, table))
        check = check_metric_axioms(metric)
        if not check.ok:
            raise MetricAxiomError(
                f"table violates the {check.axiom} axiom", witness=check.witness
            )
        return metric
    raise ValueError(f"unknown metric kind {kind!r}")


def _normalize_table(m, table) -> dict[tuple[int, int], Fraction]:
    clean = {}
    for (a, b), value in table.items():
        if a == b:
            if Fraction(value) != 0:
                raise MetricAxiomError(
                    "diagonal entries must be zero",
                    witness=(AlternativeSet(a, m), AlternativeSet(b, m)),
                )
            continue
        key = (a, b) if a < b else (b, a)
        value = Fraction(value)
        if key in clean and clean[key] != value:
            raise MetricAxiomError(
                "conflicting symmetric entries",
                witness=(AlternativeSet(key[0], m), AlternativeSet(key[1], m)),
            )
        clean[key] = value
    n = 1 << m
    expected = n * (n - 1) // 2
    if len(clean) != expected:
        raise ProfileParseError(
            f"incomplete metric table: {len(clean)} of {expected} unordered pairs"
        )
    return clean


@dataclass(frozen=True)
class AxiomCheck:
    ok: bool
    axiom: str | None = None
    witness: tuple[AlternativeSet, ...] | None = None

    def __bool__(self):
        return self.ok


def check_metric_axioms(metric: DistanceMetric, max_m: int = DEFAULT_MAX_M) -> AxiomCheck:
    """Verify identity, positivity, symmetry, and the triangle inequality.

    Exhaustive over all pairs and triples of the 2^m subsets; the triangle
    pass runs on an integer-rescaled matrix so numpy can sweep it.
    """
    m = metric.m
    if m > max_m:
        raise CapExceededError(f"m={m} exceeds axiom check cap {max_m}")
    n = 1 << m
    D = [metric.row(i) for i in range(n)]

    def sets(*masks):
        return tuple(AlternativeSet(mask, m) for mask in masks)

    for i in range(n):
        if D[i][i] != 0:
            return AxiomCheck(False, "identity", sets(i, i))
        for j in range(i + 1, n):
            if D[i][j] != D[j][i]:
                return AxiomCheck(False, "symmetry", sets(i, j))
            if D[i][j] <= 0:
                return AxiomCheck(False, "positivity", sets(i, j))

    scale = math.lcm(*(v.denominator for row in D for v in row)) if n else 1
    ints = [[v.numerator * (scale // v.denominator) for v in row] for row in D]
    if max((abs(v) for row in ints for v in row), default=0) < 2**60:
        A = np.array(ints, dtype=np.int64)
        for j in range(n):
            slack = A[:, j][:, None] + A[j, :][None, :] - A
            if (slack < 0).any():
                i, k = map(int, np.argwhere(slack < 0)[0])
                return AxiomCheck(False, "triangle", sets(i, j, k))
    else:
        # rescaled values too large for int64; exact but slow fallback
        for j in range(n):
            for i in range(n):
                for k in range(n):
                    if D[i][k] > D[i][j] + D[j][k]:
                        return AxiomCheck(False, "triangle", sets(i, j, k))
    return AxiomCheck(True)


@dataclass(frozen=True)
class LevelStructure:
    """Distinct distances from a ground committee and the induced partition.

    values[t] is the t-th smallest distance (values[0] = 0); level_of[mask]
    gives each subset's level index; sizes[t] counts the sets at level t.
    The number of distinct non-zero values is `spn`.
    """

    ground: Committee
    values: tuple[Fraction, ...]
    level_of: tuple[int, ...]
    sizes: tuple[int, ...]

    @property
    def spn(self) -> int:
        return len(self.values) - 1

    def level_sets(self, t: int) -> list[AlternativeSet]:
        m = self.ground.m
        return [AlternativeSet(s, m) for s, lev in enumerate(self.level_of) if lev == t]

    def cumulative_sizes(self) -> tuple[int, ...]:
        out, acc = [], 0
        for size in self.sizes:
            acc += size
            out.append(acc)
        return tuple(out)


def level_structure(
    metric: DistanceMetric, ground: Committee, max_m: int = DEFAULT_MAX_M
) -> LevelStructure:
    """Group all 2^m subsets by their exact distance from the ground committee."""
    m = metric.m
    if m > max_m:
        raise CapExceededError(f"m={m} exceeds enumeration cap {max_m}")
    if ground.m != m:
        raise PreconditionError("ground committee does not match the metric's universe")
    cached = metric._level_cache.get(ground.mask)
    if cached is not None:
        return cached
    row = metric.row(ground.mask)
    if row[ground.mask] != 0:
        raise MetricAxiomError("d(U, U) != 0; not a metric", witness=(ground.members,))
    values = sorted(set(row))
    index = {v: t for t, v in enumerate(values)}
    level_of = tuple(index[v] for v in row)
    sizes = [0] * len(values)
    for lev in level_of:
        sizes[lev] += 1
    structure = LevelStructure(ground, tuple(values), level_of, tuple(sizes))
    metric._level_cache[ground.mask] = structure
    return structure


def neighborhood_count(
    metric: DistanceMetric, ground: Committee, a: int, b: int, t: int
) -> int:
    """Number of sets containing a but not b within the t-th distance level."""
    if a == b:
        raise PreconditionError("a and b must differ")
    levels = level_structure(metric, ground)
    if not 0 <= t <= levels.spn:
        raise PreconditionError(f"t={t} outside 0..{levels.spn}")
    count = 0
    for mask, lev in enumerate(levels.level_of):
        if lev <= t and (mask >> a & 1) and not (mask >> b & 1):
            count += 1
    return count


@dataclass(frozen=True)
class MetricPropertyCheck:
    ok: bool
    witness: tuple | None = None

    def __bool__(self):
        return self.ok


def is_majority_concentric(metric: DistanceMetric, k: int) -> MetricPropertyCheck:
    """Check the ball-count dominance property for every ground committee.

    For each k-committee U, member a, outsider b, and radius index t, the
    ball of radius delta_t around U must contain at least as many sets
    with a-but-not-b as with b-but-not-a. Witness on failure: (U, a, b, t).
    """
    m = metric.m
    for umask in committee_masks(m, k):
        levels = level_structure(metric, Committee(AlternativeSet(umask, m), k))
        members = [i for i in range(m) if umask >> i & 1]
        outsiders = [i for i in range(m) if not umask >> i & 1]
        pairs = [(a, b) for a in members for b in outsiders]
        inside = {pair: 0 for pair in pairs}
        reverse = {pair: 0 for pair in pairs}
        by_level = [[] for _ in levels.sizes]
        for mask, lev in enumerate(levels.level_of):
            by_level[lev].append(mask)
        for t, masks in enumerate(by_level):
            for mask in masks:
                for pair in pairs:
                    a, b = pair
                    has_a = mask >> a & 1
                    has_b = mask >> b & 1
                    if has_a and not has_b:
                        inside[pair] += 1
                    elif has_b and not has_a:
                        reverse[pair] += 1
            for pair in pairs:
                if inside[pair] < reverse[pair]:
                    ground = Committee(AlternativeSet(umask, m), k)
                    return MetricPropertyCheck(False, (ground, pair[0], pair[1], t))
    return MetricPropertyCheck(True)


def _overlap_triples(metric: DistanceMetric, k: int, strict: bool) -> MetricPropertyCheck:
    m = metric.m
    masks = committee_masks(m, k)
    rows = {umask: metric.row(umask) for umask in masks}
    for umask in masks:
        for vmask in masks:
            if umask == vmask:
                continue
            for s in range(1 << m):
                if (umask & s).bit_count() > (vmask & s).bit_count():
                    du, dv = rows[umask][s], rows[vmask][s]
                    if du > dv or (strict and du == dv):
                        witness = (
                            Committee(AlternativeSet(umask, m), k),
                            Committee(AlternativeSet(vmask, m), k),
                            AlternativeSet(s, m),
                        )
                        return MetricPropertyCheck(False, witness)
    return MetricPropertyCheck(True)


def is_natural(metric: DistanceMetric, k: int) -> MetricPropertyCheck:
    """Larger overlap never increases distance: |U∩S| > |V∩S| ⇒ d(U,S) ≤ d(V,S)."""
    return _overlap_triples(metric, k, strict=False)


def is_similarity(metric: DistanceMetric, k: int) -> MetricPropertyCheck:
    """Larger overlap strictly decreases distance: |U∩S| > |V∩S| ⇒ d(U,S) < d(V,S)."""
    return _overlap_triples(metric, k, strict=True)


def is_alternative_independent(metric: DistanceMetric) -> MetricPropertyCheck:
    """Whether distance depends only on (|X\\Y|, |Y\\X|, |X|, |Y|).

    Witness on failure: two ordered pairs with equal signature but
    different distance.
    """
    m = metric.m
    first: dict[tuple[int, int, int, int], tuple[int, int, Fraction]] = {}
    for x in range(1 << m):
        for y in range(1 << m):
            sig = (
                (x & ~y).bit_count(),
                (y & ~x).bit_count(),
                x.bit_count(),
                y.bit_count(),
            )
            d = metric.d(x, y)
            seen = first.get(sig)
            if seen is None:
                first[sig] = (x, y, d)
            elif seen[2] != d:
                witness = (
                    (AlternativeSet(seen[0], m), AlternativeSet(seen[1], m)),
                    (AlternativeSet(x, m), AlternativeSet(y, m)),
                )
                return MetricPropertyCheck(False, witness)
    return MetricPropertyCheck(True)


# ---------------------------------------------------------------------------
# Random metric generation: generate-and-filter with bounded retries.

def random_metric(
    m: int,
    seed,
    family: str = "table",
    monotone: bool = False,
    perturb: bool = True,
    max_retries: int = 50,
    max_m: int = DEFAULT_MAX_M,
) -> DistanceMetric:
    """Seeded random metric, axiom-verified before return.

    family "table": independent symmetric entries in [1, 2] (eighth-steps
    when `perturb`, else {1, 2}); any such table satisfies the triangle
    inequality, and entries are alternative-dependent.
    family "signature": values constant on (|X\\Y|, |Y\\X|, |X|, |Y|)
    signatures, hence alternative-independent. With `monotone` the value
    is a random capped combination of the symmetric-difference and
    max-difference sizes (non-decreasing in both, which also makes the
    metric natural); otherwise each signature class draws from [1, 2].
    """
    if m > max_m:
        raise CapExceededError(f"m={m} exceeds generation cap {max_m}")
    if family not in ("table", "signature"):
        raise ValueError(f"unknown family {family!r}")
    rng = np.random.default_rng(seed)
    n = 1 << m
    tag = f"m={m},seed={seed}"
    for _ in range(max_retries):
        if family == "table":
            pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
            if perturb:
                draws = rng.integers(0, 9, size=len(pairs))
                values = [1 + Fraction(int(d), 8) for d in draws]
            else:
                draws = rng.integers(1, 3, size=len(pairs))
                values = [Fraction(int(d)) for d in draws]
            candidate = DistanceMetric(
                f"random_table({tag})", m, table=dict(zip(pairs, values))
            )
        else:
            candidate = _random_signature_metric(m, rng, monotone, perturb, tag)
        if check_metric_axioms(candidate, max_m=max_m).ok:
            return candidate
    raise MetricGenerationError(f"no valid metric after {max_retries} attempts")


def _random_signature_metric(m, rng, monotone, perturb, tag) -> DistanceMetric:
    n = 1 << m
    if monotone:
        # weighted sum of two metrics plus a positive jump at any difference,
        # optionally capped; non-decreasing in (|X\Y|, |Y\X|) by construction
        w_sym = Fraction(int(rng.integers(0, 4)), 2)
        w_max = Fraction(int(rng.integers(0, 4)), 2)
        w_pos = Fraction(int(rng.integers(0, 4)), 2)
        if w_sym == w_max == w_pos == 0:
            w_pos = Fraction(1)
        cap = None
        if rng.integers(0, 2):
            cap = w_pos + w_sym + w_max + Fraction(int(rng.integers(1, 2 * m + 1)), 2)

        def value(diff_xy, diff_yx, size_x, size_y):
            v = w_sym * (diff_xy + diff_yx) + w_max * max(diff_xy, diff_yx) + w_pos
            return min(v, cap) if cap is not None else v

    else:
        assignments = {}

        def value(diff_xy, diff_yx, size_x, size_y):
            key = tuple(sorted([(diff_xy, size_x), (diff_yx, size_y)]))
            if key not in assignments:
                if perturb:
                    assignments[key] = 1 + Fraction(int(rng.integers(0, 9)), 8)
                else:
                    assignments[key] = Fraction(int(rng.integers(1, 3)))
            return assignments[key]

    table = {}
    for a in range(n):
        for b in range(a + 1, n):
            table[(a, b)] = value(
                (a & ~b).bit_count(), (b & ~a).bit_count(), a.bit_count(), b.bit_count()
            )
    return DistanceMetric(f"random_signature({tag})", m, table=table)


# ---------------------------------------------------------------------------
# Taxonomy report.

@dataclass(frozen=True)
class TaxonomyReport:
    metric_name: str
    m: int
    k: int
    is_metric: bool
    is_majority_concentric: bool
    is_natural: bool
    is_similarity: bool
    is_alternative_independent: bool
    witnesses: dict

    def flags(self) -> dict:
        return {
            "is_metric": self.is_metric,
            "is_majority_concentric": self.is_majority_concentric,
            "is_natural": self.is_natural,
            "is_similarity": self.is_similarity,
            "is_alternative_independent": self.is_alternative_independent,
        }


def taxonomy_report(metric: DistanceMetric, k: int) -> TaxonomyReport:
    """Run all metric classifiers and collect counterexample witnesses."""
    axioms = check_metric_axioms(metric)
    concentric = is_majority_concentric(metric, k)
    natural = is_natural(metric, k)
    similarity = is_similarity(metric, k)
    alt_indep = is_alternative_independent(metric)
    witnesses = {}
    if not axioms.ok:
        witnesses["is_metric"] = (axioms.axiom, axioms.witness)
    if not concentric.ok:
        witnesses["is_majority_concentric"] = concentric.witness
    if not natural.ok:
        witnesses["is_natural"] = natural.witness
    if not similarity.ok:
        witnesses["is_similarity"] = similarity.witness
    if not alt_indep.ok:
        witnesses["is_alternative_independent"] = alt_indep.witness
    return TaxonomyReport(
        metric.name,
        metric.m,
        k,
        axioms.ok,
        concentric.ok,
        natural.ok,
        similarity.ok,
        alt_indep.ok,
        witnesses,
    )


# ---------------------------------------------------------------------------
# Custom metric file format:
#   {"m": 3, "alternatives": ["a","b","c"],            # alternatives optional
#    "entries": [{"x": ["a"], "y": ["b"], "d": "1"}, ...]}
# Symmetric counterparts may be omitted; the diagonal is implicit.

def metric_to_json(metric: DistanceMetric, universe: Universe | None = None) -> dict:
    universe = universe or default_universe(metric.m)
    if metric.name in _BUILTIN_FNS or metric.name == "example2":
        return {"kind": metric.name, "m": metric.m}
    n = 1 << metric.m
    entries = []
    for a in range(n):
        for b in range(a + 1, n):
            entries.append(
                {
                    "x": list(AlternativeSet(a, metric.m).labels(universe)),
                    "y": list(AlternativeSet(b, metric.m).labels(universe)),
                    "d": frac_str(metric.d(a, b)),
                }
            )
    return {
        "kind": "custom",
        "name": metric.name,
        "m": metric.m,
        "alternatives": list(universe.names),
        "entries": entries,
    }


def metric_from_json(doc: dict) -> DistanceMetric:
    kind = doc.get("kind", "custom")
    if kind != "custom":
        return make_metric(kind, int(doc["m"]))
    try:
        m = int(doc["m"])
        names = doc.get("alternatives")
        universe = Universe(tuple(names)) if names else default_universe(m)
        if universe.m != m:
            raise ProfileParseError("alternatives list does not match m")
        table = {}
        for row in doc["entries"]:
            x = universe.set_of(row["x"]).mask
            y = universe.set_of(row["y"]).mask
            table[(x, y)] = parse_frac(str(row["d"]))
    except (KeyError, TypeError) as exc:
        raise ProfileParseError(f"bad metric file: {exc}") from None
    return make_metric("custom", m, table=table, name=doc.get("name", "custom"))


def load_metric_file(path) -> DistanceMetric:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProfileParseError(f"bad JSON in metric file: {exc}") from None
    return metric_from_json(doc)
