"""Ground representations: alternatives, subsets, committees, profiles.

Alternative sets are bit-indexed against a fixed universe order, so that
set equality, intersection, and difference are single integer operations.
Everything downstream (rules, metrics, noise models, oracles) works on
these masks; labels exist for I/O only.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb

from .errors import (
    CapExceededError,
    InvalidCommitteeSizeError,
    ProfileParseError,
)

# Safe desk-scale defaults; sampling paths are not subject to these.
DEFAULT_MAX_M = 16
DEFAULT_MAX_COMMITTEES = 100_000


@dataclass(frozen=True)
class Universe:
    """A fixed, totally ordered set of m distinctly labeled alternatives."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(self.names) == 0:
            # m = 0 is allowed for the degenerate power-set {empty set}
            return
        if len(set(self.names)) != len(self.names):
            raise ValueError("alternative labels must be pairwise distinct")

    @property
    def m(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown alternative {name!r}") from None

    def set_of(self, names) -> AlternativeSet:
        mask = 0
        for name in names:
            mask |= 1 << self.index(name)
        return AlternativeSet(mask, self.m)


def default_universe(m: int) -> Universe:
    """Universe with labels a, b, c, ... for quick construction."""
    if m < 0:
        raise ValueError("m must be non-negative")
    if m <= 26:
        return Universe(tuple(string.ascii_lowercase[:m]))
    return Universe(tuple(f"x{i}" for i in range(m)))


@dataclass(frozen=True, order=True)
class AlternativeSet:
    """A subset of the universe, stored as a bitmask of member indices."""

    mask: int
    m: int

    def __post_init__(self):
        if self.mask < 0 or self.mask >> self.m:
            raise ValueError(f"mask {self.mask:#x} has bits outside 0..{self.m - 1}")

    @classmethod
    def from_indices(cls, indices, m: int) -> AlternativeSet:
        mask = 0
        for i in indices:
            i = int(i)
            if not 0 <= i < m:
                raise ValueError(f"index {i} outside universe of size {m}")
            mask |= 1 << i
        return cls(mask, m)

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    def contains(self, index: int) -> bool:
        return bool(self.mask >> index & 1)

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.m) if self.mask >> i & 1)

    def labels(self, universe: Universe) -> tuple[str, ...]:
        return tuple(universe.names[i] for i in self.indices())

    def intersection(self, other: AlternativeSet) -> AlternativeSet:
        return AlternativeSet(self.mask & other.mask, self.m)

    def union(self, other: AlternativeSet) -> AlternativeSet:
        return AlternativeSet(self.mask | other.mask, self.m)

    def difference(self, other: AlternativeSet) -> AlternativeSet:
        return AlternativeSet(self.mask & ~other.mask, self.m)

    def symmetric_difference(self, other: AlternativeSet) -> AlternativeSet:
        return AlternativeSet(self.mask ^ other.mask, self.m)

    def __len__(self) -> int:
        return self.size

    def __iter__(self):
        return iter(self.indices())


@dataclass(frozen=True, order=True)
class Committee:
    """An alternative set of exactly k members."""

    members: AlternativeSet
    k: int

    def __post_init__(self):
        if self.k <= 0:
            raise InvalidCommitteeSizeError(f"k must be positive, got {self.k}")
        if self.members.size != self.k:
            raise InvalidCommitteeSizeError(
                f"committee has {self.members.size} members, expected k={self.k}"
            )

    @classmethod
    def from_indices(cls, indices, m: int) -> Committee:
        members = AlternativeSet.from_indices(indices, m)
        return cls(members, members.size)

    @property
    def mask(self) -> int:
        return self.members.mask

    @property
    def m(self) -> int:
        return self.members.m

    def labels(self, universe: Universe) -> tuple[str, ...]:
        return self.members.labels(universe)


@dataclass(frozen=True)
class Profile:
    """An ordered list of approval votes; votes may repeat, empty votes allowed."""

    votes: tuple[AlternativeSet, ...]

    def __post_init__(self):
        ms = {v.m for v in self.votes}
        if len(ms) > 1:
            raise ValueError("all votes must live in the same universe")

    @property
    def n(self) -> int:
        return len(self.votes)

    def __iter__(self):
        return iter(self.votes)

    def __len__(self) -> int:
        return len(self.votes)


@dataclass(frozen=True)
class FeasiblePairDomain:
    """All (x, y) = (|committee ∩ vote|, |vote|) values realizable at (m, k)."""

    m: int
    k: int
    pairs: frozenset[tuple[int, int]] = field(compare=False)

    def __contains__(self, pair) -> bool:
        return pair in self.pairs


def check_k(m: int, k: int) -> None:
    if k <= 0 or k > m:
        raise InvalidCommitteeSizeError(f"need 0 < k <= m, got k={k}, m={m}")


def feasible_pairs(m: int, k: int) -> FeasiblePairDomain:
    """The domain X of score-table arguments for committee size k among m.

    For each vote size y in 0..m the overlap x ranges over
    max(k + y - m, 0) .. min(y, k).
    """
    check_k(m, k)
    pairs = frozenset(
        (x, y)
        for y in range(m + 1)
        for x in range(max(k + y - m, 0), min(y, k) + 1)
    )
    return FeasiblePairDomain(m, k, pairs)


def enumerate_subsets(universe: Universe, max_m: int = DEFAULT_MAX_M) -> list[AlternativeSet]:
    """All 2^m subsets in ascending bitmask order."""
    m = universe.m
    if m > max_m:
        raise CapExceededError(f"m={m} exceeds subset enumeration cap {max_m}")
    return [AlternativeSet(mask, m) for mask in range(1 << m)]


def enumerate_committees(
    universe: Universe, k: int, max_committees: int = DEFAULT_MAX_COMMITTEES
) -> list[Committee]:
    """All C(m, k) size-k committees in ascending bitmask order."""
    m = universe.m
    check_k(m, k)
    count = comb(m, k)
    if count > max_committees:
        raise CapExceededError(f"C({m},{k})={count} exceeds committee cap {max_committees}")
    masks = sorted(sum(1 << i for i in combo) for combo in combinations(range(m), k))
    return [Committee(AlternativeSet(mask, m), k) for mask in masks]


def committee_masks(m: int, k: int, max_committees: int = DEFAULT_MAX_COMMITTEES) -> list[int]:
    """Raw bitmasks of all size-k committees, ascending. Fast path for oracles."""
    check_k(m, k)
    count = comb(m, k)
    if count > max_committees:
        raise CapExceededError(f"C({m},{k})={count} exceeds committee cap {max_committees}")
    return sorted(sum(1 << i for i in combo) for combo in combinations(range(m), k))


# ---------------------------------------------------------------------------
# Exact rational formatting shared across file formats and the CLI.

def frac_str(value: Fraction | int) -> str:
    """Canonical "p/q" string; plain integer string when q = 1."""
    f = Fraction(value)
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def parse_frac(text: str) -> Fraction:
    """Parse "p/q" or a plain integer string into an exact Fraction."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ProfileParseError(f"bad rational {text!r}: {exc}") from None


# ---------------------------------------------------------------------------
# Profile text format.
#
#   # comment
#   alternatives: a,b,c
#   a,b
#   <blank line>        (an empty vote)
#   c

def parse_profile(text: str) -> tuple[Universe, Profile]:
    """Parse the one-vote-per-line profile format.

    The first non-comment line must declare the universe
    ("alternatives: a,b,c"); every following line is a vote, a blank
    line being the empty vote. Lines starting with '#' are ignored.

    Raises
    ------
    ProfileParseError
        With the offending 1-based line number.
    """
    universe = None
    votes = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            continue
        if universe is None:
            if not line:
                continue  # leading blank lines before the header carry no vote
            if not line.startswith("alternatives:"):
                raise ProfileParseError(
                    "expected header 'alternatives: ...' before any votes", line=lineno
                )
            names = [t.strip() for t in line[len("alternatives:"):].split(",")]
            names = [t for t in names if t]
            if not names:
                raise ProfileParseError("empty alternatives declaration", line=lineno)
            try:
                universe = Universe(tuple(names))
            except ValueError as exc:
                raise ProfileParseError(str(exc), line=lineno) from None
            continue
        if not line:
            votes.append(AlternativeSet(0, universe.m))
            continue
        mask = 0
        for token in line.split(","):
            token = token.strip()
            if not token:
                raise ProfileParseError("empty label in vote", line=lineno)
            try:
                mask |= 1 << universe.index(token)
            except KeyError:
                raise ProfileParseError(f"unknown alternative {token!r}", line=lineno) from None
        votes.append(AlternativeSet(mask, universe.m))
    if universe is None:
        raise ProfileParseError("missing 'alternatives:' header")
    return universe, Profile(tuple(votes))


def format_profile(universe: Universe, profile: Profile) -> str:
    lines = ["alternatives: " + ",".join(universe.names)]
    for vote in profile:
        lines.append(",".join(vote.labels(universe)))
    return "\n".join(lines) + "\n"
