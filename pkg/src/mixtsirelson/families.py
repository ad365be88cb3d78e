"""Compact hereditary families of finite subsets of N.

Each catalog kind is an immutable descriptor answering membership,
witness search, derivative and index queries by closed-form rules.  Finite
sets are plain sorted tuples of positive ints.
"""

from __future__ import annotations

import bisect
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Sequence

FinSet = tuple[int, ...]
Box = tuple[int, int]


class FamilyError(ValueError):
    pass


def finset(elements: Iterable[int] = ()) -> FinSet:
    out = tuple(sorted(set(int(e) for e in elements)))
    if out and out[0] < 1:
        raise FamilyError(f"finite sets live in N = {{1, 2, ...}}, got {out}")
    return out


class Family:
    """Base descriptor.  Subclasses are frozen dataclasses."""

    def contains(self, F: FinSet) -> bool:
        raise NotImplementedError

    def witness(self, boxes: Sequence[Box]) -> FinSet | None:
        raise NotImplementedError

    def derivative(self) -> "Family":
        raise NotImplementedError

    def is_trivial(self) -> bool:
        """True when the family is contained in {emptyset}."""
        return False

    def nonsingletons(self) -> frozenset[FinSet] | None:
        """All members of size >= 2, or None if there are infinitely many."""
        return None

    def straddled(self, n: int) -> bool:
        """Does some member M satisfy min M <= n < max M?"""
        raise NotImplementedError

    def gaps_unbounded(self) -> bool | None:
        raise NotImplementedError


@dataclass(frozen=True)
class Empty(Family):
    """The family with no members at all (derivative of a finite family)."""

    def contains(self, F):
        return False

    def witness(self, boxes):
        return None

    def derivative(self):
        return self

    def is_trivial(self):
        return True

    def nonsingletons(self):
        return frozenset()

    def straddled(self, n):
        return False

    def gaps_unbounded(self):
        return True


@dataclass(frozen=True)
class AnK(Family):
    """All F with |F| <= k."""

    k: int

    def __post_init__(self):
        if self.k < 1:
            raise FamilyError("AnK needs k >= 1")

    def contains(self, F):
        return len(F) <= self.k

    def witness(self, boxes):
        if len(boxes) > self.k:
            return None
        return tuple(hi for _, hi in boxes)

    def derivative(self):
        if self.k == 1:
            return ExplicitFinite(((),))
        return AnK(self.k - 1)

    def nonsingletons(self):
        return frozenset() if self.k == 1 else None

    def straddled(self, n):
        return self.k >= 2

    def gaps_unbounded(self):
        return self.k == 1


@dataclass(frozen=True)
class Schreier(Family):
    """``{F : |F| + shift <= min F}`` together with the empty set.

    ``shift = 0`` is the Schreier class; ``shift = j`` is its j-th derivative.
    """

    shift: int = 0

    def __post_init__(self):
        if self.shift < 0:
            raise FamilyError("Schreier shift must be >= 0")

    def contains(self, F):
        return not F or len(F) + self.shift <= F[0]

    def witness(self, boxes):
        if not boxes:
            return ()
        if len(boxes) + self.shift > boxes[0][1]:
            return None
        return tuple(hi for _, hi in boxes)

    def derivative(self):
        return Schreier(self.shift + 1)

    def straddled(self, n):
        # {n, n+1} is a member once n >= 2 + shift; smaller n cannot be
        # straddled since a member with min <= n has at most n - shift <= 1 elements
        return n >= 2 + self.shift

    def gaps_unbounded(self):
        return False


@dataclass(frozen=True)
class Singletons(Family):
    def contains(self, F):
        return len(F) <= 1

    def witness(self, boxes):
        return tuple(hi for _, hi in boxes) if len(boxes) <= 1 else None

    def derivative(self):
        return ExplicitFinite(((),))

    def nonsingletons(self):
        return frozenset()

    def straddled(self, n):
        return False

    def gaps_unbounded(self):
        return True


class _Enumerable(Family):
    """Families whose members of size >= 2 inside [1, bound] can be listed."""

    def members_within(self, bound: int) -> Iterator[FinSet]:
        raise NotImplementedError

    def witness(self, boxes):
        n = len(boxes)
        if n == 0:
            return ()
        if n == 1:
            lo, hi = boxes[0]
            for m in range(hi, lo - 1, -1):
                if self.contains((m,)):
                    return (m,)
            return None
        best = None
        for W in self.members_within(boxes[-1][1]):
            if len(W) == n and all(lo <= m <= hi for m, (lo, hi) in zip(W, boxes)):
                if best is None or W > best:
                    best = W
        return best


@dataclass(frozen=True)
class ExplicitFinite(_Enumerable):
    """A finite family given by its members; closed under subsets on creation."""

    members: tuple[FinSet, ...]

    def __post_init__(self):
        given = {finset(m) for m in self.members}
        closed = set()
        for m in given:
            for r in range(len(m) + 1):
                closed.update(combinations(m, r))
        if closed != given:
            warnings.warn(
                f"explicit family was not hereditary; added {len(closed - given)} subsets",
                stacklevel=3,
            )
        object.__setattr__(self, "members", tuple(sorted(closed, key=lambda s: (len(s), s))))

    def contains(self, F):
        return F in self.members

    def members_within(self, bound):
        for m in self.members:
            if len(m) >= 2 and m[-1] <= bound:
                yield m

    def derivative(self):
        return Empty()

    def is_trivial(self):
        return all(not m for m in self.members)

    def nonsingletons(self):
        return frozenset(m for m in self.members if len(m) >= 2)

    def straddled(self, n):
        return any(m[0] <= n < m[-1] for m in self.members if len(m) >= 2)

    def gaps_unbounded(self):
        return True


@dataclass(frozen=True)
class PairTailPow2(_Enumerable):
    """``{F : F subset of {1, 2^i} for some i >= 1}``."""

    def contains(self, F):
        rest = [m for m in F if m != 1]
        return len(rest) == 0 or (len(rest) == 1 and _is_pow2(rest[0]))

    def members_within(self, bound):
        p = 2
        while p <= bound:
            yield (1, p)
            p *= 2

    def derivative(self):
        return ExplicitFinite(((), (1,)))

    def straddled(self, n):
        return True

    def gaps_unbounded(self):
        return False


@dataclass(frozen=True)
class PairConsecutive(_Enumerable):
    """``{F : F subset of {2i-1, 2i} for some i}``."""

    def contains(self, F):
        if len(F) <= 1:
            return True
        return len(F) == 2 and F[0] % 2 == 1 and F[1] == F[0] + 1

    def members_within(self, bound):
        for i in range(1, bound // 2 + 1):
            yield (2 * i - 1, 2 * i)

    def derivative(self):
        return ExplicitFinite(((),))

    def straddled(self, n):
        return n % 2 == 1

    def gaps_unbounded(self):
        return True


@dataclass(frozen=True)
class UnionOf(Family):
    parts: tuple[Family, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise FamilyError("UnionOf needs at least one part")

    def contains(self, F):
        return any(p.contains(F) for p in self.parts)

    def witness(self, boxes):
        found = [w for w in (p.witness(boxes) for p in self.parts) if w is not None]
        return max(found) if found else None

    def derivative(self):
        return UnionOf(tuple(p.derivative() for p in self.parts))

    def is_trivial(self):
        return all(p.is_trivial() for p in self.parts)

    def nonsingletons(self):
        out: set[FinSet] = set()
        for p in self.parts:
            ns = p.nonsingletons()
            if ns is None:
                return None
            out |= ns
        return frozenset(out)

    def straddled(self, n):
        return any(p.straddled(n) for p in self.parts)

    def gaps_unbounded(self):
        # the gap set of a finite union is the intersection of the gap sets;
        # for the catalog every gap set is cofinite, all-even or eventually empty
        verdicts = [p.gaps_unbounded() for p in self.parts]
        if any(v is None for v in verdicts):
            return None
        return all(verdicts)


def _is_pow2(m: int) -> bool:
    return m >= 2 and m & (m - 1) == 0


# -- operations ------------------------------------------------------------

def contains(fam: Family, F: Iterable[int]) -> bool:
    return fam.contains(finset(F))


def witness_in_boxes(fam: Family, boxes: Sequence[Box]) -> FinSet | None:
    """Lexicographically greatest member ``{m_1 < ... < m_n}`` with ``m_i`` in box i."""
    prev = 0
    for lo, hi in boxes:
        if not prev < lo <= hi:
            raise FamilyError(f"boxes must be nonempty and strictly increasing: {boxes}")
        prev = hi
    return fam.witness(list(boxes))


def _boxes_for(sets: Sequence[FinSet]) -> list[Box]:
    boxes, prev_max = [], 0
    for E in sets:
        if E[0] <= prev_max:
            raise FamilyError(f"sets are not successive: {sets}")
        boxes.append((prev_max + 1, E[0]))
        prev_max = E[-1]
    return boxes


def admissible_witness(fam: Family, sets: Iterable[Iterable[int]]) -> FinSet | None:
    """Witness ``{m_1,...,m_n}`` making the successive sets admissible, or None.

    Empty sets are dropped first (the family is hereditary), so an all-empty
    sequence is vacuously admissible with the empty witness.
    """
    parts = [s for s in (finset(E) for E in sets) if s]
    return fam.witness(_boxes_for(parts))


def admissible(fam: Family, sets: Iterable[Iterable[int]]) -> bool:
    return admissible_witness(fam, sets) is not None


def derivative(fam: Family) -> Family:
    return fam.derivative()


@dataclass(frozen=True)
class IndexValue:
    finite: int | None = None
    cap: int | None = None

    @property
    def is_finite(self) -> bool:
        return self.finite is not None

    def __str__(self) -> str:
        return str(self.finite) if self.is_finite else f">={self.cap} (infinite)"


def _has_schreier(fam: Family) -> bool:
    if isinstance(fam, Schreier):
        return True
    return isinstance(fam, UnionOf) and any(_has_schreier(p) for p in fam.parts)


def index(fam: Family, cap: int = 32) -> IndexValue:
    """Least n with ``fam^(n)`` contained in {emptyset}, or a capped infinite marker."""
    if cap < 1:
        raise FamilyError("index cap must be >= 1")
    if _has_schreier(fam):
        return IndexValue(cap=cap)
    current = fam
    for n in range(cap + 1):
        if current.is_trivial():
            return IndexValue(finite=n)
        current = current.derivative()
    return IndexValue(cap=cap)


@dataclass(frozen=True)
class NonsingletonProfile:
    count: int | None
    max_element: int | None

    @property
    def infinite(self) -> bool:
        return self.count is None


def nonsingleton_profile(fam: Family) -> NonsingletonProfile:
    ns = fam.nonsingletons()
    if ns is None:
        return NonsingletonProfile(None, None)
    return NonsingletonProfile(len(ns), max((m[-1] for m in ns), default=0))


@dataclass(frozen=True)
class GapReport:
    unbounded: bool | None
    samples: tuple[int, ...]


def gap_points_unbounded(fam: Family, sample_limit: int = 64) -> GapReport:
    """Are there arbitrarily large n that no member straddles?"""
    samples = tuple(n for n in range(1, sample_limit + 1) if not fam.straddled(n))
    return GapReport(fam.gaps_unbounded(), samples)


def flatten(fam: Family) -> list[Family]:
    """Components of nested unions; the sup over a union is the max over parts."""
    if isinstance(fam, UnionOf):
        return [leaf for p in fam.parts for leaf in flatten(p)]
    return [fam]


def enumerate_members(fam: Family, universe: int) -> list[FinSet]:
    """Brute-force membership scan over subsets of [1, universe] (test helper)."""
    out = []
    elems = range(1, universe + 1)
    for r in range(universe + 1):
        for F in combinations(elems, r):
            if fam.contains(F):
                out.append(F)
    return out


def slot_sizes(W: FinSet, positions: Sequence[int], lo: int, hi: int) -> list[tuple[int, int]] | None:
    """Index ranges of ``positions[lo..hi]`` falling in ``[m_i, m_{i+1})``.

    Returns None when a slot is empty.  Used by the norm engine: with witness
    W the best admissible parts are exactly these slots.
    """
    out = []
    for i, m in enumerate(W):
        start = bisect.bisect_left(positions, m, lo, hi + 1)
        if i + 1 < len(W):
            stop = bisect.bisect_left(positions, W[i + 1], lo, hi + 1) - 1
        else:
            stop = hi
        if start > stop:
            return None
        out.append((start, stop))
    return out
