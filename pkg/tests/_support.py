"""Shared spaces, random generators and brute-force oracles for the tests."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

from mixtsirelson import AnK, FiniteMixed, FinVec, PairConsecutive, PairTailPow2, tsirelson
from mixtsirelson.dualball import _raw_families
from mixtsirelson.families import admissible

TSIRELSON = tsirelson()
A23 = FiniteMixed(((AnK(2), Fraction(1, 2)), (AnK(3), Fraction(2, 3))))
EXAMPLE1 = FiniteMixed(((PairTailPow2(), Fraction(1)),))
EXAMPLE2 = FiniteMixed(((PairConsecutive(), Fraction(1)),))
A2_ONE = FiniteMixed(((AnK(2), Fraction(1)),))


def random_vector(rng: random.Random, universe: int = 8, max_num: int = 12, max_den: int = 6) -> FinVec:
    k = rng.randint(1, universe)
    pos = rng.sample(range(1, universe + 1), k)
    return FinVec({p: Fraction(rng.choice((-1, 1)) * rng.randint(1, max_num), rng.randint(1, max_den))
                   for p in pos})


def brute_witness(fam, boxes):
    """Lexicographically greatest member with one point per box, by scanning every choice."""
    best = None

    def walk(i, chosen):
        nonlocal best
        if i == len(boxes):
            cand = tuple(chosen)
            if fam.contains(cand) and (best is None or cand > best):
                best = cand
            return
        lo, hi = boxes[i]
        for m in range(lo, hi + 1):
            walk(i + 1, chosen + [m])

    walk(0, [])
    return best


def run_choices(supp):
    """Every sequence of >= 2 successive nonempty runs of consecutive support points."""
    m = len(supp)

    def rec(start, acc):
        if len(acc) >= 2:
            yield list(acc)
        for a in range(start, m):
            for b in range(a, m):
                yield from rec(b + 1, acc + [supp[a:b + 1]])

    yield from rec(0, [])


def rhs(space, x: FinVec, sub_norm) -> Fraction:
    """Right side of the implicit norm equation with ``sub_norm`` for the pieces."""
    y = abs(x)
    supp = y.support
    best = y.sup_norm()
    for fam, theta, _ in _raw_families(space, len(supp)):
        for parts in run_choices(supp):
            if admissible(fam, parts):
                v = theta * sum(sub_norm(y.restrict(p)) for p in parts)
                best = max(best, v)
    return best


def subsets(universe: int):
    for r in range(universe + 1):
        yield from combinations(range(1, universe + 1), r)
