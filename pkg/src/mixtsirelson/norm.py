"""Exact evaluation of mixed Tsirelson norms.

The engine works on the support ``p_0 < ... < p_{m-1}`` of a vector and
memoizes the norm of every contiguous support segment.  Two reductions keep
the search finite and exact:

* admissible parts may be replaced by the support points they cover; given a
  witness ``{m_1 < ... < m_n}`` the best parts are the slots
  ``[m_i, m_{i+1})`` (1-unconditionality), so each family only has to say
  which witnesses exist;
* single-part applications never beat ``||E x|| <= ||x||`` and are dropped,
  so every split has at least two strictly smaller parts.

Per family kind this gives: AnK / ``(A_k)_k`` -- weight depends only on the
number of parts d, take the best contiguous d-partition; Schreier -- pick the
first covered point p_s, then at most ``p_s - shift`` contiguous parts from
there on; pair and explicit families -- enumerate the finitely many relevant
members and sum their slots.  Cost is O(m^4) for the partition tables.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .dualball import FunctionalTree, Internal, Leaf
from .families import (
    AnK,
    Family,
    Schreier,
    _Enumerable,
    flatten,
    slot_sizes,
)
from .foundations import FinVec, RatInterval, Scalar, lower, upper
from .spaces import AdmissibleSeq, FiniteMixed, SpaceError

DEFAULT_MAX_SUPPORT = 96


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class _Weights:
    by_parts: dict[int, tuple[Fraction, int]] = field(default_factory=dict)
    schreier: list[tuple[int, Fraction, int]] = field(default_factory=list)
    enumerable: list[tuple[_Enumerable, Fraction, int]] = field(default_factory=list)
    max_parts: int = 0


def _resolve(space, m: int, precision: int) -> tuple[_Weights, _Weights, bool]:
    """Split-weights for a support of size m as (lower, upper, exact)."""
    lo, hi = _Weights(), _Weights()
    exact = True
    if isinstance(space, AdmissibleSeq):
        for d in range(2, m + 1):
            env = space.coeffs.envelope_value(d, precision)
            if env is None:
                break
            value, k = env
            exact &= not isinstance(value, RatInterval)
            lo.by_parts[d] = (lower(value), k)
            hi.by_parts[d] = (upper(value), k)
        lo.max_parts = hi.max_parts = max(lo.by_parts, default=0)
        return lo, hi, exact
    if not isinstance(space, FiniteMixed):
        raise SpaceError(f"unknown space {space!r}")
    w = _Weights()
    for tag, (fam, theta) in enumerate(space.entries, 1):
        for leaf in flatten(fam):
            if isinstance(leaf, AnK):
                for d in range(2, min(leaf.k, m) + 1):
                    if d not in w.by_parts or theta > w.by_parts[d][0]:
                        w.by_parts[d] = (theta, tag)
            elif isinstance(leaf, Schreier):
                w.schreier.append((leaf.shift, theta, tag))
            elif isinstance(leaf, _Enumerable):
                w.enumerable.append((leaf, theta, tag))
            # Singletons / Empty never admit two parts
    w.max_parts = max(w.by_parts, default=0)
    if w.schreier:
        w.max_parts = m
    return w, w, True


class _Base:
    """Level 0 of the iteration: ``|x|_0 = max |a_i|``."""

    def __init__(self, mags: Sequence[Fraction]):
        self.mags = mags

    def value(self, j: int, e: int) -> Fraction:
        return max(self.mags[j:e + 1])


class _Table:
    """Segment values for one weight assignment.

    With ``sub=None`` the table solves the implicit norm equation (parts are
    measured by the table itself); otherwise it computes one step of the
    iteration ``|x|_{s+1}`` from the level-s table ``sub``.
    """

    def __init__(self, positions, mags, weights: _Weights, sub=None):
        self.pos = list(positions)
        self.mags = list(mags)
        self.w = weights
        self.sub = self if sub is None else sub
        self.val: dict[tuple[int, int], Fraction] = {}
        self.how: dict[tuple[int, int], tuple] = {}
        self.exact: dict[tuple[int, int], list] = {}
        self.leaf: dict[tuple[int, int], int] = {}
        self.sbest: dict[tuple[int, int, int], tuple] = {}
        self.low: dict[int, int] = {}

    def value(self, j: int, e: int) -> Fraction:
        v = self.val.get((j, e))
        if v is None:
            self._fill(j, e)
            v = self.val[(j, e)]
        return v

    def _fill(self, j: int, e: int) -> None:
        # (j, e) depends on (j, t) for t < e and on (s, e) for s > j
        if e >= len(self.pos):
            raise IndexError(e)
        for e2 in range(j, e + 1):
            low = self.low.get(e2, e2 + 1)
            for j2 in range(low - 1, j - 1, -1):
                self._compute(j2, e2)
            self.low[e2] = min(low, j)

    def _compute(self, j: int, e: int) -> None:
        sub = self.sub
        n = e - j + 1
        w = self.w
        # best contiguous d-partitions of [j, e], d >= 2: (value, first cut)
        ex: list = [None, None]
        for d in range(2, min(w.max_parts, n) + 1):
            best = None
            for t in range(j, e - d + 2):
                rest = self.exact[(t + 1, e)][d - 1]
                if rest is None:
                    continue
                v = sub.value(j, t) + rest[0]
                if best is None or v > best[0]:
                    best = (v, t)
            ex.append(best)

        if sub is self:
            i = j if (j == e or self.mags[j] >= self.mags[self.leaf[(j + 1, e)]]) else self.leaf[(j + 1, e)]
            self.leaf[(j, e)] = i
            value, how = self.mags[i], ("leaf", i)
        else:
            value, how = sub.value(j, e), ("sub",)

        for d in range(2, len(ex)):
            if ex[d] is not None and d in w.by_parts:
                theta, tag = w.by_parts[d]
                v = theta * ex[d][0]
                if v > value:
                    value, how = v, ("parts", tag, theta, "partition", j, e, d)

        for idx, (shift, theta, tag) in enumerate(w.schreier):
            cap = min(self.pos[j] - shift, n)
            here = None
            for d in range(2, min(cap, len(ex) - 1) + 1):
                if ex[d] is not None and (here is None or ex[d][0] > here[0]):
                    here = (ex[d][0], j, d)
            below = self.sbest.get((idx, j + 1, e)) if j < e else None
            if here is None or (below is not None and below[0] > here[0]):
                here = below
            self.sbest[(idx, j, e)] = here
            if here is not None and theta * here[0] > value:
                value, how = theta * here[0], ("parts", tag, theta, "partition", here[1], e, here[2])

        for fam, theta, tag in w.enumerable:
            for W in fam.members_within(self.pos[e]):
                slots = slot_sizes(W, self.pos, j, e)
                if slots is None:
                    continue
                v = theta * sum((sub.value(a, b) for a, b in slots), Fraction(0))
                if v > value:
                    value, how = v, ("parts", tag, theta, "slots", tuple(slots))

        self.val[(j, e)] = value
        self.how[(j, e)] = how
        ex[1] = (sub.value(j, e) if sub is not self else value, None)
        self.exact[(j, e)] = ex

    def _cuts(self, j: int, e: int, d: int) -> list[tuple[int, int]]:
        parts = []
        while d > 1:
            t = self.exact[(j, e)][d][1]
            parts.append((j, t))
            j, d = t + 1, d - 1
        parts.append((j, e))
        return parts

    def parts(self, j: int, e: int):
        """``(tag, theta, [(a, b), ...])`` realizing the split at (j, e), or None."""
        how = self.how[(j, e)]
        if how[0] != "parts":
            return None
        _, tag, theta, kind, *rest = how
        if kind == "slots":
            return tag, theta, list(rest[0])
        s, e2, d = rest
        return tag, theta, self._cuts(s, e2, d)

    def witness(self, j: int, e: int, signs: Sequence[int]) -> FunctionalTree:
        how = self.how[(j, e)]
        if how[0] == "leaf":
            i = how[1]
            return Leaf(signs[i], self.pos[i])
        tag, theta, parts = self.parts(j, e)
        return Internal(tag, theta, tuple(self.witness(a, b, signs) for a, b in parts))


@dataclass(frozen=True)
class NormResult:
    value: Scalar
    witness: FunctionalTree | None = None


@dataclass(frozen=True)
class IteratedNorms:
    values: tuple[Scalar, ...]
    stabilized_at: int | None
    converged: bool


@dataclass(frozen=True)
class LambdaTable:
    values: tuple[Scalar, ...]  # values[n-1] = lambda_n
    method: str

    def __getitem__(self, n: int) -> Scalar:
        if n < 1:
            raise IndexError("lambda_n is indexed from n = 1")
        return self.values[n - 1]

    def __len__(self) -> int:
        return len(self.values)


def _combine(lo: Fraction, hi: Fraction) -> Scalar:
    return lo if lo == hi else RatInterval(lo, hi)


class NormEngine:
    """Norm computations for one space, with a shared cache for unit segments."""

    def __init__(self, space, precision: int = 64, max_support: int = DEFAULT_MAX_SUPPORT):
        if not isinstance(space, (FiniteMixed, AdmissibleSeq)):
            raise SpaceError(f"unknown space {space!r}")
        self.space = space
        self.precision = precision
        self.max_support = max_support
        self._units: dict[int, tuple] = {}

    def _check(self, m: int) -> None:
        if m > self.max_support:
            raise BudgetExceeded(f"support size {m} exceeds budget {self.max_support}")

    def _tables(self, positions, mags, precision=None):
        precision = self.precision if precision is None else precision
        lo_w, hi_w, exact = _resolve(self.space, len(positions), precision)
        lo = _Table(positions, mags, lo_w)
        hi = lo if exact else _Table(positions, mags, hi_w)
        return lo, hi, exact

    def norm(self, x: FinVec) -> NormResult:
        if not x:
            return NormResult(Fraction(0), None)
        self._check(len(x))
        positions = [p for p, _ in x]
        mags = [abs(v) for _, v in x]
        signs = [1 if v > 0 else -1 for _, v in x]
        lo, hi, exact = self._tables(positions, mags)
        m = len(positions) - 1
        value = _combine(lo.value(0, m), hi.value(0, m))
        return NormResult(value, lo.witness(0, m, signs))

    def iterated(self, x: FinVec, s_max: int) -> IteratedNorms:
        if s_max < 0:
            raise ValueError("s_max must be >= 0")
        if not x:
            return IteratedNorms((Fraction(0),) * (s_max + 1), 0, True)
        self._check(len(x))
        positions = [p for p, _ in x]
        mags = [abs(v) for _, v in x]
        lo_w, hi_w, exact = _resolve(self.space, len(positions), self.precision)
        m = len(positions) - 1
        lo_level = hi_level = _Base(mags)
        values = [max(mags)]
        for _ in range(s_max):
            lo_level = _Table(positions, mags, lo_w, sub=lo_level)
            hi_level = lo_level if exact else _Table(positions, mags, hi_w, sub=hi_level)
            values.append(_combine(lo_level.value(0, m), hi_level.value(0, m)))
        stable = next((s for s in range(s_max) if values[s + 1] == values[s]), None)
        # a split tree over m+1 points has height <= m
        return IteratedNorms(tuple(values), stable, s_max >= m)

    def segment_sum(self, a: int, b: int) -> NormResult:
        """Norm of ``e_a + ... + e_b``; unit segments share one cache."""
        if not 1 <= a <= b:
            raise ValueError("need 1 <= a <= b")
        self._check(b - a + 1)
        if self.space.position_invariant:
            lam = self.lambda_table(b - a + 1)
            return NormResult(lam[b - a + 1], None)
        lo, hi, exact = self._unit_tables(b)
        return NormResult(_combine(lo.value(a - 1, b - 1), hi.value(a - 1, b - 1)),
                          lo.witness(a - 1, b - 1, [1] * b))

    def _unit_tables(self, b: int):
        cached = self._units.get(self.precision)
        if cached is None or len(cached[0].pos) < b:
            size = max(b, 2 * len(cached[0].pos) if cached else b)
            size = min(max(size, b), max(self.max_support, b))
            positions = list(range(1, size + 1))
            cached = self._tables(positions, [Fraction(1)] * size)
            self._units[self.precision] = cached
        return cached

    def lambda_table(self, N: int, *, precision: int = 20, method: str = "auto") -> LambdaTable:
        """``lambda_n = ||e_1 + ... + e_n||`` for n = 1..N, width <= 2^-precision."""
        if N < 1:
            raise ValueError("N must be >= 1")
        invariant = self.space.position_invariant
        if method == "auto":
            method = "fast" if invariant and N <= 96 else ("fixed" if invariant else "generic")
        if method in ("fast", "fixed") and not invariant:
            raise SpaceError("fast lambda paths need a position-invariant space")
        q = precision + N.bit_length() + 6
        for _ in range(6):
            if method == "generic":
                self._check(N)
                lo_w, hi_w, exact = _resolve(self.space, N, q)
                positions, mags = list(range(1, N + 1)), [Fraction(1)] * N
                lo = _Table(positions, mags, lo_w)
                hi = lo if exact else _Table(positions, mags, hi_w)
                values = [_combine(lo.value(0, n - 1), hi.value(0, n - 1)) for n in range(1, N + 1)]
            elif method == "fast":
                lo_w, hi_w, exact = _resolve(self.space, N, q)
                lo_v = _lambda_recursion(lo_w.by_parts, N)
                hi_v = lo_v if exact else _lambda_recursion(hi_w.by_parts, N)
                values = [_combine(a, b) for a, b in zip(lo_v, hi_v)]
            elif method == "fixed":
                lo_w, hi_w, _ = _resolve(self.space, N, q)
                values = _lambda_fixed_point(lo_w.by_parts, hi_w.by_parts, N, q)
            else:
                raise ValueError(f"unknown lambda method {method!r}")
            if all(not isinstance(v, RatInterval) or v.width <= Fraction(1, 1 << precision)
                   for v in values):
                return LambdaTable(tuple(values), method)
            q += 16
        raise BudgetExceeded("lambda enclosure did not reach the requested width")


def _lambda_recursion(weights: dict[int, tuple[Fraction, int]], N: int) -> list[Fraction]:
    """``lambda_n = max(1, max_d c_d * max_{n_1+..+n_d=n} sum lambda_{n_i})``."""
    lam = [Fraction(0), Fraction(1)]
    D = max(weights, default=1)
    # S[d][n]: best sum of lambda over compositions of n into d parts
    S = [[None] * (N + 1) for _ in range(D + 1)]
    S[1][1] = lam[1]
    for n in range(2, N + 1):
        best = Fraction(1)
        for d in range(2, min(n, D) + 1):
            top = None
            for first in range(1, n - d + 2):
                rest = S[d - 1][n - first]
                if rest is not None:
                    v = lam[first] + rest
                    if top is None or v > top:
                        top = v
            S[d][n] = top
            if d in weights and top is not None:
                v = weights[d][0] * top
                if v > best:
                    best = v
        lam.append(best)
        S[1][n] = best
    return lam[1:]


def _lambda_fixed_point(lo_w, hi_w, N: int, q: int) -> list[Scalar]:
    """Directed-rounding fixed-point version of the recursion for large N.

    Values are integers scaled by 2^q; sums are exact, each weight product is
    rounded down in the lower run and up in the upper run.  The recursion is
    monotone in every input, so the two runs bracket the true table.
    """
    import numpy as np

    q = min(q, 60 - N.bit_length())
    one = 1 << q
    D = max(lo_w, default=1)
    out = []
    for weights, up in ((lo_w, False), (hi_w, True)):
        c = {}
        for d, (theta, _) in weights.items():
            scaled = theta * one
            c[d] = -((-scaled.numerator) // scaled.denominator) if up else scaled.numerator // scaled.denominator
        neg = -(1 << 62)
        S = np.full((D + 1, N + 1), neg, dtype=np.int64)
        lam = np.zeros(N + 1, dtype=np.int64)
        lam[1] = S[1, 1] = one
        for n in range(2, N + 1):
            dmax = min(n, D)
            if dmax >= 2:
                cand = S[1:dmax, n - 1:0:-1] + lam[1:n][None, :]
                S[2:dmax + 1, n] = cand.max(axis=1)
            best = one
            for d in range(2, dmax + 1):
                s = int(S[d, n])
                if s > 0 and d in c:
                    prod = c[d] * s
                    v = -((-prod) >> q) if up else prod >> q
                    if v > best:
                        best = v
            lam[n] = S[1, n] = best
        out.append(lam[1:].tolist())
    return [_combine(Fraction(a, one), Fraction(b, one)) for a, b in zip(*out)]


@functools.lru_cache(maxsize=64)
def engine(space, precision: int = 64) -> NormEngine:
    return NormEngine(space, precision)


def norm(space, x: FinVec) -> NormResult:
    return engine(space).norm(x)


def norm_iterated(space, x: FinVec, s_max: int) -> IteratedNorms:
    return engine(space).iterated(x, s_max)


def lambda_table(space, N: int, *, precision: int = 20, method: str = "auto") -> LambdaTable:
    return engine(space).lambda_table(N, precision=precision, method=method)


def segment_sum_norm(space, a: int, b: int) -> NormResult:
    return engine(space).segment_sum(a, b)
