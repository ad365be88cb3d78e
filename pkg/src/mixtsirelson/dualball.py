"""Norming functionals: trees built from ``+-e_n`` by weighted admissible sums.

``oracle_norm`` recomputes the norm from this side: it searches the norming
set over arbitrary support subsets (not intervals) and checks admissibility
through the generic witness search, so it shares no reduction with the
segment engine in :mod:`mixtsirelson.norm`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable, Union

from .families import AnK, Family, admissible_witness, finset
from .foundations import FinVec, FoundationError, InvLinear, InvLogPow, PowerLaw, Constant, ExplicitList, format_rat, rat


class NodeBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Leaf:
    sign: int
    position: int

    @property
    def support(self) -> tuple[int, ...]:
        return (self.position,)

    @property
    def height(self) -> int:
        return 0


@dataclass(frozen=True)
class Internal:
    k_tag: int | None
    weight: Fraction
    children: tuple["FunctionalTree", ...]

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(p for c in self.children for p in c.support)

    @property
    def height(self) -> int:
        return 1 + max(c.height for c in self.children)


FunctionalTree = Union[Leaf, Internal]


def evaluate(f: FunctionalTree, x: FinVec) -> Fraction:
    if isinstance(f, Leaf):
        return f.sign * x[f.position]
    return f.weight * sum((evaluate(c, x) for c in f.children), Fraction(0))


def coefficients(f: FunctionalTree) -> dict[int, Fraction]:
    """The functional as a coefficient map ``position -> value``."""
    if isinstance(f, Leaf):
        return {f.position: Fraction(f.sign)}
    out: dict[int, Fraction] = {}
    for c in f.children:
        for p, v in coefficients(c).items():
            out[p] = f.weight * v
    return out


def format_tree(f: FunctionalTree) -> str:
    """Text form, e.g. ``1/2*(e2+1/2*(e3+e4))``; leaves print as ``e3``/``-e3``."""
    if isinstance(f, Leaf):
        return f"e{f.position}" if f.sign > 0 else f"-e{f.position}"
    w = f.weight
    head = str(w.numerator) if w.denominator == 1 else format_rat(w)
    body = ""
    for i, c in enumerate(f.children):
        text = format_tree(c)
        body += text if (i == 0 or text.startswith("-")) else "+" + text
    return f"{head}*({body})"


_TOKEN = re.compile(r"\s*(?:(-?e)(\d+)|(-?\d+(?:/\d+)?)\*\(|(\+)|(\)))")


def parse_tree(text: str) -> FunctionalTree:
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"cannot parse functional at {text[pos:]!r}")
        tokens.append(m.groups())
        pos = m.end()

    def parse(i):
        if i >= len(tokens):
            raise ValueError("functional ends early")
        leaf, num, weight, plus, close = tokens[i]
        if leaf:
            return Leaf(-1 if leaf.startswith("-") else 1, int(num)), i + 1
        if weight is None:
            raise ValueError("expected a leaf or a weighted group")
        children = []
        i += 1
        while True:
            child, i = parse(i)
            children.append(child)
            if i >= len(tokens):
                raise ValueError("unclosed group")
            if tokens[i][3]:
                i += 1
                continue
            if tokens[i][4]:
                return Internal(None, rat(weight), tuple(children)), i + 1
            if tokens[i][0]:  # a leading '-e' separates terms on its own
                continue
            raise ValueError("malformed functional")

    tree, end = parse(0)
    if end != len(tokens):
        raise ValueError("trailing input after functional")
    return tree


# -- the weighted families of a space ---------------------------------------

def _raw_families(space, support_size: int) -> list[tuple[Family, Fraction, int]]:
    """``(M_k, theta_k, k)`` with raw (non-enveloped) coefficients.

    For ``(A_k)_k`` spaces only k up to ``support_size`` (and one tail
    representative for explicit lists) can change the outcome: larger k admit
    the same tuples, and for the catalog's monotone forms carry smaller theta.
    """
    from .spaces import AdmissibleSeq, FiniteMixed

    if isinstance(space, FiniteMixed):
        return [(fam, theta, k) for k, (fam, theta) in enumerate(space.entries, 1)]
    if not isinstance(space, AdmissibleSeq):
        raise TypeError(f"unknown space {space!r}")
    seq = space.coeffs
    if isinstance(seq, ExplicitList):
        top = len(seq.values) if seq.tail is None else max(len(seq.values) + 1, support_size)
    elif isinstance(seq, (Constant, InvLinear, PowerLaw, InvLogPow)):
        top = max(support_size, 1)
    else:
        raise TypeError(f"unsupported coefficient form {seq!r}")
    out = []
    for k in range(1, top + 1):
        theta = seq.theta(k)
        if not isinstance(theta, Fraction):
            raise FoundationError("the oracle needs exact rational coefficients")
        out.append((AnK(k), theta, k))
    return out


def _successive_runs(S: tuple[int, ...]) -> Iterable[list[tuple[int, ...]]]:
    """All splittings of the sorted tuple S into >= 2 consecutive runs."""
    m = len(S)
    for r in range(1, m):
        for cuts in combinations(range(1, m), r):
            bounds = (0,) + cuts + (m,)
            yield [S[bounds[i]:bounds[i + 1]] for i in range(len(bounds) - 1)]


def oracle_norm(space, x: FinVec, *, budget: int = 2_000_000) -> Fraction:
    """``sup { f(|x|) : f in K }`` by exhaustive search over support subsets.

    A functional with support S combining children with supports
    ``S_1 < ... < S_d`` (runs of S) is worth ``theta_k * sum best[S_i]``, so
    only the best value per support needs to be kept.
    """
    if not x:
        return Fraction(0)
    y = abs(x)
    supp = y.support
    fams = _raw_families(space, len(supp))
    best: dict[tuple[int, ...], Fraction] = {}
    work = 0
    for size in range(1, len(supp) + 1):
        for S in combinations(supp, size):
            if size == 1:
                best[S] = y[S[0]]
                continue
            top = None
            for runs in _successive_runs(S):
                if any(r not in best for r in runs):
                    continue  # no functional has exactly this support
                total = sum((best[r] for r in runs), Fraction(0))
                for fam, theta, _ in fams:
                    work += 1
                    if work > budget:
                        raise NodeBudgetExceeded(f"oracle budget {budget} exhausted")
                    if admissible_witness(fam, runs) is not None:
                        v = theta * total
                        if top is None or v > top:
                            top = v
            if top is not None:
                best[S] = top
    return max(best.values())


def enumerate_K(space, support_bound: Iterable[int], depth: int, *,
                signs: tuple[int, ...] = (1, -1), budget: int = 100_000) -> list[FunctionalTree]:
    """All functionals of ``K_depth`` supported in ``support_bound``.

    Internal nodes have at least two children; functionals with identical
    coefficient maps are kept once.  Each round only combines children
    lists that use a functional first produced in the previous round.
    """
    bound = finset(support_bound)
    fams = _raw_families(space, len(bound))
    seen: dict[tuple, FunctionalTree] = {}
    by_support: dict[tuple[int, ...], list[FunctionalTree]] = {}
    admits: dict[tuple, list[tuple[Fraction, int]]] = {}

    def add(f, fresh):
        key = tuple(sorted(coefficients(f).items()))
        if key in seen:
            return
        seen[key] = f
        if len(seen) > budget:
            raise NodeBudgetExceeded(f"more than {budget} functionals")
        by_support.setdefault(f.support, []).append(f)
        fresh.setdefault(f.support, []).append(f)

    new: dict[tuple[int, ...], list[FunctionalTree]] = {}
    for p in bound:
        for sgn in signs:
            add(Leaf(sgn, p), new)

    def chains(supports, last_max, acc):
        if len(acc) >= 2:
            yield tuple(acc)
        for S in supports:
            if S[0] > last_max:
                yield from chains(supports, S[-1], acc + [S])

    for _ in range(depth):
        if not new:
            break
        supports = sorted(by_support)
        old = {S: [f for f in fs if f not in new.get(S, ())] for S, fs in by_support.items()}
        fresh: dict[tuple[int, ...], list[FunctionalTree]] = {}
        for seq in chains(supports, 0, []):
            if not any(S in new for S in seq):
                continue
            if seq not in admits:
                admits[seq] = [(theta, k) for fam, theta, k in fams
                               if admissible_witness(fam, seq) is not None]
            weights = admits[seq]
            if not weights:
                continue
            # children lists with at least one new member: the first new one sits at slot i
            for i, S in enumerate(seq):
                if S not in new:
                    continue
                pools = [old[T] for T in seq[:i]] + [new[S]] + [by_support[T] for T in seq[i + 1:]]
                for kids in product(*pools):
                    for theta, k in weights:
                        add(Internal(k, theta, kids), fresh)
        new = fresh
    return list(seen.values())


@dataclass(frozen=True)
class AnalysisLevels:
    levels: tuple[tuple[FunctionalTree, ...], ...]


def analysis(f: FunctionalTree) -> AnalysisLevels:
    """Canonical leveled decomposition induced by the tree.

    Level s holds the subtrees of height <= s whose parent has height > s.
    """
    m = f.height

    def collect(node, s):
        if node.height <= s:
            return [node]
        return [g for c in node.children for g in collect(c, s)]

    return AnalysisLevels(tuple(tuple(collect(f, s)) for s in range(m + 1)))


def check_analysis(f: FunctionalTree, levels: AnalysisLevels) -> bool:
    """Verify the three defining clauses of an analysis."""
    supp = sorted(f.support)
    for s, level in enumerate(levels.levels):
        flat = [p for g in level for p in g.support]
        if flat != supp:
            return False
        if any(g.height > s for g in level):
            return False
        if s + 1 < len(levels.levels):
            for g in levels.levels[s + 1]:
                if g in level:
                    continue
                if not isinstance(g, Internal) or any(c not in level for c in g.children):
                    return False
    return levels.levels[-1] == (f,)
