"""Mechanical classification of mixed Tsirelson spaces.

Every verdict is a ``Verdict(kind, tag, detail)``; the tag names the result
that licenses it, so a report can be audited line by line against its
evidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from mpmath import iv

from .families import Family, UnionOf, gap_points_unbounded, index, nonsingleton_profile
from .foundations import (Constant, ExplicitList, FinVec, InvLinear, InvLogPow, PowerLaw, RatInterval,
                          Scalar, _mpf_tuple_to_fraction, envelope, format_rat, lower, upper)
from .norm import BudgetExceeded, lambda_table, norm, segment_sum_norm
from .spaces import AdmissibleSeq, FiniteMixed

C0_KINDS = {"c0Saturated", "isometricC0", "isomorphicC0"}
L1_KINDS = {"l1Saturated", "isometricL1", "isomorphicL1"}


@dataclass(frozen=True)
class Verdict:
    kind: str
    tag: str
    detail: str = ""


@dataclass
class ClassificationReport:
    saturation: str
    reflexive: bool | None = None
    p: "PValue | None" = None
    verdicts: list[Verdict] = field(default_factory=list)
    reductions: list[str] = field(default_factory=list)
    evidence: dict[str, Any] = field(default_factory=dict)

    @property
    def kinds(self) -> set[str]:
        return {v.kind for v in self.verdicts}

    @property
    def provenance(self) -> list[tuple[str, str]]:
        return [(v.kind, v.tag) for v in self.verdicts]


# -- p values ----------------------------------------------------------------

def _factor(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def _exponents(q: Fraction) -> dict[int, int]:
    """Prime-exponent vector of a positive rational."""
    vec = dict(_factor(q.numerator))
    for prime, e in _factor(q.denominator).items():
        vec[prime] = vec.get(prime, 0) - e
    return {prime: e for prime, e in vec.items() if e}


def _cross(a: dict[int, int], b: dict[int, int]) -> dict[tuple[int, int], int]:
    """``(sum a_p ln p)(sum b_q ln q)`` as coefficients on ``ln p ln q``, p <= q."""
    out: dict[tuple[int, int], int] = {}
    for p1, e1 in a.items():
        for p2, e2 in b.items():
            key = (min(p1, p2), max(p1, p2))
            out[key] = out.get(key, 0) + e1 * e2
    return out


@dataclass(frozen=True)
class PValue:
    """``p = ln n / ln(n*theta)``, i.e. ``1/(1 - log_n(1/theta))``, for ``n*theta > 1``."""

    n: int
    theta: Fraction

    def __post_init__(self):
        if self.n * self.theta <= 1:
            raise ValueError("p is defined only when n*theta > 1")

    @property
    def exact(self) -> Fraction | None:
        a, b = _exponents(Fraction(self.n)), _exponents(self.n * self.theta)
        if set(a) != set(b):
            return None
        ratios = {Fraction(a[q], b[q]) for q in a}
        return ratios.pop() if len(ratios) == 1 else None

    def enclosure(self, bits: int = 80) -> RatInterval:
        saved = iv.prec
        iv.prec = bits
        try:
            q = self.n * self.theta
            val = iv.log(self.n) / (iv.log(q.numerator) - iv.log(q.denominator))
            a, b = val._mpi_
        finally:
            iv.prec = saved
        return RatInterval(_mpf_tuple_to_fraction(a), _mpf_tuple_to_fraction(b))

    def compare(self, other: "PValue") -> int:
        """Sign of ``self - other``.

        Equality is certified when ``ln n * ln q' = ln n' * ln q`` holds as an
        identity of prime-log products; otherwise enclosures are refined until
        they separate.
        """
        x, y = self.exact, other.exact
        if x is not None and y is not None:
            return (x > y) - (x < y)
        a, b = _exponents(Fraction(self.n)), _exponents(other.n * other.theta)
        c, d = _exponents(Fraction(other.n)), _exponents(self.n * self.theta)
        lhs: dict[tuple[int, int], int] = {}
        for form, sign in ((_cross(a, b), 1), (_cross(c, d), -1)):
            for key, v in form.items():
                lhs[key] = lhs.get(key, 0) + sign * v
        if not any(lhs.values()):
            return 0
        bits = 80
        while bits <= 1 << 14:
            e, f = self.enclosure(bits), other.enclosure(bits)
            if e.hi < f.lo:
                return -1
            if f.hi < e.lo:
                return 1
            bits *= 2
        raise ArithmeticError("p values did not separate; equality could not be certified either")

    def __str__(self) -> str:
        x = self.exact
        expr = f"ln({self.n})/ln({format_rat(self.n * self.theta)})"
        if x is not None:
            return f"{format_rat(x)} = {expr}"
        enc = self.enclosure(64)
        mid = (enc.lo + enc.hi) / 2
        return f"{expr} ~ {float(mid):.12g}"


# -- finite mixtures -----------------------------------------------------------

def _union(fams: list[Family]) -> Family:
    return fams[0] if len(fams) == 1 else UnionOf(tuple(fams))


def classify_finite(space: FiniteMixed, index_cap: int = 32) -> ClassificationReport:
    entries = list(space.entries)
    idx = [index(fam, index_cap) for fam, _ in entries]
    evidence: dict[str, Any] = {"indices": [str(i) for i in idx]}
    J = [k for k, (_, theta) in enumerate(entries) if theta == 1]

    if J:
        big = [k for k in J if not idx[k].is_finite or idx[k].finite >= 2]
        if big:
            k = big[0]
            rep = ClassificationReport("l1Saturated", False, evidence=evidence)
            rep.verdicts.append(Verdict("l1Saturated", "Prop 1",
                                        f"entry {k + 1} has theta = 1 and index {idx[k]}"))
            ratios = _segment_ratios(space)
            if ratios is not None:
                evidence["segmentRatios"] = ratios
                if ratios and ratios[-1][2] > ratios[0][2] and all(
                        r[2] < s[2] for r, s in zip(ratios, ratios[1:])):
                    rep.verdicts.append(Verdict(
                        "notIsomorphicToL1Evidence", "Example 1",
                        "l1-sum over dyadic segment / norm grows: "
                        + ", ".join(f"k={k}:{format_rat(r)}" for k, _, r in ratios)))
            return rep

        union_J = _union([entries[k][0] for k in J])
        profile = nonsingleton_profile(union_J)
        gaps = gap_points_unbounded(_union([fam for fam, _ in entries]))
        evidence["gapPointsUnbounded"] = gaps.unbounded
        evidence["gapSamples"] = list(gaps.samples)
        if not profile.infinite:
            if len(J) == len(entries):
                rep = ClassificationReport("isomorphicC0", False, evidence=evidence)
                rep.verdicts.append(Verdict("isomorphicC0", "Prop 3",
                                            f"theta = 1 everywhere and only {profile.count} non-singleton sets"))
                return rep
            rest = FiniteMixed(tuple(e for k, e in enumerate(entries) if k not in J))
            rep = classify_finite(rest, index_cap)
            rep.reductions.insert(0, f"dropped theta = 1 entries {[k + 1 for k in J]}: "
                                     f"finitely many non-singletons (max element {profile.max_element})")
            rep.verdicts.insert(0, Verdict("reduction", "Prop 2", rep.reductions[0]))
            return rep

        rep = ClassificationReport("containsL1", None, evidence=evidence)
        rep.verdicts.append(Verdict("containsL1", "Prop 3(2)",
                                    "theta = 1 entries have infinitely many non-singleton sets"))
        rep.reflexive = False
        if gaps.unbounded is True:
            rep.verdicts.append(Verdict("containsC0", "Prop 4", "gap points are unbounded"))
        elif gaps.unbounded is False and len(J) == len(entries):
            rep.saturation = "l1Saturated"
            rep.verdicts.append(Verdict("l1Saturated", "Remark 4.2",
                                        "theta = 1 everywhere and gap points are bounded"))
        return rep

    if any(not i.is_finite for i in idx):
        rep = ClassificationReport("undetermined", None, evidence=evidence)
        rep.verdicts.append(Verdict("undetermined", "Theorem 1",
                                    "infinite-index family with theta < 1: outside the finite-index theory"))
        return rep

    ns = [i.finite for i in idx]
    # index 0 means M_k is {} or {emptyset}: the entry never acts
    active = [(n, theta) for n, (_, theta) in zip(ns, entries) if n >= 1]
    over = [(n, theta) for n, theta in active if n * theta > 1]
    evidence["nTheta"] = [f"{n}*{format_rat(theta)}" for n, theta in active]
    if not over:
        rep = ClassificationReport("c0Saturated", False, evidence=evidence)
        rep.verdicts.append(Verdict("c0Saturated", "Corollary 2",
                                    "theta_k <= 1/n_k for every k"))
        rep.verdicts.append(Verdict("notReflexive", "Prop 5", "contains c0"))
        return rep
    ps = [PValue(n, theta) for n, theta in over]
    best = ps[0]
    for p in ps[1:]:
        if p.compare(best) < 0:
            best = p
    rep = ClassificationReport("lpSaturated", True, p=best, evidence=evidence)
    rep.verdicts.append(Verdict("lpSaturated", "Corollary 1", f"p = {best}"))
    rep.verdicts.append(Verdict("reflexive", "Prop 5", f"n_k theta_k = {format_rat(best.n * best.theta)} > 1"))
    return rep


def _segment_ratios(space, kmax: int = 5) -> list[tuple[int, Fraction, Fraction]] | None:
    """``(k, norm, l1/norm)`` for ``x = e_{2^k+1} + ... + e_{2^{k+1}}``."""
    out = []
    try:
        for k in range(1, kmax + 1):
            v = segment_sum_norm(space, 2 ** k + 1, 2 ** (k + 1)).value
            if isinstance(v, RatInterval):
                return None
            out.append((k, v, Fraction(2 ** k) / v))
    except BudgetExceeded:
        return out or None
    return out


# -- (A_k, theta_k) sequences ---------------------------------------------------

def classify_admissible_seq(space: AdmissibleSeq, probe_depth: int = 16) -> ClassificationReport:
    seq = envelope(space.coeffs)
    rep = _classify_seq(space, seq)
    rep.reductions.insert(0, "replaced coefficients by their non-increasing envelope")
    if probe_depth > 0:
        try:
            rep.evidence["lambda"] = list(lambda_table(space, probe_depth).values)
        except BudgetExceeded:
            pass
    return rep


def _classify_seq(space: AdmissibleSeq, seq) -> ClassificationReport:
    if isinstance(seq, ExplicitList):
        if seq.tail is None:
            rep = classify_finite(space.as_finite())
            rep.reductions.insert(0, "finite index set: treated as a finite mixture")
            return rep
        head = list(seq.values) + [seq.tail]
        if max(head[1:]) == 1:
            return _verdict("isometricL1", False, "Prop 7", "theta_2 = 1 after the envelope")
        return _verdict("isomorphicL1", False, "Section 3 opening", f"inf theta = {format_rat(min(head))} > 0")
    if isinstance(seq, Constant):
        if seq.c == 1:
            return _verdict("isometricL1", False, "Prop 7", "theta_2 = 1")
        return _verdict("isomorphicL1", False, "Section 3 opening", f"inf theta = {format_rat(seq.c)} > 0")
    if isinstance(seq, InvLinear):
        return _verdict("isometricC0", False, "Prop 6", "theta_k = 1/k")
    if isinstance(seq, PowerLaw):
        if seq.alpha == 0:
            return _classify_seq(space, Constant(seq.gamma))
        if seq.alpha >= 1:
            return _verdict("isometricC0", False, "Prop 6", "gamma * k^-alpha <= 1/k for alpha >= 1, gamma <= 1")
        rep = _verdict("undetermined", None, "Remark 5",
                       f"(theta_(m^l))^(1/l) -> m^-{format_rat(seq.alpha)} != 1: "
                       "the finite block representability test does not apply")
        return rep
    if isinstance(seq, InvLogPow):
        rep = _verdict("undetermined", None, "Remark 5",
                       "no saturation rule covers theta_k -> 0 slower than 1/k")
        rep.verdicts.append(Verdict("l1FinitelyBlockRepresented", "Prop 9",
                                    "(theta_(m^l))^(1/l) = log2(1+m^l)^(-r/l) -> 1 (Remark 5 condition 3)"))
        return rep
    raise TypeError(f"unsupported coefficient form {seq!r}")


def _verdict(kind, reflexive, tag, detail) -> ClassificationReport:
    rep = ClassificationReport(kind, reflexive)
    rep.verdicts.append(Verdict(kind, tag, detail))
    return rep


def classify(space, *, index_cap: int = 32, probe_depth: int = 16) -> ClassificationReport:
    if isinstance(space, FiniteMixed):
        return classify_finite(space, index_cap)
    return classify_admissible_seq(space, probe_depth)


# -- comparison -------------------------------------------------------------------

@dataclass
class ComparisonReport:
    verdict: str
    fired: str
    detail: str = ""
    ratio_probe: "RatioProbe | None" = None


def _theorem3_ready(space) -> bool:
    if not isinstance(space, FiniteMixed):
        return False
    if any(theta == 1 for _, theta in space.entries):
        return False
    return all(index(fam).is_finite for fam, _ in space.entries)


def _classic(rep: ClassificationReport) -> tuple[str, Any] | None:
    """The classical space a report saturates in, if any."""
    if rep.saturation in C0_KINDS:
        return ("c0", None)
    if rep.saturation in L1_KINDS:
        return ("l1", None)
    if rep.saturation == "lpSaturated":
        return ("lp", rep.p)
    return None


def _contained(rep: ClassificationReport) -> set[str]:
    out = set()
    kinds = rep.kinds | {rep.saturation}
    if kinds & (C0_KINDS | {"containsC0"}):
        out.add("c0")
    if kinds & (L1_KINDS | {"containsL1"}):
        out.add("l1")
    return out


def _below_example3_bound(r: Fraction) -> bool | None:
    """Certified test of ``0 < r < 3 ln 2 - 1``."""
    saved = iv.prec
    iv.prec = 80
    try:
        bound = 3 * iv.log(2) - 1
        val = iv.mpf(r.numerator) / r.denominator
        if val.b < bound.a:
            return r > 0
        if val.a > bound.b:
            return False
        return None
    finally:
        iv.prec = saved


def compare(a, b, *, probe_n: int = 32) -> ComparisonReport:
    if _theorem3_ready(a) and _theorem3_ready(b):
        ra, rb = classify_finite(a), classify_finite(b)
        ca, cb = ra.saturation == "c0Saturated", rb.saturation == "c0Saturated"
        if ca and not cb:
            return ComparisonReport("totallyIncomparable", "Theorem 3 case 1",
                                    "first space has theta_k <= 1/n_k throughout, second does not")
        if cb and not ca:
            return ComparisonReport("totallyIncomparable", "Theorem 3 case 2",
                                    "second space has theta_k <= 1/n_k throughout, first does not")
        if ca and cb:
            return ComparisonReport("notTotallyIncomparable", "Theorem 3",
                                    "both spaces are c0-saturated")
        sign = ra.p.compare(rb.p)
        if sign:
            return ComparisonReport("totallyIncomparable", "Theorem 3 case 3",
                                    f"p = {ra.p} vs p' = {rb.p}")
        return ComparisonReport("notTotallyIncomparable", "Theorem 3",
                                f"equal p: {ra.p} and {rb.p}")

    if (isinstance(a, AdmissibleSeq) and isinstance(b, AdmissibleSeq)
            and isinstance(a.coeffs, InvLogPow) and isinstance(b.coeffs, InvLogPow)
            and a.coeffs.r != b.coeffs.r):
        if _below_example3_bound(a.coeffs.r) and _below_example3_bound(b.coeffs.r):
            return ComparisonReport("totallyIncomparable", "Example 3",
                                    f"r = {format_rat(a.coeffs.r)}, s = {format_rat(b.coeffs.r)}, "
                                    "both in (0, 3 ln 2 - 1)")

    ra, rb = classify(a), classify(b)
    xa, xb = _classic(ra), _classic(rb)
    if xa and xb:
        if xa[0] != xb[0] or (xa[0] == "lp" and xa[1].compare(xb[1]) != 0):
            return ComparisonReport("totallyIncomparable", "saturation",
                                    f"{ra.saturation} vs {rb.saturation}")
    for x, r_other in ((xa, rb), (xb, ra)):
        if x and x[0] in _contained(r_other):
            return ComparisonReport("notTotallyIncomparable", "saturation",
                                    f"both spaces contain {x[0]}")
    try:
        probe = lambda_ratio_probe(a, b, probe_n)
    except BudgetExceeded:
        probe = None
    return ComparisonReport("evidenceOnly", "Theorem 4 probe",
                            "no exact rule applies" + (f"; ratio trend {probe.trend}" if probe else ""),
                            probe)


# -- probes ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RatioProbe:
    ratios: tuple[Scalar, ...]  # ratios[l-1] = lambda_l / lambda'_l
    trend: str


def _div(x: Scalar, y: Scalar) -> Scalar:
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return x / y
    return RatInterval(lower(x) / upper(y), upper(x) / lower(y))


def lambda_ratio_probe(a, b, N: int, precision: int = 20) -> RatioProbe:
    if a == b:  # the same enclosure on both sides: the ratio is exactly 1
        return RatioProbe((Fraction(1),) * N, "constant")
    la, lb = lambda_table(a, N, precision=precision), lambda_table(b, N, precision=precision)
    ratios = tuple(_div(la[n], lb[n]) for n in range(1, N + 1))
    lo = [lower(r) for r in ratios]
    hi = [upper(r) for r in ratios]
    if all(r == ratios[0] for r in ratios):
        trend = "constant"
    elif all(hi[i] < lo[i + 1] or hi[i] == lo[i + 1] == hi[i + 1] for i in range(N - 1)) or \
            all(lo[i] <= lo[i + 1] for i in range(N - 1)):
        trend = "nondecreasing"
    elif all(hi[i] >= hi[i + 1] for i in range(N - 1)):
        trend = "nonincreasing"
    else:
        trend = "mixed"
    return RatioProbe(ratios, trend)


@dataclass(frozen=True)
class BlockWitness:
    scale: int
    block_length: int
    blocks: tuple[tuple[int, int], ...]
    value: Scalar  # || y_1 + ... + y_n ||


def l1_block_witness(space, n: int, eps, l_max: int, *, max_length: int = 2048) -> BlockWitness | None:
    """First scale l at which n normalized equal blocks of e_1+...+e_(n^l)
    have ``||y_1 + ... + y_n|| >= n - eps`` (certified lower bound)."""
    eps = Fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    for l in range(1, l_max + 1):
        m = n ** (l - 1)
        if m * n > max_length:
            break
        blocks = tuple((i * m + 1, (i + 1) * m) for i in range(n))
        if space.position_invariant:
            table = lambda_table(space, n * m)
            value = _div(table[n * m], table[m])
        else:
            coeffs = {}
            for a, b in blocks:
                bn = segment_sum_norm(space, a, b).value
                if isinstance(bn, RatInterval):
                    raise ValueError("generic block search needs exact coefficients")
                coeffs.update({t: 1 / bn for t in range(a, b + 1)})
            value = norm(space, FinVec(coeffs)).value
        if lower(value) >= n - eps:
            return BlockWitness(l, m, blocks, value)
    return None
