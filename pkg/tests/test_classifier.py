import random
import time
from fractions import Fraction

import pytest

from _support import A2_ONE, EXAMPLE1, EXAMPLE2, TSIRELSON
from mixtsirelson import AdmissibleSeq, AnK, FiniteMixed, InvLinear, InvLogPow
from mixtsirelson.classifier import (PValue, classify, classify_admissible_seq, classify_finite, compare,
                                     l1_block_witness, lambda_ratio_probe)
from mixtsirelson.families import ExplicitFinite, PairConsecutive, Schreier, Singletons
from mixtsirelson.foundations import Constant, ExplicitList, PowerLaw, RatInterval


def fm(*pairs):
    return FiniteMixed(tuple((fam, Fraction(theta)) for fam, theta in pairs))


def test_corollary_examples():
    rep = classify_finite(fm((AnK(2), "1/2"), (AnK(5), "1/5")))
    assert rep.saturation == "c0Saturated" and rep.reflexive is False
    rep = classify_finite(fm((AnK(3), "1/3"), (AnK(4), "1/2")))
    assert rep.saturation == "lpSaturated" and rep.p.exact == 2 and rep.reflexive is True
    rep = classify_finite(fm((AnK(2), "3/5")))
    assert rep.reflexive is True and ("reflexive", "Prop 5") in rep.provenance


def test_theta_one_rules():
    rep = classify_finite(EXAMPLE1)
    assert rep.saturation == "l1Saturated"
    assert {"l1Saturated", "notIsomorphicToL1Evidence"} <= rep.kinds
    assert [float(r) for _, _, r in rep.evidence["segmentRatios"]] == [1, 2, 4, 8, 16]
    rep = classify_finite(EXAMPLE2)
    assert {"containsL1", "containsC0"} <= rep.kinds
    assert classify_finite(A2_ONE).saturation == "l1Saturated"


def test_finitely_many_nonsingletons_reduce():
    fin = ExplicitFinite(((), (1,), (2,), (3,), (4,), (1, 2), (3, 4)))
    rep = classify_finite(fm((fin, 1), (AnK(2), "1/2")))
    assert rep.saturation == "c0Saturated"
    assert rep.provenance[0] == ("reduction", "Prop 2")
    assert classify_finite(fm((fin, 1), (Singletons(), 1))).saturation == "isomorphicC0"


def test_infinite_index_with_small_theta_is_undetermined():
    rep = classify_finite(TSIRELSON)
    assert rep.saturation == "undetermined"
    assert rep.provenance == [("undetermined", "Theorem 1")]


def test_verdicts_each_carry_one_tag():
    for space in (TSIRELSON, EXAMPLE1, EXAMPLE2, A2_ONE, fm((AnK(2), "3/5"))):
        for v in classify(space).verdicts:
            assert isinstance(v.tag, str) and v.tag


def test_classification_invariant_under_permutation_and_duplication():
    rng = random.Random(31)
    for _ in range(40):
        entries = [(AnK(rng.randint(1, 6)), Fraction(rng.randint(1, 9), 10)) for _ in range(rng.randint(1, 4))]
        base = classify_finite(FiniteMixed(tuple(entries)))
        shuffled = entries[:]
        rng.shuffle(shuffled)
        dup = entries + [rng.choice(entries)]
        for other in (FiniteMixed(tuple(shuffled)), FiniteMixed(tuple(dup))):
            rep = classify_finite(other)
            assert rep.saturation == base.saturation
            assert rep.reflexive == base.reflexive
            if base.p is not None:
                assert rep.p.compare(base.p) == 0


def test_p_identity_when_exact():
    # theta = n^(1/p - 1) with p = a/b  <=>  theta^a = n^(b - a)
    cases = [(4, Fraction(1, 2)), (8, Fraction(1, 2)), (9, Fraction(1, 3)), (16, Fraction(1, 2))]
    for n, theta in cases:
        e = PValue(n, theta).exact
        assert e is not None
        assert theta ** e.numerator == Fraction(n) ** (e.denominator - e.numerator)
    assert PValue(2, Fraction(3, 5)).exact is None


def test_p_value_enclosure_and_comparison():
    p = PValue(2, Fraction(3, 5))
    enc = p.enclosure(80)
    assert enc.lo < Fraction(380178401693, 10 ** 11) and Fraction(380178401692, 10 ** 11) < enc.hi  # 3.80178401692...
    assert PValue(2, Fraction(4, 5)).compare(PValue(4, Fraction(16, 25))) == 0
    assert PValue(2, Fraction(9, 10)).compare(PValue(3, Fraction(9, 10))) == 1


def test_compare_examples():
    r = compare(fm((AnK(2), "9/10")), fm((AnK(3), "9/10")))
    assert (r.verdict, r.fired) == ("totallyIncomparable", "Theorem 3 case 3")
    r = compare(fm((AnK(2), "4/5")), fm((AnK(4), "16/25")))
    assert r.verdict == "notTotallyIncomparable"
    r = compare(fm((AnK(2), "1/2")), fm((AnK(2), "3/5")))
    assert (r.verdict, r.fired) == ("totallyIncomparable", "Theorem 3 case 1")
    r = compare(AdmissibleSeq(InvLogPow(Fraction(1, 2))), AdmissibleSeq(InvLogPow(Fraction(9, 10))))
    assert (r.verdict, r.fired) == ("totallyIncomparable", "Example 3")


def test_example3_bound_is_checked():
    r = compare(AdmissibleSeq(InvLogPow(Fraction(1, 2))), AdmissibleSeq(InvLogPow(Fraction(11, 10))))
    assert r.verdict == "evidenceOnly"


def test_compare_symmetry_and_completeness():
    rng = random.Random(37)
    swap = {"Theorem 3 case 1": "Theorem 3 case 2", "Theorem 3 case 2": "Theorem 3 case 1"}
    for _ in range(60):
        a = FiniteMixed(tuple((AnK(rng.randint(1, 5)), Fraction(rng.randint(1, 6), rng.choice((10, 7))))
                              for _ in range(rng.randint(1, 3))))
        b = FiniteMixed(tuple((AnK(rng.randint(1, 5)), Fraction(rng.randint(1, 6), rng.choice((10, 7))))
                              for _ in range(rng.randint(1, 3))))
        ab, ba = compare(a, b), compare(b, a)
        assert ab.verdict != "evidenceOnly"
        assert ab.verdict == ba.verdict
        assert ba.fired == swap.get(ab.fired, ab.fired)


def test_cross_kind_saturation_rule():
    r = compare(AdmissibleSeq(InvLinear()), fm((AnK(2), "3/5")))
    assert (r.verdict, r.fired) == ("totallyIncomparable", "saturation")
    r = compare(A2_ONE, EXAMPLE2)
    assert r.verdict == "notTotallyIncomparable"


def test_admissible_sequence_verdicts():
    assert classify_admissible_seq(AdmissibleSeq(InvLinear())).saturation == "isometricC0"
    assert classify_admissible_seq(
        AdmissibleSeq(ExplicitList((Fraction(1), Fraction(1)), Fraction(1, 3)))).saturation == "isometricL1"
    assert classify_admissible_seq(AdmissibleSeq(Constant(Fraction(1, 2)))).saturation == "isomorphicL1"
    assert classify_admissible_seq(AdmissibleSeq(PowerLaw(Fraction(1), Fraction(3, 2)))).saturation == "isometricC0"
    schl = classify_admissible_seq(AdmissibleSeq(InvLogPow(1)))
    assert ("l1FinitelyBlockRepresented", "Prop 9") in schl.provenance
    tz = classify_admissible_seq(AdmissibleSeq(PowerLaw(Fraction(1), Fraction(1, 2))))
    assert tz.saturation == "undetermined" and ("undetermined", "Remark 5") in tz.provenance


def test_explicit_list_without_tail_delegates():
    rep = classify_admissible_seq(AdmissibleSeq(ExplicitList((Fraction(1, 2), Fraction(1, 2)))))
    assert rep.saturation == "c0Saturated"
    assert rep.reductions[0].startswith("replaced")


def test_ratio_probe():
    space = AdmissibleSeq(InvLogPow(1))
    assert all(r == 1 for r in lambda_ratio_probe(space, space, 12).ratios)
    probe = lambda_ratio_probe(space, AdmissibleSeq(InvLinear()), 12)
    assert probe.trend == "nondecreasing"
    import mpmath

    # both sequences satisfy lambda_l = l * theta_l here, so the ratio is log2(1+l)^(1 - 1/2)
    probe = lambda_ratio_probe(AdmissibleSeq(InvLogPow(Fraction(1, 2))), space, 12)
    with mpmath.workdps(40):
        for l, r in enumerate(probe.ratios, 1):
            target = mpmath.sqrt(mpmath.log(1 + l, 2))
            lo, hi = (r.lo, r.hi) if isinstance(r, RatInterval) else (r, r)
            assert mpmath.mpf(lo.numerator) / lo.denominator <= target <= mpmath.mpf(hi.numerator) / hi.denominator


def test_block_witness_examples():
    w = l1_block_witness(A2_ONE, 4, Fraction(1, 10), 3)
    assert w.scale == 1 and w.value == 4
    assert l1_block_witness(AdmissibleSeq(InvLinear()), 2, Fraction(1, 2), 8) is None
    w = l1_block_witness(EXAMPLE2, 2, Fraction(1, 2), 4)
    assert w is not None and w.value >= Fraction(3, 2)


@pytest.mark.slow
def test_schlumprecht_block_witness():
    w = l1_block_witness(AdmissibleSeq(InvLogPow(1)), 2, Fraction(1, 5), 12)
    assert w.scale == 10 and w.block_length == 512
    assert w.value.lo >= Fraction(9, 5)
    assert abs(float(w.value.lo) - 1.8003) < 1e-4
