from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from mixtsirelson.foundations import (Constant, ExplicitList, FinVec, FoundationError, InvLinear, InvLogPow,
                                      PowerLaw, RatInterval, envelope, format_rat, rat, restrict, theta_at)



def test_rat_parsing():
    assert rat("3/6") == Fraction(1, 2)
    assert rat(4) == Fraction(4)
    assert format_rat(Fraction(2)) == "2/1"
    with pytest.raises(FoundationError):
        rat(0.5)
    with pytest.raises(FoundationError):
        rat("1/0")


def test_theta_exact_forms():
    assert theta_at(Constant(Fraction(1, 2)), 5) == Fraction(1, 2)
    assert theta_at(InvLinear(), 4) == Fraction(1, 4)
    assert theta_at(InvLogPow(1), 3) == Fraction(1, 2)
    assert theta_at(InvLogPow(Fraction(1, 2)), 15) == Fraction(1, 2)   # sqrt(log2 16) = 2
    assert theta_at(PowerLaw(Fraction(1), Fraction(1, 2)), 4) == Fraction(1, 2)


def test_theta_rejects_k_zero():
    with pytest.raises(FoundationError):
        theta_at(InvLinear(), 0)


def test_invlogpow_enclosure_against_high_precision():
    cell = theta_at(InvLogPow(1), 2, precision=20)
    assert isinstance(cell, RatInterval)
    assert cell.width <= Fraction(1, 2 ** 20)
    with mpmath.workdps(50):
        true = 1 / mpmath.log(3, 2)
        assert mpmath.mpf(cell.lo.numerator) / cell.lo.denominator < true
        assert true < mpmath.mpf(cell.hi.numerator) / cell.hi.denominator
    assert abs(float(cell.lo) - 0.6309) < 1e-4


@pytest.mark.parametrize("seq,k", [(InvLogPow(1), 2), (InvLogPow(Fraction(3, 4)), 10),
                                   (PowerLaw(Fraction(9, 10), Fraction(1, 2)), 3)])
def test_enclosures_nest_under_refinement(seq, k):
    cells = [theta_at(seq, k, precision=p) for p in (8, 16, 32, 64)]
    for coarse, fine in zip(cells, cells[1:]):
        assert coarse.lo <= fine.lo and fine.hi <= coarse.hi


def test_powerlaw_irrational_is_never_exact():
    v = theta_at(PowerLaw(Fraction(1), Fraction(1, 2)), 2, precision=30)
    assert isinstance(v, RatInterval)
    assert v.lo ** 2 < Fraction(1, 2) < v.hi ** 2


def test_envelope_example():
    env = envelope(ExplicitList((Fraction(1, 2), Fraction(9, 10), Fraction(3, 10)), Fraction(3, 10)))
    assert env == ExplicitList((Fraction(9, 10), Fraction(9, 10), Fraction(3, 10)), Fraction(3, 10))
    assert envelope(InvLinear()) == InvLinear()


unit = st.fractions(min_value=Fraction(1, 20), max_value=1, max_denominator=20)


@settings(max_examples=60, deadline=None)
@given(st.lists(unit, min_size=1, max_size=8), st.one_of(st.none(), unit))
def test_envelope_properties(values, tail):
    seq = ExplicitList(tuple(values), tail)
    env = envelope(seq)
    assert envelope(env) == env
    n = len(values) + 3 if tail is not None else len(values)
    for k in range(1, n + 1):
        assert env.theta(k) >= seq.theta(k)
        if k > 1:
            assert env.theta(k) <= env.theta(k - 1)
    if seq.nonincreasing:
        assert env == seq


def test_restrict_examples():
    x = FinVec({1: 1, 3: 2})
    assert restrict(x, {3, 4}) == FinVec({3: 2})
    assert restrict(x, ()) == FinVec()
    assert restrict(x, range(1, 10)) == x


vectors = st.dictionaries(st.integers(1, 12), st.fractions(max_denominator=9), max_size=8).map(FinVec)
sets = st.frozensets(st.integers(1, 12))


@settings(max_examples=80, deadline=None)
@given(vectors, sets, sets)
def test_restrict_idempotent_and_commutes(x, E, F):
    assert restrict(restrict(x, E), E) == restrict(x, E)
    assert restrict(restrict(x, E), F) == restrict(x, E & F)
    assert set(restrict(x, E).support) == set(x.support) & E


def test_finvec_drops_zeros_and_rejects_position_zero():
    assert FinVec({2: 0, 3: 1}).support == (3,)
    with pytest.raises(FoundationError):
        FinVec({0: 1})
