"""Exact scalars, certified enclosures, finitely supported vectors and
coefficient sequences.

Every scalar on a norm path is a :class:`fractions.Fraction`.  Irrational
coefficients (``1/log2(1+k)`` and friends) are represented by a
:class:`RatInterval` whose endpoints are dyadic rationals; the interval is the
unique dyadic cell of the requested width that contains the true value, so
enclosures at increasing precision are nested.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

import gmpy2
from mpmath import iv

Rational = Fraction
Scalar = Union[Fraction, "RatInterval"]


class FoundationError(ValueError):
    pass


def rat(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are refused: they would smuggle rounding into exact paths.
    """
    if isinstance(value, bool):
        raise FoundationError(f"not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            if "/" in text:
                num, den = text.split("/")
                return Fraction(int(num), int(den))
            return Fraction(int(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise FoundationError(f"malformed rational literal {value!r}") from exc
    raise FoundationError(f"not a rational: {value!r}")


def format_rat(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class RatInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise FoundationError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, value) -> bool:
        if isinstance(value, RatInterval):
            return self.lo <= value.lo and value.hi <= self.hi
        return self.lo <= value <= self.hi

    def overlaps(self, other: "RatInterval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def __truediv__(self, other: "RatInterval") -> "RatInterval":
        # positive intervals only; that is all the lambda-ratio probe needs
        if self.lo < 0 or other.lo <= 0:
            raise FoundationError("interval division implemented for positive intervals only")
        return RatInterval(self.lo / other.hi, self.hi / other.lo)

    def __str__(self) -> str:
        return f"[{format_rat(self.lo)}, {format_rat(self.hi)}]"


def as_interval(value: Scalar) -> RatInterval:
    if isinstance(value, RatInterval):
        return value
    return RatInterval(value, value)


def lower(value: Scalar) -> Fraction:
    return value.lo if isinstance(value, RatInterval) else value


def upper(value: Scalar) -> Fraction:
    return value.hi if isinstance(value, RatInterval) else value


def to_decimal(value: Scalar, digits: int = 12) -> str:
    if isinstance(value, RatInterval):
        mid = (value.lo + value.hi) / 2
        return f"{float(mid):.{digits}g}"
    return f"{float(value):.{digits}g}"


# -- certified enclosures -------------------------------------------------

def _mpf_tuple_to_fraction(t) -> Fraction:
    sign, man, exp, _ = t
    if man == 0 and exp != 0:
        raise FoundationError("non-finite interval endpoint")
    value = Fraction(int(man) << exp) if exp >= 0 else Fraction(int(man), 1 << -exp)
    return -value if sign else value


def dyadic_cell(enclose, precision: int) -> RatInterval:
    """Return ``[j/2^q, (j+1)/2^q]`` containing the irrational value that
    ``enclose(bits)`` brackets, where ``q = precision``.

    ``enclose`` maps a working precision to an mpmath ``iv`` interval; the
    working precision doubles until both endpoints share the same cell.
    """
    scale = 1 << precision
    bits = precision + 24
    while bits <= 1 << 16:
        saved = iv.prec
        iv.prec = bits
        try:
            a, b = enclose(bits)._mpi_
        finally:
            iv.prec = saved
        lo = _mpf_tuple_to_fraction(a)
        hi = _mpf_tuple_to_fraction(b)
        j_lo = (lo * scale).__floor__()
        j_hi = (hi * scale).__floor__()
        if j_lo == j_hi and hi * scale != j_hi:
            return RatInterval(Fraction(j_lo, scale), Fraction(j_lo + 1, scale))
        bits *= 2
    raise FoundationError("enclosure did not separate from the dyadic grid")


def _integer_root(value: int, degree: int) -> int | None:
    root, exact = gmpy2.iroot(value, degree)
    return int(root) if exact else None


def _rational_power(base: int, exponent: Fraction) -> Fraction | None:
    """``base ** exponent`` when that is rational, else None (base >= 1)."""
    a, b = exponent.numerator, exponent.denominator
    root = _integer_root(base ** abs(a), b)
    if root is None:
        return None
    return Fraction(root) if a >= 0 else Fraction(1, root)


# -- coefficient sequences ------------------------------------------------

class CoefficientSeq:
    """Base class for the catalog of coefficient sequences ``(theta_k)``."""

    nonincreasing = True
    index_limit: int | None = None  # last admissible k for finite index sets

    def theta(self, k: int, precision: int = 64) -> Scalar:
        raise NotImplementedError

    def envelope_value(self, d: int, precision: int = 64) -> tuple[Scalar, int] | None:
        """``(sup_{k>=d} theta_k, k attaining it)``, or None if no k >= d exists."""
        if self.index_limit is not None and d > self.index_limit:
            return None
        return self.theta(d, precision), d

    def is_exact(self, k: int) -> bool:
        return isinstance(self.theta(k, 8), Fraction)


def _check_unit(value: Fraction, what: str) -> Fraction:
    if not 0 < value <= 1:
        raise FoundationError(f"{what} must lie in (0, 1], got {value}")
    return value


@dataclass(frozen=True)
class ExplicitList(CoefficientSeq):
    values: tuple[Fraction, ...]
    tail: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(rat(v) for v in self.values))
        if not self.values and self.tail is None:
            raise FoundationError("ExplicitList needs values or a tail")
        for v in self.values:
            _check_unit(v, "theta")
        if self.tail is not None:
            object.__setattr__(self, "tail", _check_unit(rat(self.tail), "tail"))

    @property
    def index_limit(self):
        return None if self.tail is not None else len(self.values)

    @property
    def nonincreasing(self):
        seq = list(self.values) + ([self.tail] if self.tail is not None else [])
        return all(a >= b for a, b in zip(seq, seq[1:]))

    def theta(self, k, precision=64):
        if k <= len(self.values):
            return self.values[k - 1]
        if self.tail is None:
            raise FoundationError(f"k={k} outside the finite index set 1..{len(self.values)}")
        return self.tail

    def envelope_value(self, d, precision=64):
        if self.index_limit is not None and d > self.index_limit:
            return None
        best, arg = None, None
        for k in range(d, len(self.values) + 1):
            if best is None or self.values[k - 1] > best:
                best, arg = self.values[k - 1], k
        if self.tail is not None and (best is None or self.tail > best):
            best, arg = self.tail, max(d, len(self.values) + 1)
        return best, arg


@dataclass(frozen=True)
class Constant(CoefficientSeq):
    c: Fraction

    def __post_init__(self):
        object.__setattr__(self, "c", _check_unit(rat(self.c), "constant"))

    def theta(self, k, precision=64):
        return self.c


@dataclass(frozen=True)
class InvLinear(CoefficientSeq):
    def theta(self, k, precision=64):
        return Fraction(1, k)


@dataclass(frozen=True)
class PowerLaw(CoefficientSeq):
    """``theta_k = gamma * k^(-alpha)``; alpha = 1/2 is Tzafriri's sequence."""

    gamma: Fraction
    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, "gamma", _check_unit(rat(self.gamma), "gamma"))
        object.__setattr__(self, "alpha", rat(self.alpha))
        if self.alpha < 0:
            raise FoundationError("alpha must be non-negative")

    def theta(self, k, precision=64):
        power = _rational_power(k, self.alpha)
        if power is not None:
            return self.gamma / power
        # floor(gamma * 2^q * k^(-a/b)) = iroot_b(floor(gamma^b 2^(qb) / k^a))
        a, b = self.alpha.numerator, self.alpha.denominator
        g = self.gamma ** b * (1 << (precision * b)) / k ** a
        j = int(gmpy2.iroot(g.numerator // g.denominator, b)[0])
        scale = 1 << precision
        return RatInterval(Fraction(j, scale), Fraction(j + 1, scale))


@dataclass(frozen=True)
class InvLogPow(CoefficientSeq):
    """``theta_k = 1 / log2(1+k)^r``; r = 1 is Schlumprecht's sequence."""

    r: Fraction

    def __post_init__(self):
        object.__setattr__(self, "r", rat(self.r))
        if self.r <= 0:
            raise FoundationError("r must be positive")

    def theta(self, k, precision=64):
        n = k + 1
        if n & (n - 1) == 0:
            power = _rational_power(n.bit_length() - 1, self.r)
            if power is not None:
                return 1 / power
        r = self.r

        def enclose(bits):
            log2n = iv.log(n) / iv.log(2)
            return iv.exp(-iv.mpf(r.numerator) / r.denominator * iv.log(log2n))

        return dyadic_cell(enclose, precision)


def theta_at(seq: CoefficientSeq, k: int, precision: int = 64) -> Scalar:
    if k < 1:
        raise FoundationError("coefficient index k must be >= 1")
    return seq.theta(k, precision)


def envelope(seq: CoefficientSeq) -> CoefficientSeq:
    """Non-increasing envelope ``theta'_k = sup_{j>=k} theta_j``."""
    if not isinstance(seq, ExplicitList):
        return seq
    values = list(seq.values)
    running = seq.tail
    for i in range(len(values) - 1, -1, -1):
        if running is None or values[i] > running:
            running = values[i]
        values[i] = running
    return ExplicitList(tuple(values), seq.tail)


# -- vectors ---------------------------------------------------------------

@dataclass(frozen=True)
class FinVec:
    """Finitely supported rational vector ``sum a_i e_i``; zeros are never stored."""

    items: tuple[tuple[int, Fraction], ...] = ()

    def __init__(self, entries: Mapping[int, object] | Iterable[tuple[int, object]] = ()):
        pairs = entries.items() if isinstance(entries, Mapping) else entries
        clean: dict[int, Fraction] = {}
        for pos, val in pairs:
            pos = int(pos)
            if pos < 1:
                raise FoundationError(f"positions start at 1, got {pos}")
            val = rat(val)
            if val:
                clean[pos] = clean.get(pos, Fraction(0)) + val
        object.__setattr__(
            self, "items", tuple(sorted((p, v) for p, v in clean.items() if v))
        )

    @classmethod
    def unit(cls, i: int) -> "FinVec":
        return cls({i: 1})

    @classmethod
    def segment(cls, a: int, b: int) -> "FinVec":
        return cls({i: 1 for i in range(a, b + 1)})

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.items)

    def __getitem__(self, pos: int) -> Fraction:
        return dict(self.items).get(pos, Fraction(0))

    def __iter__(self) -> Iterator[tuple[int, Fraction]]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __bool__(self) -> bool:
        return bool(self.items)

    def __add__(self, other: "FinVec") -> "FinVec":
        return FinVec(list(self.items) + list(other.items))

    def __neg__(self) -> "FinVec":
        return FinVec((p, -v) for p, v in self.items)

    def __sub__(self, other: "FinVec") -> "FinVec":
        return self + (-other)

    def scale(self, c) -> "FinVec":
        c = rat(c)
        return FinVec((p, c * v) for p, v in self.items)

    def __abs__(self) -> "FinVec":
        return FinVec((p, abs(v)) for p, v in self.items)

    def sup_norm(self) -> Fraction:
        return max((abs(v) for _, v in self.items), default=Fraction(0))

    def l1_norm(self) -> Fraction:
        return sum((abs(v) for _, v in self.items), Fraction(0))

    def restrict(self, positions: Iterable[int]) -> "FinVec":
        keep = set(positions)
        return FinVec((p, v) for p, v in self.items if p in keep)

    def __repr__(self) -> str:
        body = " + ".join(f"{format_rat(v)}*e{p}" for p, v in self.items)
        return f"FinVec({body or '0'})"


def restrict(x: FinVec, positions: Iterable[int]) -> FinVec:
    return x.restrict(positions)
