"""Space specifications ``T[(M_k, theta_k)]``."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .families import AnK, Family, flatten
from .foundations import CoefficientSeq, ExplicitList, FoundationError, rat


class SpaceError(ValueError):
    pass


@dataclass(frozen=True)
class FiniteMixed:
    """Finitely many (family, theta) pairs with rational theta in (0, 1]."""

    entries: tuple[tuple[Family, Fraction], ...]

    def __post_init__(self):
        clean = []
        for fam, theta in self.entries:
            try:
                theta = rat(theta)
            except FoundationError as exc:
                raise SpaceError(str(exc)) from exc
            if not 0 < theta <= 1:
                raise SpaceError(f"theta must lie in (0, 1], got {theta}")
            if not isinstance(fam, Family):
                raise SpaceError(f"not a family descriptor: {fam!r}")
            clean.append((fam, theta))
        if not clean:
            raise SpaceError("FiniteMixed needs at least one entry")
        object.__setattr__(self, "entries", tuple(clean))

    @property
    def position_invariant(self) -> bool:
        return all(isinstance(leaf, AnK) for fam, _ in self.entries for leaf in flatten(fam)
                   if not leaf.is_trivial() and leaf.nonsingletons() != frozenset())


@dataclass(frozen=True)
class AdmissibleSeq:
    """``T[(A_k, theta_k)_{k>=1}]`` for a catalog coefficient sequence."""

    coeffs: CoefficientSeq

    position_invariant = True

    def as_finite(self) -> FiniteMixed | None:
        """The equivalent finite space when the index set is finite."""
        if isinstance(self.coeffs, ExplicitList) and self.coeffs.tail is None:
            return FiniteMixed(tuple((AnK(k), v) for k, v in enumerate(self.coeffs.values, 1)))
        return None


SpaceSpec = FiniteMixed | AdmissibleSeq


def tsirelson() -> FiniteMixed:
    from .families import Schreier

    return FiniteMixed(((Schreier(), Fraction(1, 2)),))
