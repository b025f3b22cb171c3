"""Deliberately unsound domains used to check that the test harnesses catch bugs."""

from __future__ import annotations

from .contract import AbsRegion, SepVerdict
from .pointers import PointerDomain
from .values import AbsPtr


class BrokenJoinDomain(PointerDomain):
    """Joins by intersection; keeps the left value when the intersection is empty."""

    def join(self, a0: AbsPtr, a1: AbsPtr) -> AbsPtr:
        a0, a1 = self.equalize(a0, a1)
        if a0.is_top or a1.is_top:
            return a1 if a0.is_top else a0
        common = a0.elements & a1.elements
        return AbsPtr(a0.layer, common) if common else a0


class BrokenSepDomain(PointerDomain):
    """Claims every pair of regions is necessarily separate."""

    def sep(self, r0: AbsRegion[AbsPtr], r1: AbsRegion[AbsPtr]) -> SepVerdict:
        return SepVerdict.NECESSARY


MUTANTS: dict[str, type[PointerDomain]] = {
    'broken-join': BrokenJoinDomain,
    'broken-sep': BrokenSepDomain,
}


def mutant_domain_cls(name: str | None) -> type[PointerDomain]:
    """
    Look up a domain class by mutant name; None selects the sound domain.

    Raises:
        ValueError: If the name is unknown.
    """
    if name is None:
        return PointerDomain
    try:
        return MUTANTS[name]
    except KeyError:
        raise ValueError(f'Unknown mutant {name!r}. Expected one of: {", ".join(MUTANTS)}.') from None

