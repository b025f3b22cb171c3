"""Separation algebra over bases, sources and layered pointers."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from itertools import product
from typing import TYPE_CHECKING

from ..mir.semantics import to_word
from ..symbolic.bases import (
    AllocBase,
    Base,
    BaseSrc,
    ConstantSrc,
    FunctionContext,
    FunSrc,
    GlobalBase,
    Source,
    StackPointerBase,
    SymbolBase,
    bases_of,
)
from ..symbolic.expr import RSP0, SymExpr, linear_form
from .contract import AbsRegion, SepVerdict, weakest
from .values import AbsPtr, Layer

if TYPE_CHECKING:
    from .pointers import PointerDomain

N = SepVerdict.NECESSARY
D = SepVerdict.DESIRABLE
U = SepVerdict.UNKNOWN


@dataclass(frozen=True)
class SeparationRules:
    """
    Attributes:
        ctx: Current function.
        alloc_alloc: Verdict for allocations from two different sites.
        disjointness: Optional procedure tried when normalization cannot decide.
    """

    ctx: FunctionContext
    alloc_alloc: SepVerdict = N
    disjointness: Callable[[SymExpr, int, SymExpr, int], bool] | None = None


def _ordered(b0: Base, b1: Base) -> tuple[Base, Base]:
    rank = {StackPointerBase: 0, GlobalBase: 1, AllocBase: 2, SymbolBase: 3}
    return (b0, b1) if rank[type(b0)] <= rank[type(b1)] else (b1, b0)


def sep_bases(b0: Base, b1: Base, rules: SeparationRules) -> SepVerdict:
    """
    Separation between two bases, closed under symmetry.

    Stack frames are necessarily apart from globals, symbols and allocations;
    allocations from different sites follow the configured verdict. Distinct
    frames, globals in different sections and a global against a symbol are
    only desirably separate.
    """
    left, right = _ordered(b0, b1)
    match left, right:
        case StackPointerBase(f0), StackPointerBase(f1):
            return U if f0 == f1 else D
        case StackPointerBase(), GlobalBase() | AllocBase() | SymbolBase():
            return N
        case GlobalBase(a0), GlobalBase(a1):
            s0, s1 = rules.ctx.section_of(a0), rules.ctx.section_of(a1)
            return D if s0 is not None and s1 is not None and s0 != s1 else U
        case GlobalBase(), AllocBase():
            return N
        case GlobalBase(), SymbolBase():
            return D
        case AllocBase(i0), AllocBase(i1):
            return U if i0 == i1 else rules.alloc_alloc
        case AllocBase(), SymbolBase():
            return N
    return U


def sep_sources(s0: Source, s1: Source, rules: SeparationRules) -> SepVerdict:
    """
    Separation between two sources, closed under symmetry.

    Extern return values are not pointers and are necessarily apart from
    every source, another extern return included. An entry constant is necessarily apart from an allocation made
    by the current function and desirably apart from the current frame.
    """
    match s0, s1:
        case BaseSrc(b0), BaseSrc(b1):
            return sep_bases(b0, b1, rules)
        case (FunSrc(), _) | (_, FunSrc()):
            return N
        case (ConstantSrc(c), BaseSrc(b)) | (BaseSrc(b), ConstantSrc(c)):
            if isinstance(b, AllocBase) and b.site in rules.ctx.alloc_sites:
                return N
            if isinstance(b, StackPointerBase) and b.function == rules.ctx.function and c != RSP0:
                return D
    return U


def disjoint_cc(c0: SymExpr, si0: int | None, c1: SymExpr, si1: int | None, rules: SeparationRules) -> bool:
    """
    Decide whether two constant-computation regions are provably disjoint.

    Args:
        c0: Address of the first region.
        si0: Size of the first region, None when unknown.
        c1: Address of the second region.
        si1: Size of the second region, None when unknown.
        rules: Separation rules for base reasoning and the optional solver.

    Returns:
        True only when disjointness is proven; False means unproven.
    """
    if si0 is None or si1 is None:
        return False
    t0, d0 = linear_form(c0)
    t1, d1 = linear_form(c1)
    if t0 == t1:
        delta = to_word(d1 - d0)
        return si0 <= delta <= (1 << 64) - si1
    b0, b1 = bases_of(c0, rules.ctx), bases_of(c1, rules.ctx)
    if b0 and b1 and all(sep_bases(x, y, rules) is N for x, y in product(b0, b1)):
        return True
    if rules.disjointness is not None:
        return rules.disjointness(c0, si0, c1, si1)
    return False


def _fold(a0: AbsPtr, a1: AbsPtr, rules: SeparationRules) -> SepVerdict:
    match a0.layer:
        case Layer.B:
            return weakest([sep_bases(x, y, rules) for x, y in product(a0.elements, a1.elements)])
        case Layer.S:
            return weakest([sep_sources(x, y, rules) for x, y in product(a0.elements, a1.elements)])
    return U


def sep_regions(domain: PointerDomain, r0: AbsRegion[AbsPtr], r1: AbsRegion[AbsPtr]) -> SepVerdict:
    """
    Separation verdict for two abstract regions.

    Constant computations are tried pairwise first; when that fails both
    addresses descend to the coarser common layer and the weakest pairwise
    verdict over bases or sources is returned. TOP separates from nothing.
    """
    a0, a1 = r0.addr, r1.addr
    if a0.is_top or a1.is_top:
        return U
    rules = domain.rules
    if a0.layer is Layer.C and a1.layer is Layer.C:
        if all(disjoint_cc(x, r0.size, y, r1.size, rules) for x, y in product(a0.elements, a1.elements)):
            return N
        a0, a1 = domain.shift(a0), domain.shift(a1)
    a0, a1 = domain.equalize(a0, a1)
    if a0.is_top or a1.is_top:
        return U
    return _fold(a0, a1, rules)
