"""Random abstract values, regions and concrete members for the obligation kit."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ..mir.models import Operation, Section
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
)
from ..symbolic.expr import RSP0, Alloc, App, Const, FunRet, Imm, Leaf, SymExpr, imm
from .contract import AbsRegion
from .values import TOP, AbsPtr, Layer, b_ptr, c_ptr, s_ptr

if TYPE_CHECKING:
    from .pointers import PointerDomain

KIT_FUNCTION = 0x1000
KIT_OTHER_FUNCTION = 0x9000
KIT_SECTIONS = (Section('.data', 0x10000, 0x20000), Section('.bss', 0x20000, 0x30000))
KIT_SYMBOLS = {0x40000: 'stdout', 0x41000: 'environ'}
KIT_ALLOC_SITES = (0x1010, 0x1020)
KIT_FOREIGN_ALLOC = 0x9010
KIT_CONSTANTS = ('rdi', 'rsi', 'rdx')
KIT_FUNS = ('getc', 'rand')

KIT_CONTEXT = FunctionContext(
    function=KIT_FUNCTION,
    sections=KIT_SECTIONS,
    symbols=KIT_SYMBOLS,
    alloc_sites=frozenset(KIT_ALLOC_SITES),
    code=frozenset({0x1000, 0x1008, 0x1010, 0x1020}),
)

STACK_TOP = 0x7FF0_0000_0000
CONST_BASE = 0x1000_0000_0000
HEAP_BASE = 0x5000_0000_0000

SIZES: tuple[int | None, ...] = (1, 2, 4, 8, None)
BINARY_OPS: tuple[Operation, ...] = (
    Operation.ADD,
    Operation.SUB,
    Operation.MUL,
    Operation.AND,
    Operation.OR,
    Operation.XOR,
    Operation.SHL,
    Operation.SHR,
    Operation.EQ,
)


def kit_valuation(rng: np.random.Generator) -> dict[Leaf, int]:
    """
    Concrete values for every leaf the sampler can produce.

    Entry constants and allocations get 4 GiB apart ranges, extern returns
    stay below 0x100, and the stack sits far above everything else.
    """
    valuation: dict[Leaf, int] = {RSP0: STACK_TOP}
    for index, name in enumerate(KIT_CONSTANTS):
        valuation[Const(name)] = CONST_BASE + (index << 32) + 8 * int(rng.integers(0, 0x100))
    for index, site in enumerate((*KIT_ALLOC_SITES, KIT_FOREIGN_ALLOC)):
        valuation[Alloc(site)] = HEAP_BASE + (index << 32)
    for name in KIT_FUNS:
        valuation[FunRet(name, KIT_FUNCTION)] = int(rng.integers(0, 0x100))
    return valuation


@dataclass
class Sampler:
    """
    Draws abstract values and members of their concretization.

    Attributes:
        domain: Domain whose mode and caps shape the sampled values.
        rng: Source of randomness.
    """

    domain: PointerDomain
    rng: np.random.Generator

    def _pick[T](self, items: tuple[T, ...] | list[T]) -> T:
        return items[int(self.rng.integers(0, len(items)))]

    def _offset(self, lo: int = 0, hi: int = 8) -> int:
        return 8 * int(self.rng.integers(lo, hi))

    def expr(self) -> SymExpr:
        kind = int(self.rng.integers(0, 7))
        match kind:
            case 0:
                return App(Operation.SUB, (RSP0, imm(self._offset(0, 10))))
            case 1:
                return App(Operation.ADD, (RSP0, imm(self._offset(1, 4))))
            case 2:
                return App(Operation.ADD, (Alloc(self._pick(KIT_ALLOC_SITES)), imm(self._offset(0, 5))))
            case 3:
                return App(Operation.ADD, (Const(self._pick(KIT_CONSTANTS)), imm(self._offset(0, 5))))
            case 4:
                section = self._pick(KIT_SECTIONS)
                return imm(section.lo + self._offset(0, 6))
            case 5:
                return imm(self._pick(tuple(KIT_SYMBOLS)))
        return App(Operation.ADD, (Const('rdi'), App(Operation.MUL, (Const('rsi'), imm(8)))))

    def base(self) -> Base:
        kind = int(self.rng.integers(0, 6))
        match kind:
            case 0:
                return StackPointerBase(KIT_FUNCTION)
            case 1:
                return StackPointerBase(KIT_OTHER_FUNCTION)
            case 2:
                return GlobalBase(self._pick(KIT_SECTIONS).lo + self._offset(0, 4))
            case 3:
                return AllocBase(self._pick((*KIT_ALLOC_SITES, KIT_FOREIGN_ALLOC)))
        return SymbolBase(self._pick(tuple(KIT_SYMBOLS.values())))

    def source(self) -> Source:
        kind = int(self.rng.integers(0, 4))
        match kind:
            case 0:
                return ConstantSrc(Const(self._pick((*KIT_CONSTANTS, 'rsp'))))
            case 1:
                return FunSrc(self._pick(KIT_FUNS))
        return BaseSrc(self.base())

    def value(self) -> AbsPtr:
        """A random value already fitted to the domain's mode and caps."""
        layer = Layer(int(self.rng.integers(0, 4)))
        count = int(self.rng.integers(1, 4))
        match layer:
            case Layer.C:
                raw = c_ptr(*(self.expr() for _ in range(count)))
            case Layer.B:
                raw = b_ptr(*(self.base() for _ in range(min(count, 2))))
            case Layer.S:
                raw = s_ptr(*(self.source() for _ in range(count)))
            case _:
                raw = TOP
        return self.domain.fit(raw)

    def operand(self) -> AbsPtr:
        """Like ``value`` but sometimes a raw immediate operand."""
        if self.rng.random() < 0.2:
            return self.domain.immediate(self._pick((1, 8, 0x10)))
        return self.value()

    def size(self) -> int | None:
        return self._pick(SIZES)

    def region(self) -> AbsRegion[AbsPtr]:
        return AbsRegion(self.value(), self.size())

    def enclosed(self, outer: AbsRegion[AbsPtr]) -> AbsRegion[AbsPtr]:
        """A region derived from ``outer`` by dropping elements and shrinking the size."""
        addr = outer.addr
        if not addr.is_top:
            elements = addr.sorted_elements()
            keep = int(self.rng.integers(1, len(elements) + 1))
            chosen = [elements[i] for i in sorted(self.rng.choice(len(elements), size=keep, replace=False))]
            addr = AbsPtr(addr.layer, frozenset(chosen))
        if outer.size is None:
            size = self.size()
        else:
            size = self._pick(tuple(s for s in (1, 2, 4, 8) if s <= outer.size))
        return AbsRegion(addr, size)

    def op(self) -> Operation:
        return self._pick(BINARY_OPS)

    def _offset_expr(self) -> SymExpr:
        if self.rng.random() < 0.3:
            return App(Operation.MUL, (FunRet(self._pick(KIT_FUNS), KIT_FUNCTION), imm(8)))
        return imm(self._offset(0, 4))

    def _anchored(self, base: Base) -> SymExpr:
        match base:
            case StackPointerBase(function) if function == KIT_FUNCTION:
                anchor: SymExpr = App(Operation.SUB, (RSP0, imm(self._offset(1, 16))))
            case StackPointerBase():
                anchor = App(Operation.ADD, (RSP0, imm(0x1000 + self._offset(0, 8))))
            case GlobalBase(addr):
                anchor = imm(addr + self._offset(0, 4))
            case AllocBase(site):
                anchor = Alloc(site)
            case SymbolBase(name):
                anchor = imm(next(a for a, n in KIT_SYMBOLS.items() if n == name))
        return App(Operation.ADD, (anchor, self._offset_expr()))

    def _from_source(self, source: Source) -> SymExpr:
        match source:
            case ConstantSrc(const):
                return App(Operation.ADD, (const, imm(self._offset(0, 4))))
            case FunSrc(name):
                return App(Operation.ADD, (App(Operation.MUL, (FunRet(name, KIT_FUNCTION), imm(8))), imm(8)))
            case BaseSrc(base):
                return self._anchored(base)
        raise TypeError(f'not a source: {source!r}')

    def member(self, value: AbsPtr) -> SymExpr:
        """
        A concrete computation described by ``value``.

        TOP yields a small scalar. Source values combine the leaves of at most
        two of their own sources and are anchored on a source other than an
        extern return whenever they hold one.
        """
        match value.layer:
            case Layer.C:
                return self._pick(value.sorted_elements())
            case Layer.B:
                return self._anchored(self._pick(value.sorted_elements()))
            case Layer.S:
                sources = value.sorted_elements()
                anchors = [source for source in sources if not isinstance(source, FunSrc)] or sources
                first = self._from_source(self._pick(anchors))
                if len(sources) > 1 and self.rng.random() < 0.3:
                    second = self._from_source(self._pick(sources))
                    if not isinstance(second, Imm):
                        return App(Operation.ADD, (first, App(Operation.AND, (second, imm(0xFF)))))
                return first
        return Imm(int(self.rng.integers(0, 0x100)))

    def concrete_size(self, region: AbsRegion[AbsPtr]) -> int:
        return region.size if region.size is not None else self._pick((1, 2, 4, 8))
