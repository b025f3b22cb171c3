from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from ..mir.cfg import reachable_addresses
from ..mir.models import AllocatorModel, Call
from ..mir.semantics import to_word
from .expr import RSP0, Alloc, Const, FunRet, Imm, SymExpr, leaves, linear_form

if TYPE_CHECKING:
    from ..mir.models import Program, Section


@dataclass(frozen=True, slots=True, order=True)
class StackPointerBase:
    function: int

    def __str__(self) -> str:
        return f'StackPointer@{self.function:#x}'


@dataclass(frozen=True, slots=True, order=True)
class GlobalBase:
    addr: int

    def __str__(self) -> str:
        return f'Global@{self.addr:#x}'


@dataclass(frozen=True, slots=True, order=True)
class AllocBase:
    site: int

    def __str__(self) -> str:
        return f'Alloc@{self.site:#x}'


@dataclass(frozen=True, slots=True, order=True)
class SymbolBase:
    name: str

    def __str__(self) -> str:
        return f'Symbol {self.name}'


type Base = StackPointerBase | GlobalBase | AllocBase | SymbolBase


@dataclass(frozen=True, slots=True)
class ConstantSrc:
    const: Const

    def __str__(self) -> str:
        return f'{self.const.name}_0'


@dataclass(frozen=True, slots=True)
class BaseSrc:
    base: Base

    def __str__(self) -> str:
        return str(self.base)


@dataclass(frozen=True, slots=True)
class FunSrc:
    name: str

    def __str__(self) -> str:
        return f'Fun {self.name}'


type Source = ConstantSrc | BaseSrc | FunSrc


@dataclass(frozen=True)
class FunctionContext:
    """
    Facts about the analyzed function needed to classify expressions.

    Attributes:
        function: Entry address of the current function.
        sections: Data sections of the program.
        symbols: Symbol address to name.
        alloc_sites: Allocator call sites reachable in the current function.
        code: Instruction addresses of the program.
    """

    function: int
    sections: tuple[Section, ...] = ()
    symbols: dict[int, str] = field(default_factory=dict)
    alloc_sites: frozenset[int] = frozenset()
    code: frozenset[int] = frozenset()

    @classmethod
    def for_function(cls, program: Program, entry: int) -> FunctionContext:
        sites = frozenset(
            addr
            for addr in reachable_addresses(program, entry)
            if isinstance(term := program.node(addr).terminator, Call)
            and isinstance(term.target, str)
            and isinstance(program.externs.get(term.target), AllocatorModel)
        )
        return cls(
            function=entry,
            sections=program.sections,
            symbols=dict(program.symbols),
            alloc_sites=sites,
            code=frozenset(program.nodes),
        )

    def section_of(self, addr: int) -> Section | None:
        word = to_word(addr)
        for section in self.sections:
            if section.contains(word):
                return section
        return None

    def symbol_at(self, addr: int) -> str | None:
        return self.symbols.get(to_word(addr))

    def immediate_base(self, addr: int) -> Base | None:
        """Global or Symbol base named by an immediate address, if any."""
        if self.section_of(addr) is not None:
            return GlobalBase(to_word(addr))
        name = self.symbol_at(addr)
        if name is not None:
            return SymbolBase(name)
        return None


def _is_anchor(atom: SymExpr) -> bool:
    return atom == RSP0 or isinstance(atom, Alloc)


def bases_of(expr: SymExpr, ctx: FunctionContext) -> frozenset[Base]:
    """
    Recognize the anchors a pointer expression is based on.

    The stack base is recognized only for ``rsp_0`` minus a non-negative
    offset. Every allocation with unit coefficient contributes its site. The
    displacement names a Global or Symbol base only when no stack or heap
    anchor occurs in the expression.

    Args:
        expr: Any symbolic expression.
        ctx: Current function context.

    Returns:
        Set of recognized bases, possibly empty.
    """
    terms, disp = linear_form(expr)
    bases: set[Base] = set()
    if terms == {RSP0: 1} and disp <= 0:
        bases.add(StackPointerBase(ctx.function))
    for atom, coef in terms.items():
        if isinstance(atom, Alloc) and coef == 1:
            bases.add(AllocBase(atom.site))
    if not any(_is_anchor(atom) for atom in terms):
        base = ctx.immediate_base(disp)
        if base is not None:
            bases.add(base)
    return frozenset(bases)


def sources_of(expr: SymExpr, ctx: FunctionContext) -> frozenset[Source]:
    """
    Collect every entry constant, base and extern return used by ``expr``.

    Args:
        expr: Any symbolic expression.
        ctx: Current function context.

    Returns:
        Set of sources; recognized bases are always included.
    """
    sources: set[Source] = {BaseSrc(base) for base in bases_of(expr, ctx)}
    for leaf in leaves(expr):
        match leaf:
            case Const():
                sources.add(ConstantSrc(leaf))
            case FunRet(name, _):
                sources.add(FunSrc(name))
            case Alloc(site):
                sources.add(BaseSrc(AllocBase(site)))
            case Imm(value):
                base = ctx.immediate_base(value)
                if base is not None:
                    sources.add(BaseSrc(base))
    return frozenset(sources)
