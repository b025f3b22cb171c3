from __future__ import annotations

import logging

from collections.abc import Callable, Iterable
from dataclasses import dataclass
from itertools import product
from typing import TYPE_CHECKING

from ..mir.models import FLAGS, Operation
from ..symbolic.bases import (
    Base,
    BaseSrc,
    ConstantSrc,
    FunctionContext,
    FunSrc,
    GlobalBase,
    Source,
    StackPointerBase,
    bases_of,
    sources_of,
)
from ..symbolic.expr import (
    RSP0,
    Alloc,
    Const,
    FunRet,
    Imm,
    SymExpr,
    apply,
    imm,
    is_constant_computation,
    leaves,
    linear_form,
)
from .contract import AbsRegion, AbstractDomain, DomainMode, SepVerdict
from .designation import designate
from .separation import SeparationRules, sep_regions
from .values import TOP, AbsPtr, Element, Layer, b_ptr, c_ptr, s_ptr

if TYPE_CHECKING:
    from ..models import Designation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Caps:
    c: int = 10
    b: int = 5
    s: int = 250

    def of(self, layer: Layer) -> int:
        return {Layer.C: self.c, Layer.B: self.b, Layer.S: self.s}[layer]


_MODE_LAYERS: dict[DomainMode, tuple[Layer, Layer]] = {
    DomainMode.FULL: (Layer.C, Layer.S),
    DomainMode.ONLY_C: (Layer.C, Layer.C),
    DomainMode.ONLY_B: (Layer.B, Layer.B),
    DomainMode.ONLY_S: (Layer.S, Layer.S),
}

type Disjointness = Callable[[SymExpr, int, SymExpr, int], bool]


class PointerDomain(AbstractDomain[AbsPtr]):
    """
    The layered pointer domain for one function.

    Values live in the finest layer that can describe them within the caps
    and the selected mode. Exceeding a cap descends one layer (C to B to S to
    TOP); restricted modes move every value to their single layer.

    Args:
        ctx: Function under analysis.
        mode: Allowed layers.
        caps: Maximum set sizes per layer.
        alloc_alloc: Verdict for allocations from different sites.
        frame_cap: Bytes below ``rsp_0`` still considered the current frame.
        disjointness: Optional extra decision procedure for constant computations.
    """

    def __init__(
        self,
        ctx: FunctionContext,
        mode: DomainMode = DomainMode.FULL,
        caps: Caps | None = None,
        alloc_alloc: SepVerdict = SepVerdict.NECESSARY,
        frame_cap: int = 0x10000,
        disjointness: Disjointness | None = None,
    ) -> None:
        self.ctx = ctx
        self.mode = mode
        self.caps = caps or Caps()
        self.frame_cap = frame_cap
        self.rules = SeparationRules(ctx=ctx, alloc_alloc=alloc_alloc, disjointness=disjointness)

    # Layer movement

    def shift(self, p: AbsPtr) -> AbsPtr:
        """
        Descend one layer, elementwise.

        A C set becomes the union of its bases when every element has one;
        otherwise each element contributes its bases (as sources) or, without
        bases, its sources, and an element contributing nothing yields TOP.
        B becomes S over BaseSrc. S becomes TOP.
        """
        match p.layer:
            case Layer.C:
                per_element = [bases_of(e, self.ctx) for e in p.elements]
                if all(per_element):
                    return AbsPtr(Layer.B, frozenset().union(*per_element))
                sources: set[Source] = set()
                for expr, bases in zip(p.elements, per_element, strict=True):
                    contributed = {BaseSrc(b) for b in bases} if bases else sources_of(expr, self.ctx)
                    if not contributed:
                        return TOP
                    sources.update(contributed)
                return AbsPtr(Layer.S, frozenset(sources))
            case Layer.B:
                return AbsPtr(Layer.S, frozenset(BaseSrc(b) for b in p.elements))
        return TOP

    def fit(self, p: AbsPtr) -> AbsPtr:
        """
        Shift until the value respects the caps and the mode's layers.

        Code addresses within the C cap stay exact in every mode.
        """
        if p.layer is Layer.C and p.elements and len(p.elements) <= self.caps.c and self.resolve_targets(p) is not None:
            return p
        floor, ceiling = _MODE_LAYERS[self.mode]
        while not p.is_top:
            if not p.elements or p.layer > ceiling:
                return TOP
            if p.layer < floor or len(p.elements) > self.caps.of(p.layer):
                if p.layer >= floor:
                    logger.debug('Cap exceeded: layer=%s size=%d', p.layer.name, len(p.elements))
                p = self.shift(p)
                continue
            return p
        return p

    def equalize(self, a0: AbsPtr, a1: AbsPtr) -> tuple[AbsPtr, AbsPtr]:
        """Shift the finer value until both share a layer; either may become TOP."""
        while not (a0.is_top or a1.is_top) and a0.layer != a1.layer:
            if a0.layer < a1.layer:
                a0 = self.shift(a0)
            else:
                a1 = self.shift(a1)
        return a0, a1

    # Constructors

    @property
    def top(self) -> AbsPtr:
        return TOP

    def from_initial(self, part: str) -> AbsPtr:
        """Entry value of a register; flags start at TOP."""
        if part in FLAGS:
            return TOP
        return self.fit(c_ptr(Const(part)))

    def immediate(self, value: int) -> AbsPtr:
        """An immediate operand inside an operation, kept in C regardless of mode."""
        return c_ptr(imm(value))

    def literal(self, value: int) -> AbsPtr:
        """
        An immediate moved into a register or memory as a value.

        Code addresses stay exact so indirect transfers can be resolved,
        section and symbol addresses become their base, anything else is TOP.
        """
        word = imm(value)
        if value in self.ctx.code:
            return self.fit(c_ptr(word))
        base = self.ctx.immediate_base(value)
        if base is not None:
            return self.fit(b_ptr(base))
        return TOP

    def initial_content(self, region: AbsRegion[AbsPtr]) -> AbsPtr:
        return self.fit(s_ptr(ConstantSrc(Const(f'mem{region}'))))

    def fun_return(self, name: str) -> AbsPtr:
        return self.fit(s_ptr(FunSrc(name)))

    def alloc_pointer(self, site: int) -> AbsPtr:
        return self.fit(c_ptr(Alloc(site)))

    # Lattice

    def join(self, a0: AbsPtr, a1: AbsPtr) -> AbsPtr:
        """Equalize layers, take the union, then re-apply the caps."""
        a0, a1 = self.equalize(a0, a1)
        if a0.is_top or a1.is_top:
            return TOP
        return self.fit(AbsPtr(a0.layer, a0.elements | a1.elements))

    def join_all(self, values: Iterable[AbsPtr]) -> AbsPtr | None:
        result: AbsPtr | None = None
        for value in values:
            result = value if result is None else self.join(result, value)
        return result

    # Semantics

    def bases(self, p: AbsPtr) -> frozenset[Base]:
        """Bases of a B value, or of a C value whose every element is based."""
        if p.layer is Layer.B:
            return p.elements
        if p.layer is Layer.C:
            per_element = [bases_of(e, self.ctx) for e in p.elements]
            if all(per_element):
                return frozenset().union(*per_element)
        return frozenset()

    def sources(self, p: AbsPtr) -> frozenset[Source]:
        match p.layer:
            case Layer.C:
                return frozenset().union(*(sources_of(e, self.ctx) for e in p.elements))
            case Layer.B:
                return frozenset(BaseSrc(b) for b in p.elements)
            case Layer.S:
                return p.elements
        return frozenset()

    def is_anchor_free(self, p: AbsPtr) -> bool:
        """True when adding the value to a based pointer keeps the same anchor."""
        match p.layer:
            case Layer.TOP:
                return True
            case Layer.C:
                return not any(
                    bases_of(expr, self.ctx) or any(leaf == RSP0 or isinstance(leaf, Alloc) for leaf in leaves(expr))
                    for expr in p.elements
                )
            case Layer.S:
                return not any(source == ConstantSrc(RSP0) or isinstance(source, BaseSrc) for source in p.elements)
        return False

    def asem(self, op: Operation, args: list[AbsPtr]) -> AbsPtr:
        """
        Abstract effect of one operation.

        All-C operands are combined pointwise. Adding offsets that cannot
        carry an anchor to exactly one based operand keeps its bases, and so
        does subtracting them from a based minuend. Anything else falls back
        to the union of sources, or TOP when no source is known.
        """
        if op.is_flag_op:
            return TOP
        if op is Operation.MOV:
            return args[0]
        if all(a.layer is Layer.C for a in args):
            results = [apply(op, combo) for combo in product(*(a.sorted_elements() for a in args))]
            return self.fit(AbsPtr(Layer.C, frozenset(results)))

        based = [self.bases(a) for a in args]
        if op is Operation.ADD:
            anchored = [i for i, bases in enumerate(based) if bases]
            if len(anchored) == 1 and all(self.is_anchor_free(a) for i, a in enumerate(args) if i != anchored[0]):
                return self.fit(b_ptr(*based[anchored[0]]))
        elif op is Operation.SUB:
            if based[0] and not based[1] and self.is_anchor_free(args[1]):
                return self.fit(b_ptr(*based[0]))
        elif op is Operation.MUL:
            one = c_ptr(Imm(1))
            if args[1] == one:
                return args[0]
            if args[0] == one:
                return args[1]

        if any(a.is_top for a in args):
            return TOP
        sources = frozenset().union(*(self.sources(a) for a in args))
        if not sources:
            return TOP
        return self.fit(AbsPtr(Layer.S, sources))

    # Regions

    def sep(self, r0: AbsRegion[AbsPtr], r1: AbsRegion[AbsPtr]) -> SepVerdict:
        return sep_regions(self, r0, r1)

    def alias(self, r0: AbsRegion[AbsPtr], r1: AbsRegion[AbsPtr]) -> bool:
        """Both regions are the same single constant computation with the same known size."""
        return (
            r0.size is not None
            and r0.size == r1.size
            and r0.addr.layer is Layer.C
            and r0.addr == r1.addr
            and len(r0.addr.elements) == 1
        )

    def encl(self, r0: AbsRegion[AbsPtr], r1: AbsRegion[AbsPtr]) -> bool:
        """
        True when every concrete region of ``r0`` lies inside one of ``r1``.

        Constant computations need interval containment over equal atoms.
        Coarser layers need set inclusion, where a Global base covers any
        other Global in the same section, and compatible sizes.
        """
        if r0 == r1:
            return True
        sizes_fit = r1.size is None or (r0.size is not None and r0.size <= r1.size)
        a0, a1 = r0.addr, r1.addr
        if a1.is_top:
            return sizes_fit
        if a0.is_top:
            return False
        if a0.layer is Layer.C and a1.layer is Layer.C:
            if r1.size is None:
                return a0.elements <= a1.elements
            if r0.size is None:
                return False
            return all(any(self._contained(e0, r0.size, e1, r1.size) for e1 in a1.elements) for e0 in a0.elements)
        if not sizes_fit:
            return False
        a0, a1 = self.equalize(a0, a1)
        if a1.is_top:
            return True
        if a0.is_top:
            return False
        return all(any(self._covers(e1, e0) for e1 in a1.elements) for e0 in a0.elements)

    @staticmethod
    def _contained(e0: SymExpr, s0: int, e1: SymExpr, s1: int) -> bool:
        t0, d0 = linear_form(e0)
        t1, d1 = linear_form(e1)
        return t0 == t1 and d1 <= d0 and d0 + s0 <= d1 + s1

    def _covers(self, outer: Element, inner: Element) -> bool:
        if outer == inner:
            return True
        if isinstance(outer, BaseSrc) and isinstance(inner, BaseSrc):
            outer, inner = outer.base, inner.base
        if isinstance(outer, GlobalBase) and isinstance(inner, GlobalBase):
            section = self.ctx.section_of(outer.addr)
            return section is not None and section is self.ctx.section_of(inner.addr)
        return False

    # Reporting

    def designate(self, value: AbsPtr) -> Designation:
        return designate(value, self.ctx, self.frame_cap)

    def render(self, value: AbsPtr) -> str:
        return str(value)

    def resolve_targets(self, value: AbsPtr) -> frozenset[int] | None:
        """Code addresses a C value of immediates denotes, or None if unresolved."""
        if value.layer is not Layer.C:
            return None
        targets: set[int] = set()
        for expr in value.elements:
            if not isinstance(expr, Imm):
                return None
            addr = expr.value & 0xFFFF_FFFF_FFFF_FFFF
            if addr not in self.ctx.code:
                return None
            targets.add(addr)
        return frozenset(targets)

    def is_caller_relative(self, value: AbsPtr) -> bool:
        """True when the value depends on the entry state of some function."""
        match value.layer:
            case Layer.C:
                return any(
                    isinstance(leaf, Const | FunRet) for expr in value.elements for leaf in leaves(expr)
                ) or not all(is_constant_computation(e) for e in value.elements)
            case Layer.B:
                return any(isinstance(b, StackPointerBase) for b in value.elements)
            case Layer.S:
                return any(
                    isinstance(s, ConstantSrc) or (isinstance(s, BaseSrc) and isinstance(s.base, StackPointerBase))
                    for s in value.elements
                )
        return False


def is_stack_only(expr: SymExpr) -> bool:
    """True for ``rsp_0`` plus an immediate."""
    terms, _ = linear_form(expr)
    return terms == {RSP0: 1}

