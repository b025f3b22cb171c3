from __future__ import annotations

from ..models import ALL_CLASSES, Designation, MemClass
from ..symbolic.bases import (
    AllocBase,
    Base,
    BaseSrc,
    ConstantSrc,
    FunctionContext,
    GlobalBase,
    Source,
    StackPointerBase,
    SymbolBase,
    bases_of,
    sources_of,
)
from ..symbolic.expr import RSP0, SymExpr, linear_form
from .values import AbsPtr, Layer

L = frozenset({MemClass.L})
G = frozenset({MemClass.G})
H = frozenset({MemClass.H})
LH = frozenset({MemClass.L, MemClass.H})


def _of_base(base: Base, ctx: FunctionContext) -> Designation:
    match base:
        case StackPointerBase(function):
            return L if function == ctx.function else LH
        case GlobalBase() | SymbolBase():
            return G
        case AllocBase():
            return H
    return ALL_CLASSES


def _of_source(source: Source, ctx: FunctionContext) -> Designation:
    match source:
        case BaseSrc(base):
            return _of_base(base, ctx)
        case ConstantSrc(const) if const == RSP0:
            return LH
    return H


def _of_expr(expr: SymExpr, ctx: FunctionContext, frame_cap: int) -> Designation:
    bases = bases_of(expr, ctx)
    if not bases:
        sources = sources_of(expr, ctx)
        return frozenset().union(*(_of_source(s, ctx) for s in sources)) if sources else ALL_CLASSES
    designation: set[MemClass] = set()
    for base in bases:
        if isinstance(base, StackPointerBase) and linear_form(expr)[1] < -frame_cap:
            designation |= LH
        else:
            designation |= _of_base(base, ctx)
    return frozenset(designation)


def designate(value: AbsPtr, ctx: FunctionContext, frame_cap: int = 0x10000) -> Designation:
    """
    Map an abstract pointer to the memory classes it may point into.

    Args:
        value: Abstract address of a write.
        ctx: Current function.
        frame_cap: Size of the current frame below ``rsp_0``.

    Returns:
        Non-empty subset of {L, G, H}; TOP maps to all three.
    """
    match value.layer:
        case Layer.C:
            return frozenset().union(*(_of_expr(e, ctx, frame_cap) for e in value.elements))
        case Layer.B:
            return frozenset().union(*(_of_base(b, ctx) for b in value.elements))
        case Layer.S:
            return frozenset().union(*(_of_source(s, ctx) for s in value.elements))
    return ALL_CLASSES
