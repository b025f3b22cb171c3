"""Executable concretization: does a concrete computation belong to an abstract value."""

from __future__ import annotations

from collections.abc import Iterator

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
from ..symbolic.expr import RSP0, Alloc, App, Const, FunRet, Imm, SymExpr, leaves, linear_form, normalize
from .values import AbsPtr, Layer


def is_anchored(expr: SymExpr, base: Base, ctx: FunctionContext) -> bool:
    """
    True when ``expr`` is computed as an offset from ``base``.

    Stack and allocation anchors need a unit coefficient after
    normalization. Global and Symbol anchors need some subterm whose
    displacement lies in the base's section or equals the symbol address.
    """
    match base:
        case StackPointerBase():
            return linear_form(expr)[0].get(RSP0) == 1
        case AllocBase(site):
            return linear_form(expr)[0].get(Alloc(site)) == 1
        case GlobalBase(addr):
            section = ctx.section_of(addr)
            return section is not None and any(ctx.section_of(linear_form(sub)[1]) == section for sub in subterms(expr))
        case SymbolBase(name):
            return any(ctx.symbol_at(linear_form(sub)[1]) == name for sub in subterms(expr))
    return False


def subterms(expr: SymExpr) -> Iterator[SymExpr]:
    yield expr
    if isinstance(expr, App):
        for arg in expr.args:
            yield from subterms(arg)


def _leaf_names_base(leaf: SymExpr, base: Base, ctx: FunctionContext) -> bool:
    match base, leaf:
        case StackPointerBase(), Const():
            return leaf == RSP0
        case AllocBase(site), Alloc(leaf_site):
            return site == leaf_site
        case GlobalBase(addr), Imm(value):
            section = ctx.section_of(addr)
            return section is not None and ctx.section_of(value) == section
        case SymbolBase(name), Imm(value):
            return ctx.symbol_at(value) == name
    return False


def mentions(expr: SymExpr, source: Source, ctx: FunctionContext) -> bool:
    """True when ``source`` was used to compute ``expr``."""
    match source:
        case ConstantSrc(const):
            return any(leaf == const for leaf in leaves(expr))
        case FunSrc(name):
            return any(isinstance(leaf, FunRet) and leaf.name == name for leaf in leaves(expr))
        case BaseSrc(base):
            return is_anchored(expr, base, ctx) or any(_leaf_names_base(leaf, base, ctx) for leaf in leaves(expr))
    return False


def concretizes(value: AbsPtr, expr: SymExpr, ctx: FunctionContext) -> bool:
    """
    Membership of a concrete computation in an abstract value.

    Args:
        value: Abstract pointer.
        expr: Computation over immediates, entry constants, allocations and
            extern returns; it is not normalized for source mentions.
        ctx: Function context the value was computed in.

    Returns:
        True when ``expr`` is described by ``value``.
    """
    match value.layer:
        case Layer.TOP:
            return True
        case Layer.C:
            return normalize(expr) in value.elements
        case Layer.B:
            return any(is_anchored(expr, base, ctx) for base in value.elements)
        case Layer.S:
            return any(mentions(expr, source, ctx) for source in value.elements)
    return False
