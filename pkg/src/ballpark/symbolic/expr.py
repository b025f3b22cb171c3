from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass
from functools import lru_cache

from ..mir.models import COMMUTATIVE_OPERATIONS, Operation
from ..mir.semantics import evaluate, to_signed, to_word


@dataclass(frozen=True, slots=True)
class Imm:
    """Immediate, stored as a signed 64-bit value."""

    value: int


@dataclass(frozen=True, slots=True)
class StatePart:
    """Current value of a register or flag."""

    name: str


@dataclass(frozen=True, slots=True)
class Const:
    """Entry-time value of a register or initial memory region, e.g. ``rsp_0``."""

    name: str


@dataclass(frozen=True, slots=True)
class Alloc:
    """Pointer returned by the allocator call at ``site``."""

    site: int


@dataclass(frozen=True, slots=True)
class FunRet:
    """Value returned by extern ``name`` called at ``site``."""

    name: str
    site: int


@dataclass(frozen=True, slots=True)
class App:
    op: Operation
    args: tuple[SymExpr, ...]


@dataclass(frozen=True, slots=True)
class Deref:
    addr: SymExpr
    size: int


type SymExpr = Imm | StatePart | Const | Alloc | FunRet | App | Deref
type Leaf = Const | Alloc | FunRet

RSP0 = Const('rsp')


def imm(value: int) -> Imm:
    return Imm(to_signed(value))


def initial(register: str) -> Const:
    return Const(register)


def render(expr: SymExpr) -> str:
    """
    Canonical text form, e.g. ``rsp_0 - 0x10`` or ``alloc[0x3003] + rdi_0*0x8``.
    """
    match expr:
        case Imm(value):
            return f'-{-value:#x}' if value < 0 else f'{value:#x}'
        case StatePart(name):
            return name
        case Const(name):
            return f'{name}_0'
        case Alloc(site):
            return f'alloc[{site:#x}]'
        case FunRet(name, site):
            return f'{name}@{site:#x}'
        case Deref(addr, size):
            return f'[{render(addr)}, {size}]'
        case App(Operation.ADD, args):
            return _render_sum(args)
        case App(Operation.MUL, (atom, Imm(k))):
            return _render_scaled(atom, k)
        case App(op, args):
            return f'{op}({", ".join(render(arg) for arg in args)})'
    raise TypeError(f'not a symbolic expression: {expr!r}')


def _render_scaled(atom: SymExpr, k: int) -> str:
    text = render(atom)
    if isinstance(atom, App):
        text = f'({text})'
    return f'{text}*{k:#x}' if k >= 0 else f'{text}*-{-k:#x}'


def _render_sum(args: tuple[SymExpr, ...]) -> str:
    pieces: list[str] = []
    for index, arg in enumerate(args):
        negative = False
        match arg:
            case Imm(value) if value < 0:
                negative, body = True, f'{-value:#x}'
            case App(Operation.MUL, (atom, Imm(k))) if k < 0:
                negative = True
                body = render(atom) if k == -1 else _render_scaled(atom, -k)
            case _:
                body = render(arg)
        if index == 0:
            pieces.append(f'-{body}' if negative else body)
        else:
            pieces.append(f' - {body}' if negative else f' + {body}')
    return ''.join(pieces)


def sort_key(expr: SymExpr) -> str:
    return render(expr)


def _linear(expr: SymExpr) -> tuple[dict[SymExpr, int], int]:
    match expr:
        case Imm(value):
            return {}, value
        case App(Operation.ADD, args):
            terms: dict[SymExpr, int] = {}
            disp = 0
            for arg in args:
                sub_terms, sub_disp = _linear(arg)
                disp += sub_disp
                for atom, coef in sub_terms.items():
                    terms[atom] = terms.get(atom, 0) + coef
            return terms, disp
        case App(Operation.SUB, (left, right)):
            lt, ld = _linear(left)
            rt, rd = _linear(right)
            for atom, coef in rt.items():
                lt[atom] = lt.get(atom, 0) - coef
            return lt, ld - rd
        case App(Operation.MUL, (left, right)):
            lt, ld = _linear(left)
            rt, rd = _linear(right)
            if not rt:
                return {atom: coef * rd for atom, coef in lt.items()}, ld * rd
            if not lt:
                return {atom: coef * ld for atom, coef in rt.items()}, ld * rd
        case App(Operation.SHL, (left, right)):
            rt, rd = _linear(right)
            if not rt:
                factor = 1 << (to_word(rd) & 63)
                lt, ld = _linear(left)
                return {atom: coef * factor for atom, coef in lt.items()}, ld * factor

    atom = _atom(expr)
    if isinstance(atom, Imm):
        return {}, atom.value
    return {atom: 1}, 0


def _atom(expr: SymExpr) -> SymExpr:
    match expr:
        case Deref(addr, size):
            return Deref(normalize(addr), size)
        case App(op, args):
            normal = tuple(normalize(arg) for arg in args)
            if all(isinstance(arg, Imm) for arg in normal):
                return imm(evaluate(op, [arg.value for arg in normal]))  # type: ignore[union-attr]
            if op in COMMUTATIVE_OPERATIONS:
                normal = tuple(sorted(normal, key=sort_key))
            return App(op, normal)
    return expr


@lru_cache(maxsize=65536)
def normalize(expr: SymExpr) -> SymExpr:
    """
    Bring an expression into sum normal form.

    Nested additions and subtractions are flattened into a sorted list of
    scaled atoms plus one displacement. Multiplication and left shift by a
    constant distribute. Operations on immediates only are folded. Any other
    operation is kept as an atom with normalized arguments.

    Args:
        expr: Expression to normalize.

    Returns:
        Canonical expression; equal values compare equal.
    """
    terms, disp = _linear(expr)
    return _build(terms, to_signed(disp))


def _build(terms: Mapping[SymExpr, int], disp: int) -> SymExpr:
    parts: list[SymExpr] = []
    for atom in sorted(terms, key=sort_key):
        coef = to_signed(terms[atom])
        if coef == 0:
            continue
        parts.append(atom if coef == 1 else App(Operation.MUL, (atom, Imm(coef))))
    if not parts:
        return Imm(disp)
    if len(parts) == 1 and disp == 0:
        return parts[0]
    if disp != 0:
        parts.append(Imm(disp))
    return App(Operation.ADD, tuple(parts))


def linear_form(expr: SymExpr) -> tuple[dict[SymExpr, int], int]:
    """
    Split an expression into atoms with coefficients and a displacement.

    Args:
        expr: Any expression.

    Returns:
        Pair of (atom -> non-zero signed coefficient, signed displacement).
    """
    terms, disp = _linear(normalize(expr))
    cleaned = {atom: to_signed(coef) for atom, coef in terms.items() if to_signed(coef) != 0}
    return cleaned, to_signed(disp)


def apply(op: Operation, args: tuple[SymExpr, ...] | list[SymExpr]) -> SymExpr:
    if op is Operation.MOV:
        return normalize(args[0])
    return normalize(App(op, tuple(args)))


def leaves(expr: SymExpr) -> Iterator[SymExpr]:
    match expr:
        case App(_, args):
            for arg in args:
                yield from leaves(arg)
        case Deref(addr, _):
            yield expr
            yield from leaves(addr)
        case _:
            yield expr


def is_constant_computation(expr: SymExpr) -> bool:
    """True iff every leaf is an immediate, an entry constant or an allocation."""
    return all(isinstance(leaf, Imm | Const | Alloc) for leaf in leaves(expr))


def evaluate_expr(expr: SymExpr, valuation: Mapping[Leaf, int]) -> int | None:
    """
    Evaluate an expression to a concrete word.

    Args:
        expr: Expression without state parts or dereferences.
        valuation: Concrete values for constants, allocations and returns.

    Returns:
        Unsigned 64-bit value, or None when a leaf has no value.
    """
    match expr:
        case Imm(value):
            return to_word(value)
        case Const() | Alloc() | FunRet():
            value = valuation.get(expr)
            return None if value is None else to_word(value)
        case App(op, args):
            values = [evaluate_expr(arg, valuation) for arg in args]
            if any(value is None for value in values):
                return None
            if op is Operation.ADD:
                return to_word(sum(values))  # type: ignore[arg-type]
            try:
                return evaluate(op, values)  # type: ignore[arg-type]
            except ValueError:
                return None
    return None
