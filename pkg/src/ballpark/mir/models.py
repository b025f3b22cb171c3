from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum

from ..models import Designation, MemClass

REGISTERS_64: tuple[str, ...] = (
    'rax',
    'rbx',
    'rcx',
    'rdx',
    'rsi',
    'rdi',
    'rbp',
    'rsp',
    'r8',
    'r9',
    'r10',
    'r11',
    'r12',
    'r13',
    'r14',
    'r15',
)

ALIASES_32: dict[str, str] = {
    'eax': 'rax',
    'ebx': 'rbx',
    'ecx': 'rcx',
    'edx': 'rdx',
    'esi': 'rsi',
    'edi': 'rdi',
    'ebp': 'rbp',
    'esp': 'rsp',
    **{f'r{n}d': f'r{n}' for n in range(8, 16)},
}

FLAGS: tuple[str, ...] = ('ZF', 'CF', 'SF', 'OF')

STACK_REGISTER = 'rsp'
RETURN_REGISTER = 'rax'
MEMORY_SIZES = frozenset({1, 2, 4, 8})
ADDRESS_SCALES = frozenset({1, 2, 4, 8})

CALLER_SAVED: tuple[str, ...] = ('rax', 'rcx', 'rdx', 'rsi', 'rdi', 'r8', 'r9', 'r10', 'r11')
CALLEE_SAVED: tuple[str, ...] = ('rbx', 'rbp', 'r12', 'r13', 'r14', 'r15')
PARAMETER_REGISTERS: tuple[str, ...] = ('rdi', 'rsi', 'rdx', 'rcx', 'r8', 'r9')


def parent_register(name: str) -> str:
    """
    Map a register name to its 64-bit parent.

    Args:
        name: 64-bit register or 32-bit alias.

    Returns:
        The 64-bit register name.

    Raises:
        ValueError: If the name is not a known register.
    """
    if name in REGISTERS_64:
        return name
    if name in ALIASES_32:
        return ALIASES_32[name]
    raise ValueError(f'unknown register {name!r}')


def is_register(name: str) -> bool:
    return name in REGISTERS_64 or name in ALIASES_32


class Operation(StrEnum):
    ADD = 'add'
    SUB = 'sub'
    MUL = 'mul'
    UDIV = 'udiv'
    AND = 'and'
    OR = 'or'
    XOR = 'xor'
    SHL = 'shl'
    SHR = 'shr'
    SAR = 'sar'
    SEXT = 'sext'
    ZEXT = 'zext'
    MASK = 'mask'
    MOV = 'mov'
    EQ = 'eq'
    ULT = 'ult'
    SLT = 'slt'

    @property
    def arity(self) -> int:
        return 1 if self is Operation.MOV else 2

    @property
    def is_flag_op(self) -> bool:
        return self in FLAG_OPERATIONS

    @property
    def takes_width(self) -> bool:
        """True when the second operand is a bit-width immediate."""
        return self in WIDTH_OPERATIONS


FLAG_OPERATIONS = frozenset({Operation.EQ, Operation.ULT, Operation.SLT})
WIDTH_OPERATIONS = frozenset({Operation.SEXT, Operation.ZEXT, Operation.MASK})
COMMUTATIVE_OPERATIONS = frozenset({Operation.ADD, Operation.MUL, Operation.AND, Operation.OR, Operation.XOR, Operation.EQ})


@dataclass(frozen=True)
class Immediate:
    value: int


@dataclass(frozen=True)
class Reg:
    name: str


@dataclass(frozen=True)
class Flag:
    name: str


@dataclass(frozen=True)
class AddrExpr:
    """
    x86-style address: scaled register terms plus a signed displacement.

    Attributes:
        terms: Pairs of (scale, register name), at most two.
        displacement: Signed byte displacement.
    """

    terms: tuple[tuple[int, str], ...] = ()
    displacement: int = 0


@dataclass(frozen=True)
class Mem:
    addr: AddrExpr
    size: int


type Operand = Immediate | Reg | Flag | Mem


@dataclass(frozen=True)
class MicroInstruction:
    """
    One ``dst := op(ins...)`` step.

    Attributes:
        dst: Destination register, flag or memory operand.
        op: Operation applied to the inputs.
        ins: Ordered input operands.
    """

    dst: Reg | Flag | Mem
    op: Operation
    ins: tuple[Operand, ...]


@dataclass(frozen=True)
class Jmp:
    target: int


@dataclass(frozen=True)
class CJmp:
    flag: str
    then: int
    orelse: int


@dataclass(frozen=True)
class Call:
    """
    Direct call. ``target`` is an extern name or an internal address;
    ``ret`` is None only for calls to exiting externs.
    """

    target: str | int
    ret: int | None


@dataclass(frozen=True)
class ICall:
    operand: Operand
    ret: int


@dataclass(frozen=True)
class IJmp:
    operand: Operand


@dataclass(frozen=True)
class Ret:
    pass


@dataclass(frozen=True)
class Exit:
    pass


type Terminator = Jmp | CJmp | Call | ICall | IJmp | Ret | Exit


@dataclass(frozen=True)
class AllocatorModel:
    pass


@dataclass(frozen=True)
class PureReturnModel:
    pass


@dataclass(frozen=True)
class ExitModel:
    pass


@dataclass(frozen=True)
class HavocModel:
    """
    External call with unknown effects.

    Attributes:
        clobbers: Registers overwritten by the call.
        may_write: Memory classes the call may overwrite.
        args: Pointer parameters written through (8 bytes each).
    """

    clobbers: tuple[str, ...] = CALLER_SAVED
    may_write: Designation = frozenset({MemClass.H, MemClass.G})
    args: tuple[str, ...] = ()


type ExternModel = AllocatorModel | PureReturnModel | HavocModel | ExitModel


@dataclass(frozen=True)
class Section:
    name: str
    lo: int
    hi: int

    def contains(self, addr: int) -> bool:
        return self.lo <= addr < self.hi


@dataclass(frozen=True)
class Node:
    instructions: tuple[MicroInstruction, ...]
    terminator: Terminator


@dataclass(frozen=True)
class Program:
    """
    Parsed micro-IR program.

    Attributes:
        nodes: Instruction address to micro-instructions plus terminator.
        entries: Function name to entry address, in declaration order.
        sections: Data sections, pairwise disjoint, half-open ranges.
        symbols: Symbol address to name.
        externs: External function name to its effect model.
    """

    nodes: dict[int, Node]
    entries: dict[str, int] = field(default_factory=dict)
    sections: tuple[Section, ...] = ()
    symbols: dict[int, str] = field(default_factory=dict)
    externs: dict[str, ExternModel] = field(default_factory=dict)

    def node(self, addr: int) -> Node:
        try:
            return self.nodes[addr]
        except KeyError:
            raise ValueError(f'address {addr:#x} is not in the program') from None

    def entry_addr(self, name: str) -> int:
        try:
            return self.entries[name]
        except KeyError:
            raise ValueError(f'unknown entry {name!r}; declared: {", ".join(self.entries) or "none"}') from None

    def default_entry(self) -> str:
        if 'main' in self.entries:
            return 'main'
        if not self.entries:
            raise ValueError('program declares no functions')
        return next(iter(self.entries))

    def section_of(self, addr: int) -> Section | None:
        for section in self.sections:
            if section.contains(addr):
                return section
        return None

    def is_code(self, addr: int) -> bool:
        return addr in self.nodes
