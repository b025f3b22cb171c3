from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any

from ..domains.contract import AbsRegion, SepVerdict
from ..domains.values import AbsPtr, Layer
from ..mir.models import FLAGS, REGISTERS_64
from ..models import MemClass
from ..symbolic.expr import render

if TYPE_CHECKING:
    from ..domains.pointers import PointerDomain

type Memory = dict[AbsRegion[AbsPtr], AbsPtr]


def describe(region: AbsRegion[AbsPtr]) -> str:
    """Region text for messages: a single constant computation is shown bare."""
    size = '?' if region.size is None else region.size
    addr = region.addr
    if addr.layer is Layer.C and len(addr.elements) == 1:
        (expr,) = addr.elements
        return f'[{render(expr)}, {size}]'
    return f'[{addr}, {size}]'


@dataclass(frozen=True)
class Assumption:
    """
    A desirable separation the analysis relied on.

    Attributes:
        addr: Instruction address of the write.
        region: Rendered written region.
        other: Rendered region it was assumed not to overlap.
        call: Extern whose effect performed the write, if any.
    """

    addr: int
    region: str
    other: str
    call: str | None = None

    def message(self) -> str:
        cause = f' caused by function call {self.call}' if self.call else ''
        return f'@{self.addr:#x}: write to {self.region}{cause} was assumed not to overlap with {self.other}'

    def to_dict(self) -> dict[str, Any]:
        return {
            'addr': f'{self.addr:#x}',
            'region_a': self.region,
            'region_b': self.other,
            'call': self.call,
            'message': self.message(),
        }


@dataclass(frozen=True)
class AbsState:
    """
    Abstract machine state.

    The mappings are never mutated after construction; every operation
    returns a new state.

    Attributes:
        registers: Value of every 64-bit register.
        flags: Value of every flag.
        memory: Pairwise separate regions and their contents.
        assumptions: Desirable separations relied on to reach this state.
        havocked: Memory classes an opaque call may have written; untracked
            regions designated into them no longer hold their initial content.
    """

    registers: dict[str, AbsPtr]
    flags: dict[str, AbsPtr]
    memory: Memory = field(default_factory=dict)
    assumptions: frozenset[Assumption] = frozenset()
    havocked: frozenset[MemClass] = frozenset()

    def with_register(self, name: str, value: AbsPtr) -> AbsState:
        return replace(self, registers={**self.registers, name: value})

    def with_flag(self, name: str, value: AbsPtr) -> AbsState:
        return replace(self, flags={**self.flags, name: value})

    def with_memory(self, memory: Memory, assumptions: frozenset[Assumption] = frozenset()) -> AbsState:
        return replace(self, memory=memory, assumptions=self.assumptions | assumptions)

    def lookup(self, region: AbsRegion[AbsPtr]) -> AbsPtr | None:
        return self.memory.get(region)

    def render_lines(self) -> list[str]:
        """Canonical rendering: registers and flags in fixed order, regions sorted."""
        lines = [f'{name} = {self.registers[name]}' for name in REGISTERS_64]
        lines += [f'{name} = {self.flags[name]}' for name in FLAGS]
        lines += sorted(f'{region} = {value}' for region, value in self.memory.items())
        if self.havocked:
            lines.append('havocked = {' + ','.join(c.value for c in sorted(self.havocked)) + '}')
        return lines

    def canonical(self) -> str:
        return '\n'.join(self.render_lines())

    def to_dict(self) -> dict[str, Any]:
        return {
            'registers': {name: str(self.registers[name]) for name in REGISTERS_64},
            'flags': {name: str(self.flags[name]) for name in FLAGS},
            'memory': {str(region): str(value) for region, value in sorted(self.memory.items(), key=lambda kv: str(kv[0]))},
            'havocked': [c.value for c in sorted(self.havocked)],
        }


@dataclass(frozen=True)
class WriteEffect:
    """
    One abstract memory write performed by a step.

    Attributes:
        addr: Instruction address.
        region: Written region.
        value: Written value.
        call: Extern name for writes performed by a call.
        assumed: Whether a desirable separation was relied on.
        return_slot: Separation verdict against the return-address slot.
    """

    addr: int
    region: AbsRegion[AbsPtr]
    value: AbsPtr
    call: str | None = None
    assumed: bool = False
    return_slot: SepVerdict = SepVerdict.NECESSARY


@dataclass
class StepEffects:
    """
    Outcome of executing one node abstractly.

    Attributes:
        successors: Successor addresses with their states.
        writes: Memory writes performed.
        returned: State after the node when it returns from the function.
        exited: Whether the node ends the program.
        unresolved: Whether an indirect transfer could not be resolved.
        targets: Resolved targets of an indirect transfer.
        assumptions: Desirable separations relied on by the writes.
    """

    successors: list[tuple[int, AbsState]] = field(default_factory=list)
    writes: list[WriteEffect] = field(default_factory=list)
    returned: AbsState | None = None
    exited: bool = False
    unresolved: bool = False
    targets: frozenset[int] | None = None
    assumptions: frozenset[Assumption] = frozenset()


@dataclass
class AnalysisResult:
    """
    Fixpoint of one function.

    Attributes:
        entry: Analyzed function name.
        entry_addr: Its entry address.
        invariants: Invariant state at the start of every reached address.
        post: Join of all states reaching a return, or None.
        unresolved: Addresses of indirect transfers that could not be resolved.
        assumptions: Desirable separations relied on, in address order.
        resolved_edges: Indirect transfer address to resolved targets.
        writes: Every abstract write, in address order.
        diagnostics: Non-fatal problems such as an exhausted budget.
        visits: State visits performed.
        domain: Domain the function was analyzed with.
    """

    entry: str
    entry_addr: int
    domain: PointerDomain
    invariants: dict[int, AbsState] = field(default_factory=dict)
    post: AbsState | None = None
    unresolved: set[int] = field(default_factory=set)
    assumptions: list[Assumption] = field(default_factory=list)
    resolved_edges: dict[int, frozenset[int]] = field(default_factory=dict)
    writes: list[WriteEffect] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    visits: int = 0

    @property
    def complete(self) -> bool:
        return not self.diagnostics

    def to_dict(self) -> dict[str, Any]:
        return {
            'entry': self.entry,
            'invariants': {f'{addr:#x}': self.invariants[addr].to_dict() for addr in sorted(self.invariants)},
            'post': None if self.post is None else self.post.to_dict(),
            'unresolved': [f'{addr:#x}' for addr in sorted(self.unresolved)],
            'assumptions': [a.to_dict() for a in self.assumptions],
            'edges': {
                f'{addr:#x}': [f'{t:#x}' for t in sorted(targets)] for addr, targets in sorted(self.resolved_edges.items())
            },
            'diagnostics': list(self.diagnostics),
        }
