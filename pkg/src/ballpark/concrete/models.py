from __future__ import annotations

import json

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from ..mir.semantics import to_word

if TYPE_CHECKING:
    from ..models import MemClass

RSP0 = 0x7FF0_0000_0000
STACK_WINDOW = 0x10000
HEAP_BASE = 0x5000_0000_0000
HEAP_STRIDE = 0x10000
SYMBOL_SPAN = 8
DEFAULT_STEP_BUDGET = 1_000_000


class Tainted(Enum):
    """Marker for values produced by partially overlapping accesses."""

    TOP = 'TOP'

    def __repr__(self) -> str:
        return 'TOP'


type CVal = int | Tainted

TAINT = Tainted.TOP


def seeded_word(seed: int, *key: int) -> int:
    """
    Deterministic 64-bit word for a seed and a key path.

    Args:
        seed: Run seed.
        key: Further integers identifying what is being drawn.

    Returns:
        Unsigned 64-bit value.
    """
    rng = np.random.default_rng([to_word(seed), *(to_word(k) for k in key)])
    return int(rng.bit_generator.random_raw())


@dataclass(frozen=True)
class WriteEvent:
    """
    One concrete memory write.

    Attributes:
        addr: Instruction address performing the write.
        write_addr: First byte written.
        size: Bytes written.
        mem_class: L, G or H classification of ``write_addr``.
        depth: Call depth, 0 for the entry function.
        step: Index of the executed node that performed the write.
    """

    addr: int
    write_addr: int
    size: int
    mem_class: MemClass
    depth: int = 0
    step: int = 0

    def to_dict(self) -> dict[str, object]:
        return {
            'addr': f'{self.addr:#x}',
            'write_addr': f'{self.write_addr:#x}',
            'size': self.size,
            'class': str(self.mem_class),
        }


@dataclass(frozen=True)
class VisitEvent:
    """Register file observed when the entry function reaches ``addr``."""

    addr: int
    step: int
    registers: dict[str, CVal]


@dataclass(frozen=True)
class Next:
    writes: tuple[WriteEvent, ...] = ()


@dataclass(frozen=True)
class Exited:
    writes: tuple[WriteEvent, ...] = ()


@dataclass(frozen=True)
class Returned:
    writes: tuple[WriteEvent, ...] = ()


@dataclass(frozen=True)
class Fault:
    reason: str
    writes: tuple[WriteEvent, ...] = ()


type StepOutcome = Next | Exited | Returned | Fault


@dataclass
class ExecutionTrace:
    """
    Everything one concrete run produced.

    Attributes:
        entry: Entry function name.
        seed: Run seed.
        writes: Memory writes in execution order.
        visits: Entry-function visits with register snapshots, when recorded.
        initial_registers: Register file at entry.
        allocations: (step, call site, address) for each allocator call.
        status: ``returned``, ``exited``, ``fault`` or ``budget``.
        reason: Fault reason or budget diagnostic.
        steps: Instructions executed.
    """

    entry: str
    seed: int
    writes: list[WriteEvent] = field(default_factory=list)
    visits: list[VisitEvent] = field(default_factory=list)
    initial_registers: dict[str, int] = field(default_factory=dict)
    allocations: list[tuple[int, int, int]] = field(default_factory=list)
    status: str = 'running'
    reason: str | None = None
    steps: int = 0

    @property
    def faulted(self) -> bool:
        return self.status in ('fault', 'budget')

    def top_level_writes(self) -> list[WriteEvent]:
        return [w for w in self.writes if w.depth == 0]

    def allocation_at(self, site: int, step: int) -> int | None:
        """Address most recently returned by the allocator at ``site`` before ``step``."""
        latest = None
        for when, where, addr in self.allocations:
            if where == site and when <= step:
                latest = addr
        return latest

    def to_jsonl(self) -> str:
        return ''.join(json.dumps(w.to_dict()) + '\n' for w in self.writes)
