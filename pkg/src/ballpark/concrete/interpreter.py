from __future__ import annotations

import logging

from dataclasses import dataclass, field

from ..mir.models import (
    ALIASES_32,
    FLAGS,
    REGISTERS_64,
    STACK_REGISTER,
    AddrExpr,
    AllocatorModel,
    Call,
    CJmp,
    Exit,
    ExitModel,
    Flag,
    HavocModel,
    ICall,
    IJmp,
    Immediate,
    Jmp,
    Mem,
    MicroInstruction,
    Operand,
    Program,
    PureReturnModel,
    Reg,
    Ret,
    parent_register,
)
from ..mir.semantics import evaluate, low_bits, to_word
from ..models import MemClass
from .memory import ConcreteMemory
from .models import (
    DEFAULT_STEP_BUDGET,
    HEAP_BASE,
    HEAP_STRIDE,
    RSP0,
    STACK_WINDOW,
    SYMBOL_SPAN,
    TAINT,
    CVal,
    ExecutionTrace,
    Exited,
    Fault,
    Next,
    Returned,
    StepOutcome,
    Tainted,
    VisitEvent,
    WriteEvent,
    seeded_word,
)

logger = logging.getLogger(__name__)

# Key prefixes separating the seeded draws from one another.
_REGISTER_KEY = 0x726567
_FLAG_KEY = 0x666C67
_PURE_KEY = 0x707572
_CLOBBER_KEY = 0x636C62


class ConcreteFault(Exception):
    """Raised inside a step when execution cannot continue soundly."""


@dataclass
class ConcreteState:
    """
    Machine state of one concrete run.

    Attributes:
        rip: Address of the next node to execute.
        registers: 64-bit register file.
        flags: Flag values, 0 or 1.
        memory: Cell memory.
        callstack: Return addresses of pending internal calls.
        alloc_cursor: Next fresh heap address.
        seed: Run seed.
        calls: Extern calls made so far, used to vary seeded returns.
        steps: Nodes executed so far.
    """

    rip: int
    registers: dict[str, CVal]
    flags: dict[str, CVal]
    memory: ConcreteMemory
    callstack: list[int] = field(default_factory=list)
    alloc_cursor: int = HEAP_BASE
    seed: int = 0
    calls: int = 0
    steps: int = 0

    @property
    def depth(self) -> int:
        return len(self.callstack)

    @classmethod
    def initial(cls, program: Program, entry: str, seed: int) -> ConcreteState:
        registers: dict[str, CVal] = {
            name: seeded_word(seed, _REGISTER_KEY, index) for index, name in enumerate(REGISTERS_64)
        }
        registers[STACK_REGISTER] = RSP0
        flags: dict[str, CVal] = {name: seeded_word(seed, _FLAG_KEY, index) & 1 for index, name in enumerate(FLAGS)}
        return cls(
            rip=program.entry_addr(entry),
            registers=registers,
            flags=flags,
            memory=ConcreteMemory(seed=seed),
            seed=seed,
        )


def classify(addr: int, program: Program) -> MemClass:
    """
    Classify a written address.

    Addresses within the stack window below the entry stack pointer are
    local; addresses in a data section or a symbol's slot are global;
    everything else is heap.
    """
    if RSP0 - STACK_WINDOW <= addr <= RSP0:
        return MemClass.L
    if program.section_of(addr) is not None:
        return MemClass.G
    if any(symbol <= addr < symbol + SYMBOL_SPAN for symbol in program.symbols):
        return MemClass.G
    return MemClass.H


def _read_register(state: ConcreteState, name: str) -> CVal:
    value = state.registers[parent_register(name)]
    if name in ALIASES_32 and not isinstance(value, Tainted):
        return low_bits(value, 32)
    return value


def _write_register(state: ConcreteState, name: str, value: CVal) -> None:
    if name in ALIASES_32 and not isinstance(value, Tainted):
        value = low_bits(value, 32)
    state.registers[parent_register(name)] = value


def _address(state: ConcreteState, addr: AddrExpr) -> int:
    total = addr.displacement
    for scale, name in addr.terms:
        value = _read_register(state, name)
        if isinstance(value, Tainted):
            raise ConcreteFault(f'tainted address through {name}')
        total += scale * value
    return to_word(total)


def _read(state: ConcreteState, operand: Operand) -> CVal:
    match operand:
        case Immediate(value):
            return to_word(value)
        case Reg(name):
            return _read_register(state, name)
        case Flag(name):
            return state.flags[name]
        case Mem(addr, size):
            return state.memory.read(_address(state, addr), size)
    raise TypeError(f'not an operand: {operand!r}')


@dataclass
class _Step:
    """Per-step context collecting writes."""

    program: Program
    state: ConcreteState
    addr: int
    writes: list[WriteEvent] = field(default_factory=list)

    def store(self, write_addr: int, size: int, value: CVal, record: bool = True) -> None:
        self.state.memory.write(write_addr, size, value)
        if record:
            self.writes.append(
                WriteEvent(
                    self.addr,
                    write_addr,
                    size,
                    classify(write_addr, self.program),
                    self.state.depth,
                    self.state.steps - 1,
                )
            )

    def execute(self, instruction: MicroInstruction) -> None:
        args = [_read(self.state, operand) for operand in instruction.ins]
        if any(isinstance(arg, Tainted) for arg in args):
            result: CVal = TAINT
        else:
            result = evaluate(instruction.op, [arg for arg in args if isinstance(arg, int)])
        match instruction.dst:
            case Reg(name):
                _write_register(self.state, name, result)
            case Flag(name):
                self.state.flags[name] = result if isinstance(result, Tainted) else result & 1
            case Mem(addr, size):
                self.store(_address(self.state, addr), size, result)

    def push_call(self, target: int, ret: int) -> None:
        rsp = self.state.registers[STACK_REGISTER]
        if isinstance(rsp, Tainted):
            raise ConcreteFault('tainted stack pointer')
        rsp = to_word(rsp - 8)
        self.state.registers[STACK_REGISTER] = rsp
        self.state.memory.write(rsp, 8, ret)
        self.state.callstack.append(ret)
        self.jump(target, 'call')

    def jump(self, target: CVal, kind: str) -> None:
        if isinstance(target, Tainted):
            raise ConcreteFault('tainted control flow')
        if not self.program.is_code(target):
            raise ConcreteFault(f'{kind} to non-code address {target:#x}')
        self.state.rip = target

    def extern(self, name: str, ret: int | None) -> StepOutcome | None:
        state = self.state
        model = self.program.externs[name]
        state.calls += 1
        match model:
            case ExitModel():
                return Exited(tuple(self.writes))
            case AllocatorModel():
                state.registers['rax'] = state.alloc_cursor
                logger.debug('Allocation: site=%#x addr=%#x', self.addr, state.alloc_cursor)
                state.alloc_cursor += HEAP_STRIDE
            case PureReturnModel():
                state.registers['rax'] = seeded_word(state.seed, _PURE_KEY, self.addr, state.calls) & 0xFF
            case HavocModel(clobbers, _, args):
                for arg in args:
                    pointer = _read_register(state, arg)
                    if isinstance(pointer, Tainted):
                        raise ConcreteFault(f'tainted pointer argument {arg} to {name}')
                    self.store(pointer, 8, TAINT)
                for index, register in enumerate(clobbers):
                    _write_register(state, register, seeded_word(state.seed, _CLOBBER_KEY, state.calls, index))
        if ret is None:
            raise ConcreteFault(f'call to {name} has no return address')
        state.rip = ret
        return None

    def ret(self) -> StepOutcome:
        state = self.state
        if not state.callstack:
            return Returned(tuple(self.writes))
        rsp = state.registers[STACK_REGISTER]
        if isinstance(rsp, Tainted):
            raise ConcreteFault('tainted stack pointer')
        target = state.memory.read(rsp, 8)
        state.registers[STACK_REGISTER] = to_word(rsp + 8)
        state.callstack.pop()
        self.jump(target, 'return')
        return Next(tuple(self.writes))


def concrete_step(program: Program, state: ConcreteState) -> StepOutcome:
    """
    Execute the node at ``state.rip``; ``state`` is updated in place.

    Args:
        program: Program being executed.
        state: Current machine state.

    Returns:
        Next, Exited, Returned (from the entry function) or Fault. Every
        outcome carries the memory writes performed by the step.
    """
    node = program.node(state.rip)
    step = _Step(program, state, state.rip)
    state.steps += 1
    try:
        for instruction in node.instructions:
            step.execute(instruction)
        match node.terminator:
            case Jmp(target):
                state.rip = target
            case CJmp(flag, then, orelse):
                value = state.flags[flag]
                if isinstance(value, Tainted):
                    raise ConcreteFault('tainted control flow')
                state.rip = then if value else orelse
            case Call(str() as name, ret):
                outcome = step.extern(name, ret)
                if outcome is not None:
                    return outcome
            case Call(int() as target, ret):
                step.push_call(target, ret)
            case ICall(operand, ret):
                target = _read(state, operand)
                if isinstance(target, Tainted):
                    raise ConcreteFault('tainted control flow')
                step.push_call(target, ret)
            case IJmp(operand):
                step.jump(_read(state, operand), 'jump')
            case Ret():
                return step.ret()
            case Exit():
                return Exited(tuple(step.writes))
    except ConcreteFault as exc:
        return Fault(str(exc), tuple(step.writes))
    return Next(tuple(step.writes))


def run_concrete(
    program: Program,
    entry: str,
    seed: int = 0,
    *,
    step_budget: int = DEFAULT_STEP_BUDGET,
    record_visits: bool = False,
) -> ExecutionTrace:
    """
    Run ``entry`` to completion and record every memory write.

    Args:
        program: Program to execute.
        entry: Declared function name to start from.
        seed: Seed for unconstrained initial state and extern results.
        step_budget: Maximum nodes to execute before giving up.
        record_visits: Also record the register file at every node the
            entry function reaches.

    Returns:
        ExecutionTrace; ``status`` is ``returned``, ``exited``, ``fault`` or
        ``budget``. Identical arguments give identical traces.
    """
    state = ConcreteState.initial(program, entry, seed)
    trace = ExecutionTrace(
        entry=entry,
        seed=seed,
        initial_registers={name: value for name, value in state.registers.items() if isinstance(value, int)},
    )

    while state.steps < step_budget:
        if record_visits and state.depth == 0:
            trace.visits.append(VisitEvent(state.rip, state.steps, dict(state.registers)))
        before = state.alloc_cursor
        addr = state.rip
        outcome = concrete_step(program, state)
        trace.writes.extend(outcome.writes)
        if state.alloc_cursor != before:
            trace.allocations.append((state.steps, addr, before))
        match outcome:
            case Next():
                continue
            case Returned():
                trace.status = 'returned'
            case Exited():
                trace.status = 'exited'
            case Fault(reason):
                trace.status = 'fault'
                trace.reason = reason
                logger.warning('Concrete run faulted: entry=%s seed=%d rip=%#x reason=%s', entry, seed, addr, reason)
        break
    else:
        trace.status = 'budget'
        trace.reason = f'step budget of {step_budget} exhausted'
        logger.warning('Concrete run exceeded budget: entry=%s seed=%d budget=%d', entry, seed, step_budget)

    trace.steps = state.steps
    logger.debug(
        'Concrete run finished: entry=%s seed=%d status=%s steps=%d writes=%d',
        entry,
        seed,
        trace.status,
        trace.steps,
        len(trace.writes),
    )
    return trace
