from __future__ import annotations

import logging

from dataclasses import dataclass, field

from ..domains.contract import AbsRegion
from ..domains.pointers import PointerDomain
from ..domains.values import AbsPtr
from ..mir.models import (
    ALIASES_32,
    RETURN_REGISTER,
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
    Operation,
    Program,
    PureReturnModel,
    Reg,
    Ret,
    parent_register,
)
from ..utils.config import AnalysisConfig
from .models import AbsState, StepEffects, WriteEffect, describe
from .state import abs_read, abs_write, return_slot_verdict

logger = logging.getLogger(__name__)


@dataclass
class Machine:
    """
    Everything a step needs besides the state.

    Attributes:
        program: Program being analyzed.
        domain: Pointer domain of the analyzed function.
        config: Analysis settings.
    """

    program: Program
    domain: PointerDomain
    config: AnalysisConfig = field(default_factory=AnalysisConfig)

    @property
    def strict(self) -> bool:
        return self.config.strict

    def read(self, state: AbsState, region: AbsRegion[AbsPtr]) -> tuple[AbsPtr, AbsState]:
        return abs_read(self.domain, state, region, strict=self.strict)

    def write(
        self,
        state: AbsState,
        region: AbsRegion[AbsPtr],
        value: AbsPtr,
        addr: int,
        call: str | None = None,
    ) -> tuple[AbsState, WriteEffect]:
        after = abs_write(self.domain, state, region, value, addr=addr, call=call, strict=self.strict)
        rendered = describe(region)
        assumed = any(a.addr == addr and a.region == rendered and a.call == call for a in after.assumptions)
        effect = WriteEffect(
            addr=addr,
            region=region,
            value=value,
            call=call,
            assumed=assumed,
            return_slot=return_slot_verdict(self.domain, region),
        )
        return after, effect


def _register(machine: Machine, state: AbsState, name: str) -> AbsPtr:
    value = state.registers[parent_register(name)]
    if name in ALIASES_32:
        return machine.domain.asem(Operation.ZEXT, [value, machine.domain.immediate(32)])
    return value


def address(machine: Machine, state: AbsState, addr: AddrExpr) -> AbsPtr:
    """Abstract value of an address expression, fitted to the domain."""
    domain = machine.domain
    total: AbsPtr | None = None
    for scale, name in addr.terms:
        term = _register(machine, state, name)
        if scale != 1:
            term = domain.asem(Operation.MUL, [term, domain.immediate(scale)])
        total = term if total is None else domain.asem(Operation.ADD, [total, term])
    if total is None:
        return domain.fit(domain.immediate(addr.displacement))
    if addr.displacement > 0:
        total = domain.asem(Operation.ADD, [total, domain.immediate(addr.displacement)])
    elif addr.displacement < 0:
        total = domain.asem(Operation.SUB, [total, domain.immediate(-addr.displacement)])
    return domain.fit(total)


def _input(machine: Machine, state: AbsState, operand: Operand, as_literal: bool) -> tuple[AbsPtr, AbsState]:
    match operand:
        case Immediate(value):
            return (machine.domain.literal(value) if as_literal else machine.domain.immediate(value)), state
        case Reg(name):
            return _register(machine, state, name), state
        case Flag(name):
            return state.flags[name], state
        case Mem(addr, size):
            return machine.read(state, AbsRegion(address(machine, state, addr), size))
    raise TypeError(f'not an operand: {operand!r}')


def _execute(machine: Machine, state: AbsState, instruction: MicroInstruction, at: int, effects: StepEffects) -> AbsState:
    literal = instruction.op is Operation.MOV
    args = []
    for operand in instruction.ins:
        value, state = _input(machine, state, operand, literal)
        args.append(value)
    result = machine.domain.asem(instruction.op, args)

    match instruction.dst:
        case Reg(name):
            if name in ALIASES_32:
                result = machine.domain.asem(Operation.ZEXT, [result, machine.domain.immediate(32)])
            return state.with_register(parent_register(name), result)
        case Flag(name):
            return state.with_flag(name, result)
        case Mem(addr, size):
            region = AbsRegion(address(machine, state, addr), size)
            state, effect = machine.write(state, region, result, at)
            effects.writes.append(effect)
            effects.assumptions |= state.assumptions
            return state
    raise TypeError(f'not a destination: {instruction.dst!r}')


def _havoc(
    machine: Machine,
    state: AbsState,
    model: HavocModel,
    at: int,
    call: str,
    effects: StepEffects,
) -> AbsState:
    domain = machine.domain
    for arg in model.args:
        region = AbsRegion(state.registers[arg], None)
        state, effect = machine.write(state, region, domain.top, at, call)
        effects.writes.append(effect)
        effects.assumptions |= state.assumptions
    if model.may_write:
        memory = {
            region: domain.top if domain.designate(region.addr) & model.may_write else value
            for region, value in state.memory.items()
        }
        state = state.with_memory(memory)
    registers = dict(state.registers)
    for name in model.clobbers:
        registers[name] = domain.top
    return AbsState(registers, state.flags, state.memory, state.assumptions, state.havocked | model.may_write)


def _internal_call(machine: Machine) -> HavocModel:
    return HavocModel(clobbers=tuple(machine.config.caller_saved), may_write=machine.config.may_write)


def resolve_indirect(machine: Machine, state: AbsState, target: Operand) -> frozenset[int] | None:
    """
    Code addresses an indirect transfer may reach.

    Returns:
        The targets when the operand holds only known code addresses,
        otherwise None.
    """
    value, _ = _input(machine, state, target, as_literal=False)
    return machine.domain.resolve_targets(value)


def run_instructions(
    machine: Machine,
    state: AbsState,
    addr: int,
    effects: StepEffects | None = None,
) -> AbsState:
    """State after the micro-instructions of the node at ``addr``, before its terminator."""
    effects = effects if effects is not None else StepEffects()
    for instruction in machine.program.node(addr).instructions:
        state = _execute(machine, state, instruction, addr, effects)
    return state


def abs_step(machine: Machine, state: AbsState, addr: int) -> StepEffects:
    """
    Execute the node at ``addr`` abstractly.

    Args:
        machine: Program, domain and settings.
        state: State before the node.
        addr: Node address.

    Returns:
        StepEffects with successor states, writes and control-flow facts.
    """
    node = machine.program.node(addr)
    effects = StepEffects()
    state = run_instructions(machine, state, addr, effects)

    match node.terminator:
        case Jmp(target):
            effects.successors.append((target, state))
        case CJmp(_, then, orelse):
            effects.successors.append((then, state))
            if orelse != then:
                effects.successors.append((orelse, state))
        case Call(str() as name, ret):
            match machine.program.externs[name]:
                case ExitModel():
                    effects.exited = True
                    return effects
                case AllocatorModel():
                    state = state.with_register(RETURN_REGISTER, machine.domain.alloc_pointer(addr))
                case PureReturnModel():
                    state = state.with_register(RETURN_REGISTER, machine.domain.fun_return(name))
                case HavocModel() as model:
                    state = _havoc(machine, state, model, addr, name, effects)
            if ret is not None:
                effects.successors.append((ret, state))
        case Call(int() as callee, ret):
            state = _havoc(machine, state, _internal_call(machine), addr, f'{callee:#x}', effects)
            effects.successors.append((ret, state))
        case ICall(operand, ret):
            targets = resolve_indirect(machine, state, operand)
            if targets is None:
                effects.unresolved = True
                logger.debug('Unresolved indirect call: addr=%#x', addr)
                return effects
            effects.targets = targets
            state = _havoc(machine, state, _internal_call(machine), addr, 'indirect', effects)
            effects.successors.append((ret, state))
        case IJmp(operand):
            targets = resolve_indirect(machine, state, operand)
            if targets is None:
                effects.unresolved = True
                logger.debug('Unresolved indirect jump: addr=%#x', addr)
                return effects
            effects.targets = targets
            effects.successors.extend((target, state) for target in sorted(targets))
        case Ret():
            effects.returned = state
        case Exit():
            effects.exited = True
    return effects
