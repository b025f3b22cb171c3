from __future__ import annotations

from ..models import render_designation
from .models import (
    AddrExpr,
    AllocatorModel,
    Call,
    CJmp,
    Exit,
    ExitModel,
    ExternModel,
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
    Terminator,
)


def render_addr_expr(addr: AddrExpr) -> str:
    parts = [reg if scale == 1 else f'{reg}*{scale:#x}' for scale, reg in addr.terms]
    disp = addr.displacement
    if not parts:
        return f'-{-disp:#x}' if disp < 0 else f'{disp:#x}'
    text = ' + '.join(parts)
    if disp > 0:
        text += f' + {disp:#x}'
    elif disp < 0:
        text += f' - {-disp:#x}'
    return text


def render_operand(operand: Operand) -> str:
    match operand:
        case Immediate(value):
            return f'{value:#x}'
        case Reg(name) | Flag(name):
            return name
        case Mem(addr, size):
            return f'[{render_addr_expr(addr)}, {size:#x}]'
    raise TypeError(f'not an operand: {operand!r}')


def render_instruction(ins: MicroInstruction) -> str:
    if ins.op is Operation.MOV:
        (src,) = ins.ins
        rhs = f'load {render_operand(src)}' if isinstance(src, Mem) else render_operand(src)
    else:
        rhs = f'{ins.op}({", ".join(render_operand(arg) for arg in ins.ins)})'
    if isinstance(ins.dst, Mem):
        return f'store {render_operand(ins.dst)} := {rhs}'
    return f'{render_operand(ins.dst)} := {rhs}'


def render_terminator(term: Terminator) -> str:
    match term:
        case Jmp(target):
            return f'jmp {target:#x}'
        case CJmp(flag, then, orelse):
            return f'cjmp {flag}, {then:#x}, {orelse:#x}'
        case Call(target, ret):
            callee = target if isinstance(target, str) else f'{target:#x}'
            return f'call {callee}' if ret is None else f'call {callee} -> {ret:#x}'
        case ICall(operand, ret):
            return f'icall {render_operand(operand)} -> {ret:#x}'
        case IJmp(operand):
            return f'ijmp {render_operand(operand)}'
        case Ret():
            return 'ret'
        case Exit():
            return 'exit'
    raise TypeError(f'not a terminator: {term!r}')


def _render_extern(name: str, model: ExternModel) -> str:
    match model:
        case AllocatorModel():
            return f'extern {name} alloc'
        case PureReturnModel():
            return f'extern {name} pure'
        case ExitModel():
            return f'extern {name} exit'
        case HavocModel(clobbers, may_write, args):
            text = f'extern {name} havoc clobber={",".join(clobbers) or "none"}'
            text += f' write={render_designation(may_write).strip("{}") or "none"}'
            if args:
                text += f' args={",".join(args)}'
            return text
    raise TypeError(f'not an extern model: {model!r}')


def render_program(program: Program) -> str:
    """
    Render a Program back to IR text accepted by ``parse_program``.

    Args:
        program: Program to render.

    Returns:
        Source text with headers first and one instruction per line.
    """
    lines: list[str] = []
    lines.extend(f'section {s.name} {s.lo:#x} {s.hi:#x}' for s in program.sections)
    lines.extend(f'symbol {addr:#x} {name}' for addr, name in program.symbols.items())
    lines.extend(_render_extern(name, model) for name, model in program.externs.items())
    lines.extend(f'func {name} @ {addr:#x}' for name, addr in program.entries.items())
    for addr, node in program.nodes.items():
        body = [render_instruction(ins) for ins in node.instructions]
        body.append(render_terminator(node.terminator))
        lines.append(f'{addr:#x}: ' + ' ; '.join(body))
    return '\n'.join(lines) + '\n'
