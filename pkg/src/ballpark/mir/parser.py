from __future__ import annotations

import logging
import re

from typing import TYPE_CHECKING

from ..models import parse_designation
from .models import (
    ADDRESS_SCALES,
    FLAGS,
    MEMORY_SIZES,
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
    Node,
    Operand,
    Operation,
    Program,
    PureReturnModel,
    Reg,
    Ret,
    Section,
    Terminator,
    is_register,
    parent_register,
)
from .semantics import to_signed, to_word

if TYPE_CHECKING:
    from pathlib import Path

logger = logging.getLogger(__name__)

_NUMBER_RE = re.compile(r'^-?(?:0x)?[0-9a-fA-F]+$')
_NAME_RE = re.compile(r'^[A-Za-z_.$][\w.$@]*$')
_CALL_RE = re.compile(r'^(?P<target>\S+)(?:\s*->\s*(?P<ret>\S+))?$')
_OP_RE = re.compile(r'^(?P<op>[a-z]+)\s*\((?P<args>.*)\)$')


class ParseError(ValueError):
    """
    Raised when IR text does not conform to the grammar.

    Attributes:
        line: 1-based line number.
        column: 1-based column of the offending token.
        message: Human-readable reason.
    """

    def __init__(self, line: int, column: int, message: str) -> None:
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f'line {line}, col {column}: {message}')


class _Line:
    """One source line with position-aware error reporting."""

    def __init__(self, number: int, raw: str) -> None:
        self.number = number
        self.raw = raw

    def error(self, message: str, token: str | None = None) -> ParseError:
        column = 1
        if token:
            found = self.raw.find(token.strip())
            if found >= 0:
                column = found + 1
        return ParseError(self.number, column, message)


def _parse_number(text: str, line: _Line) -> int:
    token = text.strip()
    if not _NUMBER_RE.match(token):
        raise line.error(f'expected a hex number, got {token!r}', token)
    negative = token.startswith('-')
    digits = token.lstrip('-')
    value = int(digits, 16)
    return -value if negative else value


def _split_top_level(text: str, sep: str = ',') -> list[str]:
    parts: list[str] = []
    depth = 0
    current: list[str] = []
    for char in text:
        if char in '([':
            depth += 1
        elif char in ')]':
            depth -= 1
        if char == sep and depth == 0:
            parts.append(''.join(current))
            current = []
        else:
            current.append(char)
    parts.append(''.join(current))
    return [part.strip() for part in parts]


def _parse_addr_expr(text: str, line: _Line) -> AddrExpr:
    tokens = [tok for tok in re.split(r'\s*([+-])\s*', text.strip()) if tok != '']
    if not tokens:
        raise line.error('empty address expression', text)

    terms: list[tuple[int, str]] = []
    displacement = 0
    sign = 1
    expect_term = True
    for token in tokens:
        if token in ('+', '-'):
            if token == '-':
                sign = -sign
            expect_term = True
            continue
        if not expect_term:
            raise line.error(f'unexpected token {token!r} in address', token)
        expect_term = False

        if '*' in token:
            left, right = (part.strip() for part in token.split('*', 1))
            reg, scale_text = (left, right) if is_register(left) else (right, left)
            if not is_register(reg):
                raise line.error(f'unknown register {reg!r}', reg)
            scale = _parse_number(scale_text, line)
            if scale not in ADDRESS_SCALES:
                raise line.error(f'address scale must be one of 1, 2, 4, 8, got {scale:#x}', token)
            if sign < 0:
                raise line.error('register terms cannot be subtracted in an address', token)
            terms.append((scale, reg))
        elif is_register(token):
            if sign < 0:
                raise line.error('register terms cannot be subtracted in an address', token)
            terms.append((1, token))
        elif _NUMBER_RE.match(token):
            displacement += sign * _parse_number(token, line)
        else:
            raise line.error(f'unknown register {token!r}', token)
        sign = 1

    if expect_term:
        raise line.error('address expression ends with an operator', text)
    if len(terms) > 2:
        raise line.error('at most two register terms are allowed in an address', text)
    return AddrExpr(terms=tuple(terms), displacement=to_signed(to_word(displacement)))


def _parse_mem(text: str, line: _Line) -> Mem:
    inner = text.strip()
    if not (inner.startswith('[') and inner.endswith(']')):
        raise line.error(f'expected a memory operand, got {inner!r}', inner)
    parts = _split_top_level(inner[1:-1])
    if len(parts) != 2:
        raise line.error('memory operand must be written as [address, size]', inner)
    size = _parse_number(parts[1], line)
    if size not in MEMORY_SIZES:
        raise line.error(f'memory size must be one of 1, 2, 4, 8, got {size:#x}', parts[1])
    return Mem(addr=_parse_addr_expr(parts[0], line), size=size)


def _parse_operand(text: str, line: _Line) -> Operand:
    token = text.strip()
    if token.startswith('load '):
        token = token[len('load ') :].strip()
    if token.startswith('['):
        return _parse_mem(token, line)
    if is_register(token):
        return Reg(token)
    if token in FLAGS:
        return Flag(token)
    if _NUMBER_RE.match(token):
        return Immediate(to_word(_parse_number(token, line)))
    if _NAME_RE.match(token):
        raise line.error(f'unknown register {token!r}', token)
    raise line.error(f'cannot parse operand {token!r}', token)


def _parse_destination(text: str, line: _Line) -> Reg | Flag | Mem:
    token = text.strip()
    if token.startswith('store '):
        token = token[len('store ') :].strip()
    operand = _parse_operand(token, line)
    if isinstance(operand, Immediate):
        raise line.error('an immediate cannot be a destination', token)
    return operand


def _parse_micro(text: str, line: _Line) -> MicroInstruction:
    if ':=' not in text:
        raise line.error(f'expected `dst := ...`, got {text.strip()!r}', text)
    lhs, rhs = (part.strip() for part in text.split(':=', 1))
    dst = _parse_destination(lhs, line)

    match = _OP_RE.match(rhs)
    if match and match.group('op') in Operation._value2member_map_:
        op = Operation(match.group('op'))
        args = [arg for arg in _split_top_level(match.group('args')) if arg]
        ins = tuple(_parse_operand(arg, line) for arg in args)
    elif match:
        raise line.error(f'unknown operation {match.group("op")!r}', match.group('op'))
    else:
        op = Operation.MOV
        ins = (_parse_operand(rhs, line),)

    if len(ins) != op.arity:
        raise line.error(f'{op} expects {op.arity} operand(s), got {len(ins)}', rhs)
    if op.takes_width:
        width = ins[1]
        if not isinstance(width, Immediate) or not 1 <= width.value <= 64:
            raise line.error(f'{op} takes a bit width in 1..0x40 as its second operand', rhs)
    return MicroInstruction(dst=dst, op=op, ins=ins)


def _parse_target(text: str, line: _Line) -> int:
    return to_word(_parse_number(text, line))


def _parse_terminator(text: str, line: _Line) -> Terminator:
    stripped = text.strip()
    keyword, _, rest = stripped.partition(' ')
    rest = rest.strip()

    match keyword:
        case 'ret':
            return Ret()
        case 'exit':
            return Exit()
        case 'jmp':
            return Jmp(_parse_target(rest, line))
        case 'cjmp':
            parts = _split_top_level(rest)
            if len(parts) != 3:
                raise line.error('cjmp expects FLAG, THEN, ELSE', stripped)
            if parts[0] not in FLAGS:
                raise line.error(f'unknown flag {parts[0]!r}', parts[0])
            return CJmp(parts[0], _parse_target(parts[1], line), _parse_target(parts[2], line))
        case 'call':
            call = _CALL_RE.match(rest)
            if not call:
                raise line.error('call expects TARGET [-> RETURN]', stripped)
            target_text = call.group('target')
            target: str | int
            if _NUMBER_RE.match(target_text) and target_text.startswith(('0x', '-')):
                target = _parse_target(target_text, line)
            elif _NAME_RE.match(target_text):
                target = target_text
            else:
                raise line.error(f'bad call target {target_text!r}', target_text)
            ret = _parse_target(call.group('ret'), line) if call.group('ret') else None
            return Call(target, ret)
        case 'icall':
            operand_text, arrow, ret_text = rest.partition('->')
            if not arrow:
                raise line.error('icall expects OPERAND -> RETURN', stripped)
            return ICall(_parse_operand(operand_text, line), _parse_target(ret_text, line))
        case 'ijmp':
            return IJmp(_parse_operand(rest, line))

    raise line.error(f'expected a terminator, got {stripped!r}', stripped)


def _parse_extern(parts: list[str], line: _Line) -> tuple[str, ExternModel]:
    if len(parts) < 3:
        raise line.error('extern expects NAME MODEL [options]')
    name, kind, options = parts[1], parts[2], parts[3:]
    if kind in ('alloc', 'pure', 'exit') and options:
        raise line.error(f'extern model {kind!r} takes no options', options[0])
    match kind:
        case 'alloc':
            return name, AllocatorModel()
        case 'pure':
            return name, PureReturnModel()
        case 'exit':
            return name, ExitModel()
        case 'havoc':
            model = HavocModel()
            for option in options:
                key, eq, value = option.partition('=')
                if not eq:
                    raise line.error(f'havoc option must be key=value, got {option!r}', option)
                values = tuple(v for v in value.split(',') if v and v != 'none')
                for reg in values if key in ('clobber', 'args') else ():
                    if not is_register(reg):
                        raise line.error(f'unknown register {reg!r}', reg)
                match key:
                    case 'clobber':
                        model = HavocModel(tuple(parent_register(r) for r in values), model.may_write, model.args)
                    case 'args':
                        model = HavocModel(model.clobbers, model.may_write, tuple(parent_register(r) for r in values))
                    case 'write':
                        try:
                            may_write = parse_designation(','.join(values))
                        except ValueError as exc:
                            raise line.error(str(exc), value) from exc
                        model = HavocModel(model.clobbers, may_write, model.args)
                    case _:
                        raise line.error(f'unknown havoc option {key!r}', key)
            return name, model
    raise line.error(f'unknown extern model {kind!r}; expected alloc, pure, exit or havoc', kind)


class _ProgramBuilder:
    def __init__(self) -> None:
        self.nodes: dict[int, Node] = {}
        self.node_lines: dict[int, _Line] = {}
        self.entries: dict[str, int] = {}
        self.entry_lines: dict[str, _Line] = {}
        self.sections: list[Section] = []
        self.symbols: dict[int, str] = {}
        self.externs: dict[str, ExternModel] = {}

    def statement(self, line: _Line, text: str) -> None:
        parts = text.split()
        head = parts[0]
        if head == 'section':
            self._section(parts, line)
        elif head == 'extern':
            name, model = _parse_extern(parts, line)
            if name in self.externs:
                raise line.error(f'duplicate extern {name!r}', name)
            self.externs[name] = model
        elif head == 'symbol':
            if len(parts) != 3:
                raise line.error('symbol expects ADDR NAME')
            self.symbols[to_word(_parse_number(parts[1], line))] = parts[2]
        elif head == 'func':
            self._func(text, line)
        elif head in ('{', '}'):
            return
        elif ':' in head or re.match(r'^\S+:', text):
            self._instruction(text, line)
        else:
            raise line.error(f'unrecognized statement {head!r}', head)

    def _section(self, parts: list[str], line: _Line) -> None:
        if len(parts) != 4:
            raise line.error('section expects NAME LO HI')
        lo = to_word(_parse_number(parts[2], line))
        hi = to_word(_parse_number(parts[3], line))
        if hi <= lo:
            raise line.error(f'section {parts[1]} is empty or inverted', parts[3])
        section = Section(parts[1], lo, hi)
        for other in self.sections:
            if section.lo < other.hi and other.lo < section.hi:
                raise line.error(f'section {section.name} overlaps {other.name}', parts[1])
        self.sections.append(section)

    def _func(self, text: str, line: _Line) -> None:
        header, brace, body = text.partition('{')
        parts = header.split()
        if len(parts) != 4 or parts[2] != '@':
            raise line.error('func expects NAME @ ADDR')
        name = parts[1]
        if name in self.entries:
            raise line.error(f'duplicate function {name!r}', name)
        self.entries[name] = to_word(_parse_number(parts[3], line))
        self.entry_lines[name] = line
        if brace:
            inner = body.rsplit('}', 1)[0].strip()
            if inner:
                self._instruction(inner, line)

    def _instruction(self, text: str, line: _Line) -> None:
        addr_text, colon, rest = text.partition(':')
        if not colon or not rest.strip():
            raise line.error('instruction expects ADDR: ... ; TERMINATOR', text)
        addr = to_word(_parse_number(addr_text, line))
        if addr in self.nodes:
            raise line.error(f'duplicate address {addr:#x}', addr_text)
        statements = [part for part in _split_top_level(rest, ';') if part]
        if not statements:
            raise line.error('missing terminator', text)
        instructions = tuple(_parse_micro(stmt, line) for stmt in statements[:-1])
        terminator = _parse_terminator(statements[-1], line)
        self.nodes[addr] = Node(instructions, terminator)
        self.node_lines[addr] = line

    def _check_target(self, target: int, line: _Line) -> None:
        if target not in self.nodes:
            raise line.error(f'unknown target {target:#x}', f'{target:#x}')

    def build(self) -> Program:
        for name, addr in self.entries.items():
            self._check_target(addr, self.entry_lines[name])

        nodes: dict[int, Node] = {}
        for addr, node in self.nodes.items():
            line = self.node_lines[addr]
            term = node.terminator
            match term:
                case Jmp(target):
                    self._check_target(target, line)
                case CJmp(_, then, orelse):
                    self._check_target(then, line)
                    self._check_target(orelse, line)
                case Call(target, ret):
                    if isinstance(target, str) and target not in self.externs:
                        if target not in self.entries:
                            raise line.error(f'unknown extern {target!r}', target)
                        term = Call(self.entries[target], ret)
                    if isinstance(term.target, int):
                        self._check_target(term.target, line)
                    exits = isinstance(term.target, str) and isinstance(self.externs[term.target], ExitModel)
                    if ret is None and not exits:
                        raise line.error('call needs `-> RETURN` unless the callee exits', 'call')
                    if ret is not None:
                        self._check_target(ret, line)
                case ICall(_, ret):
                    self._check_target(ret, line)
            nodes[addr] = Node(node.instructions, term)

        return Program(
            nodes=dict(sorted(nodes.items())),
            entries=dict(self.entries),
            sections=tuple(sorted(self.sections, key=lambda s: s.lo)),
            symbols=dict(sorted(self.symbols.items())),
            externs=dict(self.externs),
        )


def parse_program(text: str) -> Program:
    """
    Parse micro-IR source text into a Program.

    Args:
        text: IR source, one statement per line, ``#`` starts a comment.

    Returns:
        Structurally valid Program.

    Raises:
        ParseError: With line and column on any syntax or validation error.
    """
    builder = _ProgramBuilder()
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split('#', 1)[0].strip()
        if not content:
            continue
        builder.statement(_Line(number, raw), content)

    program = builder.build()
    logger.debug(
        'Parsed program: nodes=%d entries=%s externs=%s',
        len(program.nodes),
        list(program.entries),
        list(program.externs),
    )
    return program


def load_program(path: Path) -> Program:
    """
    Read and parse an IR file.

    Args:
        path: File path, UTF-8 encoded.

    Returns:
        Parsed Program.
    """
    return parse_program(path.read_text(encoding='utf-8'))
