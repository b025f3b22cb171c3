from __future__ import annotations

import pytest

from ballpark.mir import (
    AddrExpr,
    AllocatorModel,
    Call,
    HavocModel,
    ICall,
    Immediate,
    Mem,
    MicroInstruction,
    NeedsResolution,
    Operation,
    ParseError,
    PureReturnModel,
    Reg,
    Ret,
    parse_program,
    render_program,
    successors,
)
from ballpark.models import MemClass


def test_running_structure(running):
    assert running.entries == {'main': 0x3000}
    assert [s.name for s in running.sections] == ['.data']
    assert isinstance(running.externs['getc'], PureReturnModel)
    assert isinstance(running.externs['malloc'], AllocatorModel)
    assert sorted(running.nodes) == list(range(0x3000, 0x3009))
    assert running.node(0x3008).terminator == Ret()


def test_scaled_address_and_store(running):
    (store,) = running.node(0x3005).instructions
    assert store == MicroInstruction(
        dst=Mem(AddrExpr(terms=((1, 'rax'), (8, 'rcx')), displacement=0), 8),
        op=Operation.MOV,
        ins=(Reg('rsi'),),
    )
    (local,) = running.node(0x3006).instructions
    assert local.dst == Mem(AddrExpr(terms=((1, 'rsp'),), displacement=-0x10), 8)
    assert local.ins == (Immediate(0x2000),)


def test_operation_form():
    program = parse_program('func main @ 0x10\n0x10: rsi := sub(rbp, 0x8) ; ret\n')
    (ins,) = program.node(0x10).instructions
    assert ins.op is Operation.SUB
    assert ins.ins == (Reg('rbp'), Immediate(8))


def test_internal_call_target_resolved(load):
    program = load('code_pointer')
    assert program.node(0x6001).terminator == Call(0x6500, 0x6002)
    assert program.node(0x6002).terminator == Call('exit', None)


def test_indirect_call_needs_resolution(load):
    program = load('code_pointer')
    assert program.node(0x6500).terminator == ICall(Reg('rax'), 0x6501)
    assert successors(program, 0x6500) == NeedsResolution(Reg('rax'))


def test_havoc_options(load):
    program = load('ret2win')
    gets = program.externs['gets']
    assert isinstance(gets, HavocModel)
    assert gets.args == ('rdi',)
    assert gets.may_write == frozenset()
    assert 'r11' in gets.clobbers


def test_havoc_defaults():
    program = parse_program('extern memset havoc\nfunc main @ 0x1\n0x1: call memset -> 0x2\n0x2: ret\n')
    model = program.externs['memset']
    assert model.may_write == frozenset({MemClass.H, MemClass.G})
    assert model.args == ()


def test_32_bit_alias():
    program = parse_program('func main @ 0x1\n0x1: eax := ecx ; ret\n')
    (ins,) = program.node(0x1).instructions
    assert ins.dst == Reg('eax')


def test_render_parses_back(running):
    assert parse_program(render_program(running)) == running


@pytest.mark.parametrize(
    ('text', 'line', 'fragment'),
    [
        ('func main @ 0x1\n0x1: rzz := 0x1 ; ret\n', 2, 'unknown register'),
        ('func main @ 0x1\n0x1: store [rax + rbx + rcx, 0x8] := 0x1 ; ret\n', 2, 'at most two register terms'),
        ('func main @ 0x1\n0x1: store [rax, 0x3] := 0x1 ; ret\n', 2, 'memory size'),
        ('func main @ 0x1\n0x1: rax := frob(rax, 0x1) ; ret\n', 2, 'unknown operation'),
        ('extern getc pure\nfunc main @ 0x1\n0x1: call getc\n', 3, 'needs `-> RETURN`'),
        ('func main @ 0x1\n0x1: jmp 0x2\n', 2, 'unknown target'),
        ('func main @ 0x1\n0x1: ret\n0x1: ret\n', 3, 'duplicate address'),
        ('section .a 0x10 0x20\nsection .b 0x18 0x30\n', 2, 'overlaps'),
        ('func main @ 0x1\n0x1: rax := sext(rax, 0x41) ; ret\n', 2, 'bit width'),
        ('func main @ 0x1\n0x1: call nowhere -> 0x1\n', 2, 'unknown extern'),
    ],
)
def test_parse_errors(text, line, fragment):
    with pytest.raises(ParseError) as excinfo:
        parse_program(text)
    assert excinfo.value.line == line
    assert fragment in excinfo.value.message


def test_error_column_points_at_token():
    with pytest.raises(ParseError) as excinfo:
        parse_program('func main @ 0x1\n0x1: rax := add(rax, qq) ; ret\n')
    assert excinfo.value.column == len('0x1: rax := add(rax, ') + 1


def test_unknown_entry(running):
    with pytest.raises(ValueError, match='unknown entry'):
        running.entry_addr('nope')
