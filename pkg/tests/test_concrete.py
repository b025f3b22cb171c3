from __future__ import annotations

import json

import pytest

from hypothesis import given
from hypothesis import strategies as st

from ballpark.concrete import (
    HEAP_BASE,
    RSP0,
    STACK_WINDOW,
    TAINT,
    Cell,
    ConcreteMemory,
    ConcreteState,
    Fault,
    Next,
    Returned,
    classify,
    concrete_step,
    run_concrete,
)
from ballpark.mir import Operation, parse_program
from ballpark.mir.semantics import evaluate, to_word
from ballpark.models import MemClass

WORDS = st.integers(min_value=0, max_value=2**64 - 1)
BINARY_OPS = [op for op in Operation if op.arity == 2 and not op.takes_width]


class TestEvaluate:
    def test_udiv_by_zero_is_zero(self):
        assert evaluate(Operation.UDIV, [7, 0]) == 0

    def test_wraps_modulo_word(self):
        assert evaluate(Operation.SUB, [0, 1]) == 2**64 - 1
        assert evaluate(Operation.ADD, [2**64 - 1, 2]) == 1

    def test_signed_compare(self):
        assert evaluate(Operation.SLT, [to_word(-1), 0]) == 1
        assert evaluate(Operation.ULT, [to_word(-1), 0]) == 0

    def test_width_operations(self):
        assert evaluate(Operation.SEXT, [0x80, 8]) == 2**64 - 0x80
        assert evaluate(Operation.ZEXT, [0x1234, 8]) == 0x34
        assert evaluate(Operation.MASK, [2**64 - 1, 64]) == 2**64 - 1

    @pytest.mark.parametrize('width', [0, 65])
    def test_invalid_width(self, width):
        with pytest.raises(ValueError, match='bit width'):
            evaluate(Operation.SEXT, [1, width])

    def test_arity_mismatch(self):
        with pytest.raises(ValueError, match='expects 2'):
            evaluate(Operation.ADD, [1])

    @given(WORDS, WORDS)
    def test_add_sub_inverse(self, a, b):
        assert evaluate(Operation.SUB, [evaluate(Operation.ADD, [a, b]), b]) == a

    @given(st.sampled_from(BINARY_OPS), WORDS, WORDS)
    def test_results_are_words(self, op, a, b):
        assert 0 <= evaluate(op, [a, b]) < 2**64


class TestMemory:
    def test_narrow_read_of_wide_write(self):
        memory = ConcreteMemory()
        memory.write(0x1000, 8, 0x1122334455667788)
        assert memory.read(0x1000, 4) == 0x55667788
        assert memory.read(0x1004, 4) == 0x11223344

    def test_straddling_read_taints(self):
        memory = ConcreteMemory()
        memory.write(0x1000, 8, 0x1122334455667788)
        assert memory.read(0xFFC, 8) is TAINT
        assert memory.cells() == [Cell(0xFFC, 12, TAINT)]

    def test_narrow_write_splits_cell(self):
        memory = ConcreteMemory()
        memory.write(0x1000, 8, 0x1122334455667788)
        memory.write(0x1000, 4, 0xAABBCCDD)
        assert memory.cells() == [Cell(0x1000, 4, 0xAABBCCDD), Cell(0x1004, 4, 0x11223344)]

    def test_partial_overlap_write_taints_union(self):
        memory = ConcreteMemory()
        memory.write(0x1000, 8, 1)
        memory.write(0x1004, 8, 2)
        assert memory.cells() == [Cell(0x1000, 12, TAINT)]

    def test_covering_write_replaces(self):
        memory = ConcreteMemory()
        memory.write(0x1000, 4, 1)
        memory.write(0x1004, 4, 2)
        memory.write(0x1000, 8, 3)
        assert memory.cells() == [Cell(0x1000, 8, 3)]

    def test_unwritten_reads_follow_seed(self):
        assert ConcreteMemory(seed=3).read(0x4000, 8) == ConcreteMemory(seed=3).read(0x4000, 8)
        assert ConcreteMemory(seed=3).read(0x4000, 8) != ConcreteMemory(seed=4).read(0x4000, 8)

    def test_unwritten_read_is_stable(self):
        memory = ConcreteMemory(seed=1)
        first = memory.read(0x4000, 8)
        assert memory.read(0x4000, 8) == first


def test_classify(running):
    assert classify(RSP0 - 0x10, running) is MemClass.L
    assert classify(RSP0 - STACK_WINDOW - 1, running) is MemClass.H
    assert classify(0x2008, running) is MemClass.G
    assert classify(HEAP_BASE, running) is MemClass.H


@pytest.mark.parametrize('op', BINARY_OPS)
def test_taint_absorbs(op):
    program = parse_program(f'func main @ 0x1\n0x1: rbx := {op}(rax, 0x8) ; ret\n')
    state = ConcreteState.initial(program, 'main', 0)
    state.registers['rax'] = TAINT
    assert concrete_step(program, state) == Returned()
    assert state.registers['rbx'] is TAINT


def test_tainted_address_faults():
    program = parse_program('func main @ 0x1\n0x1: store [rax, 0x8] := 0x1 ; ret\n')
    state = ConcreteState.initial(program, 'main', 0)
    state.registers['rax'] = TAINT
    outcome = concrete_step(program, state)
    assert outcome == Fault('tainted address through rax')


def test_step_advances(running):
    state = ConcreteState.initial(running, 'main', 0)
    assert concrete_step(running, state) == Next()
    assert state.rip == 0x3001
    assert state.registers['rbp'] == RSP0


class TestRun:
    def test_running_write_classes(self, running):
        trace = run_concrete(running, 'main', seed=0)
        assert trace.status == 'returned'
        classes = {w.addr: w.mem_class for w in trace.writes}
        assert classes[0x3005] is MemClass.H
        assert classes[0x3006] is MemClass.L
        assert classes[0x3008] is MemClass.L
        assert [w.addr for w in trace.writes] == [0x3005, 0x3006, 0x3007, 0x3008]

    def test_deterministic(self, running):
        first = run_concrete(running, 'main', seed=5)
        second = run_concrete(running, 'main', seed=5)
        assert first.to_jsonl() == second.to_jsonl()
        assert first.writes == second.writes

    def test_jsonl_records(self, running):
        lines = run_concrete(running, 'main', seed=0).to_jsonl().splitlines()
        record = json.loads(lines[1])
        assert record == {'addr': '0x3006', 'write_addr': f'{RSP0 - 0x10:#x}', 'size': 8, 'class': 'L'}

    def test_allocation_recorded(self, running):
        trace = run_concrete(running, 'main', seed=0)
        assert trace.allocations == [(4, 0x3003, HEAP_BASE)]
        (write,) = [w for w in trace.writes if w.addr == 0x3005]
        assert write.step == 5

    def test_write_matches_allocation_of_its_iteration(self, load):
        trace = run_concrete(load('alloc_loop'), 'main', seed=0)
        assert trace.status == 'returned'
        assert len(trace.allocations) == 4
        for write in trace.writes:
            assert write.write_addr == trace.allocation_at(0x1001, write.step)
        assert len({w.write_addr for w in trace.writes}) == 4

    def test_tainted_call_faults(self, load):
        trace = run_concrete(load('taint'), 'main', seed=0)
        assert trace.status == 'fault'
        assert trace.reason == 'tainted control flow'
        assert trace.faulted

    def test_internal_call_and_exit(self, load):
        trace = run_concrete(load('code_pointer'), 'f', seed=0)
        assert trace.status == 'exited'
        assert [(w.addr, w.mem_class) for w in trace.writes] == [(0x6000, MemClass.G)]
        assert trace.top_level_writes() == trace.writes

    def test_loop_terminates(self, load):
        trace = run_concrete(load('loops'), 'counter', seed=0)
        assert trace.status == 'returned'
        assert len([w for w in trace.writes if w.addr == 0x8001]) == 0x10

    def test_budget(self, load):
        trace = run_concrete(load('loops'), 'counter', seed=0, step_budget=5)
        assert trace.status == 'budget'
        assert trace.faulted

    def test_visits(self, running):
        trace = run_concrete(running, 'main', seed=0, record_visits=True)
        assert [v.addr for v in trace.visits] == list(range(0x3000, 0x3009))
        assert trace.visits[0].registers['rsp'] == RSP0
