from __future__ import annotations

import pytest

from ballpark.domains import (
    TOP,
    AbsPtr,
    AbsRegion,
    Caps,
    DomainMode,
    Layer,
    PointerDomain,
    SepVerdict,
    b_ptr,
    c_ptr,
    concretizes,
    designate,
    disjoint_cc,
    s_ptr,
    sep_bases,
    sep_sources,
    weakest,
)
from ballpark.mir import Operation
from ballpark.models import ALL_CLASSES, MemClass
from ballpark.symbolic import (
    RSP0,
    Alloc,
    AllocBase,
    App,
    BaseSrc,
    Const,
    ConstantSrc,
    FunctionContext,
    FunRet,
    FunSrc,
    GlobalBase,
    Imm,
    StackPointerBase,
    SymbolBase,
    imm,
    normalize,
)

N = SepVerdict.NECESSARY
D = SepVerdict.DESIRABLE
U = SepVerdict.UNKNOWN

RDX0 = Const('rdx')
ALLOC = Alloc(0x3003)
FRAME = StackPointerBase(0x3000)
HEAP = AllocBase(0x3003)


def below(offset: int):
    return normalize(App(Operation.SUB, (RSP0, Imm(offset))))


@pytest.fixture
def ctx(running) -> FunctionContext:
    return FunctionContext.for_function(running, 0x3000)


@pytest.fixture
def domain(ctx) -> PointerDomain:
    return PointerDomain(ctx)


class TestValues:
    def test_rendering(self):
        assert str(c_ptr(below(0x10))) == 'C{rsp_0 - 0x10}'
        assert str(b_ptr(HEAP)) == 'B{Alloc@0x3003}'
        assert str(s_ptr(ConstantSrc(RDX0), FunSrc('getc'))) == 'S{Fun getc, rdx_0}'
        assert str(TOP) == 'TOP'

    def test_region_rendering(self):
        assert str(AbsRegion(c_ptr(below(0x10)), 8)) == '[C{rsp_0 - 0x10}, 8]'
        assert str(AbsRegion(TOP, None)) == '[TOP, ?]'

    def test_mode_parse(self):
        assert DomainMode.parse('C') is DomainMode.ONLY_C
        assert DomainMode.parse('onlys') is DomainMode.ONLY_S
        assert DomainMode.parse('full') is DomainMode.FULL
        with pytest.raises(ValueError, match='Invalid domain mode'):
            DomainMode.parse('D')

    def test_weakest(self):
        assert weakest([N, D, N]) is D
        assert weakest([]) is U


class TestCaps:
    def test_c_over_cap_becomes_bases(self, domain):
        ten = c_ptr(*(below(8 * k) for k in range(10)))
        assert domain.fit(ten) == ten
        eleven = c_ptr(*(below(8 * k) for k in range(11)))
        assert domain.fit(eleven) == b_ptr(FRAME)

    def test_b_over_cap_becomes_sources(self, domain):
        bases = [GlobalBase(0x2000 + 8 * k) for k in range(6)]
        assert domain.fit(b_ptr(*bases)) == s_ptr(*(BaseSrc(b) for b in bases))

    def test_s_over_cap_is_top(self, domain):
        sources = [ConstantSrc(Const(f'mem{k}')) for k in range(251)]
        assert domain.fit(s_ptr(*sources)) is TOP
        assert domain.fit(s_ptr(*sources[:250])).layer is Layer.S

    def test_custom_caps(self, ctx):
        domain = PointerDomain(ctx, caps=Caps(c=1))
        assert domain.fit(c_ptr(below(8), below(0x10))) == b_ptr(FRAME)

    def test_unbased_element_falls_to_sources(self, domain):
        value = c_ptr(normalize(App(Operation.ADD, (RDX0, FunRet('getc', 0x3001)))))
        assert domain.shift(value) == s_ptr(ConstantSrc(RDX0), FunSrc('getc'))

    def test_restricted_modes(self, ctx):
        value = c_ptr(below(0x10))
        assert PointerDomain(ctx, DomainMode.ONLY_C).fit(value) == value
        assert PointerDomain(ctx, DomainMode.ONLY_B).fit(value) == b_ptr(FRAME)
        assert PointerDomain(ctx, DomainMode.ONLY_S).fit(value) == s_ptr(BaseSrc(FRAME))
        assert PointerDomain(ctx, DomainMode.ONLY_C).fit(b_ptr(FRAME)) is TOP

    @pytest.mark.parametrize('mode', [DomainMode.ONLY_B, DomainMode.ONLY_S])
    def test_code_addresses_stay_exact(self, ctx, mode):
        domain = PointerDomain(ctx, mode)
        targets = c_ptr(imm(0x3001), imm(0x3002))
        assert domain.fit(targets) == targets
        assert domain.literal(0x3001) == c_ptr(imm(0x3001))
        assert domain.resolve_targets(domain.join(domain.literal(0x3001), domain.literal(0x3002))) == {0x3001, 0x3002}
        assert domain.fit(c_ptr(imm(0x3001), below(8))).layer is not Layer.C


class TestConstructors:
    def test_literal(self, domain):
        assert domain.literal(0x3001) == c_ptr(imm(0x3001))
        assert domain.literal(0x2000) == b_ptr(GlobalBase(0x2000))
        assert domain.literal(0x10) is TOP

    def test_immediate_stays_exact(self, domain):
        assert domain.immediate(0x10) == c_ptr(imm(0x10))

    def test_from_initial(self, domain):
        assert domain.from_initial('rdx') == c_ptr(RDX0)
        assert domain.from_initial('ZF') is TOP

    def test_extern_values(self, domain):
        assert domain.fun_return('getc') == s_ptr(FunSrc('getc'))
        assert domain.alloc_pointer(0x3003) == c_ptr(ALLOC)


class TestJoin:
    def test_union(self, domain):
        assert domain.join(c_ptr(below(8)), c_ptr(below(0x10))) == c_ptr(below(8), below(0x10))

    def test_mixed_layers_equalize(self, domain):
        joined = domain.join(c_ptr(RSP0), b_ptr(GlobalBase(0x2000)))
        assert joined == b_ptr(FRAME, GlobalBase(0x2000))

    def test_top_absorbs(self, domain):
        assert domain.join(TOP, c_ptr(RSP0)) is TOP

    def test_join_all(self, domain):
        assert domain.join_all([]) is None
        assert domain.join_all([c_ptr(RSP0), c_ptr(RSP0)]) == c_ptr(RSP0)


class TestAsem:
    def test_pointwise_constants(self, domain):
        result = domain.asem(Operation.ADD, [c_ptr(RSP0, RDX0), domain.immediate(8)])
        assert str(result) == 'C{rdx_0 + 0x8, rsp_0 + 0x8}'

    def test_scaled_index_keeps_base(self, domain):
        index = domain.asem(Operation.MUL, [s_ptr(FunSrc('getc')), domain.immediate(8)])
        assert index == s_ptr(FunSrc('getc'))
        assert domain.asem(Operation.ADD, [c_ptr(ALLOC), index]) == b_ptr(HEAP)

    def test_subtracting_offset_keeps_base(self, domain):
        assert domain.asem(Operation.SUB, [b_ptr(FRAME), s_ptr(FunSrc('getc'))]) == b_ptr(FRAME)

    def test_two_anchors_fall_to_sources(self, domain):
        result = domain.asem(Operation.ADD, [b_ptr(FRAME), c_ptr(ALLOC)])
        assert result == s_ptr(BaseSrc(FRAME), BaseSrc(HEAP))

    def test_flags_are_top(self, domain):
        assert domain.asem(Operation.ULT, [c_ptr(RSP0), domain.immediate(1)]) is TOP

    def test_top_operand(self, domain):
        assert domain.asem(Operation.XOR, [TOP, s_ptr(FunSrc('getc'))]) is TOP

    def test_mov(self, domain):
        assert domain.asem(Operation.MOV, [b_ptr(HEAP)]) == b_ptr(HEAP)


class TestSeparation:
    def test_extern_returns_are_apart(self, domain):
        getc, rand = AbsRegion(s_ptr(FunSrc('getc')), 8), AbsRegion(s_ptr(FunSrc('rand')), 4)
        assert domain.sep(getc, rand) is N
        assert domain.sep(rand, getc) is N

    def test_heap_vs_frame(self, domain):
        assert domain.sep(AbsRegion(b_ptr(HEAP), 8), AbsRegion(c_ptr(below(0x10)), 8)) is N

    def test_heap_vs_sources(self, domain):
        sources = s_ptr(ConstantSrc(RDX0), FunSrc('getc'))
        assert domain.sep(AbsRegion(b_ptr(HEAP), 8), AbsRegion(sources, 8)) is N

    def test_frame_vs_argument_is_desirable(self, domain):
        sources = s_ptr(ConstantSrc(RDX0), FunSrc('getc'))
        assert domain.sep(AbsRegion(c_ptr(below(0x10)), 8), AbsRegion(sources, 8)) is D

    def test_adjacent_stack_slots(self, domain):
        assert domain.sep(AbsRegion(c_ptr(below(0x10)), 8), AbsRegion(c_ptr(below(8)), 4)) is N
        assert not disjoint_cc(below(0x10), 8, below(0xC), 8, domain.rules)

    def test_unknown_sizes(self, domain):
        assert not disjoint_cc(below(0x10), None, below(0x100), 8, domain.rules)

    def test_top_separates_from_nothing(self, domain):
        assert domain.sep(AbsRegion(TOP, 8), AbsRegion(b_ptr(HEAP), 8)) is U

    def test_symmetric_rules(self, domain):
        rules = domain.rules
        bases = [FRAME, StackPointerBase(0x9000), GlobalBase(0x2000), HEAP, AllocBase(0x9999), SymbolBase('x')]
        for b0 in bases:
            for b1 in bases:
                assert sep_bases(b0, b1, rules) is sep_bases(b1, b0, rules)

    @pytest.mark.parametrize(
        ('b0', 'b1', 'verdict'),
        [
            (FRAME, FRAME, U),
            (FRAME, StackPointerBase(0x9000), D),
            (FRAME, GlobalBase(0x2000), N),
            (GlobalBase(0x2000), GlobalBase(0x2008), U),
            (GlobalBase(0x2000), HEAP, N),
            (GlobalBase(0x2000), SymbolBase('x'), D),
            (HEAP, HEAP, U),
            (HEAP, AllocBase(0x9999), N),
        ],
    )
    def test_base_table(self, domain, b0, b1, verdict):
        assert sep_bases(b0, b1, domain.rules) is verdict

    def test_alloc_alloc_configurable(self, ctx):
        domain = PointerDomain(ctx, alloc_alloc=D)
        assert sep_bases(HEAP, AllocBase(0x9999), domain.rules) is D

    def test_sources(self, domain):
        rules = domain.rules
        assert sep_sources(FunSrc('getc'), FunSrc('rand'), rules) is N
        assert sep_sources(FunSrc('getc'), FunSrc('getc'), rules) is N
        assert sep_sources(FunSrc('getc'), ConstantSrc(RDX0), rules) is N
        assert sep_sources(ConstantSrc(RDX0), BaseSrc(HEAP), rules) is N
        assert sep_sources(ConstantSrc(RDX0), BaseSrc(AllocBase(0x9999)), rules) is U
        assert sep_sources(ConstantSrc(RSP0), BaseSrc(FRAME), rules) is U

    def test_solver_hook_consulted(self, ctx):
        calls = []

        def always(c0, si0, c1, si1):
            calls.append((c0, c1))
            return True

        domain = PointerDomain(ctx, disjointness=always)
        rdx_slot = AbsRegion(c_ptr(RDX0), 8)
        rdi_slot = AbsRegion(c_ptr(Const('rdi')), 8)
        assert domain.sep(rdx_slot, rdi_slot) is N
        assert calls == [(RDX0, Const('rdi'))]


class TestEnclosure:
    def test_interval_containment(self, domain):
        assert domain.encl(AbsRegion(c_ptr(below(8)), 4), AbsRegion(c_ptr(below(0x10)), 0x10))
        assert not domain.encl(AbsRegion(c_ptr(below(8)), 8), AbsRegion(c_ptr(below(0x10)), 8))

    def test_same_section_globals(self, domain):
        assert domain.encl(AbsRegion(b_ptr(GlobalBase(0x2008)), 8), AbsRegion(b_ptr(GlobalBase(0x2000)), 8))

    def test_top_encloses_everything(self, domain):
        assert domain.encl(AbsRegion(b_ptr(HEAP), None), AbsRegion(TOP, None))
        assert not domain.encl(AbsRegion(TOP, 8), AbsRegion(b_ptr(HEAP), 8))

    def test_alias(self, domain):
        slot = AbsRegion(c_ptr(below(0x10)), 8)
        assert domain.alias(slot, AbsRegion(c_ptr(below(0x10)), 8))
        assert not domain.alias(AbsRegion(c_ptr(below(0x10)), None), AbsRegion(c_ptr(below(0x10)), None))
        assert not domain.alias(slot, AbsRegion(c_ptr(below(0x10)), 4))


class TestDesignation:
    @pytest.mark.parametrize(
        ('value', 'expected'),
        [
            (c_ptr(below(0x10)), {MemClass.L}),
            (b_ptr(HEAP), {MemClass.H}),
            (b_ptr(GlobalBase(0x2000)), {MemClass.G}),
            (b_ptr(StackPointerBase(0x9000)), {MemClass.L, MemClass.H}),
            (s_ptr(ConstantSrc(RDX0), FunSrc('getc')), {MemClass.H}),
            (s_ptr(ConstantSrc(RSP0)), {MemClass.L, MemClass.H}),
            (TOP, set(ALL_CLASSES)),
        ],
    )
    def test_classes(self, ctx, value, expected):
        assert designate(value, ctx) == expected

    def test_beyond_frame(self, ctx):
        assert designate(c_ptr(below(0x20000)), ctx, frame_cap=0x10000) == {MemClass.L, MemClass.H}

    def test_unanchored_constant(self, ctx):
        assert designate(c_ptr(imm(0x10)), ctx) == ALL_CLASSES


class TestMembership:
    def test_constant_layer(self, ctx):
        assert concretizes(c_ptr(below(0x10)), App(Operation.SUB, (RSP0, Imm(0x10))), ctx)
        assert not concretizes(c_ptr(below(0x10)), RSP0, ctx)

    def test_base_layer(self, ctx):
        member = App(Operation.ADD, (ALLOC, App(Operation.MUL, (FunRet('getc', 0x3001), Imm(8)))))
        assert concretizes(b_ptr(HEAP), member, ctx)
        assert concretizes(b_ptr(GlobalBase(0x2000)), Imm(0x2018), ctx)
        assert not concretizes(b_ptr(HEAP), RSP0, ctx)

    def test_source_layer(self, ctx):
        member = App(Operation.ADD, (RDX0, FunRet('getc', 0x3001)))
        assert concretizes(s_ptr(FunSrc('getc')), member, ctx)
        assert not concretizes(s_ptr(ConstantSrc(Const('rdi'))), member, ctx)

    def test_top(self, ctx):
        assert concretizes(TOP, Imm(3), ctx)


def test_resolve_targets(domain):
    assert domain.resolve_targets(c_ptr(imm(0x3001), imm(0x3002))) == {0x3001, 0x3002}
    assert domain.resolve_targets(c_ptr(imm(0x10))) is None
    assert domain.resolve_targets(AbsPtr(Layer.B, frozenset({HEAP}))) is None
    assert domain.resolve_targets(TOP) is None
