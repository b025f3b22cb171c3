"""Random program generator for differential testing."""

from __future__ import annotations

import logging

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal

import numpy as np

if TYPE_CHECKING:
    from pathlib import Path

logger = logging.getLogger(__name__)

Profile = Literal['mixed', 'anchored']

BUCKETS: tuple[str, ...] = (
    'stack',
    'alloc',
    'global',
    'symbol',
    'pure',
    'loop',
    'branch',
    'overlap',
    'call',
    'indirect',
)

CODE_BASE = 0x1000
FRAME_SIZE = 0x80
DATA = (0x2000, 0x2040)
BSS = (0x2100, 0x2200)
SYMBOL = 0x2800
HELPER_BASE = 0x1800
POINTER_SLOT = DATA[0] + 0x38
HEAP_SLOT = BSS[0] + 0x8

_HEADER = f"""section .data {DATA[0]:#x} {DATA[1]:#x}
section .bss {BSS[0]:#x} {BSS[1]:#x}
symbol {SYMBOL:#x} counter
extern malloc alloc
extern getc pure
extern puts havoc clobber=rax,rcx,rdx,rsi,rdi,r8,r9,r10,r11 write=none
extern exit exit
func main @ {CODE_BASE:#x}
func helper @ {HELPER_BASE:#x}"""

# Leaves a global address and a fresh heap pointer in memory for its caller.
_HELPER = f"""{HELPER_BASE:#x}: store [{POINTER_SLOT:#x}, 0x8] := {DATA[0] + 0x28:#x} ; jmp {HELPER_BASE + 1:#x}
{HELPER_BASE + 1:#x}: call malloc -> {HELPER_BASE + 2:#x}
{HELPER_BASE + 2:#x}: store [{HEAP_SLOT:#x}, 0x8] := rax ; ret"""

_SIZES = (1, 2, 4, 8)


@dataclass(frozen=True)
class GeneratedProgram:
    """
    One generated program.

    Attributes:
        name: File stem, e.g. ``prog_0007``.
        text: IR source.
        buckets: Features the program exercises.
        profile: Generator profile used.
    """

    name: str
    text: str
    buckets: tuple[str, ...]
    profile: Profile = 'mixed'


@dataclass
class _Emitter:
    rng: np.random.Generator
    anchored: bool
    addr: int = CODE_BASE
    lines: list[str] = field(default_factory=list)
    has_alloc: bool = False

    def node(self, *micros: str, term: str | None = None) -> int:
        at = self.addr
        self.addr += 1
        body = [*micros, term if term is not None else f'jmp {self.addr:#x}']
        self.lines.append(f'{at:#x}: ' + ' ; '.join(body))
        return at

    def choice(self, options: tuple[int, ...] | list[int]) -> int:
        return int(options[int(self.rng.integers(len(options)))])

    def number(self, lo: int, hi: int) -> int:
        return int(self.rng.integers(lo, hi))

    def stack_slot(self, size: int, lo: int = 0, hi: int = FRAME_SIZE) -> str:
        offset = self.number(lo // size, (hi - size) // size + 1) * size
        return f'[rsp + {offset:#x}, {size:#x}]' if offset else f'[rsp, {size:#x}]'


def _stack(em: _Emitter) -> None:
    for _ in range(em.number(1, 4)):
        size = em.choice(_SIZES)
        em.node(f'store {em.stack_slot(size)} := {em.number(0, 0x1000):#x}')
    em.node(f'rax := add(rsp, {em.choice([0x8, 0x10, 0x18]):#x})', f'store {em.stack_slot(8)} := rax')


def _alloc(em: _Emitter) -> None:
    em.node(term=f'call malloc -> {em.addr + 1:#x}')
    em.node('rbx := rax', f'store [rbx, 0x8] := {em.number(0, 0x100):#x}')
    for _ in range(em.number(1, 3)):
        size = em.choice(_SIZES)
        em.node(f'store [rbx + {em.number(0, 0x40) * 4:#x}, {size:#x}] := rsp')
    if em.number(0, 2):
        em.node(term=f'call malloc -> {em.addr + 1:#x}')
        em.node('r12 := rax', 'store [r12 + 0x8, 0x8] := rbx')
    em.has_alloc = True


def _global(em: _Emitter) -> None:
    for _ in range(em.number(1, 3)):
        size = em.choice(_SIZES)
        offset = em.number(0, (DATA[1] - DATA[0]) // size) * size
        em.node(f'store [{DATA[0] + offset:#x}, {size:#x}] := {em.number(0, 0x100):#x}')
    if not em.anchored:
        em.node(f'rsi := {BSS[0]:#x}', f'store [rsi + {em.number(0, 0x10) * 8:#x}, 0x8] := rsi')


def _symbol(em: _Emitter) -> None:
    em.node(f'rax := load [{SYMBOL:#x}, 0x8]', 'rax := add(rax, 0x1)', f'store [{SYMBOL:#x}, 0x8] := rax')


def _pure(em: _Emitter) -> None:
    em.node(term=f'call getc -> {em.addr + 1:#x}')
    em.node(f'store {em.stack_slot(1)} := rax')
    if em.anchored:
        return
    em.node('rax := and(rax, 0x3f)', 'store [rsp + rax + 0x10, 0x1] := 0x1')
    em.node('rax := and(rax, 0x1f)', f'rsi := {DATA[0]:#x}', 'store [rsi + rax, 0x1] := 0x2')
    if em.has_alloc:
        em.node('rdx := add(rbx, rax)', 'store [rdx, 0x1] := 0x3')
    em.node('store [r8 + 0x8, 0x8] := 0x4')
    em.node(f'rdi := add(rsp, {em.choice([0x20, 0x28, 0x30]):#x})', term=f'call puts -> {em.addr + 1:#x}')


def _loop(em: _Emitter) -> None:
    count = em.number(2, 7)
    walk = not em.anchored and em.number(0, 2) == 1
    em.node('rcx := 0x0', *(['rsi := add(rsp, 0x20)'] if walk else []))
    head = em.addr
    if em.anchored:
        body = [f'store {em.stack_slot(8)} := rcx']
    elif walk:
        body = ['store [rsi, 0x8] := rcx', 'rsi := add(rsi, 0x8)']
    else:
        body = ['store [rsp + rcx*0x8 + 0x20, 0x8] := rcx']
    em.node(
        *body,
        'rcx := add(rcx, 0x1)',
        f'ZF := ult(rcx, {count:#x})',
        term=f'cjmp ZF, {head:#x}, {head + 1:#x}',
    )


def _branch(em: _Emitter) -> None:
    if em.anchored:
        left = 'rdi := add(rbx, 0x10)' if em.has_alloc else 'rdi := add(rsp, 0x40)'
        right = 'rdi := add(rsp, 0x30)'
    else:
        left = 'rdi := rbx' if em.has_alloc else 'rdi := add(rsp, 0x30)'
        right = f'rdi := {DATA[0] + 0x20:#x}'
    em.node(term=f'call getc -> {em.addr + 1:#x}')
    start = em.addr
    join = start + 3
    em.node('ZF := ult(rax, 0x80)', term=f'cjmp ZF, {start + 1:#x}, {start + 2:#x}')
    em.node(left, term=f'jmp {join:#x}')
    em.node(right, term=f'jmp {join:#x}')
    em.node('store [rdi, 0x8] := 0x1')


def _overlap(em: _Emitter) -> None:
    em.node('store [rsp + 0x60, 0x8] := 0x1111', 'store [rsp + 0x64, 0x4] := 0x22')
    if not em.anchored:
        em.node(f'store [{DATA[0] + 0x30:#x}, 0x8] := 0x3333', f'store [{DATA[0] + 0x32:#x}, 0x2] := 0x44')


def _call(em: _Emitter) -> None:
    em.node(term=f'call helper -> {em.addr + 1:#x}')
    if em.anchored:
        em.node(f'store {em.stack_slot(8)} := rsp')
        if em.has_alloc:
            em.node('store [rbx + 0x10, 0x8] := rsp')
        return
    em.node(f'rax := load [{POINTER_SLOT:#x}, 0x8]', 'store [rax, 0x8] := 0x5')
    em.node(f'rdx := load [{HEAP_SLOT:#x}, 0x8]', 'store [rdx + 0x8, 0x8] := rdx')


def _indirect(em: _Emitter) -> None:
    em.node(term=f'call getc -> {em.addr + 1:#x}')
    start = em.addr
    join = start + 6
    em.node('ZF := ult(rax, 0x80)', term=f'cjmp ZF, {start + 1:#x}, {start + 2:#x}')
    em.node(f'rdx := {start + 4:#x}', term=f'jmp {start + 3:#x}')
    em.node(f'rdx := {start + 5:#x}', term=f'jmp {start + 3:#x}')
    em.node(term='ijmp rdx')
    em.node(f'store {em.stack_slot(8)} := 0x1', term=f'jmp {join:#x}')
    em.node(f'store {em.stack_slot(4)} := 0x2')
    em.node(f'rax := {HELPER_BASE:#x}', term=f'icall rax -> {em.addr + 1:#x}')


_EMITTERS = {
    'stack': _stack,
    'alloc': _alloc,
    'global': _global,
    'symbol': _symbol,
    'pure': _pure,
    'loop': _loop,
    'branch': _branch,
    'overlap': _overlap,
    'call': _call,
    'indirect': _indirect,
}


def generate_program(seed: int, index: int, profile: Profile = 'mixed') -> GeneratedProgram:
    """
    Build one well-formed program.

    Every program saves and restores rbx and r12, keeps its writes inside a
    fixed frame and never reads a partially overwritten value. Bucket
    ``index % len(BUCKETS)`` is always included. A second function,
    ``helper``, is always present; it is reached by a direct call in the
    ``call`` bucket and through a register in the ``indirect`` bucket.

    Args:
        seed: Corpus seed.
        index: Program number within the corpus.
        profile: ``anchored`` leaves out dynamic offsets, baseless pointers,
            pointer walks, immediates used as data pointers and writes
            through pointers a call left in memory.

    Returns:
        GeneratedProgram with deterministic text.
    """
    rng = np.random.default_rng([seed, index])
    chosen = {BUCKETS[index % len(BUCKETS)], 'stack'}
    chosen |= {bucket for bucket in BUCKETS if rng.random() < 0.4}
    buckets = tuple(bucket for bucket in BUCKETS if bucket in chosen)

    em = _Emitter(rng=rng, anchored=profile == 'anchored')
    em.node('rsp := sub(rsp, 0x8)', 'store [rsp, 0x8] := rbx', 'rsp := sub(rsp, 0x8)', 'store [rsp, 0x8] := r12')
    em.node(f'rsp := sub(rsp, {FRAME_SIZE:#x})')
    for bucket in buckets:
        _EMITTERS[bucket](em)
    if rng.random() < 0.125:
        em.node(term='call exit')
    else:
        em.node(
            f'rsp := add(rsp, {FRAME_SIZE:#x})',
            'r12 := load [rsp, 0x8]',
            'rsp := add(rsp, 0x8)',
            'rbx := load [rsp, 0x8]',
            'rsp := add(rsp, 0x8)',
            term='ret',
        )

    name = f'prog_{index:04d}'
    header = f'# {name} seed={seed:#x} profile={profile}\n# buckets: {",".join(buckets)}\n'
    text = header + _HEADER + '\n' + '\n'.join(em.lines) + '\n' + _HELPER + '\n'
    return GeneratedProgram(name=name, text=text, buckets=buckets, profile=profile)


def generate_corpus(count: int, seed: int = 0, profile: Profile = 'mixed') -> list[GeneratedProgram]:
    """
    Generate ``count`` programs; identical arguments give identical text.

    Raises:
        ValueError: If ``count`` is negative.
    """
    if count < 0:
        raise ValueError(f'Program count must be non-negative, got {count}.')
    programs = [generate_program(seed, index, profile) for index in range(count)]
    logger.info('Corpus generated: count=%d seed=%d profile=%s', count, seed, profile)
    return programs


def write_corpus(programs: list[GeneratedProgram], out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for program in programs:
        path = out_dir / f'{program.name}.mir'
        path.write_text(program.text, encoding='utf-8')
        paths.append(path)
    logger.info('Corpus written: dir=%s files=%d', out_dir, len(paths))
    return paths


def bucket_counts(programs: list[GeneratedProgram]) -> dict[str, int]:
    return {bucket: sum(bucket in p.buckets for p in programs) for bucket in BUCKETS}
