"""Reading, writing and joining region-partitioned abstract states."""

from __future__ import annotations

import logging

from collections.abc import Mapping

from ..domains.contract import AbsRegion, SepVerdict
from ..domains.pointers import PointerDomain, is_stack_only
from ..domains.values import AbsPtr, Layer, c_ptr
from ..mir.models import FLAGS, REGISTERS_64
from ..symbolic.expr import RSP0
from .models import AbsState, Assumption, Memory, describe

logger = logging.getLogger(__name__)

RETURN_SLOT_SIZE = 8


def initial_state(domain: PointerDomain, pre_memory: Mapping[AbsRegion[AbsPtr], AbsPtr] | None = None) -> AbsState:
    """
    Entry state: every register holds its entry value, flags are TOP.

    Args:
        domain: Domain of the analyzed function.
        pre_memory: Regions known at entry, already expressed in this domain.
    """
    registers = {name: domain.from_initial(name) for name in REGISTERS_64}
    flags = {name: domain.from_initial(name) for name in FLAGS}
    state = AbsState(registers=registers, flags=flags)
    for region, value in (pre_memory or {}).items():
        state = abs_write(domain, state, region, value)
    return state


def return_slot(domain: PointerDomain) -> AbsRegion[AbsPtr]:
    return AbsRegion(domain.fit(c_ptr(RSP0)), RETURN_SLOT_SIZE)


def return_slot_verdict(domain: PointerDomain, region: AbsRegion[AbsPtr]) -> SepVerdict:
    return protected_verdict(domain, region, return_slot(domain))


def protected_verdict(domain: PointerDomain, region: AbsRegion[AbsPtr], slot: AbsRegion[AbsPtr]) -> SepVerdict:
    """
    Separation of a written region from a slot the function must not clobber.

    Regions that cannot be shown separate are assumed desirable-separate,
    except TOP and exact stack offsets of known size, whose verdict stands.
    """
    verdict = domain.sep(region, slot)
    if verdict is SepVerdict.NECESSARY or region.addr.is_top:
        return verdict
    addr = region.addr
    if region.size is not None and addr.layer is Layer.C and all(is_stack_only(e) for e in addr.elements):
        return verdict
    return SepVerdict.DESIRABLE


def _overlaps(domain: PointerDomain, r0: AbsRegion[AbsPtr], r1: AbsRegion[AbsPtr], strict: bool) -> bool:
    verdict = domain.sep(r0, r1)
    return verdict is SepVerdict.UNKNOWN or (strict and verdict is SepVerdict.DESIRABLE)


def abs_read(
    domain: PointerDomain,
    state: AbsState,
    region: AbsRegion[AbsPtr],
    *,
    strict: bool = False,
) -> tuple[AbsPtr, AbsState]:
    """
    Read a region.

    An aliasing region yields its value. Otherwise every possibly
    overlapping region contributes its value (TOP when sizes differ) joined
    with the region's untracked content. A region overlapping nothing is
    recorded with fresh untracked content.

    Args:
        domain: Domain of the analyzed function.
        state: State to read from.
        region: Region to read.
        strict: Treat desirable separation as possible overlap.

    Returns:
        The value read and the state, extended when the read was fresh.
    """
    stored = state.lookup(region)
    if stored is not None and domain.alias(region, region):
        return stored, state

    overlaps = [(q, v) for q, v in state.memory.items() if q == region or _overlaps(domain, region, q, strict)]
    initial = untracked_content(domain, state, region)
    if not overlaps:
        return initial, state.with_memory({**state.memory, region: initial})

    parts = [v if q.size is not None and q.size == region.size else domain.top for q, v in overlaps]
    value = domain.join_all([*parts, initial])
    return value if value is not None else domain.top, state


def untracked_content(domain: PointerDomain, state: AbsState, region: AbsRegion[AbsPtr]) -> AbsPtr:
    """Initial content of a region, or TOP once an opaque call may have written its memory class."""
    if state.havocked and domain.designate(region.addr) & state.havocked:
        return domain.top
    return domain.initial_content(region)


def abs_write(
    domain: PointerDomain,
    state: AbsState,
    region: AbsRegion[AbsPtr],
    value: AbsPtr,
    *,
    addr: int | None = None,
    call: str | None = None,
    strict: bool = False,
) -> AbsState:
    """
    Write a value to a region, keeping the regions pairwise separate.

    An aliasing region is overwritten. A region already present without
    aliasing is weakly updated. Otherwise the region absorbs every region it
    may overlap, repeatedly, and holds the join of all their values;
    a merged region has unknown size.

    Args:
        domain: Domain of the analyzed function.
        state: State to write into.
        region: Written region.
        value: Written value.
        addr: Instruction address; when given, desirable separations relied
            on are logged as assumptions.
        call: Extern performing the write, for the log.
        strict: Treat desirable separation as possible overlap.

    Returns:
        The updated state.
    """
    memory: Memory = dict(state.memory)
    stored = memory.get(region)
    if stored is not None:
        memory[region] = value if domain.alias(region, region) else domain.join(stored, value)
        return state.with_memory(memory, _assumptions(domain, memory, region, region, addr, call, strict))

    target, content = region, value
    while True:
        overlapping = [q for q in memory if _overlaps(domain, target, q, strict)]
        if not overlapping:
            break
        merged_addr, merged_size = target.addr, target.size
        for q in overlapping:
            merged_addr = domain.join(merged_addr, q.addr)
            merged_size = merged_size if q == target else None
            content = domain.join(content, memory.pop(q))
        target = AbsRegion(merged_addr, merged_size)
        logger.debug('Regions merged: region=%s merged=%d', target, len(overlapping))

    if target in memory:
        content = domain.join(content, memory[target])
    memory[target] = content
    return state.with_memory(memory, _assumptions(domain, memory, region, target, addr, call, strict))


def _assumptions(
    domain: PointerDomain,
    memory: Memory,
    written: AbsRegion[AbsPtr],
    target: AbsRegion[AbsPtr],
    addr: int | None,
    call: str | None,
    strict: bool,
) -> frozenset[Assumption]:
    if addr is None:
        return frozenset()
    found = set()
    if not strict:
        for q in memory:
            if q != target and domain.sep(target, q) is SepVerdict.DESIRABLE:
                found.add(Assumption(addr, describe(written), describe(q), call))
    if return_slot_verdict(domain, written) is SepVerdict.DESIRABLE:
        found.add(Assumption(addr, describe(written), describe(return_slot(domain)), call))
    return frozenset(found)


def join_state(domain: PointerDomain, s0: AbsState, s1: AbsState, *, strict: bool = False) -> AbsState:
    """
    Least state covering both inputs.

    Registers and flags join pointwise. Regions present in both join their
    values directly; a region present in only one side is joined with what
    the other side reads there, then written back so that overlapping
    regions merge.
    """
    registers = {name: domain.join(s0.registers[name], s1.registers[name]) for name in REGISTERS_64}
    flags = {name: domain.join(s0.flags[name], s1.flags[name]) for name in FLAGS}
    result = AbsState(registers, flags, dict(s0.memory), s0.assumptions | s1.assumptions, s0.havocked | s1.havocked)

    for region, value in s0.memory.items():
        if region in s1.memory:
            continue
        other, _ = abs_read(domain, s1, region, strict=strict)
        memory = dict(result.memory)
        memory[region] = domain.join(value, other)
        result = result.with_memory(memory)

    for region, value in s1.memory.items():
        stored = result.lookup(region)
        if stored is not None:
            memory = dict(result.memory)
            memory[region] = domain.join(stored, value)
            result = result.with_memory(memory)
            continue
        current, result = abs_read(domain, result, region, strict=strict)
        result = abs_write(domain, result, region, domain.join(current, value), strict=strict)
    return result
