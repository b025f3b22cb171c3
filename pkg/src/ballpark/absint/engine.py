from __future__ import annotations

import logging

from collections import deque
from collections.abc import Mapping

from ..domains.contract import AbsRegion
from ..domains.pointers import PointerDomain
from ..domains.smt import Z3Disjointness, z3_available
from ..domains.values import AbsPtr
from ..mir.models import Program
from ..models import MemClass
from ..symbolic.bases import FunctionContext
from ..utils.config import AnalysisConfig
from .models import AbsState, AnalysisResult, Assumption
from .state import initial_state, join_state
from .step import Machine, abs_step

logger = logging.getLogger(__name__)

type PreState = Mapping[AbsRegion[AbsPtr], AbsPtr]

_PRE_STATE_CLASSES = frozenset({MemClass.G, MemClass.H})


def make_domain(
    program: Program,
    entry_addr: int,
    config: AnalysisConfig,
    domain_cls: type[PointerDomain] = PointerDomain,
) -> PointerDomain:
    """
    Build the pointer domain for one function from the settings.

    Raises:
        ValueError: If the z3 backend is requested but not installed.
    """
    disjointness = None
    if config.solver == 'z3':
        if not z3_available():
            raise ValueError('Solver z3 requested but z3-solver is not installed. Install ballpark[smt].')
        disjointness = Z3Disjointness()
    return domain_cls(
        FunctionContext.for_function(program, entry_addr),
        mode=config.mode,
        caps=config.caps,
        alloc_alloc=config.alloc_verdict,
        frame_cap=config.frame_cap,
        disjointness=disjointness,
    )


def _import_pre_state(domain: PointerDomain, pre_state: PreState) -> dict[AbsRegion[AbsPtr], AbsPtr]:
    imported: dict[AbsRegion[AbsPtr], AbsPtr] = {}
    for region, value in pre_state.items():
        if region.addr.is_top or domain.is_caller_relative(region.addr):
            continue
        addr = domain.fit(region.addr)
        content = domain.top if domain.is_caller_relative(value) else domain.fit(value)
        imported[AbsRegion(addr, region.size)] = content
    return imported


def analyze(
    program: Program,
    entry: str,
    config: AnalysisConfig | None = None,
    *,
    pre_state: PreState | None = None,
    domain_cls: type[PointerDomain] = PointerDomain,
) -> AnalysisResult:
    """
    Compute the invariant states of one function by worklist iteration.

    Each address stores the join of all states reaching it; an address is
    revisited only when that join changes its canonical rendering. Once
    stable, every reached node is stepped once more from its invariant to
    collect writes, assumptions, resolved edges and the post-state.

    Args:
        program: Parsed program.
        entry: Name of the function to analyze.
        config: Analysis settings; defaults apply when omitted.
        pre_state: Memory regions known at entry, e.g. from ``call_context``.
        domain_cls: Pointer domain implementation.

    Returns:
        AnalysisResult. When the visit budget runs out the result is partial
        and ``diagnostics`` says so.
    """
    config = config or AnalysisConfig()
    entry_addr = program.entry_addr(entry)
    domain = make_domain(program, entry_addr, config, domain_cls)
    machine = Machine(program, domain, config)
    strict = config.strict

    start = initial_state(domain, _import_pre_state(domain, pre_state) if pre_state else None)
    result = AnalysisResult(entry=entry, entry_addr=entry_addr, domain=domain)
    invariants: dict[int, AbsState] = {entry_addr: start}
    canonical: dict[int, str] = {entry_addr: start.canonical()}
    worklist = deque([entry_addr])
    queued = {entry_addr}

    while worklist:
        if result.visits >= config.step_budget:
            message = f'visit budget of {config.step_budget} exhausted with {len(worklist)} addresses pending'
            result.diagnostics.append(message)
            logger.warning('Analysis incomplete: entry=%s reason=%s', entry, message)
            break
        addr = worklist.popleft()
        queued.discard(addr)
        result.visits += 1
        effects = abs_step(machine, invariants[addr], addr)
        for succ, state in effects.successors:
            stored = invariants.get(succ)
            if stored is None:
                updated = state
            else:
                updated = join_state(domain, stored, state, strict=strict)
            rendered = updated.canonical()
            if canonical.get(succ) == rendered:
                continue
            invariants[succ] = updated
            canonical[succ] = rendered
            if succ not in queued:
                worklist.append(succ)
                queued.add(succ)

    returned: list[AbsState] = []
    assumptions: set[Assumption] = set()
    for addr in sorted(invariants):
        effects = abs_step(machine, invariants[addr], addr)
        result.writes.extend(effects.writes)
        if effects.unresolved:
            result.unresolved.add(addr)
            logger.warning('Unresolved indirection: entry=%s addr=%#x', entry, addr)
        if effects.targets is not None:
            result.resolved_edges[addr] = effects.targets
        if effects.returned is not None:
            returned.append(effects.returned)
        assumptions.update(effects.assumptions)

    result.invariants = invariants
    result.assumptions = sorted(assumptions, key=lambda a: (a.addr, a.region, a.other, a.call or ''))
    for state in returned:
        result.post = state if result.post is None else join_state(domain, result.post, state, strict=strict)

    logger.info(
        'Fixpoint reached: entry=%s addresses=%d visits=%d writes=%d unresolved=%d assumptions=%d',
        entry,
        len(invariants),
        result.visits,
        len(result.writes),
        len(result.unresolved),
        len(result.assumptions),
    )
    return result


def call_context(result: AnalysisResult, call_addr: int) -> dict[AbsRegion[AbsPtr], AbsPtr]:
    """
    Memory a callee may rely on when called from ``call_addr``.

    Keeps the regions of the caller's invariant at the call site that are
    designated global or heap only.

    Raises:
        ValueError: If ``call_addr`` was not reached by the analysis.
    """
    try:
        state = result.invariants[call_addr]
    except KeyError:
        raise ValueError(f'address {call_addr:#x} was not reached in {result.entry}') from None
    domain = result.domain
    return {
        region: value
        for region, value in state.memory.items()
        if not region.addr.is_top and domain.designate(region.addr) <= _PRE_STATE_CLASSES
    }
