from __future__ import annotations

import logging

from collections.abc import Iterable, Sequence
from typing import TYPE_CHECKING

import pandas as pd

from ..absint.models import AbsState, AnalysisResult, WriteEffect, describe
from ..absint.state import protected_verdict
from ..absint.step import Machine, run_instructions
from ..domains.contract import AbsRegion, SepVerdict
from ..domains.values import AbsPtr
from ..mir.models import Call, Program
from ..models import Designation, MemClass, render_designation
from ..utils.config import AnalysisConfig
from .metrics import precision, recall
from .models import FunctionReport, FunctionVerdict, SuspectCall, Variable, Verdict, WriteRecord

if TYPE_CHECKING:
    from ..domains.pointers import PointerDomain
    from .groundtruth import GroundTruth

logger = logging.getLogger(__name__)

_LOCAL = frozenset({MemClass.L})


def write_records(result: AnalysisResult) -> list[WriteRecord]:
    """One record per abstract write, in address order."""
    domain = result.domain
    return [
        WriteRecord(
            addr=w.addr,
            region=describe(w.region),
            designation=domain.designate(w.region.addr),
            value=str(w.value),
            call=w.call,
            assumed=w.assumed,
            return_slot=w.return_slot,
        )
        for w in result.writes
    ]


def designation_map(records: Iterable[WriteRecord]) -> dict[int, Designation]:
    """Union of designations per write address."""
    pa: dict[int, Designation] = {}
    for record in records:
        pa[record.addr] = pa.get(record.addr, frozenset()) | record.designation
    return pa


def _violates(verdict: SepVerdict, strict: bool) -> bool:
    return verdict is SepVerdict.UNKNOWN or (strict and verdict is SepVerdict.DESIRABLE)


def spill_slots(result: AnalysisResult, registers: Sequence[str]) -> dict[AbsRegion[AbsPtr], tuple[str, int]]:
    """
    Exact regions a callee-saved register is stored to with its entry value.

    Returns:
        Slot region to (register, address of the storing write).
    """
    domain = result.domain
    initial = {domain.from_initial(name): name for name in registers}
    slots: dict[AbsRegion[AbsPtr], tuple[str, int]] = {}
    for write in result.writes:
        name = initial.get(write.value)
        if name is not None and domain.alias(write.region, write.region) and write.region not in slots:
            slots[write.region] = (name, write.addr)
    return slots


def _clobbers_slot(domain: PointerDomain, write: WriteEffect, slot: AbsRegion[AbsPtr], keeps: AbsPtr, strict: bool) -> bool:
    if write.region == slot and write.value == keeps:
        return False
    return _violates(protected_verdict(domain, write.region, slot), strict)


def check_function(result: AnalysisResult, config: AnalysisConfig | None = None) -> FunctionVerdict:
    """
    Decide whether the analysis shows the function cannot clobber its return
    address or spilled callee-saved registers.

    Returns:
        ERR with the offending write addresses, otherwise UN with the
        unresolved addresses if any indirection stayed unresolved or the
        analysis was cut short, otherwise OK.
    """
    config = config or AnalysisConfig()
    domain = result.domain
    strict = config.strict

    offending = {w.addr for w in result.writes if _violates(w.return_slot, strict)}
    if offending:
        verdict = FunctionVerdict(
            Verdict.ERR,
            tuple(sorted(offending)),
            'write may overlap the return address',
        )
        logger.info('Verdict: entry=%s verdict=%s witness=%s', result.entry, verdict.verdict, _hex(verdict.witness))
        return verdict

    for slot, (name, _) in spill_slots(result, config.callee_saved).items():
        keeps = domain.from_initial(name)
        clobbering = {w.addr for w in result.writes if _clobbers_slot(domain, w, slot, keeps, strict)}
        offending |= clobbering
        if clobbering:
            logger.debug('Spill slot clobbered: register=%s slot=%s writes=%s', name, slot, _hex(clobbering))
    if offending:
        verdict = FunctionVerdict(
            Verdict.ERR,
            tuple(sorted(offending)),
            'write may overlap a spilled callee-saved register',
        )
    elif result.unresolved:
        verdict = FunctionVerdict(Verdict.UN, tuple(sorted(result.unresolved)), 'unresolved indirection')
    elif not result.complete:
        verdict = FunctionVerdict(Verdict.UN, (), '; '.join(result.diagnostics))
    else:
        verdict = FunctionVerdict(Verdict.OK)
    logger.info('Verdict: entry=%s verdict=%s witness=%s', result.entry, verdict.verdict, _hex(verdict.witness))
    return verdict


def _hex(addrs: Iterable[int]) -> str:
    return ','.join(f'{a:#x}' for a in sorted(addrs)) or '-'


def callee_saved_check(post: AbsState, domain: PointerDomain, registers: Sequence[str]) -> dict[str, bool]:
    """
    Whether each register holds exactly its entry value after returning.

    Args:
        post: Join of the states at every return.
        domain: Domain the state belongs to.
        registers: Registers the calling convention requires preserved.
    """
    return {name: post.registers[name] == domain.from_initial(name) for name in registers}


def find_suspect_calls(
    result: AnalysisResult,
    program: Program,
    config: AnalysisConfig | None = None,
) -> list[SuspectCall]:
    """
    Extern calls that receive a pointer into the current frame.

    Every reached call to an extern is inspected after its node's
    micro-instructions; a parameter register designated only local is
    reported.
    """
    config = config or AnalysisConfig()
    machine = Machine(program, result.domain, config)
    suspects: list[SuspectCall] = []
    for addr in sorted(result.invariants):
        terminator = program.node(addr).terminator
        if not (isinstance(terminator, Call) and isinstance(terminator.target, str)):
            continue
        state = run_instructions(machine, result.invariants[addr], addr)
        for name in config.parameter_registers:
            value = state.registers[name]
            if result.domain.designate(value) == _LOCAL:
                suspects.append(SuspectCall(addr, terminator.target, name, str(value)))
                logger.info(
                    'Suspect call: addr=%#x callee=%s register=%s pointer=%s',
                    addr,
                    terminator.target,
                    name,
                    value,
                )
    return suspects


def variable_regions(result: AnalysisResult) -> list[Variable]:
    """
    Group writes into variables.

    Writes to the same single-address region share a ``var_N`` variable,
    numbered by first access. Other writes are listed unnamed, one entry
    per region.
    """
    domain = result.domain
    grouped: dict[AbsRegion[AbsPtr], list[int]] = {}
    for write in sorted(result.writes, key=lambda w: w.addr):
        grouped.setdefault(write.region, []).append(write.addr)

    variables = []
    counter = 0
    for region, accesses in sorted(grouped.items(), key=lambda kv: (kv[1][0], str(kv[0]))):
        name = None
        if domain.alias(region, region):
            name = f'var_{counter}'
            counter += 1
        variables.append(Variable(name, describe(region), tuple(sorted(set(accesses)))))
    return variables


def writes_frame(records: Sequence[WriteRecord]) -> pd.DataFrame:
    """Per-write table for CSV export."""
    rows = [
        {
            'addr': f'{r.addr:#x}',
            'region': r.region,
            'designation': render_designation(r.designation),
            'value': r.value,
            'call': r.call,
            'assumed': r.assumed,
            'return_slot': r.return_slot.name.lower(),
        }
        for r in records
    ]
    return pd.DataFrame(rows, columns=['addr', 'region', 'designation', 'value', 'call', 'assumed', 'return_slot'])


def build_report(
    result: AnalysisResult,
    program: Program,
    config: AnalysisConfig | None = None,
    truth: GroundTruth | None = None,
) -> FunctionReport:
    """
    Assemble every check for one analyzed function.

    Args:
        result: Analysis of the function.
        program: Program the function belongs to.
        config: Analysis settings.
        truth: Concrete observations; recall and precision are left empty
            without them.
    """
    config = config or AnalysisConfig()
    records = write_records(result)
    report = FunctionReport(
        entry=result.entry,
        writes=records,
        verdict=check_function(result, config),
        callee_saved={} if result.post is None else callee_saved_check(result.post, result.domain, config.callee_saved),
        suspects=find_suspect_calls(result, program, config),
        assumptions=[a.message() for a in result.assumptions],
        variables=variable_regions(result),
        diagnostics=list(result.diagnostics),
    )
    if truth is not None:
        pa = designation_map(records)
        report.recall = recall(pa, truth.classes)
        report.precision = precision(pa, truth.classes)
        report.diagnostics.extend(truth.diagnostics)
        logger.info(
            'Metrics: entry=%s recall=%s precision=%s observed=%d',
            result.entry,
            report.recall,
            report.precision,
            len(truth.classes),
        )
    return report
