from __future__ import annotations

import logging

from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import pandas as pd

from .absint.engine import analyze
from .absint.models import AnalysisResult, WriteEffect
from .concrete.models import RSP0, ExecutionTrace, Tainted, VisitEvent, WriteEvent
from .domains.mutants import mutant_domain_cls
from .domains.pointers import PointerDomain
from .domains.values import Layer
from .mir.models import REGISTERS_64, Program
from .mir.parser import load_program
from .reports.checks import designation_map, write_records
from .reports.groundtruth import GroundTruth, ground_truth
from .reports.metrics import aggregate_metrics, metrics_frame, precision, recall
from .reports.models import percent
from .reports.plotting import plot_precision_by_mode
from .symbolic.expr import RSP0 as RSP0_LEAF
from .symbolic.expr import Alloc, Const, SymExpr, evaluate_expr
from .utils.config import AnalysisConfig

logger = logging.getLogger(__name__)

COMPARED_MODES: tuple[str, ...] = ('full', 'onlyC', 'onlyB', 'onlyS')


@dataclass
class ProgramOutcome:
    """
    Differential result for one program.

    Attributes:
        name: Program name, usually the file stem.
        entry: Analyzed function.
        mode: Domain mode used.
        recall: Percentage of observed writes covered, None without observations.
        precision: Designation precision, None without observations.
        observed: Number of distinct observed write addresses.
        top_share: Percentage of observed writes designated {L,G,H}.
        violations: Simulation mismatches between concrete runs and invariants.
        diagnostics: Problems from analysis or concrete runs.
        table: Per-write comparison.
    """

    name: str
    entry: str
    mode: str
    recall: float | None
    precision: float | None
    observed: int
    top_share: float | None
    violations: list[str] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    table: pd.DataFrame = field(default_factory=pd.DataFrame)

    @property
    def sound(self) -> bool:
        return (self.recall is None or self.recall == 100.0) and not self.violations

    def to_dict(self) -> dict[str, Any]:
        return {
            'name': self.name,
            'entry': self.entry,
            'mode': self.mode,
            'recall': percent(self.recall),
            'precision': percent(self.precision),
            'observed': self.observed,
            'top_share': percent(self.top_share),
            'violations': list(self.violations),
            'diagnostics': list(self.diagnostics),
            'writes': self.table.to_dict(orient='records'),
        }


def valuation(trace: ExecutionTrace, step: int, result: AnalysisResult) -> dict[SymExpr, int]:
    """Concrete values of the leaves an invariant may mention at ``step``."""
    values: dict[SymExpr, int] = {Const(name): value for name, value in trace.initial_registers.items()}
    values[RSP0_LEAF] = RSP0
    for site in result.domain.ctx.alloc_sites:
        addr = trace.allocation_at(site, step)
        if addr is not None:
            values[Alloc(site)] = addr
    return values


def _register_violations(result: AnalysisResult, trace: ExecutionTrace, visit: VisitEvent) -> list[str]:
    state = result.invariants.get(visit.addr)
    if state is None:
        return [f'seed {trace.seed}: {visit.addr:#x} executed but not reached by the analysis']
    env = valuation(trace, visit.step, result)
    found = []
    for name in REGISTERS_64:
        abstract = state.registers[name]
        concrete = visit.registers.get(name)
        if abstract.layer is not Layer.C or isinstance(concrete, Tainted) or concrete is None:
            continue
        candidates = {evaluate_expr(expr, env) for expr in abstract.elements}
        if None in candidates:
            continue
        if concrete not in candidates:
            found.append(f'seed {trace.seed}: {name}={concrete:#x} at {visit.addr:#x} not in {abstract}')
    return found


def _covers(expr: SymExpr, size: int, write: WriteEvent, env: dict[SymExpr, int]) -> bool | None:
    start = evaluate_expr(expr, env)
    if start is None:
        return None
    return start <= write.write_addr and write.write_addr + write.size <= start + size


def _footprint_violations(result: AnalysisResult, trace: ExecutionTrace) -> list[str]:
    domain = result.domain
    by_addr: dict[int, list[WriteEffect]] = {}
    for effect in result.writes:
        by_addr.setdefault(effect.addr, []).append(effect)

    found = []
    for write in trace.top_level_writes():
        effects = by_addr.get(write.addr, [])
        if not effects:
            found.append(f'seed {trace.seed}: write at {write.addr:#x} has no abstract counterpart')
            continue
        env = valuation(trace, write.step, result)
        covered = False
        for effect in effects:
            region = effect.region
            if region.addr.layer is Layer.C and region.size is not None:
                verdicts = [_covers(expr, region.size, write, env) for expr in region.addr.elements]
                if any(v is None for v in verdicts) or any(verdicts):
                    covered = True
            elif write.mem_class in domain.designate(region.addr):
                covered = True
            if covered:
                break
        if not covered:
            found.append(
                f'seed {trace.seed}: write of {write.size} bytes at {write.write_addr:#x} from '
                f'{write.addr:#x} is outside every abstract region there'
            )
    return found


def simulation_violations(result: AnalysisResult, truth: GroundTruth) -> list[str]:
    """
    Check that concrete runs stay inside the computed invariants.

    Constant-computation register values are evaluated under each run's
    entry registers and allocations and must contain the concrete value at
    every visited address. Writes must land inside an abstract region of
    their instruction: exactly for constant computations of known size, by
    memory class otherwise. Values mentioning leaves without a concrete value
    are skipped.
    """
    violations: list[str] = []
    for trace in truth.traces:
        for visit in trace.visits:
            violations.extend(_register_violations(result, trace, visit))
        violations.extend(_footprint_violations(result, trace))
    return violations


def difftest_program(
    program: Program,
    config: AnalysisConfig | None = None,
    *,
    name: str = 'program',
    entry: str | None = None,
    domain_cls: type[PointerDomain] = PointerDomain,
    trace_dir: Path | None = None,
    simulate: bool = True,
) -> ProgramOutcome:
    """
    Compare the analysis of one function against concrete runs.

    Args:
        program: Parsed program.
        config: Settings; its seeds drive the concrete runs.
        name: Label for reports and trace files.
        entry: Function to test; the program's default entry when omitted.
        domain_cls: Pointer domain implementation, e.g. a mutant.
        trace_dir: When set, one JSON-lines trace per seed is written here.
        simulate: Also run the simulation check.

    Returns:
        ProgramOutcome with metrics, violations and the per-write table.
    """
    config = config or AnalysisConfig()
    entry = entry or program.default_entry()
    result = analyze(program, entry, config, domain_cls=domain_cls)
    truth = ground_truth(program, entry, config.seeds, step_budget=config.step_budget, record_visits=simulate)

    pa = designation_map(write_records(result))
    table = metrics_frame(pa, truth.classes)
    observed = len(truth.classes)
    top_share = 100.0 * float(table['top'].sum()) / observed if observed else None
    outcome = ProgramOutcome(
        name=name,
        entry=entry,
        mode=config.domain_mode,
        recall=recall(pa, truth.classes),
        precision=precision(pa, truth.classes),
        observed=observed,
        top_share=top_share,
        diagnostics=[*result.diagnostics, *truth.diagnostics],
        table=table,
    )
    if simulate:
        outcome.violations = simulation_violations(result, truth)

    if trace_dir is not None:
        trace_dir.mkdir(parents=True, exist_ok=True)
        for trace in truth.traces:
            (trace_dir / f'{name}.seed{trace.seed}.jsonl').write_text(trace.to_jsonl(), encoding='utf-8')

    if not outcome.sound:
        logger.warning(
            'Soundness violation: program=%s recall=%s violations=%d',
            name,
            outcome.recall,
            len(outcome.violations),
        )
    logger.info(
        'Program tested: program=%s mode=%s recall=%s precision=%s observed=%d',
        name,
        outcome.mode,
        outcome.recall,
        outcome.precision,
        observed,
    )
    return outcome


def outcomes_frame(outcomes: Iterable[ProgramOutcome]) -> pd.DataFrame:
    rows = [
        {
            'program': o.name,
            'mode': o.mode,
            'recall': o.recall,
            'precision': o.precision,
            'writes': o.observed,
            'top_share': o.top_share,
            'violations': len(o.violations),
        }
        for o in outcomes
    ]
    return pd.DataFrame(rows, columns=['program', 'mode', 'recall', 'precision', 'writes', 'top_share', 'violations'])


def run_difftest(
    paths: Sequence[Path],
    config: AnalysisConfig | None = None,
    *,
    mutant: str | None = None,
    trace_dir: Path | None = None,
    workers: int = 1,
) -> list[ProgramOutcome]:
    """
    Differential-test every program file.

    Programs are independent; with ``workers > 1`` they run on a thread
    pool and results keep the order of ``paths``.

    Raises:
        ParseError: If a file does not parse.
        OSError: If a file cannot be read.
    """
    config = config or AnalysisConfig()
    domain_cls = mutant_domain_cls(mutant) if mutant else PointerDomain
    programs = [(path.stem, load_program(path)) for path in paths]

    def _one(item: tuple[str, Program]) -> ProgramOutcome:
        name, program = item
        return difftest_program(program, config, name=name, domain_cls=domain_cls, trace_dir=trace_dir)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_one, programs))
    return [_one(item) for item in programs]


def compare_modes(
    paths: Sequence[Path],
    config: AnalysisConfig | None = None,
    *,
    modes: Sequence[str] = COMPARED_MODES,
    out_dir: Path | None = None,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Run the same corpus under several domain modes.

    Args:
        paths: Program files.
        config: Base settings; ``domain_mode`` is overridden per mode.
        modes: Modes to compare.
        out_dir: When set, ``modes.csv`` and ``precision_by_mode.png`` are
            written here.
        workers: Thread pool size per mode.

    Returns:
        One row per mode with program-averaged recall, precision and TOP
        share, plus write-weighted figures.
    """
    config = config or AnalysisConfig()
    rows = []
    for mode in modes:
        outcomes = run_difftest(paths, config.merged(domain_mode=mode), workers=workers)
        frame = outcomes_frame(outcomes)
        summary = aggregate_metrics(frame)
        observed = frame[frame['writes'] > 0]
        rows.append({
            'mode': mode,
            **summary,
            'top_share': float(observed['top_share'].mean()) if not observed.empty else None,
            'programs': len(frame),
            'violations': int(frame['violations'].sum()),
        })
        logger.info('Mode compared: mode=%s precision=%s recall=%s', mode, summary['precision'], summary['recall'])

    summary_df = pd.DataFrame(rows)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        summary_df.to_csv(out_dir / 'modes.csv', index=False)
        plottable = summary_df.dropna(subset=['precision']).fillna({'top_share': 0.0})
        if not plottable.empty:
            plot_precision_by_mode(plottable, out_dir / 'precision_by_mode.png')
    return summary_df

