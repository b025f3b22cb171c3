from __future__ import annotations

import logging

from collections.abc import Iterable
from dataclasses import dataclass, field

from ..concrete.interpreter import run_concrete
from ..concrete.models import DEFAULT_STEP_BUDGET, ExecutionTrace
from ..mir.models import Program
from ..models import Designation

logger = logging.getLogger(__name__)


@dataclass
class GroundTruth:
    """
    Memory classes observed by concrete runs.

    Attributes:
        classes: Write instruction address to the union of observed classes.
        traces: One trace per seed, in seed order.
        diagnostics: Problems such as every run faulting.
    """

    classes: dict[int, Designation] = field(default_factory=dict)
    traces: list[ExecutionTrace] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    @property
    def observed(self) -> frozenset[int]:
        return frozenset(self.classes)


def ground_truth(
    program: Program,
    entry: str,
    seeds: Iterable[int],
    *,
    step_budget: int = DEFAULT_STEP_BUDGET,
    record_visits: bool = False,
) -> GroundTruth:
    """
    Run ``entry`` once per seed and classify the writes of its own frame.

    Only writes performed at call depth 0 count. Writes from runs that fault
    part-way are kept: they happened before the fault.

    Args:
        program: Parsed program.
        entry: Function to run.
        seeds: Run seeds; must be non-empty.
        step_budget: Step limit per run.
        record_visits: Keep register snapshots for simulation checks.

    Returns:
        GroundTruth. When every run faults the class map is empty and a
        diagnostic is recorded.

    Raises:
        ValueError: If no seed is given.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError('ground truth needs at least one seed')

    truth = GroundTruth()
    for seed in seeds:
        trace = run_concrete(program, entry, seed, step_budget=step_budget, record_visits=record_visits)
        truth.traces.append(trace)
        for write in trace.top_level_writes():
            truth.classes[write.addr] = truth.classes.get(write.addr, frozenset()) | {write.mem_class}

    faulted = [t for t in truth.traces if t.faulted]
    if len(faulted) == len(truth.traces):
        reasons = sorted({t.reason or t.status for t in faulted})
        message = f'all {len(faulted)} runs of {entry} faulted: {"; ".join(reasons)}'
        truth.classes.clear()
        truth.diagnostics.append(message)
        logger.warning('Ground truth empty: entry=%s reason=%s', entry, message)
    elif faulted:
        logger.info('Some runs faulted: entry=%s faulted=%d runs=%d', entry, len(faulted), len(truth.traces))

    logger.debug('Ground truth collected: entry=%s writes=%d runs=%d', entry, len(truth.classes), len(truth.traces))
    return truth
