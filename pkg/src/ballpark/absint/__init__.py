from .engine import analyze, call_context, make_domain
from .models import AbsState, AnalysisResult, Assumption, StepEffects, WriteEffect, describe
from .state import (
    abs_read,
    abs_write,
    initial_state,
    join_state,
    protected_verdict,
    return_slot,
    return_slot_verdict,
)
from .step import Machine, abs_step, address, resolve_indirect, run_instructions

__all__ = [
    'AbsState',
    'AnalysisResult',
    'Assumption',
    'Machine',
    'StepEffects',
    'WriteEffect',
    'abs_read',
    'abs_step',
    'abs_write',
    'address',
    'analyze',
    'call_context',
    'describe',
    'initial_state',
    'join_state',
    'make_domain',
    'protected_verdict',
    'resolve_indirect',
    'return_slot',
    'return_slot_verdict',
    'run_instructions',
]
