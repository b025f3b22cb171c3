from .interpreter import ConcreteFault, ConcreteState, classify, concrete_step, run_concrete
from .memory import Cell, ConcreteMemory
from .models import (
    HEAP_BASE,
    HEAP_STRIDE,
    RSP0,
    STACK_WINDOW,
    TAINT,
    CVal,
    ExecutionTrace,
    Exited,
    Fault,
    Next,
    Returned,
    StepOutcome,
    Tainted,
    VisitEvent,
    WriteEvent,
    seeded_word,
)

__all__ = [
    'HEAP_BASE',
    'HEAP_STRIDE',
    'RSP0',
    'STACK_WINDOW',
    'TAINT',
    'CVal',
    'Cell',
    'ConcreteFault',
    'ConcreteMemory',
    'ConcreteState',
    'ExecutionTrace',
    'Exited',
    'Fault',
    'Next',
    'Returned',
    'StepOutcome',
    'Tainted',
    'VisitEvent',
    'WriteEvent',
    'classify',
    'concrete_step',
    'run_concrete',
    'seeded_word',
]
