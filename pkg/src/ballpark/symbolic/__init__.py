from .bases import (
    AllocBase,
    Base,
    BaseSrc,
    ConstantSrc,
    FunctionContext,
    FunSrc,
    GlobalBase,
    Source,
    StackPointerBase,
    SymbolBase,
    bases_of,
    sources_of,
)
from .expr import (
    RSP0,
    Alloc,
    App,
    Const,
    Deref,
    FunRet,
    Imm,
    StatePart,
    SymExpr,
    apply,
    evaluate_expr,
    imm,
    initial,
    is_constant_computation,
    leaves,
    linear_form,
    normalize,
    render,
)

__all__ = [
    'RSP0',
    'Alloc',
    'AllocBase',
    'App',
    'Base',
    'BaseSrc',
    'Const',
    'ConstantSrc',
    'Deref',
    'FunRet',
    'FunSrc',
    'FunctionContext',
    'GlobalBase',
    'Imm',
    'Source',
    'StackPointerBase',
    'StatePart',
    'SymExpr',
    'SymbolBase',
    'apply',
    'bases_of',
    'evaluate_expr',
    'imm',
    'initial',
    'is_constant_computation',
    'leaves',
    'linear_form',
    'normalize',
    'render',
    'sources_of',
]
