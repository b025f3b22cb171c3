from .cfg import Known, NeedsResolution, direct_successors, reachable_addresses, successors
from .models import (
    CALLEE_SAVED,
    CALLER_SAVED,
    FLAGS,
    PARAMETER_REGISTERS,
    REGISTERS_64,
    RETURN_REGISTER,
    STACK_REGISTER,
    AddrExpr,
    AllocatorModel,
    Call,
    CJmp,
    Exit,
    ExitModel,
    ExternModel,
    Flag,
    HavocModel,
    ICall,
    IJmp,
    Immediate,
    Jmp,
    Mem,
    MicroInstruction,
    Node,
    Operand,
    Operation,
    Program,
    PureReturnModel,
    Reg,
    Ret,
    Section,
    Terminator,
    is_register,
    parent_register,
)
from .parser import ParseError, load_program, parse_program
from .render import render_program

__all__ = [
    'CALLEE_SAVED',
    'CALLER_SAVED',
    'FLAGS',
    'PARAMETER_REGISTERS',
    'REGISTERS_64',
    'RETURN_REGISTER',
    'STACK_REGISTER',
    'AddrExpr',
    'AllocatorModel',
    'CJmp',
    'Call',
    'Exit',
    'ExitModel',
    'ExternModel',
    'Flag',
    'HavocModel',
    'ICall',
    'IJmp',
    'Immediate',
    'Jmp',
    'Known',
    'Mem',
    'MicroInstruction',
    'NeedsResolution',
    'Node',
    'Operand',
    'Operation',
    'ParseError',
    'Program',
    'PureReturnModel',
    'Reg',
    'Ret',
    'Section',
    'Terminator',
    'direct_successors',
    'is_register',
    'load_program',
    'parent_register',
    'parse_program',
    'reachable_addresses',
    'successors',
]
