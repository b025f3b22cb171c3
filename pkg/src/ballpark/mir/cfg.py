"""Control-flow edges of a program."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .models import Call, CJmp, ICall, IJmp, Jmp, Operand, Program, Terminator


def direct_successors(term: Terminator) -> tuple[int, ...]:
    """
    Successor addresses that are known without resolving an operand.

    Calls contribute their return address only; the callee belongs to another
    function. Indirect jumps contribute nothing.
    """
    match term:
        case Jmp(target):
            return (target,)
        case CJmp(_, then, orelse):
            return (then,) if then == orelse else (then, orelse)
        case Call(_, ret) if ret is not None:
            return (ret,)
        case ICall(_, ret):
            return (ret,)
    return ()


def reachable_addresses(program: Program, start: int) -> set[int]:
    """
    Addresses reachable from ``start`` over direct intraprocedural edges.

    Args:
        program: Parsed program.
        start: Function entry address.

    Returns:
        Set of instruction addresses, ``start`` included.
    """
    seen = {start}
    queue = deque([start])
    while queue:
        addr = queue.popleft()
        for succ in direct_successors(program.node(addr).terminator):
            if succ not in seen:
                seen.add(succ)
                queue.append(succ)
    return seen


@dataclass(frozen=True)
class Known:
    targets: frozenset[int]


@dataclass(frozen=True)
class NeedsResolution:
    operand: Operand


def successors(program: Program, addr: int) -> Known | NeedsResolution:
    """
    Control-flow successors of the node at ``addr``.

    Raises:
        ValueError: If ``addr`` is not in the program.
    """
    term = program.node(addr).terminator
    match term:
        case ICall(operand, _) | IJmp(operand):
            return NeedsResolution(operand)
    return Known(frozenset(direct_successors(term)))
