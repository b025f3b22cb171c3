"""Optional z3 backend for disjointness of constant computations."""

from __future__ import annotations

import logging

from typing import TYPE_CHECKING, Any

from ..mir.models import Operation
from ..symbolic.expr import Alloc, App, Const, FunRet, Imm, SymExpr, render

if TYPE_CHECKING:
    import z3

logger = logging.getLogger(__name__)


def z3_available() -> bool:
    try:
        import z3  # noqa: F401
    except ImportError:
        return False
    return True


class Z3Disjointness:
    """
    Decide region disjointness by asking z3 for a shared byte address.

    Each leaf becomes a free 64-bit variable, so only facts that hold for
    every entry state are proven.

    Args:
        timeout_ms: Per-query solver timeout; a timeout counts as unproven.

    Raises:
        ImportError: If z3-solver is not installed.
    """

    def __init__(self, timeout_ms: int = 1000) -> None:
        import z3

        self._z3 = z3
        self.timeout_ms = timeout_ms
        self.queries = 0

    def _encode(self, expr: SymExpr, env: dict[str, Any]) -> z3.BitVecRef:
        z3 = self._z3
        match expr:
            case Imm(value):
                return z3.BitVecVal(value & ((1 << 64) - 1), 64)
            case Const() | Alloc() | FunRet():
                key = render(expr)
                if key not in env:
                    env[key] = z3.BitVec(key, 64)
                return env[key]
            case App(op, args):
                xs = [self._encode(arg, env) for arg in args]
                match op:
                    case Operation.ADD:
                        return xs[0] + xs[1] if len(xs) == 2 else sum(xs[1:], xs[0])
                    case Operation.SUB:
                        return xs[0] - xs[1]
                    case Operation.MUL:
                        result = xs[0]
                        for x in xs[1:]:
                            result = result * x
                        return result
                    case Operation.UDIV:
                        return z3.If(xs[1] == 0, z3.BitVecVal(0, 64), z3.UDiv(xs[0], xs[1]))
                    case Operation.AND:
                        return xs[0] & xs[1]
                    case Operation.OR:
                        return xs[0] | xs[1]
                    case Operation.XOR:
                        return xs[0] ^ xs[1]
                    case Operation.SHL:
                        return xs[0] << (xs[1] & 63)
                    case Operation.SHR:
                        return z3.LShR(xs[0], xs[1] & 63)
                    case Operation.SAR:
                        return xs[0] >> (xs[1] & 63)
        key = f'opaque{len(env)}'
        env[key] = z3.BitVec(key, 64)
        return env[key]

    def __call__(self, c0: SymExpr, si0: int, c1: SymExpr, si1: int) -> bool:
        z3 = self._z3
        env: dict[str, Any] = {}
        a0, a1 = self._encode(c0, env), self._encode(c1, env)
        byte = z3.BitVec('shared_byte', 64)
        solver = z3.Solver()
        solver.set('timeout', self.timeout_ms)
        solver.add(z3.ULT(byte - a0, si0), z3.ULT(byte - a1, si1))
        self.queries += 1
        verdict = solver.check()
        logger.debug('z3 disjointness: lhs=%s rhs=%s result=%s', render(c0), render(c1), verdict)
        return verdict == z3.unsat
