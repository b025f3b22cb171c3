"""Total 64-bit semantics of the micro-operations on untainted words."""

from __future__ import annotations

from .models import Operation

WORD_BITS = 64
WORD_MASK = (1 << WORD_BITS) - 1


def to_word(value: int) -> int:
    return value & WORD_MASK


def to_signed(value: int) -> int:
    value &= WORD_MASK
    return value - (1 << WORD_BITS) if value >> (WORD_BITS - 1) else value


def low_bits(value: int, width: int) -> int:
    return value & ((1 << width) - 1)


def sign_extend(value: int, width: int) -> int:
    value = low_bits(value, width)
    if value >> (width - 1):
        value -= 1 << width
    return to_word(value)


def _width(value: int) -> int:
    width = value & WORD_MASK
    if not 1 <= width <= WORD_BITS:
        raise ValueError(f'bit width must be in 1..64, got {width}')
    return width


def evaluate(op: Operation, args: list[int] | tuple[int, ...]) -> int:
    """
    Apply a micro-operation to concrete words.

    Args:
        op: Operation to apply.
        args: Unsigned or signed ints; reduced modulo 2**64 first.

    Returns:
        The 64-bit result as an unsigned int. Flag operations return 0 or 1.

    Raises:
        ValueError: On an arity mismatch or an invalid bit width.
    """
    if len(args) != op.arity:
        raise ValueError(f'{op} expects {op.arity} operand(s), got {len(args)}')

    a = to_word(args[0])
    if op is Operation.MOV:
        return a
    b = to_word(args[1])

    match op:
        case Operation.ADD:
            return to_word(a + b)
        case Operation.SUB:
            return to_word(a - b)
        case Operation.MUL:
            return to_word(a * b)
        case Operation.UDIV:
            return 0 if b == 0 else a // b
        case Operation.AND:
            return a & b
        case Operation.OR:
            return a | b
        case Operation.XOR:
            return a ^ b
        case Operation.SHL:
            return to_word(a << (b & 63))
        case Operation.SHR:
            return a >> (b & 63)
        case Operation.SAR:
            return to_word(to_signed(a) >> (b & 63))
        case Operation.SEXT:
            return sign_extend(a, _width(b))
        case Operation.ZEXT | Operation.MASK:
            return low_bits(a, _width(b))
        case Operation.EQ:
            return int(a == b)
        case Operation.ULT:
            return int(a < b)
        case Operation.SLT:
            return int(to_signed(a) < to_signed(b))

    raise ValueError(f'unsupported operation {op!r}')
