from __future__ import annotations

from enum import StrEnum

type Designation = frozenset[MemClass]


class MemClass(StrEnum):
    """
    Coarse memory zone a written address falls into.

    Attributes:
        L: The current stack frame.
        G: A data section or named symbol.
        H: Anything else, heap allocations included.
    """

    L = 'L'
    G = 'G'
    H = 'H'


ALL_CLASSES: Designation = frozenset(MemClass)


def render_designation(designation: Designation) -> str:
    """
    Render a designation in L, G, H order, e.g. ``{L,H}``.

    Args:
        designation: Set of memory classes.

    Returns:
        Canonical text form.
    """
    ordered = [cls.value for cls in MemClass if cls in designation]
    return '{' + ','.join(ordered) + '}'


def parse_designation(text: str) -> Designation:
    """
    Parse a comma-separated class list such as ``L,G`` or ``{L,G}``.

    Args:
        text: Class list.

    Returns:
        Parsed designation.

    Raises:
        ValueError: If a class name is unknown.
    """
    body = text.strip().strip('{}')
    if not body:
        return frozenset()
    try:
        return frozenset(MemClass(part.strip().upper()) for part in body.split(','))
    except ValueError as exc:
        raise ValueError(f'Invalid memory class list: {text!r}. Expected a subset of L,G,H.') from exc
