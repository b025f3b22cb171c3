from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from ..symbolic.bases import Base, Source
from ..symbolic.expr import SymExpr, normalize, render


class Layer(IntEnum):
    C = 0
    B = 1
    S = 2
    TOP = 3


type Element = SymExpr | Base | Source


def element_key(element: Element) -> str:
    if isinstance(element, Base | Source):
        return str(element)
    return render(element)


@dataclass(frozen=True, slots=True)
class AbsPtr:
    """
    Layered abstract pointer.

    Attributes:
        layer: C (constant computations), B (bases), S (sources) or TOP.
        elements: Non-empty set of layer elements; empty for TOP.
    """

    layer: Layer
    elements: frozenset = frozenset()

    @property
    def is_top(self) -> bool:
        return self.layer is Layer.TOP

    def sorted_elements(self) -> list[Element]:
        return sorted(self.elements, key=element_key)

    def __str__(self) -> str:
        if self.is_top:
            return 'TOP'
        return f'{self.layer.name}{{{", ".join(element_key(e) for e in self.sorted_elements())}}}'


TOP = AbsPtr(Layer.TOP)


def c_ptr(*exprs: SymExpr) -> AbsPtr:
    return AbsPtr(Layer.C, frozenset(normalize(e) for e in exprs))


def b_ptr(*bases: Base) -> AbsPtr:
    return AbsPtr(Layer.B, frozenset(bases))


def s_ptr(*sources: Source) -> AbsPtr:
    return AbsPtr(Layer.S, frozenset(sources))
