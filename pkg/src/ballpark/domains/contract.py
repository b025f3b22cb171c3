from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum, StrEnum
from typing import TYPE_CHECKING, Protocol

if TYPE_CHECKING:
    from ..mir.models import Operation
    from ..models import Designation


class SepVerdict(IntEnum):
    """
    Strength of a separation claim between two regions; larger is stronger.

    Attributes:
        UNKNOWN: The regions may overlap.
        DESIRABLE: Assumed separate; each use is logged.
        NECESSARY: Separate under the semantics.
    """

    UNKNOWN = 0
    DESIRABLE = 1
    NECESSARY = 2


def weakest(verdicts: list[SepVerdict] | tuple[SepVerdict, ...]) -> SepVerdict:
    return min(verdicts, default=SepVerdict.UNKNOWN)


class DomainMode(StrEnum):
    """Which pointer layers an analysis run may use."""

    FULL = 'full'
    ONLY_C = 'onlyC'
    ONLY_B = 'onlyB'
    ONLY_S = 'onlyS'

    @classmethod
    def parse(cls, text: str) -> DomainMode:
        """
        Accept ``full``, ``C``/``onlyC``, ``B``/``onlyB`` and ``S``/``onlyS``.

        Raises:
            ValueError: On any other spelling.
        """
        key = text.strip()
        aliases = {'C': cls.ONLY_C, 'B': cls.ONLY_B, 'S': cls.ONLY_S}
        if key in aliases:
            return aliases[key]
        for mode in cls:
            if mode.value.lower() == key.lower():
                return mode
        raise ValueError(f'Invalid domain mode: {text!r}. Expected full, C, B, S, onlyC, onlyB or onlyS.')


@dataclass(frozen=True, slots=True)
class AbsRegion[V]:
    """
    Abstract memory region.

    Attributes:
        addr: Abstract address.
        size: Byte count in {1, 2, 4, 8}, or None when unknown.
    """

    addr: V
    size: int | None

    def __str__(self) -> str:
        return f'[{self.addr}, {"?" if self.size is None else self.size}]'


class AbstractDomain[V](Protocol):
    """Operations an abstract value domain provides to the abstract interpreter."""

    @property
    def top(self) -> V: ...

    def from_initial(self, part: str) -> V: ...

    def immediate(self, value: int) -> V: ...

    def literal(self, value: int) -> V: ...

    def asem(self, op: Operation, args: list[V]) -> V: ...

    def join(self, a0: V, a1: V) -> V: ...

    def sep(self, r0: AbsRegion[V], r1: AbsRegion[V]) -> SepVerdict: ...

    def encl(self, r0: AbsRegion[V], r1: AbsRegion[V]) -> bool: ...

    def alias(self, r0: AbsRegion[V], r1: AbsRegion[V]) -> bool: ...

    def designate(self, value: V) -> Designation: ...

    def render(self, value: V) -> str: ...
