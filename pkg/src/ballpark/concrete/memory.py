from __future__ import annotations

import bisect
import logging

from dataclasses import dataclass, field

from ..mir.semantics import low_bits, to_word
from .models import TAINT, CVal, Tainted, seeded_word

logger = logging.getLogger(__name__)

# Key prefix for words drawn for never-written memory.
_UNWRITTEN = 0x6D656D


@dataclass(frozen=True)
class Cell:
    start: int
    size: int
    value: CVal

    @property
    def end(self) -> int:
        return self.start + self.size

    def encloses(self, addr: int, size: int) -> bool:
        return self.start <= addr and addr + size <= self.end

    def extract(self, addr: int, size: int) -> CVal:
        """Little-endian bytes ``[addr, addr+size)`` of this cell."""
        if isinstance(self.value, Tainted):
            return TAINT
        return low_bits(self.value >> (8 * (addr - self.start)), 8 * size)


@dataclass
class ConcreteMemory:
    """
    Byte-addressed memory made of non-overlapping cells.

    Each cell records the footprint of the access that produced it, so the
    alignment history is the cell layout itself. Accesses that partially
    overlap existing cells taint them.

    Attributes:
        seed: Seed for values of never-written memory.
    """

    seed: int = 0
    _starts: list[int] = field(default_factory=list, repr=False)
    _cells: dict[int, Cell] = field(default_factory=dict, repr=False)

    def cells(self) -> list[Cell]:
        return [self._cells[start] for start in self._starts]

    def _overlapping(self, addr: int, size: int) -> list[Cell]:
        end = addr + size
        index = max(bisect.bisect_right(self._starts, addr) - 1, 0)
        found = []
        while index < len(self._starts) and self._starts[index] < end:
            cell = self._cells[self._starts[index]]
            if cell.end > addr:
                found.append(cell)
            index += 1
        return found

    def _remove(self, cell: Cell) -> None:
        index = bisect.bisect_left(self._starts, cell.start)
        del self._starts[index]
        del self._cells[cell.start]

    def _insert(self, start: int, size: int, value: CVal) -> None:
        if size <= 0:
            return
        if not isinstance(value, Tainted):
            value = low_bits(value, 8 * size)
        bisect.insort(self._starts, start)
        self._cells[start] = Cell(start, size, value)

    def _taint(self, cells: list[Cell], addr: int, size: int) -> None:
        lo = min(addr, *(cell.start for cell in cells))
        hi = max(addr + size, *(cell.end for cell in cells))
        for cell in cells:
            self._remove(cell)
        self._insert(lo, hi - lo, TAINT)

    def read(self, addr: int, size: int) -> CVal:
        """
        Read ``size`` bytes at ``addr``.

        Returns:
            The stored value, the bytes extracted from an enclosing cell, a
            seed-derived word for unwritten memory, or TAINT when the read
            partially overlaps stored cells.
        """
        addr = to_word(addr)
        cells = self._overlapping(addr, size)
        if not cells:
            value = low_bits(seeded_word(self.seed, _UNWRITTEN, addr, size), 8 * size)
            self._insert(addr, size, value)
            return value
        if len(cells) == 1 and cells[0].encloses(addr, size):
            return cells[0].extract(addr, size)
        logger.debug('Partially overlapping read: addr=%#x size=%d cells=%d', addr, size, len(cells))
        self._taint(cells, addr, size)
        return TAINT

    def write(self, addr: int, size: int, value: CVal) -> None:
        """
        Write ``value`` to ``size`` bytes at ``addr``.

        Writes inside a single cell split it at the written boundaries. Writes
        covering whole cells replace them. Anything else stores TAINT over the
        union of the write and the cells it overlaps.
        """
        addr = to_word(addr)
        end = addr + size
        cells = self._overlapping(addr, size)
        if len(cells) == 1 and cells[0].encloses(addr, size):
            cell = cells[0]
            self._remove(cell)
            self._insert(cell.start, addr - cell.start, cell.extract(cell.start, addr - cell.start))
            self._insert(addr, size, value)
            self._insert(end, cell.end - end, cell.extract(end, cell.end - end))
            return
        if all(addr <= cell.start and cell.end <= end for cell in cells):
            for cell in cells:
                self._remove(cell)
            self._insert(addr, size, value)
            return
        logger.debug('Partially overlapping write: addr=%#x size=%d cells=%d', addr, size, len(cells))
        self._taint(cells, addr, size)
