from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

from ..domains.contract import SepVerdict
from ..models import Designation, render_designation


class Verdict(StrEnum):
    """
    Outcome of checking one function.

    Attributes:
        OK: Every write is separate from the protected slots and every
            indirection was resolved.
        UN: Writes are safe on every resolved path, but some indirection
            could not be resolved.
        ERR: Some write may clobber the return address or a spilled
            callee-saved register.
    """

    OK = 'OK'
    UN = 'UN'
    ERR = 'ERR'


@dataclass(frozen=True)
class WriteRecord:
    """
    Observation for one abstract memory write.

    Attributes:
        addr: Instruction address.
        region: Rendered written region.
        designation: Memory classes the write may touch.
        value: Rendered written value.
        call: Extern performing the write, if any.
        assumed: Whether a desirable separation was relied on.
        return_slot: Separation verdict against the return-address slot.
    """

    addr: int
    region: str
    designation: Designation
    value: str
    call: str | None = None
    assumed: bool = False
    return_slot: SepVerdict = SepVerdict.NECESSARY

    def to_dict(self) -> dict[str, Any]:
        return {
            'addr': f'{self.addr:#x}',
            'region': self.region,
            'designation': render_designation(self.designation),
            'value': self.value,
            'call': self.call,
            'assumed': self.assumed,
            'return_slot': self.return_slot.name.lower(),
        }


@dataclass(frozen=True)
class FunctionVerdict:
    """
    Verdict with its witness.

    Attributes:
        verdict: OK, UN or ERR.
        witness: Offending write addresses for ERR, unresolved addresses
            for UN, empty for OK.
        reason: Human-readable explanation.
    """

    verdict: Verdict
    witness: tuple[int, ...] = ()
    reason: str = ''

    def to_dict(self) -> dict[str, Any]:
        return {
            'verdict': str(self.verdict),
            'witness': [f'{addr:#x}' for addr in self.witness],
            'reason': self.reason,
        }


@dataclass(frozen=True)
class SuspectCall:
    """An extern call receiving a pointer into the current frame."""

    addr: int
    callee: str
    register: str
    pointer: str

    def to_dict(self) -> dict[str, Any]:
        return {
            'addr': f'{self.addr:#x}',
            'callee': self.callee,
            'register': self.register,
            'pointer': self.pointer,
        }


@dataclass(frozen=True)
class Variable:
    """
    Writes that always touch the same region.

    Attributes:
        name: ``var_N`` for a region with a single concrete address, None for
            accesses whose region may denote several addresses.
        region: Rendered region.
        accesses: Instruction addresses writing the region.
    """

    name: str | None
    region: str
    accesses: tuple[int, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            'name': self.name,
            'region': self.region,
            'accesses': [f'{addr:#x}' for addr in self.accesses],
        }


def percent(value: float | None) -> float | None:
    """Round a percentage to one decimal for reports."""
    return None if value is None else round(value, 1)


@dataclass
class FunctionReport:
    """
    Everything reported for one analyzed function.

    Attributes:
        entry: Function name.
        writes: One record per abstract write.
        verdict: OK/UN/ERR verdict.
        callee_saved: Register name to whether it is preserved.
        suspects: Extern calls receiving local pointers.
        assumptions: Messages for desirable separations relied on.
        recall: Percentage of observed writes covered, when ground truth exists.
        precision: Average designation precision, when ground truth exists.
        variables: Write groups by region.
        diagnostics: Non-fatal problems from analysis or ground truth.
    """

    entry: str
    writes: list[WriteRecord]
    verdict: FunctionVerdict
    callee_saved: dict[str, bool] = field(default_factory=dict)
    suspects: list[SuspectCall] = field(default_factory=list)
    assumptions: list[str] = field(default_factory=list)
    recall: float | None = None
    precision: float | None = None
    variables: list[Variable] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            'entry': self.entry,
            'writes': [w.to_dict() for w in self.writes],
            'recall': percent(self.recall),
            'precision': percent(self.precision),
            'verdict': str(self.verdict.verdict),
            'witness': self.verdict.to_dict()['witness'],
            'reason': self.verdict.reason,
            'callee_saved': dict(self.callee_saved),
            'suspects': [s.to_dict() for s in self.suspects],
            'assumptions': list(self.assumptions),
            'variables': [v.to_dict() for v in self.variables],
            'diagnostics': list(self.diagnostics),
        }
