from __future__ import annotations

import dataclasses
import tomllib

from pathlib import Path
from typing import TYPE_CHECKING, Any, Literal

from pydantic import ConfigDict, Field, field_validator, model_validator
from pydantic.dataclasses import dataclass

from ..domains.contract import DomainMode, SepVerdict
from ..domains.pointers import Caps
from ..mir.models import CALLEE_SAVED, CALLER_SAVED, PARAMETER_REGISTERS, REGISTERS_64
from ..models import Designation, MemClass, parse_designation

if TYPE_CHECKING:
    import argparse

DomainModeName = Literal['full', 'onlyC', 'onlyB', 'onlyS']
DesirableMode = Literal['assume', 'strict']
AllocSeparation = Literal['necessary', 'desirable']
SolverName = Literal['none', 'z3']


@dataclass(
    config=ConfigDict(
        frozen=True,
        str_strip_whitespace=True,
    )
)
class AnalysisConfig:
    """
    Validated settings shared by analysis, differential testing and checks.

    Attributes:
        domain_mode: Layers the pointer domain may use.
        cap_c: Maximum number of constant computations in a C value.
        cap_b: Maximum number of bases in a B value.
        cap_s: Maximum number of sources in an S value.
        desirable_mode: ``assume`` treats desirable separation as separate and
            logs it; ``strict`` treats it as possible overlap.
        alloc_alloc_separation: Verdict between allocations from different sites.
        frame_cap: Bytes below the entry stack pointer considered the current frame.
        step_budget: Maximum state visits (analysis) or steps (concrete runs).
        seeds: Seeds for concrete runs.
        parameter_registers: Registers checked for local pointers at extern calls.
        callee_saved: Registers that must be preserved by a function.
        caller_saved: Registers clobbered by internal and indirect calls.
        internal_call_may_write: Memory classes internal calls may overwrite.
        solver: Extra disjointness backend for constant computations.
    """

    domain_mode: DomainModeName = 'full'
    cap_c: int = 10
    cap_b: int = 5
    cap_s: int = 250
    desirable_mode: DesirableMode = 'assume'
    alloc_alloc_separation: AllocSeparation = 'necessary'
    frame_cap: int = 0x10000
    step_budget: int = 1_000_000
    seeds: list[int] = Field(default_factory=lambda: list(range(8)))
    parameter_registers: list[str] = Field(default_factory=lambda: list(PARAMETER_REGISTERS))
    callee_saved: list[str] = Field(default_factory=lambda: list(CALLEE_SAVED))
    caller_saved: list[str] = Field(default_factory=lambda: list(CALLER_SAVED))
    internal_call_may_write: str = 'H,G'
    solver: SolverName = 'none'

    @field_validator('domain_mode', mode='before')
    @classmethod
    def _parse_domain_mode(cls, value: object) -> object:
        """
        Accept the short aliases ``C``, ``B`` and ``S`` for restricted modes.

        Raises:
            ValueError: If the name is not a known mode.
        """
        if isinstance(value, DomainMode):
            return str(value)
        if isinstance(value, str):
            return str(DomainMode.parse(value))
        return value

    @field_validator('cap_c', 'cap_b', 'cap_s')
    @classmethod
    def _validate_cap(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f'Invalid cap {value}. Caps must be at least 1.')
        return value

    @field_validator('frame_cap', 'step_budget')
    @classmethod
    def _validate_positive(cls, value: int) -> int:
        if value <= 0:
            raise ValueError(f'Invalid value {value}. Must be positive.')
        return value

    @field_validator('seeds')
    @classmethod
    def _validate_seeds(cls, value: list[int]) -> list[int]:
        """
        Validate that at least one non-negative seed is provided.

        Raises:
            ValueError: If the list is empty or holds a negative seed.
        """
        if not value:
            raise ValueError('At least one seed must be provided.')
        for seed in value:
            if seed < 0:
                raise ValueError(f'Invalid seed {seed}. Seeds must be non-negative.')
        return value

    @field_validator('parameter_registers', 'callee_saved', 'caller_saved')
    @classmethod
    def _validate_registers(cls, value: list[str]) -> list[str]:
        names = [name.strip().lower() for name in value]
        unknown = [name for name in names if name not in REGISTERS_64]
        if unknown:
            raise ValueError(f'Unknown registers: {unknown}. Expected 64-bit register names.')
        return names

    @field_validator('internal_call_may_write')
    @classmethod
    def _validate_may_write(cls, value: str) -> str:
        parse_designation(value)
        return value

    @model_validator(mode='after')
    def _validate_conventions(self) -> AnalysisConfig:
        """
        Validate that no register is both callee-saved and caller-saved.

        Raises:
            ValueError: If the calling convention is contradictory.
        """
        both = set(self.callee_saved) & set(self.caller_saved)
        if both:
            raise ValueError(f'Registers cannot be both callee-saved and caller-saved: {sorted(both)}')
        return self

    @property
    def mode(self) -> DomainMode:
        return DomainMode(self.domain_mode)

    @property
    def caps(self) -> Caps:
        return Caps(c=self.cap_c, b=self.cap_b, s=self.cap_s)

    @property
    def strict(self) -> bool:
        return self.desirable_mode == 'strict'

    @property
    def alloc_verdict(self) -> SepVerdict:
        return SepVerdict.NECESSARY if self.alloc_alloc_separation == 'necessary' else SepVerdict.DESIRABLE

    @property
    def may_write(self) -> Designation:
        return parse_designation(self.internal_call_may_write) or frozenset({MemClass.H, MemClass.G})

    def merged(self, **overrides: Any) -> AnalysisConfig:
        """Copy of this config with the given non-None fields replaced."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_file(cls, path: str | Path) -> AnalysisConfig:
        """
        Load a flat TOML file of ``key = value`` settings.

        Raises:
            OSError: If the file cannot be read.
            ValueError: If it holds unknown keys or invalid values.
        """
        with Path(path).open('rb') as f:
            data = tomllib.load(f)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f'Unknown configuration keys in {path}: {unknown}')
        return cls(**data)

    @classmethod
    def from_namespace(cls, args: argparse.Namespace) -> AnalysisConfig:
        """
        Build a validated config from parsed CLI arguments.

        Values from ``--config`` are loaded first; flags given on the command
        line override them.

        Args:
            args: Parsed CLI arguments.

        Returns:
            Validated AnalysisConfig instance.
        """
        config_path = getattr(args, 'config', None)
        base = cls.from_file(config_path) if config_path else cls()
        seeds = getattr(args, 'seeds', None)
        strict = getattr(args, 'strict_separation', False)
        return base.merged(
            domain_mode=getattr(args, 'domain', None),
            step_budget=getattr(args, 'step_budget', None),
            frame_cap=getattr(args, 'frame_cap', None),
            seeds=list(range(seeds)) if isinstance(seeds, int) else seeds,
            desirable_mode='strict' if strict else None,
            solver=getattr(args, 'solver', None),
        )
