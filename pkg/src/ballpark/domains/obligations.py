from __future__ import annotations

import logging

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from ..mir.semantics import to_word
from ..symbolic.bases import FunSrc
from ..symbolic.expr import App, evaluate_expr, render
from .contract import AbsRegion, DomainMode, SepVerdict
from .membership import concretizes
from .pointers import Caps, PointerDomain
from .sampling import KIT_CONTEXT, Sampler, kit_valuation
from .values import AbsPtr, Layer

if TYPE_CHECKING:
    from .pointers import Disjointness

logger = logging.getLogger(__name__)

# None: premise did not hold. Empty string: passed. Otherwise the counterexample.
type Check = Callable[[PointerDomain, Sampler], str | None]


@dataclass
class ObligationResult:
    """
    Outcome of one proof obligation.

    Attributes:
        name: Obligation identifier.
        cases: Cases whose premise held and were checked.
        attempts: Cases drawn, including those with a false premise.
        failures: Checked cases that violated the obligation.
        first_counterexample: Rendering of the first violation.
    """

    name: str
    cases: int = 0
    attempts: int = 0
    failures: int = 0
    first_counterexample: str | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def merge(self, other: ObligationResult) -> ObligationResult:
        return ObligationResult(
            name=self.name,
            cases=self.cases + other.cases,
            attempts=self.attempts + other.attempts,
            failures=self.failures + other.failures,
            first_counterexample=self.first_counterexample or other.first_counterexample,
        )


@dataclass
class ObligationReport:
    """Per-obligation results of one kit run; ``merge`` combines shards."""

    mode: DomainMode
    budget: int
    results: dict[str, ObligationResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results.values())

    def failed(self) -> list[str]:
        return [name for name, result in self.results.items() if not result.passed]

    def merge(self, other: ObligationReport) -> ObligationReport:
        names = list(dict.fromkeys([*self.results, *other.results]))
        merged = {
            name: self.results.get(name, ObligationResult(name)).merge(other.results.get(name, ObligationResult(name)))
            for name in names
        }
        return ObligationReport(mode=self.mode, budget=self.budget + other.budget, results=merged)

    def to_dict(self) -> dict[str, Any]:
        return {
            'mode': str(self.mode),
            'budget': self.budget,
            'passed': self.passed,
            'obligations': [
                {
                    'name': r.name,
                    'cases': r.cases,
                    'attempts': r.attempts,
                    'failures': r.failures,
                    'exhausted': r.cases < self.budget,
                    'first_counterexample': r.first_counterexample,
                }
                for r in self.results.values()
            ],
        }


def _region(r: AbsRegion[AbsPtr]) -> str:
    return str(r)


def carries_pointer(a: AbsPtr) -> bool:
    """False for a source value built only from extern returns, which never address memory."""
    return not (a.layer is Layer.S and all(isinstance(source, FunSrc) for source in a.elements))


def join_overapproximates(d: PointerDomain, s: Sampler) -> str | None:
    a0, a1 = s.value(), s.value()
    member = s.member(a0)
    joined = d.join(a0, a1)
    if concretizes(joined, member, d.ctx):
        return ''
    return f'{render(member)} in {a0} but not in {a0} join {a1} = {joined}'


def necessary_separation_is_disjoint(d: PointerDomain, s: Sampler) -> str | None:
    r0, r1 = s.region(), s.region()
    if d.sep(r0, r1) is not SepVerdict.NECESSARY or not (carries_pointer(r0.addr) and carries_pointer(r1.addr)):
        return None
    valuation = kit_valuation(s.rng)
    m0, m1 = s.member(r0.addr), s.member(r1.addr)
    v0, v1 = evaluate_expr(m0, valuation), evaluate_expr(m1, valuation)
    if v0 is None or v1 is None:
        return None
    n0, n1 = s.concrete_size(r0), s.concrete_size(r1)
    if n0 <= to_word(v1 - v0) <= (1 << 64) - n1:
        return ''
    return f'{_region(r0)} and {_region(r1)} necessarily separate, but [{v0:#x},+{n0}) meets [{v1:#x},+{n1})'


def semantics_overapproximates(d: PointerDomain, s: Sampler) -> str | None:
    op = s.op()
    a0, a1 = s.value(), s.operand()
    m0, m1 = s.member(a0), s.member(a1)
    result = d.asem(op, [a0, a1])
    concrete = App(op, (m0, m1))
    if concretizes(result, concrete, d.ctx):
        return ''
    return f'{op}({render(m0)}, {render(m1)}) not in {op}({a0}, {a1}) = {result}'


def join_respects_separation(d: PointerDomain, s: Sampler) -> str | None:
    r = s.region()
    a0, a1 = s.value(), s.value()
    size = s.size()
    outer = d.sep(r, AbsRegion(d.join(a0, a1), size))
    if outer is SepVerdict.UNKNOWN:
        return None
    inner = d.sep(r, AbsRegion(a0, size))
    if inner >= outer:
        return ''
    return f'{_region(r)} vs join is {outer.name} but vs [{a0}, {size}] only {inner.name}'


def join_encloses(d: PointerDomain, s: Sampler) -> str | None:
    a0, a1 = s.value(), s.value()
    size = s.size()
    inner, outer = AbsRegion(a0, size), AbsRegion(d.join(a0, a1), size)
    return '' if d.encl(inner, outer) else f'{_region(inner)} not enclosed in {_region(outer)}'


def enclosure_preserves_separation(d: PointerDomain, s: Sampler) -> str | None:
    r1 = s.region()
    r0 = s.enclosed(r1)
    r2 = s.region()
    if not d.encl(r0, r1):
        return None
    outer = d.sep(r1, r2)
    if outer is SepVerdict.UNKNOWN:
        return None
    inner = d.sep(r0, r2)
    if inner >= outer:
        return ''
    return f'{_region(r0)} in {_region(r1)}, {_region(r1)} vs {_region(r2)} is {outer.name} but inner only {inner.name}'


def join_commutative(d: PointerDomain, s: Sampler) -> str | None:
    a0, a1 = s.value(), s.value()
    left, right = d.join(a0, a1), d.join(a1, a0)
    return '' if str(left) == str(right) else f'{a0} join {a1}: {left} != {right}'


def join_associative(d: PointerDomain, s: Sampler) -> str | None:
    a0, a1, a2 = s.value(), s.value(), s.value()
    left = d.join(d.join(a0, a1), a2)
    right = d.join(a0, d.join(a1, a2))
    return '' if str(left) == str(right) else f'({a0}, {a1}, {a2}): {left} != {right}'


def join_idempotent(d: PointerDomain, s: Sampler) -> str | None:
    a = s.value()
    joined = d.join(a, a)
    return '' if str(joined) == str(a) else f'{a} join itself = {joined}'


def enclosure_reflexive(d: PointerDomain, s: Sampler) -> str | None:
    r = s.region()
    return '' if d.encl(r, r) else f'{_region(r)} does not enclose itself'


def enclosure_transitive(d: PointerDomain, s: Sampler) -> str | None:
    r2 = s.region()
    r1 = s.enclosed(r2)
    r0 = s.enclosed(r1)
    if not (d.encl(r0, r1) and d.encl(r1, r2)):
        return None
    return '' if d.encl(r0, r2) else f'{_region(r0)} in {_region(r1)} in {_region(r2)} but not in the last'


def separation_symmetric(d: PointerDomain, s: Sampler) -> str | None:
    r0, r1 = s.region(), s.region()
    forward, backward = d.sep(r0, r1), d.sep(r1, r0)
    return '' if forward == backward else f'{_region(r0)} vs {_region(r1)}: {forward.name} != {backward.name}'


OBLIGATIONS: dict[str, Check] = {
    'join_overapproximates': join_overapproximates,
    'necessary_separation_is_disjoint': necessary_separation_is_disjoint,
    'semantics_overapproximates': semantics_overapproximates,
    'join_respects_separation': join_respects_separation,
    'join_encloses': join_encloses,
    'enclosure_preserves_separation': enclosure_preserves_separation,
    'join_commutative': join_commutative,
    'join_associative': join_associative,
    'join_idempotent': join_idempotent,
    'enclosure_reflexive': enclosure_reflexive,
    'enclosure_transitive': enclosure_transitive,
    'separation_symmetric': separation_symmetric,
}


def kit_domain(
    mode: DomainMode = DomainMode.FULL,
    domain_cls: type[PointerDomain] = PointerDomain,
    disjointness: Disjointness | None = None,
    caps: Caps | None = None,
    alloc_alloc: SepVerdict = SepVerdict.NECESSARY,
) -> PointerDomain:
    """Domain over the fixed sampling context, shaped like an analysis domain by the same settings."""
    return domain_cls(KIT_CONTEXT, mode=mode, caps=caps, alloc_alloc=alloc_alloc, disjointness=disjointness)


def check_obligations(
    domain: PointerDomain,
    budget: int = 10_000,
    seed: int = 0,
    names: list[str] | None = None,
) -> ObligationReport:
    """
    Run the proof-obligation kit against a domain.

    Each obligation draws up to ``budget`` cases; cases whose premise does not
    hold are counted as attempts only. Obligations whose premise rarely holds
    may check fewer than ``budget`` cases, which the report marks as exhausted.

    Args:
        domain: Domain built over the kit context (see ``kit_domain``).
        budget: Cases drawn per obligation.
        seed: Seed for the random generator.
        names: Subset of obligations to run; all by default.

    Returns:
        ObligationReport with one result per obligation.
    """
    selected = names or list(OBLIGATIONS)
    unknown = [name for name in selected if name not in OBLIGATIONS]
    if unknown:
        raise ValueError(f'Unknown obligations: {unknown}. Available: {list(OBLIGATIONS)}')

    report = ObligationReport(mode=domain.mode, budget=budget)
    for index, name in enumerate(selected):
        check = OBLIGATIONS[name]
        sampler = Sampler(domain, np.random.default_rng([seed, index]))
        result = ObligationResult(name)
        for _ in range(budget):
            result.attempts += 1
            outcome = check(domain, sampler)
            if outcome is None:
                continue
            result.cases += 1
            if outcome:
                result.failures += 1
                if result.first_counterexample is None:
                    result.first_counterexample = outcome
                    logger.warning('Obligation failed: name=%s counterexample=%s', name, outcome)
        logger.info(
            'Obligation checked: name=%s cases=%d attempts=%d failures=%d',
            name,
            result.cases,
            result.attempts,
            result.failures,
        )
        report.results[name] = result
    return report
