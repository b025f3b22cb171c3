from .contract import AbsRegion, AbstractDomain, DomainMode, SepVerdict, weakest
from .designation import designate
from .membership import concretizes, is_anchored, mentions
from .mutants import MUTANTS, BrokenJoinDomain, BrokenSepDomain, mutant_domain_cls
from .obligations import OBLIGATIONS, ObligationReport, ObligationResult, check_obligations, kit_domain
from .pointers import Caps, PointerDomain, is_stack_only
from .separation import SeparationRules, disjoint_cc, sep_bases, sep_regions, sep_sources
from .smt import Z3Disjointness, z3_available
from .values import TOP, AbsPtr, Layer, b_ptr, c_ptr, s_ptr

__all__ = [
    'MUTANTS',
    'OBLIGATIONS',
    'TOP',
    'AbsPtr',
    'AbsRegion',
    'AbstractDomain',
    'BrokenJoinDomain',
    'BrokenSepDomain',
    'Caps',
    'DomainMode',
    'Layer',
    'ObligationReport',
    'ObligationResult',
    'PointerDomain',
    'SepVerdict',
    'SeparationRules',
    'Z3Disjointness',
    'b_ptr',
    'c_ptr',
    'check_obligations',
    'concretizes',
    'designate',
    'disjoint_cc',
    'is_anchored',
    'is_stack_only',
    'kit_domain',
    'mentions',
    'mutant_domain_cls',
    's_ptr',
    'sep_bases',
    'sep_regions',
    'sep_sources',
    'weakest',
    'z3_available',
]
