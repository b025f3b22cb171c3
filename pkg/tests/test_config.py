from __future__ import annotations

import argparse

import pytest

from ballpark.domains import DomainMode, SepVerdict
from ballpark.models import MemClass
from ballpark.utils.config import AnalysisConfig


def test_defaults():
    config = AnalysisConfig()
    assert config.mode is DomainMode.FULL
    assert (config.caps.c, config.caps.b, config.caps.s) == (10, 5, 250)
    assert config.seeds == list(range(8))
    assert not config.strict
    assert config.alloc_verdict is SepVerdict.NECESSARY
    assert config.may_write == frozenset({MemClass.H, MemClass.G})


@pytest.mark.parametrize(('alias', 'expected'), [('C', 'onlyC'), ('B', 'onlyB'), ('S', 'onlyS'), ('full', 'full')])
def test_domain_aliases(alias, expected):
    assert AnalysisConfig(domain_mode=alias).domain_mode == expected


@pytest.mark.parametrize(
    ('kwargs', 'message'),
    [
        ({'domain_mode': 'X'}, 'Invalid domain mode'),
        ({'cap_c': 0}, 'Caps must be at least 1'),
        ({'step_budget': 0}, 'Must be positive'),
        ({'seeds': []}, 'At least one seed'),
        ({'seeds': [1, -2]}, 'non-negative'),
        ({'callee_saved': ['rbx', 'eax']}, 'Unknown registers'),
        ({'callee_saved': ['rbx', 'rax']}, 'both callee-saved and caller-saved'),
        ({'internal_call_may_write': 'L,Q'}, 'Invalid memory class list'),
    ],
)
def test_validation(kwargs, message):
    with pytest.raises(ValueError, match=message):
        AnalysisConfig(**kwargs)


def test_register_names_normalized():
    assert AnalysisConfig(parameter_registers=[' RDI ', 'rsi']).parameter_registers == ['rdi', 'rsi']


def test_merged_ignores_none():
    config = AnalysisConfig().merged(domain_mode='S', step_budget=None, desirable_mode='strict')
    assert config.mode is DomainMode.ONLY_S
    assert config.step_budget == 1_000_000
    assert config.strict


def test_from_file(tmp_path):
    path = tmp_path / 'ballpark.toml'
    path.write_text('cap_b = 3\nalloc_alloc_separation = "desirable"\nseeds = [4, 5]\n', encoding='utf-8')
    config = AnalysisConfig.from_file(path)
    assert config.cap_b == 3
    assert config.alloc_verdict is SepVerdict.DESIRABLE
    assert config.seeds == [4, 5]


def test_from_file_unknown_keys(tmp_path):
    path = tmp_path / 'ballpark.toml'
    path.write_text('cap_q = 3\n', encoding='utf-8')
    with pytest.raises(ValueError, match='Unknown configuration keys'):
        AnalysisConfig.from_file(path)


def test_from_namespace_overrides_file(tmp_path):
    path = tmp_path / 'ballpark.toml'
    path.write_text('step_budget = 500\ndomain_mode = "onlyB"\n', encoding='utf-8')
    args = argparse.Namespace(config=str(path), domain=None, step_budget=None, seeds=3, strict_separation=True)
    config = AnalysisConfig.from_namespace(args)
    assert config.step_budget == 500
    assert config.mode is DomainMode.ONLY_B
    assert config.seeds == [0, 1, 2]
    assert config.strict


def test_frozen():
    config = AnalysisConfig()
    with pytest.raises((AttributeError, TypeError, ValueError)):
        config.cap_c = 3  # type: ignore[misc]
