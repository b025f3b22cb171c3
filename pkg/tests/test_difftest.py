from __future__ import annotations

import json

import pytest

from ballpark.absint import analyze
from ballpark.corpus import generate_corpus, write_corpus
from ballpark.difftest import (
    COMPARED_MODES,
    compare_modes,
    difftest_program,
    outcomes_frame,
    run_difftest,
    simulation_violations,
)
from ballpark.domains import AbsRegion, c_ptr
from ballpark.reports import ground_truth
from ballpark.symbolic import Alloc
from ballpark.utils.config import AnalysisConfig


def test_running_example_is_sound(running, config):
    outcome = difftest_program(running, config, name='running')
    assert outcome.sound
    assert outcome.recall == 100.0
    assert outcome.observed == 4
    assert outcome.violations == []
    assert list(outcome.table['addr']) == ['0x3005', '0x3006', '0x3007', '0x3008']


@pytest.mark.parametrize(
    'name',
    ['running', 'jump_table', 'loops', 'ret2win', 'callee_saved', 'code_pointer', 'callee_stores', 'alloc_loop'],
)
def test_fixture_programs_are_sound(load, config, name):
    outcome = difftest_program(load(name), config, name=name)
    assert outcome.sound, outcome.to_dict()


def test_callee_written_global_is_covered(load, config):
    outcome = difftest_program(load('callee_stores'), config, name='callee_stores')
    assert outcome.observed == 1
    assert outcome.recall == 100.0
    assert outcome.violations == []


def test_every_function_of_a_program(load, config):
    program = load('callee_saved')
    for entry in program.entries:
        assert difftest_program(program, config, entry=entry).sound


def test_all_runs_faulting_is_unobserved(load, config):
    outcome = difftest_program(load('taint'), config, name='taint')
    assert outcome.observed == 0
    assert outcome.recall is None
    assert outcome.top_share is None
    assert outcome.sound
    assert any('faulted' in d for d in outcome.diagnostics)


def test_simulation_holds_for_running_example(running, config):
    result = analyze(running, 'main', config)
    truth = ground_truth(running, 'main', config.seeds, record_visits=True)
    assert all(trace.visits for trace in truth.traces)
    assert simulation_violations(result, truth) == []


def test_allocation_in_loop_is_matched_per_write(load, config):
    program = load('alloc_loop')
    result = analyze(program, 'main', config)
    (write,) = result.writes
    assert write.region == AbsRegion(c_ptr(Alloc(0x1001)), 8)
    truth = ground_truth(program, 'main', config.seeds)
    assert all(len(trace.top_level_writes()) == 4 for trace in truth.traces)
    assert simulation_violations(result, truth) == []


def test_trace_files(running, config, tmp_path):
    difftest_program(running, config, name='running', trace_dir=tmp_path)
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == [f'running.seed{seed}.jsonl' for seed in config.seeds]
    first = (tmp_path / 'running.seed0.jsonl').read_text(encoding='utf-8').splitlines()[0]
    assert json.loads(first)


def test_outcome_dict(running, config):
    data = difftest_program(running, config, name='running').to_dict()
    assert data['name'] == 'running'
    assert data['mode'] == 'full'
    assert data['recall'] == 100.0
    assert len(data['writes']) == 4


def test_run_difftest_keeps_order(programs_dir, config):
    paths = [programs_dir / 'loops.mir', programs_dir / 'running.mir', programs_dir / 'jump_table.mir']
    serial = run_difftest(paths, config)
    threaded = run_difftest(paths, config, workers=3)
    assert [o.name for o in threaded] == ['loops', 'running', 'jump_table']
    assert [o.to_dict() for o in threaded] == [o.to_dict() for o in serial]

    frame = outcomes_frame(serial)
    assert list(frame.columns) == ['program', 'mode', 'recall', 'precision', 'writes', 'top_share', 'violations']
    assert frame['violations'].sum() == 0


def test_compare_modes_writes_outputs(programs_dir, config, tmp_path):
    paths = [programs_dir / 'running.mir', programs_dir / 'jump_table.mir']
    summary = compare_modes(paths, config, out_dir=tmp_path)
    assert list(summary['mode']) == list(COMPARED_MODES)
    assert (summary['violations'] == 0).all()
    full = summary.set_index('mode').loc['full']
    assert full['recall'] == 100.0
    assert (tmp_path / 'modes.csv').exists()
    assert (tmp_path / 'precision_by_mode.png').exists()


def test_restricted_modes_lose_precision(programs_dir, config):
    summary = compare_modes([programs_dir / 'running.mir'], config, modes=['full', 'onlyS']).set_index('mode')
    assert summary.loc['full', 'precision'] >= summary.loc['onlyS', 'precision']


def test_precision_ordering_on_anchored_corpus(tmp_path):
    paths = write_corpus(generate_corpus(20, seed=5, profile='anchored'), tmp_path)
    summary = compare_modes(paths, AnalysisConfig(seeds=[0, 1]), modes=['onlyC', 'onlyB', 'onlyS']).set_index('mode')
    precision = summary['precision']
    assert precision['onlyC'] >= precision['onlyB'] >= precision['onlyS']
    assert summary.loc['onlyS', 'top_share'] == 0.0
    assert (summary['recall'] == 100.0).all()
    assert (summary['violations'] == 0).all()


@pytest.mark.parametrize('mode', ['onlyB', 'onlyS'])
def test_jump_table_resolves_in_restricted_modes(load, mode):
    config = AnalysisConfig(seeds=[0, 1], domain_mode=mode)
    result = analyze(load('jump_table'), 'main', config)
    assert result.resolved_edges[0x1004] == {0x1010, 0x1020}
    assert difftest_program(load('jump_table'), config, name='jump_table').violations == []


@pytest.mark.parametrize('profile', ['mixed', 'anchored'])
def test_generated_programs_are_sound(tmp_path, profile):
    paths = write_corpus(generate_corpus(8, seed=3, profile=profile), tmp_path)
    outcomes = run_difftest(paths, AnalysisConfig(seeds=[0, 1, 2]))
    unsound = [o.to_dict() for o in outcomes if not o.sound]
    assert unsound == []


@pytest.mark.slow
def test_generated_corpus_is_sound(tmp_path):
    paths = write_corpus(generate_corpus(200, seed=0), tmp_path)
    outcomes = run_difftest(paths, AnalysisConfig(), workers=4)
    assert [o.name for o in outcomes if not o.sound] == []
