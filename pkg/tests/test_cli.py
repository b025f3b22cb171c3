from __future__ import annotations

import json

import pytest

from ballpark.cli import main


def run_json(capsys, *argv: str) -> tuple[int, dict]:
    code = main([*argv, '--json'])
    return code, json.loads(capsys.readouterr().out)


class TestAnalyze:
    def test_ok(self, programs_dir, capsys):
        code, payload = run_json(capsys, 'analyze', str(programs_dir / 'running.mir'))
        assert code == 0
        assert payload['verdict'] == 'OK'
        assert payload['unresolved'] == []
        assert payload['post'] is not None
        assert payload['recall'] is None

    def test_with_concrete_runs(self, programs_dir, capsys):
        code, payload = run_json(capsys, 'analyze', str(programs_dir / 'running.mir'), '--seeds', '4')
        assert code == 0
        assert payload['recall'] == 100.0

    def test_err(self, programs_dir, capsys):
        code, payload = run_json(capsys, 'analyze', str(programs_dir / 'top_write.mir'))
        assert code == 20
        assert payload['witness'] == ['0x5001']

    def test_un(self, programs_dir, capsys):
        code, payload = run_json(capsys, 'analyze', str(programs_dir / 'unresolved_safe.mir'))
        assert code == 10
        assert payload['unresolved'] == ['0x7000']

    def test_call_context(self, programs_dir, capsys):
        path = str(programs_dir / 'code_pointer.mir')
        _, without = run_json(capsys, 'analyze', path, '--entry', 'g')
        _, with_context = run_json(capsys, 'analyze', path, '--entry', 'g', '--call-context', 'f:0x6001')
        assert without['unresolved'] == ['0x6500']
        assert with_context['unresolved'] == []

    def test_text_output(self, programs_dir, capsys):
        assert main(['analyze', str(programs_dir / 'running.mir')]) == 0
        out = capsys.readouterr().out
        assert out.startswith('main: OK')
        assert '0x3006: [rsp_0 - 0x10, 8] {L}' in out
        assert 'assumption: @0x3007' in out

    def test_out_file(self, programs_dir, tmp_path, capsys):
        target = tmp_path / 'reports' / 'running.json'
        assert main(['analyze', str(programs_dir / 'running.mir'), '--json', '--out', str(target)]) == 0
        assert capsys.readouterr().out == ''
        assert json.loads(target.read_text(encoding='utf-8'))['entry'] == 'main'

    def test_states(self, programs_dir, capsys):
        _, payload = run_json(capsys, 'analyze', str(programs_dir / 'running.mir'), '--states')
        assert 'analysis' in payload

    @pytest.mark.parametrize('domain', ['C', 'B', 'S', 'onlyS'])
    def test_domain_aliases(self, programs_dir, capsys, domain):
        code, _ = run_json(capsys, 'analyze', str(programs_dir / 'running.mir'), '--domain', domain)
        assert code in (0, 10, 20)


class TestInputErrors:
    def test_missing_file(self, tmp_path):
        assert main(['analyze', str(tmp_path / 'nope.mir')]) == 2

    def test_malformed_program(self, tmp_path):
        path = tmp_path / 'bad.mir'
        path.write_text('func main @ 0x10\n0x10: rax := qq(rax) ; ret\n', encoding='utf-8')
        assert main(['analyze', str(path)]) == 2

    def test_unknown_domain(self, programs_dir):
        assert main(['analyze', str(programs_dir / 'running.mir'), '--domain', 'Q']) == 2

    def test_bad_call_context(self, programs_dir):
        assert main(['analyze', str(programs_dir / 'code_pointer.mir'), '--entry', 'g', '--call-context', 'f']) == 2

    def test_unknown_config_key(self, programs_dir, tmp_path):
        config = tmp_path / 'ballpark.toml'
        config.write_text('cap_q = 3\n', encoding='utf-8')
        assert main(['analyze', str(programs_dir / 'running.mir'), '--config', str(config)]) == 2

    def test_empty_directory(self, tmp_path):
        assert main(['difftest', str(tmp_path)]) == 2


def test_check_reports_worst_verdict(programs_dir, capsys):
    code, payload = run_json(capsys, 'check', str(programs_dir / 'callee_saved.mir'))
    assert code == 20
    verdicts = {f['entry']: f['verdict'] for f in payload['functions']}
    assert verdicts == {'saves': 'OK', 'clobbers': 'ERR', 'moves': 'OK'}


def test_config_file_applies(programs_dir, tmp_path, capsys):
    config = tmp_path / 'ballpark.toml'
    config.write_text('desirable_mode = "strict"\n', encoding='utf-8')
    code, payload = run_json(capsys, 'analyze', str(programs_dir / 'running.mir'), '--config', str(config))
    assert code == 20
    assert '0x3007' in payload['witness']


class TestDifftest:
    def test_sound(self, programs_dir, capsys):
        code, payload = run_json(capsys, 'difftest', str(programs_dir / 'running.mir'), '--seeds', '3')
        assert code == 0
        assert payload['programs'][0]['recall'] == 100.0
        assert payload['corpus']['recall'] == 100.0

    def test_unobserved_listed(self, programs_dir, capsys):
        code, payload = run_json(capsys, 'difftest', str(programs_dir / 'taint.mir'), '--seeds', '2')
        assert code == 0
        assert payload['unobserved'] == ['taint']

    def test_trace_dir(self, programs_dir, tmp_path, capsys):
        traces = tmp_path / 'traces'
        main(['difftest', str(programs_dir / 'running.mir'), '--seeds', '2', '--trace-dir', str(traces)])
        capsys.readouterr()
        assert sorted(p.name for p in traces.iterdir()) == ['running.seed0.jsonl', 'running.seed1.jsonl']

    def test_compare_modes(self, programs_dir, tmp_path, capsys):
        code, payload = run_json(
            capsys,
            'difftest',
            str(programs_dir / 'running.mir'),
            '--seeds',
            '2',
            '--compare-modes',
            '--out',
            str(tmp_path),
        )
        assert code == 0
        assert [row['mode'] for row in payload['modes']] == ['full', 'onlyC', 'onlyB', 'onlyS']
        assert (tmp_path / 'modes.csv').exists()


class TestObligations:
    def test_sound_domain(self, capsys):
        code, payload = run_json(capsys, 'obligations', '--budget', '50')
        assert code == 0
        assert payload['passed'] is True

    def test_broken_join(self, capsys):
        code, payload = run_json(capsys, 'obligations', '--budget', '500', '--mutant', 'broken-join')
        assert code == 1
        assert payload['passed'] is False

    def test_config_file_sets_mode(self, tmp_path, capsys):
        config = tmp_path / 'ballpark.toml'
        config.write_text('domain_mode = "S"\ncap_s = 3\n', encoding='utf-8')
        code, payload = run_json(capsys, 'obligations', '--budget', '20', '--config', str(config))
        assert code == 0
        assert payload['mode'] == 'onlyS'

    def test_flag_overrides_config(self, tmp_path, capsys):
        config = tmp_path / 'ballpark.toml'
        config.write_text('domain_mode = "S"\n', encoding='utf-8')
        argv = ('obligations', '--budget', '20', '--config', str(config), '--domain', 'B')
        code, payload = run_json(capsys, *argv)
        assert code == 0
        assert payload['mode'] == 'onlyB'

    def test_unknown_config_key(self, tmp_path):
        config = tmp_path / 'ballpark.toml'
        config.write_text('cap_q = 3\n', encoding='utf-8')
        assert main(['obligations', '--budget', '5', '--config', str(config)]) == 2


class TestGen:
    def test_writes_corpus(self, tmp_path, capsys):
        out = tmp_path / 'corpus'
        code, payload = run_json(capsys, 'gen', '--count', '3', '--seed', '4', '--out', str(out))
        assert code == 0
        assert payload['files'] == ['prog_0000.mir', 'prog_0001.mir', 'prog_0002.mir']
        assert sum(payload['buckets'].values()) >= 3

    def test_deterministic(self, tmp_path, capsys):
        for name in ('a', 'b'):
            main(['gen', '--count', '2', '--seed', '9', '--out', str(tmp_path / name)])
        capsys.readouterr()
        for file in ('prog_0000.mir', 'prog_0001.mir'):
            assert (tmp_path / 'a' / file).read_text() == (tmp_path / 'b' / file).read_text()

    def test_generated_corpus_difftests(self, tmp_path, capsys):
        main(['gen', '--count', '4', '--out', str(tmp_path)])
        capsys.readouterr()
        assert main(['difftest', str(tmp_path), '--seeds', '2']) == 0
