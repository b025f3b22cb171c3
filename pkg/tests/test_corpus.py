from __future__ import annotations

import pytest

from ballpark.corpus import BUCKETS, HELPER_BASE, bucket_counts, generate_corpus, generate_program, write_corpus
from ballpark.mir import parse_program


def test_deterministic():
    assert generate_program(5, 3).text == generate_program(5, 3).text
    assert generate_program(5, 3).text != generate_program(6, 3).text


def test_index_bucket_always_present():
    for index in range(len(BUCKETS)):
        program = generate_program(0, index)
        assert BUCKETS[index % len(BUCKETS)] in program.buckets
        assert 'stack' in program.buckets
        assert program.name == f'prog_{index:04d}'


@pytest.mark.parametrize('profile', ['mixed', 'anchored'])
def test_programs_parse(profile):
    for generated in generate_corpus(24, seed=11, profile=profile):
        program = parse_program(generated.text)
        assert program.default_entry() == 'main'
        assert program.entries['helper'] == HELPER_BASE


def test_anchored_profile_avoids_dynamic_offsets():
    for generated in generate_corpus(16, seed=2, profile='anchored'):
        assert '[r8' not in generated.text
        assert 'rsp + rax' not in generated.text
        assert generated.profile == 'anchored'


def test_negative_count():
    with pytest.raises(ValueError, match='non-negative'):
        generate_corpus(-1)


def test_write_corpus(tmp_path):
    programs = generate_corpus(3, seed=1)
    paths = write_corpus(programs, tmp_path / 'out')
    assert [p.name for p in paths] == ['prog_0000.mir', 'prog_0001.mir', 'prog_0002.mir']
    assert paths[1].read_text(encoding='utf-8') == programs[1].text


def test_bucket_counts_cover_every_bucket():
    counts = bucket_counts(generate_corpus(50, seed=0))
    assert set(counts) == set(BUCKETS)
    assert all(count >= 50 // len(BUCKETS) for count in counts.values())
    assert counts['stack'] == 50


@pytest.mark.parametrize('profile', ['mixed', 'anchored'])
def test_call_and_indirect_buckets(profile):
    call = generate_program(0, BUCKETS.index('call'), profile)
    assert 'call helper ->' in call.text
    indirect = generate_program(0, BUCKETS.index('indirect'), profile)
    assert 'ijmp rdx' in indirect.text
    assert f'rax := {HELPER_BASE:#x} ; icall rax' in indirect.text


def test_mixed_call_writes_through_loaded_pointers():
    text = generate_program(0, BUCKETS.index('call'), 'mixed').text
    assert 'store [rax, 0x8] := 0x5' in text
    assert 'store [rax, 0x8] := 0x5' not in generate_program(0, BUCKETS.index('call'), 'anchored').text
