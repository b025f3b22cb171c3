from __future__ import annotations

from pathlib import Path

import pytest

from ballpark.absint import analyze
from ballpark.mir import Program, load_program
from ballpark.utils.config import AnalysisConfig

PROGRAMS = Path(__file__).parent / 'programs'


@pytest.fixture
def programs_dir() -> Path:
    return PROGRAMS


@pytest.fixture
def load():
    def _load(name: str) -> Program:
        return load_program(PROGRAMS / f'{name}.mir')

    return _load


@pytest.fixture
def config() -> AnalysisConfig:
    return AnalysisConfig(seeds=[0, 1, 2, 3])


@pytest.fixture
def running(load) -> Program:
    return load('running')


@pytest.fixture
def running_result(running, config):
    return analyze(running, 'main', config)
