from __future__ import annotations

from importlib.resources import files
from pathlib import Path

import pytest

from hintsynth.lang.tasks import deprecated_tasks
from hintsynth.runtime import load_program

CORPUS = Path(str(files("hintsynth").joinpath("corpus")))
FIXTURES = Path(str(files("hintsynth").joinpath("fixtures")))


def program_from(path: Path):
    return load_program(path.read_text(encoding="utf-8"))


def task_named(path: Path, task_id: str):
    for t in deprecated_tasks(program_from(path)):
        if t.id == task_id:
            return t
    raise KeyError(task_id)


@pytest.fixture(scope="session")
def stdlib():
    return load_program("")


@pytest.fixture(scope="session")
def eq_program():
    return program_from(FIXTURES / "equivalence.mj")


@pytest.fixture(scope="session")
def running_task():
    return task_named(CORPUS / "running_example.mj", "getHours")


@pytest.fixture(scope="session")
def corpus_tasks():
    out = {}
    for f in sorted(CORPUS.glob("*.mj")):
        for t in deprecated_tasks(program_from(f)):
            out[t.id] = t
    return out


@pytest.fixture(scope="session")
def flag_task():
    return task_named(FIXTURES / "incompleteness.mj", "flagged")
