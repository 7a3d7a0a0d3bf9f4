"""Deterministic execution of subject-language snippets."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..lang.parser import parse_program
from ..lang.syntax import Program
from ..lang.typecheck import TypedProgram, typecheck
from .interp import DEFAULT_FUEL, ExecutionOutcome, Machine, Runtime, ensure_class_loaded, execute, runtime_for
from .values import Build, MjThrow, Obj, Stub


@lru_cache(maxsize=1)
def stdlib_program() -> Program:
    text = resources.files(__package__).joinpath("stdlib.mj").read_text(encoding="utf-8")
    return parse_program(text, library=True)


def load_program(source: str = "") -> TypedProgram:
    """Typecheck user source on top of the bundled standard library."""
    user = parse_program(source)
    return typecheck(stdlib_program().merged(user))


__all__ = [
    "DEFAULT_FUEL",
    "Build",
    "ExecutionOutcome",
    "Machine",
    "MjThrow",
    "Obj",
    "Runtime",
    "Stub",
    "ensure_class_loaded",
    "execute",
    "load_program",
    "runtime_for",
    "stdlib_program",
]
