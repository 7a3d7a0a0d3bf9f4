from .lexer import MjSyntaxError
from .parser import DuplicateDeclaration, parse_expression, parse_program, parse_statements
from .printer import program_str, snippet_str, statements_str
from .syntax import Program, Snippet
from .tasks import RefactoringTask, deprecated_tasks
from .typecheck import MjTypeError, TypedProgram, TypedSnippet, typecheck

__all__ = [
    "DuplicateDeclaration",
    "MjSyntaxError",
    "MjTypeError",
    "Program",
    "RefactoringTask",
    "Snippet",
    "TypedProgram",
    "TypedSnippet",
    "deprecated_tasks",
    "parse_expression",
    "parse_program",
    "parse_statements",
    "program_str",
    "snippet_str",
    "statements_str",
    "typecheck",
]
