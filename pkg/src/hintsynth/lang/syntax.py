"""Syntax tree for the mini object-oriented subject language.

Nodes are frozen dataclasses. Source positions are carried for diagnostics
but excluded from equality, so a re-parsed pretty-print compares equal to
the original tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

PRIMITIVES = frozenset({"int", "boolean", "String"})
VOID = "void"
NULL_TYPE = "null"


def is_primitive(type_name: str) -> bool:
    return type_name in PRIMITIVES


def _pos() -> int:
    return field(default=0, compare=False, repr=False)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    value: object  # int | bool | str | None
    kind: str  # "int" | "boolean" | "String" | "null"
    line: int = _pos()


@dataclass(frozen=True)
class Name:
    """A bare identifier: local variable, implicit field, or class name."""

    ident: str
    line: int = _pos()


@dataclass(frozen=True)
class This:
    line: int = _pos()


@dataclass(frozen=True)
class FieldAccess:
    target: Expr
    name: str
    line: int = _pos()


@dataclass(frozen=True)
class Call:
    target: Expr | None  # None for unqualified calls
    name: str
    args: tuple[Expr, ...]
    line: int = _pos()


@dataclass(frozen=True)
class New:
    cls: str
    args: tuple[Expr, ...]
    line: int = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr
    line: int = _pos()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: Expr
    line: int = _pos()


@dataclass(frozen=True)
class Cast:
    type: str
    operand: Expr
    line: int = _pos()


@dataclass(frozen=True)
class InstanceOf:
    operand: Expr
    type: str
    line: int = _pos()


@dataclass(frozen=True)
class Placeholder:
    """A type name standing in an argument slot (lenient hint parsing only)."""

    type: str
    line: int = _pos()


Expr = Union[Literal, Name, This, FieldAccess, Call, New, Binary, Unary, Cast, InstanceOf, Placeholder]


# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class LocalDecl:
    type: str
    name: str
    init: Expr
    final: bool = False
    line: int = _pos()


@dataclass(frozen=True)
class Assign:
    target: Expr  # Name | FieldAccess
    value: Expr
    line: int = _pos()


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    line: int = _pos()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple[Stmt, ...]
    orelse: tuple[Stmt, ...] = ()
    line: int = _pos()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple[Stmt, ...]
    line: int = _pos()


@dataclass(frozen=True)
class Return:
    value: Expr | None
    line: int = _pos()


@dataclass(frozen=True)
class Throw:
    value: Expr
    line: int = _pos()


@dataclass(frozen=True)
class SuperCall:
    args: tuple[Expr, ...]
    line: int = _pos()


Stmt = Union[LocalDecl, Assign, ExprStmt, If, While, Return, Throw, SuperCall]


# -- declarations ------------------------------------------------------------


@dataclass(frozen=True)
class DeprecationDoc:
    raw: str  # the whole comment, "/**" through "*/"
    prose: str
    code_hint_blocks: tuple[str, ...]


@dataclass(frozen=True)
class Param:
    type: str
    name: str


@dataclass(frozen=True)
class FieldDecl:
    name: str
    type: str
    is_static: bool = False
    init: Expr | None = None
    visibility: str = "public"
    is_final: bool = False
    line: int = _pos()


@dataclass(frozen=True)
class MethodDecl:
    name: str  # the class name for constructors
    params: tuple[Param, ...]
    ret: str | None  # None for constructors, "void" for procedures
    body: tuple[Stmt, ...] | None
    visibility: str = "public"
    is_static: bool = False
    is_abstract: bool = False
    is_native: bool = False
    is_ctor: bool = False
    deprecated: bool = False  # @Deprecated annotation or @deprecated doc tag
    annotated: bool = False  # carried an explicit @Deprecated annotation
    doc: DeprecationDoc | None = None
    line: int = _pos()

    @property
    def param_types(self) -> tuple[str, ...]:
        return tuple(p.type for p in self.params)

    @property
    def signature(self) -> tuple[str, tuple[str, ...]]:
        return (self.name, self.param_types)


@dataclass(frozen=True)
class ClassDecl:
    name: str
    is_abstract: bool = False
    superclass: str | None = None
    interfaces: tuple[str, ...] = ()
    fields: tuple[FieldDecl, ...] = ()
    constructors: tuple[MethodDecl, ...] = ()
    methods: tuple[MethodDecl, ...] = ()
    library: bool = field(default=False, compare=False)
    line: int = _pos()


@dataclass(frozen=True)
class DomainRange:
    name: str
    lo: int
    hi: int


@dataclass(frozen=True)
class DomainSet:
    name: str
    values: tuple[Literal, ...]


@dataclass(frozen=True)
class DomainVia:
    """An object-typed input built from other domain variables."""

    name: str
    expr: Expr


DomainClause = Union[DomainRange, DomainSet, DomainVia]


@dataclass(frozen=True)
class Snippet:
    name: str
    inputs: tuple[Param, ...]
    live_out: tuple[str, ...]
    statements: tuple[Stmt, ...]
    domain: tuple[DomainClause, ...] = ()
    line: int = _pos()

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.inputs)


@dataclass(frozen=True)
class Program:
    classes: tuple[ClassDecl, ...] = ()
    snippets: tuple[Snippet, ...] = ()

    def merged(self, other: Program) -> Program:
        return Program(self.classes + other.classes, self.snippets + other.snippets)

    def class_named(self, name: str) -> ClassDecl | None:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def snippet_named(self, name: str) -> Snippet | None:
        for s in self.snippets:
            if s.name == name:
                return s
        return None


# -- traversal helpers -------------------------------------------------------


def sub_exprs(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, FieldAccess):
        return (e.target,)
    if isinstance(e, Call):
        return ((e.target,) if e.target is not None else ()) + e.args
    if isinstance(e, New):
        return e.args
    if isinstance(e, Binary):
        return (e.left, e.right)
    if isinstance(e, (Unary, Cast, InstanceOf)):
        return (e.operand,)
    return ()


def stmt_exprs(s: Stmt) -> tuple[Expr, ...]:
    if isinstance(s, LocalDecl):
        return (s.init,)
    if isinstance(s, Assign):
        return (s.target, s.value)
    if isinstance(s, ExprStmt):
        return (s.expr,)
    if isinstance(s, (If, While)):
        return (s.cond,)
    if isinstance(s, Return):
        return (s.value,) if s.value is not None else ()
    if isinstance(s, Throw):
        return (s.value,)
    if isinstance(s, SuperCall):
        return s.args
    return ()


def walk_expr(e: Expr):
    yield e
    for child in sub_exprs(e):
        yield from walk_expr(child)


def walk_stmts(stmts):
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from walk_stmts(s.then)
            yield from walk_stmts(s.orelse)
        elif isinstance(s, While):
            yield from walk_stmts(s.body)


def free_variables(statements: tuple[Stmt, ...]) -> list[str]:
    """Names read before any local declaration binds them, in first-use order.

    Capitalised identifiers used as call/field targets are treated as class
    references, not variables.
    """
    bound: set[str] = set()
    free: list[str] = []

    def visit(e: Expr, as_target: bool = False) -> None:
        if isinstance(e, Name):
            if as_target and e.ident[:1].isupper():
                return
            if e.ident not in bound and e.ident not in free:
                free.append(e.ident)
            return
        if isinstance(e, FieldAccess):
            visit(e.target, as_target=True)
            return
        if isinstance(e, Call):
            if e.target is not None:
                visit(e.target, as_target=True)
            for a in e.args:
                visit(a)
            return
        for child in sub_exprs(e):
            visit(child)

    for s in walk_stmts(statements):
        if isinstance(s, Assign):
            if isinstance(s.target, Name):
                visit(s.value)
                if s.target.ident not in bound and s.target.ident not in free:
                    free.append(s.target.ident)
                continue
        for e in stmt_exprs(s):
            visit(e)
        if isinstance(s, LocalDecl):
            bound.add(s.name)
    return free
