"""Code hints taken from `{@code ...}` spans of deprecation comments.

Spans are parsed leniently: argument positions may hold type names
(`contains(int, int)`) or identifiers that are not declared anywhere
(`year + 1900`). Parsing is forgiving, resolution is not: only methods and
constants that exist in the program are reported.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .lang.lexer import MjSyntaxError as ParseError
from .lang.parser import parse_expression
from .lang.syntax import (
    Binary,
    Call,
    Cast,
    DeprecationDoc,
    FieldAccess,
    InstanceOf,
    Literal,
    MethodDecl,
    Name,
    New,
    Placeholder,
    This,
    Unary,
    is_primitive,
)
from .lang.typecheck import TypedProgram
from .library import Component, constant_component, literal_component, method_component

_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class UnresolvedHint(str):
    """Diagnostic text for a hint naming something the program lacks."""


@dataclass(frozen=True)
class CodeHint:
    raw: str
    parsed: object
    # (class, method name, arity, parameter types or None)
    resolved_methods: tuple = ()
    resolved_constants: tuple = ()  # (class, constant name)
    literals: tuple = ()  # (value, type)
    context: str | None = None  # enclosing class of the deprecated method
    diagnostics: tuple = field(default=(), compare=False)


class _Resolver:
    def __init__(self, tp: TypedProgram, ctx: str | None, doc_classes: list[str]) -> None:
        self.tp = tp
        self.ctx = ctx
        self.doc_classes = doc_classes
        self.methods: list[tuple] = []
        self.constants: list[tuple] = []
        self.literals: list[tuple] = []
        self.diags: list[str] = []

    def _add(self, bucket: list, item) -> None:
        if item not in bucket:
            bucket.append(item)

    def _match(self, cls: str, name: str, argtypes: list) -> list[tuple[str, MethodDecl]]:
        out = []
        for owner, m in self.tp.methods_named(cls, name):
            if len(m.params) != len(argtypes):
                continue
            if all(a is None or self.tp.assignable(a, p) for a, p in zip(argtypes, m.param_types)):
                out.append((owner, m))
        return out

    def _record_call(self, classes: list[str], name: str, argtypes: list, text: str):
        for cls in classes:
            if cls not in self.tp.classes:
                continue
            hits = self._match(cls, name, argtypes)
            if not hits:
                continue
            if len(hits) > 1:
                sigs = ", ".join(f"{name}({', '.join(m.param_types)})" for _, m in hits)
                self.diags.append(f"ambiguous hint {text!r}: overloads {sigs} all added")
            for _, m in hits:
                self._add(self.methods, (cls, name, len(argtypes), m.param_types))
            rets = {m.ret for _, m in hits}
            return rets.pop() if len(rets) == 1 else None
        self.diags.append(UnresolvedHint(f"unresolved hint {text!r}: no method {name}/{len(argtypes)}"))
        return None

    def type_of(self, e):
        """Walk the expression recording resolutions; returns its type when known."""
        tp = self.tp
        if isinstance(e, Literal):
            if e.kind == "null":
                return None
            self._add(self.literals, (e.value, e.kind))
            return e.kind
        if isinstance(e, Placeholder):
            return e.type if (is_primitive(e.type) or e.type in tp.classes) else None
        if isinstance(e, Name):
            if e.ident in tp.classes:
                return f"class {e.ident}"
            if self.ctx is not None:
                hit = tp.lookup_field(self.ctx, e.ident)
                if hit is not None and hit[1].is_static:
                    self._add(self.constants, (hit[0], e.ident))
                    return hit[1].type
            return None  # undeclared identifier standing for a value
        if isinstance(e, This):
            return self.ctx
        if isinstance(e, FieldAccess):
            t = self.type_of(e.target)
            if t and t.startswith("class "):
                cls = t[6:]
                hit = tp.lookup_field(cls, e.name)
                if hit is not None and hit[1].is_static:
                    self._add(self.constants, (hit[0], e.name))
                    return hit[1].type
                self.diags.append(UnresolvedHint(f"unresolved hint constant {cls}.{e.name}"))
                return None
            if t in tp.classes:
                hit = tp.lookup_field(t, e.name)
                return hit[1].type if hit else None
            return None
        if isinstance(e, Call):
            argtypes = [self.type_of(a) for a in e.args]
            argtypes = [None if (a or "").startswith("class ") else a for a in argtypes]
            text = f"{e.name}(...)"
            if e.target is None:
                classes = ([self.ctx] if self.ctx else []) + [c for c in self.doc_classes if c != self.ctx]
                return self._record_call(classes, e.name, argtypes, text)
            t = self.type_of(e.target)
            if t and t.startswith("class "):
                return self._record_call([t[6:]], e.name, argtypes, text)
            if t in tp.classes:
                return self._record_call([t], e.name, argtypes, text)
            if isinstance(e.target, Name):
                # `calendar.get(...)` with an undeclared receiver: guess by name
                guess = [c for c in tp.classes if c.lower() == e.target.ident.lower()]
                return self._record_call(guess + self.doc_classes, e.name, argtypes, text)
            self.diags.append(UnresolvedHint(f"unresolved hint receiver for {text!r}"))
            return None
        if isinstance(e, New):
            argtypes = [self.type_of(a) for a in e.args]
            if e.cls not in tp.classes:
                self.diags.append(UnresolvedHint(f"unresolved hint class {e.cls}"))
                return None
            hits = [c for c in tp.classes[e.cls].decl.constructors
                    if len(c.params) == len(argtypes)
                    and all(a is None or tp.assignable(a, p) for a, p in zip(argtypes, c.param_types))]
            for c in hits:
                self._add(self.methods, (e.cls, e.cls, len(argtypes), c.param_types))
            if not hits:
                self.diags.append(UnresolvedHint(f"unresolved hint constructor {e.cls}/{len(argtypes)}"))
            return e.cls
        if isinstance(e, Binary):
            lt = self.type_of(e.left)
            rt = self.type_of(e.right)
            if e.op in ("==", "!=", "<", "<=", ">", ">=", "&&", "||"):
                return "boolean"
            if e.op == "+" and "String" in (lt, rt):
                return "String"
            return lt or rt
        if isinstance(e, Unary):
            if e.op == "-" and isinstance(e.operand, Literal) and e.operand.kind == "int":
                self._add(self.literals, (-e.operand.value, "int"))
                return "int"
            return self.type_of(e.operand)
        if isinstance(e, Cast):
            self.type_of(e.operand)
            return e.type
        if isinstance(e, InstanceOf):
            self.type_of(e.operand)
            return "boolean"
        return None


def _bare_constructor_call(e, tp: TypedProgram):
    """`GregorianCalendar(a, b)` written without `new` reads as a constructor."""
    if isinstance(e, Call) and e.target is None and e.name in tp.classes:
        return New(e.name, e.args)
    return e


def _doc_classes(doc: DeprecationDoc, tp: TypedProgram) -> list[str]:
    seen = []
    for w in _IDENT.findall(doc.raw):
        if w in tp.classes and w not in seen:
            seen.append(w)
    return seen


def extract_hints(doc: DeprecationDoc | None, ctx, program: TypedProgram,
                  diagnostics: list | None = None, spans=None) -> list[CodeHint]:
    """Parse every code span of `doc`; `ctx` is the enclosing class name or (class, method)."""
    if doc is None:
        return []
    owner = ctx[0] if isinstance(ctx, tuple) else ctx
    classes = _doc_classes(doc, program)
    out = []
    for raw in (doc.code_hint_blocks if spans is None else spans):
        try:
            parsed = parse_expression(raw, lenient=True)
        except ParseError as ex:
            if diagnostics is not None:
                diagnostics.append(f"unparseable hint {raw!r}: {ex}")
            continue
        parsed = _bare_constructor_call(parsed, program)
        r = _Resolver(program, owner, classes)
        r.type_of(parsed)
        if diagnostics is not None:
            diagnostics.extend(r.diags)
        out.append(CodeHint(raw, parsed, tuple(r.methods), tuple(r.constants), tuple(r.literals),
                            owner, tuple(r.diags)))
    return out


def hints_for_task(task, diagnostics: list | None = None) -> list[CodeHint]:
    if not task.hints:
        return []
    return extract_hints(task.doc, (task.owner, task.method), task.program, diagnostics, spans=task.hints)


def hint_components(hints, program: TypedProgram, diagnostics: list | None = None):
    """(constants, methods) components for the resolved parts of the hints."""
    consts: list[Component] = []
    methods: list[Component] = []
    seen: set = set()

    def put(bucket, c):
        if c.key not in seen:
            seen.add(c.key)
            bucket.append(c)

    for h in hints:
        for value, ty in h.literals:
            put(consts, literal_component(value, ty, from_hint=True))
        for cls, name in h.resolved_constants:
            f = program.lookup_field(cls, name)
            if f is None:
                continue
            put(consts, constant_component(cls, name, f[1].type, from_hint=True))
        for cls, name, _arity, ptypes in h.resolved_methods:
            decl = _find_decl(program, cls, name, ptypes)
            if decl is None:
                continue
            owner, m = decl
            if m.visibility != "public":
                if diagnostics is not None:
                    diagnostics.append(f"inaccessible hint method {owner}.{name}")
                continue
            if m.is_ctor and program.classes[owner].is_abstract:
                continue
            put(methods, method_component(owner, m, receiver=cls, from_hint=True))
    return consts, methods


def _find_decl(tp: TypedProgram, cls: str, name: str, ptypes):
    if name == cls:
        for c in tp.classes[cls].decl.constructors:
            if c.param_types == tuple(ptypes):
                return cls, c
        return None
    for owner, m in tp.methods_named(cls, name):
        if m.param_types == tuple(ptypes):
            return owner, m
    return None
