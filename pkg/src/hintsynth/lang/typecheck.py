"""Static checking and name resolution for subject-language programs.

`typecheck` returns a `TypedProgram`: the original syntax tree plus side
tables keyed by node identity (`id(node)`) holding each expression's static
type and the resolution of every name, field access, call and allocation.
The interpreter compiles from those tables; the tree itself is never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (
    NULL_TYPE,
    PRIMITIVES,
    VOID,
    Assign,
    Binary,
    Call,
    Cast,
    ClassDecl,
    ExprStmt,
    FieldAccess,
    FieldDecl,
    If,
    InstanceOf,
    Literal,
    LocalDecl,
    MethodDecl,
    Name,
    New,
    Placeholder,
    Program,
    Return,
    Snippet,
    SuperCall,
    This,
    Throw,
    Unary,
    While,
    free_variables,
    walk_expr,
    walk_stmts,
    stmt_exprs,
)

ROOT = "Object"
THROWABLE = "Throwable"
KNOWN_INTERFACES = frozenset({"Comparable"})
INT_MASK = (1 << 64) - 1


def wrap64(v: int) -> int:
    v &= INT_MASK
    return v - (1 << 64) if v >= (1 << 63) else v


class MjTypeError(Exception):
    """kind is one of: unknown, mismatch, visibility, abstract, structure."""

    def __init__(self, kind: str, message: str, line: int = 0) -> None:
        super().__init__(f"line {line}: {message}" if line else message)
        self.kind = kind
        self.message = message
        self.line = line


@dataclass
class ClassInfo:
    decl: ClassDecl
    superclass: ClassInfo | None = None
    instance_fields: list[tuple[str, FieldDecl]] = field(default_factory=list)  # (owner, decl)
    static_fields: dict[str, FieldDecl] = field(default_factory=dict)
    methods: dict[str, list[MethodDecl]] = field(default_factory=dict)
    vtable: dict[tuple, tuple[str, MethodDecl]] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.decl.name

    @property
    def is_abstract(self) -> bool:
        return self.decl.is_abstract

    @property
    def library(self) -> bool:
        return self.decl.library

    def ancestry(self):
        c = self
        while c is not None:
            yield c
            c = c.superclass


@dataclass
class Scope:
    cls: ClassInfo | None  # None inside snippets
    static: bool
    ret: str | None
    is_ctor: bool = False
    frames: list[dict[str, str]] = field(default_factory=lambda: [{}])

    def lookup(self, name: str) -> str | None:
        for f in reversed(self.frames):
            if name in f:
                return f[name]
        return None

    def declare(self, name: str, t: str, line: int) -> None:
        if self.lookup(name) is not None:
            raise MjTypeError("structure", f"variable {name} is already defined", line)
        self.frames[-1][name] = t


@dataclass
class TypedSnippet:
    snippet: Snippet
    types: dict[int, str]
    info: dict[int, tuple]
    local_types: dict[str, str]  # every variable visible at the end: inputs and locals

    def type_of(self, name: str) -> str:
        return self.local_types[name]


class TypedProgram:
    def __init__(self, program: Program) -> None:
        self.program = program
        self.classes: dict[str, ClassInfo] = {}
        self.types: dict[int, str] = {}
        self.info: dict[int, tuple] = {}
        self.static_init: dict[tuple[str, str], object] = {}
        self.snippets: dict[str, TypedSnippet] = {}
        self.string_literals: list[str] = []
        self.owner_of: dict[int, str] = {}  # id(MethodDecl) -> declaring class

    # -- class hierarchy -----------------------------------------------------

    def is_class(self, t: str) -> bool:
        return t in self.classes

    def known_type(self, t: str) -> bool:
        return t in PRIMITIVES or t in self.classes

    def is_subclass(self, sub: str, sup: str) -> bool:
        c = self.classes.get(sub)
        while c is not None:
            if c.name == sup:
                return True
            c = c.superclass
        return False

    def assignable(self, src: str, dst: str) -> bool:
        if src == dst:
            return True
        if src == NULL_TYPE:
            return dst in self.classes or dst == "String"
        if src in self.classes and dst in self.classes:
            return self.is_subclass(src, dst)
        return False

    def implements(self, cname: str, iface: str) -> bool:
        c = self.classes.get(cname)
        for a in c.ancestry() if c else ():
            if iface in a.decl.interfaces:
                return True
        return False

    def lookup_field(self, cname: str, fname: str):
        """(owner, decl) of the nearest field named fname, instance or static."""
        c = self.classes.get(cname)
        while c is not None:
            for f in c.decl.fields:
                if f.name == fname:
                    return c.name, f
            c = c.superclass
        return None

    def methods_named(self, cname: str, name: str) -> list[tuple[str, MethodDecl]]:
        """Visible methods named `name` on cname, most-derived override first."""
        out: list[tuple[str, MethodDecl]] = []
        seen: set[tuple] = set()
        c = self.classes.get(cname)
        while c is not None:
            for m in c.methods.get(name, ()):
                if m.param_types not in seen:
                    seen.add(m.param_types)
                    out.append((c.name, m))
            c = c.superclass
        return out

    def all_methods(self, cname: str) -> list[tuple[str, MethodDecl]]:
        out: list[tuple[str, MethodDecl]] = []
        seen: set[tuple] = set()
        chain = list(self.classes[cname].ancestry())
        for c in chain:
            for m in c.decl.methods:
                if m.signature not in seen:
                    seen.add(m.signature)
                    out.append((c.name, m))
        return out

    def dispatch(self, cname: str, sig: tuple) -> tuple[str, MethodDecl] | None:
        c = self.classes[cname]
        hit = c.vtable.get(sig)
        if hit is None:
            for a in c.ancestry():
                for m in a.methods.get(sig[0], ()):
                    if m.param_types == sig[1]:
                        hit = (a.name, m)
                        break
                if hit:
                    break
            if hit is not None:
                c.vtable[sig] = hit
        return hit

    def accessible(self, owner: str, visibility: str, from_cls: ClassInfo | None) -> bool:
        if visibility == "public":
            return True
        if from_cls is None:
            return False
        return self.is_subclass(from_cls.name, owner) or self.is_subclass(owner, from_cls.name)

    def _most_specific(self, cands: list[tuple[str, MethodDecl]], what: str, line: int):
        best = []
        for c in cands:
            if not any(
                o is not c
                and all(self.assignable(a, b) for a, b in zip(o[1].param_types, c[1].param_types))
                and o[1].param_types != c[1].param_types
                for o in cands
            ):
                best.append(c)
        if len(best) != 1:
            raise MjTypeError("mismatch", f"ambiguous call to {what}", line)
        return best[0]

    def resolve_method(self, cname: str, name: str, argtypes: list[str], line: int = 0,
                       arity_only: bool = False):
        cands = [
            (o, m) for o, m in self.methods_named(cname, name)
            if len(m.params) == len(argtypes)
            and (arity_only or all(self.assignable(a, p) for a, p in zip(argtypes, m.param_types)))
        ]
        if not cands:
            return None
        return self._most_specific(cands, f"{cname}.{name}", line)

    def resolve_ctor(self, cname: str, argtypes: list[str], line: int = 0) -> MethodDecl | None:
        c = self.classes[cname]
        cands = [
            (cname, m) for m in c.decl.constructors
            if len(m.params) == len(argtypes)
            and all(self.assignable(a, p) for a, p in zip(argtypes, m.param_types))
        ]
        if not cands:
            if not c.decl.constructors and not argtypes:
                return None  # implicit default constructor
            raise MjTypeError("mismatch", f"no constructor {cname}({', '.join(argtypes)})", line)
        return self._most_specific(cands, f"new {cname}", line)[1]

    def has_default_ctor(self, cname: str) -> bool:
        return not self.classes[cname].decl.constructors

    def public_constructors(self, cname: str) -> list[MethodDecl]:
        c = self.classes[cname]
        if c.is_abstract:
            return []
        return [m for m in c.decl.constructors if m.visibility == "public"]

    # -- snippets ------------------------------------------------------------

    def check_snippet(self, snippet: Snippet, strict_inputs: bool = True) -> TypedSnippet:
        checker = _Checker(self)
        return checker.snippet(snippet, strict_inputs)

    def expr_type(self, e) -> str:
        return self.types[id(e)]


def _const_value(e, program: TypedProgram, cname: str):
    if isinstance(e, Literal):
        return e.value, e.kind
    if isinstance(e, Unary):
        v, k = _const_value(e.operand, program, cname)
        if e.op == "-" and k == "int":
            return wrap64(-v), "int"
        if e.op == "!" and k == "boolean":
            return (not v), "boolean"
    if isinstance(e, Binary):
        a, ka = _const_value(e.left, program, cname)
        b, kb = _const_value(e.right, program, cname)
        if ka == kb == "int" and e.op in ("+", "-", "*"):
            return wrap64({"+": a + b, "-": a - b, "*": a * b}[e.op]), "int"
        if ka == kb == "String" and e.op == "+":
            return a + b, "String"
    if isinstance(e, Name) and (cname, e.ident) in program.static_init:
        f = program.classes[cname].static_fields[e.ident]
        return program.static_init[(cname, e.ident)], f.type
    raise MjTypeError("structure", "static field initial value must be a compile-time constant",
                      getattr(e, "line", 0))


def default_value(t: str):
    if t == "int":
        return 0
    if t == "boolean":
        return False
    return None


class _Checker:
    def __init__(self, tp: TypedProgram, types: dict | None = None, info: dict | None = None):
        self.tp = tp
        self.types = tp.types if types is None else types
        self.info = tp.info if info is None else info

    # -- program -------------------------------------------------------------

    def program(self) -> None:
        tp = self.tp
        for c in tp.program.classes:
            tp.classes[c.name] = ClassInfo(c)
        if ROOT not in tp.classes and tp.program.classes:
            raise MjTypeError("unknown", f"missing root class {ROOT}")
        for info in tp.classes.values():
            d = info.decl
            sup = d.superclass
            if sup is None and d.name != ROOT:
                sup = ROOT
            if sup is not None:
                if sup not in tp.classes:
                    raise MjTypeError("unknown", f"unknown superclass {sup}", d.line)
                info.superclass = tp.classes[sup]
            for i in d.interfaces:
                if i not in KNOWN_INTERFACES:
                    raise MjTypeError("unknown", f"unknown interface {i}", d.line)
            for m in d.methods:
                info.methods.setdefault(m.name, []).append(m)
                tp.owner_of[id(m)] = d.name
            for m in d.constructors:
                tp.owner_of[id(m)] = d.name
        for info in tp.classes.values():
            seen = set()
            c = info
            while c is not None:
                if c.name in seen:
                    raise MjTypeError("structure", f"inheritance cycle through {info.name}", info.decl.line)
                seen.add(c.name)
                c = c.superclass
        for info in tp.classes.values():
            chain = list(info.ancestry())[::-1]
            names: set[str] = set()
            for a in chain:
                for f in a.decl.fields:
                    if not f.is_static:
                        if f.name in names:
                            raise MjTypeError("structure", f"field {f.name} hides an inherited field", f.line)
                        names.add(f.name)
                        info.instance_fields.append((a.name, f))
            for f in info.decl.fields:
                if not tp.known_type(f.type):
                    raise MjTypeError("unknown", f"unknown type {f.type}", f.line)
                if f.is_static:
                    info.static_fields[f.name] = f
            for m in info.decl.methods + info.decl.constructors:
                self._check_signature(m)
        for info in tp.classes.values():
            for f in info.decl.fields:
                if f.is_static:
                    if f.init is None:
                        tp.static_init[(info.name, f.name)] = default_value(f.type)
                    else:
                        v, k = _const_value(f.init, tp, info.name)
                        if not tp.assignable(k, f.type) and not (k == NULL_TYPE):
                            raise MjTypeError("mismatch", f"cannot initialise {f.type} {f.name} with {k}", f.line)
                        tp.static_init[(info.name, f.name)] = v
        for info in tp.classes.values():
            self._check_overrides(info)
        for info in tp.classes.values():
            for f in info.decl.fields:
                if f.init is not None and not f.is_static:
                    scope = Scope(info, False, None, is_ctor=True)
                    t = self.expr(f.init, scope)
                    self._require(t, f.type, f.line)
            for m in info.decl.constructors + info.decl.methods:
                self._check_body(info, m)
        for s in tp.program.snippets:
            tp.snippets[s.name] = self.snippet(s, strict_inputs=True)

    def _check_signature(self, m: MethodDecl) -> None:
        tp = self.tp
        for p in m.params:
            if not tp.known_type(p.type):
                raise MjTypeError("unknown", f"unknown type {p.type}", m.line)
        if m.ret is not None and m.ret != VOID and not tp.known_type(m.ret):
            raise MjTypeError("unknown", f"unknown type {m.ret}", m.line)

    def _check_overrides(self, info: ClassInfo) -> None:
        tp = self.tp
        for m in info.decl.methods:
            if m.is_abstract and not info.is_abstract:
                raise MjTypeError("abstract", f"abstract method {m.name} in concrete class {info.name}", m.line)
            if m.is_static:
                continue
            sup = info.superclass
            if sup is None:
                continue
            hit = tp.dispatch(sup.name, m.signature)
            if hit is not None and hit[1].ret != m.ret:
                raise MjTypeError("mismatch", f"override of {m.name} changes return type", m.line)
        if not info.is_abstract:
            for owner, m in tp.all_methods(info.name):
                if m.is_abstract:
                    raise MjTypeError(
                        "abstract", f"class {info.name} does not implement abstract {owner}.{m.name}", info.decl.line
                    )

    def _check_body(self, info: ClassInfo, m: MethodDecl) -> None:
        if m.body is None:
            return
        scope = Scope(info, m.is_static, m.ret if not m.is_ctor else VOID, is_ctor=m.is_ctor)
        for p in m.params:
            scope.declare(p.name, p.type, m.line)
        for i, s in enumerate(m.body):
            if isinstance(s, SuperCall) and (not m.is_ctor or i != 0):
                raise MjTypeError("structure", "super(...) must be the first statement of a constructor", s.line)
        if m.is_ctor:
            sup = info.superclass
            first = m.body[0] if m.body else None
            if sup is not None and not isinstance(first, SuperCall):
                if sup.decl.constructors and not any(not c.params for c in sup.decl.constructors):
                    raise MjTypeError("structure", f"{info.name} constructor must call super(...)", m.line)
        self.block(m.body, scope)
        if m.ret not in (None, VOID) and not _definitely_returns(m.body):
            raise MjTypeError("structure", f"method {info.name}.{m.name} may finish without returning", m.line)

    # -- snippets ------------------------------------------------------------

    def snippet(self, s: Snippet, strict_inputs: bool) -> TypedSnippet:
        tp = self.tp
        types: dict[int, str] = {}
        info: dict[int, tuple] = {}
        sub = _Checker(tp, types, info)
        scope = Scope(None, True, None)
        for p in s.inputs:
            if not tp.known_type(p.type):
                raise MjTypeError("unknown", f"unknown type {p.type}", s.line)
            scope.declare(p.name, p.type, s.line)
        for st in s.statements:
            if isinstance(st, (If, While, Return, Throw, SuperCall)):
                raise MjTypeError("structure", "snippets are straight-line code", st.line)
        sub.block(s.statements, scope, new_frame=False)
        free = free_variables(s.statements)
        names = [p.name for p in s.inputs]
        if strict_inputs:
            if sorted(free) != sorted(names):
                raise MjTypeError(
                    "structure", f"snippet {s.name} inputs {names} differ from its free variables {free}", s.line
                )
        visible = dict(scope.frames[0])
        for v in s.live_out:
            if v not in visible:
                raise MjTypeError("unknown", f"live variable {v} is not in scope", s.line)
        return TypedSnippet(s, types, info, visible)

    # -- statements ----------------------------------------------------------

    def block(self, stmts, scope: Scope, new_frame: bool = True) -> None:
        if new_frame:
            scope.frames.append({})
        for s in stmts:
            self.stmt(s, scope)
        if new_frame:
            scope.frames.pop()

    def stmt(self, s, scope: Scope) -> None:
        tp = self.tp
        if isinstance(s, LocalDecl):
            if not tp.known_type(s.type):
                raise MjTypeError("unknown", f"unknown type {s.type}", s.line)
            t = self.expr(s.init, scope)
            self._require(t, s.type, s.line)
            scope.declare(s.name, s.type, s.line)
        elif isinstance(s, Assign):
            tt = self.lvalue(s.target, scope)
            vt = self.expr(s.value, scope)
            self._require(vt, tt, s.line)
        elif isinstance(s, ExprStmt):
            if not isinstance(s.expr, (Call, New)):
                raise MjTypeError("structure", "expression statement must be a call", s.line)
            self.expr(s.expr, scope, allow_void=True)
        elif isinstance(s, If):
            self._require(self.expr(s.cond, scope), "boolean", s.line)
            self.block(s.then, scope)
            self.block(s.orelse, scope)
        elif isinstance(s, While):
            self._require(self.expr(s.cond, scope), "boolean", s.line)
            self.block(s.body, scope)
        elif isinstance(s, Return):
            if scope.ret is None:
                raise MjTypeError("structure", "return outside a method", s.line)
            if s.value is None:
                if scope.ret != VOID:
                    raise MjTypeError("mismatch", "missing return value", s.line)
            else:
                if scope.ret == VOID:
                    raise MjTypeError("mismatch", "void method returns a value", s.line)
                self._require(self.expr(s.value, scope), scope.ret, s.line)
        elif isinstance(s, Throw):
            t = self.expr(s.value, scope)
            if not (t in tp.classes and tp.is_subclass(t, THROWABLE)):
                raise MjTypeError("mismatch", f"cannot throw {t}", s.line)
        elif isinstance(s, SuperCall):
            sup = scope.cls.superclass if scope.cls else None
            if sup is None:
                raise MjTypeError("structure", "super(...) without superclass", s.line)
            argtypes = [self.expr(a, scope) for a in s.args]
            ctor = tp.resolve_ctor(sup.name, argtypes, s.line)
            self.info[id(s)] = ("super", sup.name, ctor)
        else:
            raise MjTypeError("structure", f"unsupported statement {type(s).__name__}")

    def lvalue(self, target, scope: Scope) -> str:
        tp = self.tp
        if isinstance(target, Name):
            t = scope.lookup(target.ident)
            if t is not None:
                self.info[id(target)] = ("local", target.ident)
                self.types[id(target)] = t
                return t
            if scope.cls is None:
                raise MjTypeError("unknown", f"unknown variable {target.ident}", target.line)
        t = self.expr(target, scope)
        inf = self.info[id(target)]
        if inf[0] not in ("local", "field", "static"):
            raise MjTypeError("structure", "invalid assignment target", target.line)
        if inf[0] == "static":
            f = tp.classes[inf[1]].static_fields[inf[2]]
            if f.is_final:
                raise MjTypeError("structure", f"cannot assign final field {inf[1]}.{inf[2]}", target.line)
        return t

    # -- expressions ---------------------------------------------------------

    def _require(self, got: str, want: str, line: int) -> None:
        if not self.tp.assignable(got, want):
            raise MjTypeError("mismatch", f"expected {want}, found {got}", line)

    def expr(self, e, scope: Scope, allow_void: bool = False, as_target: bool = False) -> str:
        t = self._expr(e, scope, as_target)
        if t == VOID and not allow_void:
            raise MjTypeError("mismatch", "void value used in an expression", getattr(e, "line", 0))
        self.types[id(e)] = t
        return t

    def _expr(self, e, scope: Scope, as_target: bool) -> str:
        tp = self.tp
        if isinstance(e, Literal):
            if e.kind == "String":
                tp.string_literals.append(e.value)
            return e.kind
        if isinstance(e, Placeholder):
            raise MjTypeError("structure", f"placeholder {e.type} is only valid in code hints", e.line)
        if isinstance(e, This):
            if scope.cls is None or scope.static:
                raise MjTypeError("unknown", "this outside an instance context", e.line)
            return scope.cls.name
        if isinstance(e, Name):
            return self._name(e, scope, as_target)
        if isinstance(e, FieldAccess):
            return self._field(e, scope)
        if isinstance(e, Call):
            return self._call(e, scope)
        if isinstance(e, New):
            if e.cls not in tp.classes:
                raise MjTypeError("unknown", f"unknown class {e.cls}", e.line)
            argtypes = [self.expr(a, scope) for a in e.args]
            ctor = tp.resolve_ctor(e.cls, argtypes, e.line)
            if ctor is not None and not tp.accessible(e.cls, ctor.visibility, scope.cls):
                raise MjTypeError("visibility", f"constructor {e.cls}(...) is protected", e.line)
            if tp.classes[e.cls].is_abstract:
                raise MjTypeError("abstract", f"cannot instantiate abstract class {e.cls}", e.line)
            self.info[id(e)] = ("new", e.cls, ctor)
            return e.cls
        if isinstance(e, Binary):
            return self._binary(e, scope)
        if isinstance(e, Unary):
            t = self.expr(e.operand, scope)
            want = "int" if e.op == "-" else "boolean"
            self._require(t, want, e.line)
            return want
        if isinstance(e, Cast):
            t = self.expr(e.operand, scope)
            if not tp.known_type(e.type):
                raise MjTypeError("unknown", f"unknown type {e.type}", e.line)
            if t == e.type or (t == NULL_TYPE and e.type in tp.classes):
                return e.type
            if t in tp.classes and e.type in tp.classes and (
                tp.is_subclass(t, e.type) or tp.is_subclass(e.type, t)
            ):
                return e.type
            raise MjTypeError("mismatch", f"cannot cast {t} to {e.type}", e.line)
        if isinstance(e, InstanceOf):
            t = self.expr(e.operand, scope)
            if e.type not in tp.classes or not (t in tp.classes or t == NULL_TYPE):
                raise MjTypeError("mismatch", f"bad instanceof {t} {e.type}", e.line)
            return "boolean"
        raise MjTypeError("structure", f"unsupported expression {type(e).__name__}")

    def _name(self, e: Name, scope: Scope, as_target: bool) -> str:
        tp = self.tp
        t = scope.lookup(e.ident)
        if t is not None:
            self.info[id(e)] = ("local", e.ident)
            return t
        if scope.cls is not None:
            hit = tp.lookup_field(scope.cls.name, e.ident)
            if hit is not None:
                owner, f = hit
                if f.is_static:
                    self.info[id(e)] = ("static", owner, f.name)
                    return f.type
                if scope.static:
                    raise MjTypeError("unknown", f"instance field {e.ident} in static context", e.line)
                self.info[id(e)] = ("field", f.name)
                return f.type
        if e.ident in tp.classes and as_target:
            self.info[id(e)] = ("class", e.ident)
            return "class " + e.ident
        raise MjTypeError("unknown", f"unknown identifier {e.ident}", e.line)

    def _field(self, e: FieldAccess, scope: Scope) -> str:
        tp = self.tp
        tt = self.expr(e.target, scope, as_target=True)
        if tt.startswith("class "):
            cname = tt[6:]
            hit = tp.lookup_field(cname, e.name)
            if hit is None or not hit[1].is_static:
                raise MjTypeError("unknown", f"unknown static field {cname}.{e.name}", e.line)
            owner, f = hit
            if not tp.accessible(owner, f.visibility, scope.cls):
                raise MjTypeError("visibility", f"field {owner}.{f.name} is protected", e.line)
            self.info[id(e)] = ("static", owner, f.name)
            return f.type
        if tt not in tp.classes:
            raise MjTypeError("mismatch", f"cannot access field {e.name} of {tt}", e.line)
        hit = tp.lookup_field(tt, e.name)
        if hit is None:
            raise MjTypeError("unknown", f"unknown field {tt}.{e.name}", e.line)
        owner, f = hit
        if not tp.accessible(owner, f.visibility, scope.cls):
            raise MjTypeError("visibility", f"field {owner}.{f.name} is protected", e.line)
        if f.is_static:
            self.info[id(e)] = ("static_via", owner, f.name)
            return f.type
        self.info[id(e)] = ("field", f.name)
        return f.type

    def _call(self, e: Call, scope: Scope) -> str:
        tp = self.tp
        argtypes = [self.expr(a, scope) for a in e.args]
        if e.target is None:
            if scope.cls is None:
                raise MjTypeError("unknown", f"unknown function {e.name}", e.line)
            hit = tp.resolve_method(scope.cls.name, e.name, argtypes, e.line)
            if hit is None:
                raise MjTypeError("unknown", f"unknown method {e.name}", e.line)
            owner, m = hit
            if m.is_static:
                self.info[id(e)] = ("static", owner, m)
            else:
                if scope.static:
                    raise MjTypeError("unknown", f"instance method {e.name} in static context", e.line)
                self.info[id(e)] = ("self", owner, m)
            return m.ret
        tt = self.expr(e.target, scope, as_target=True)
        if tt.startswith("class "):
            cname = tt[6:]
            hit = tp.resolve_method(cname, e.name, argtypes, e.line)
            if hit is None or not hit[1].is_static:
                raise MjTypeError("unknown", f"unknown static method {cname}.{e.name}", e.line)
            owner, m = hit
            if not tp.accessible(owner, m.visibility, scope.cls):
                raise MjTypeError("visibility", f"method {owner}.{m.name} is protected", e.line)
            if m.is_abstract:
                raise MjTypeError("abstract", f"static call to abstract method {owner}.{m.name}", e.line)
            self.info[id(e)] = ("static", owner, m)
            return m.ret
        if tt not in tp.classes:
            raise MjTypeError("mismatch", f"cannot call {e.name} on {tt}", e.line)
        hit = tp.resolve_method(tt, e.name, argtypes, e.line)
        if hit is None:
            raise MjTypeError("unknown", f"unknown method {tt}.{e.name}", e.line)
        owner, m = hit
        if not tp.accessible(owner, m.visibility, scope.cls):
            raise MjTypeError("visibility", f"method {owner}.{m.name} is protected", e.line)
        self.info[id(e)] = ("static_via" if m.is_static else "virtual", owner, m)
        return m.ret

    def _binary(self, e: Binary, scope: Scope) -> str:
        tp = self.tp
        a = self.expr(e.left, scope)
        b = self.expr(e.right, scope)
        op = e.op
        if op == "+" and ("String" in (a, b)):
            for t in (a, b):
                if t not in ("String", "int", "boolean"):
                    raise MjTypeError("mismatch", f"cannot concatenate {t}", e.line)
            return "String"
        if op in ("+", "-", "*", "/", "%"):
            self._require(a, "int", e.line)
            self._require(b, "int", e.line)
            return "int"
        if op in ("<", "<=", ">", ">="):
            self._require(a, "int", e.line)
            self._require(b, "int", e.line)
            return "boolean"
        if op in ("&&", "||"):
            self._require(a, "boolean", e.line)
            self._require(b, "boolean", e.line)
            return "boolean"
        if op in ("==", "!="):
            if a == b or tp.assignable(a, b) or tp.assignable(b, a):
                return "boolean"
            raise MjTypeError("mismatch", f"cannot compare {a} and {b}", e.line)
        raise MjTypeError("structure", f"unknown operator {op}", e.line)


def _definitely_returns(stmts) -> bool:
    if not stmts:
        return False
    last = stmts[-1]
    if isinstance(last, (Return, Throw)):
        return True
    if isinstance(last, If):
        return _definitely_returns(last.then) and _definitely_returns(last.orelse)
    if isinstance(last, While):
        return isinstance(last.cond, Literal) and last.cond.value is True
    return False


def typecheck(program: Program) -> TypedProgram:
    tp = TypedProgram(program)
    _Checker(tp).program()
    return tp


def calls_in(statements) -> list[Call | New]:
    out = []
    for s in walk_stmts(statements):
        for e in stmt_exprs(s):
            for sub in walk_expr(e):
                if isinstance(sub, (Call, New)):
                    out.append(sub)
    return out
