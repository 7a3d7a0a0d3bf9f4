"""Closure-compiling interpreter.

A `Runtime` compiles a typed program once; every expression becomes a Python
closure `f(machine, env)`. A `Machine` is the per-execution state: heap,
allocation counter, lazily initialised statics, touched classes and fuel.
Executions never share a machine, which gives the isolation the equivalence
check relies on.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace
from functools import cached_property

from ..lang.parser import parse_expression
from ..lang.syntax import (
    NULL_TYPE,
    Assign,
    Binary,
    Call,
    Cast,
    ExprStmt,
    FieldAccess,
    If,
    InstanceOf,
    Literal,
    LocalDecl,
    MethodDecl,
    Name,
    New,
    Param,
    Return,
    Snippet,
    SuperCall,
    This,
    Throw,
    Unary,
    While,
)
from ..lang.typecheck import MjTypeError, TypedProgram, TypedSnippet, default_value
from .natives import DEFAULT_NATIVES
from .values import ARITH, CAST, FUEL, LINK, NPE, STACK, Build, MjThrow, Obj, Stub, input_type

DEFAULT_FUEL = 100_000
MAX_DEPTH = 120

if sys.getrecursionlimit() < 20_000:
    sys.setrecursionlimit(20_000)

_H = 1 << 63
_M = (1 << 64) - 1


def _w(v: int) -> int:
    if -_H <= v < _H:
        return v
    return ((v + _H) & _M) - _H


def _jdiv(a: int, b: int) -> int:
    if b == 0:
        raise MjThrow(ARITH)
    q = abs(a) // abs(b)
    return _w(-q if (a < 0) != (b < 0) else q)


def _jmod(a: int, b: int) -> int:
    if b == 0:
        raise MjThrow(ARITH)
    r = abs(a) % abs(b)
    return -r if a < 0 else r


def _jstr(v) -> str:
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    return str(v)


def stub_default(t: str | None):
    if t == "String":
        return ""
    if t in (None, "void"):
        return None
    return default_value(t)


class _Nothing:
    __slots__ = ()

    def __repr__(self) -> str:
        return "NOTHING"


NOTHING = _Nothing()


class Machine:
    __slots__ = ("rt", "heap", "next_id", "statics", "loaded", "touched", "fuel", "depth")

    def __init__(self, rt: Runtime, fuel: int = DEFAULT_FUEL) -> None:
        self.rt = rt
        self.heap: dict[int, Obj] = {}
        self.next_id = 1
        self.statics: dict[tuple[str, str], object] = {}
        self.loaded: set[str] = set()
        self.touched: set[str] = set()
        self.fuel = fuel
        self.depth = 0

    def alloc(self, cls: str, stub: bool = False) -> Obj:
        oid = self.next_id
        self.next_id = oid + 1
        o = Obj(oid, cls, dict(self.rt.field_defaults[cls]), stub)
        self.heap[oid] = o
        return o

    def load(self, cls: str) -> None:
        if cls not in self.loaded:
            self.loaded.add(cls)
            for f, v in self.rt.static_fields.get(cls, ()):
                self.statics[(cls, f)] = v

    def touch(self, cls: str) -> None:
        if cls not in self.touched:
            self.touched.add(cls)
            self.load(cls)

    def materialize(self, v):
        if isinstance(v, Build):
            args = [self.materialize(a) for a in v.args]
            frag = self.rt.fragment(v.label, tuple(input_type(a) for a in v.args), v.result_type)
            env = {f"${i}": a for i, a in enumerate(args)}
            frag(self, env)
            return env["$r"]
        if isinstance(v, Stub):
            return self.rt.make_stub(self, v.cls)
        return v


class CompiledMethod:
    __slots__ = ("rt", "owner", "decl", "pnames", "body", "kind", "ret_default", "hook")

    def __init__(self, rt: Runtime, owner: str, decl: MethodDecl) -> None:
        self.rt = rt
        self.owner = owner
        self.decl = decl
        self.pnames = tuple(p.name for p in decl.params)
        self.body = None
        self.hook = None
        if decl.is_abstract:
            self.kind = "abstract"
        elif decl.is_native:
            self.kind = "native"
            self.hook = rt.natives.get(f"{owner}.{decl.name}/{len(decl.params)}")
        else:
            self.kind = "body"
        self.ret_default = stub_default(decl.ret)

    def call(self, m: Machine, this, args):
        m.fuel -= 1
        if m.fuel < 0:
            raise MjThrow(FUEL)
        kind = self.kind
        if kind == "body":
            body = self.body
            if body is None:
                body = self.body = self.rt.compile_block(self.decl.body, self.rt.tp.info, self.rt.tp.types)
            if m.depth >= MAX_DEPTH:
                raise MjThrow(STACK)
            env = dict(zip(self.pnames, args))
            env["this"] = this
            m.depth += 1
            r = body(m, env)
            m.depth -= 1
            return None if r is NOTHING else r
        if kind == "native":
            if self.hook is None:
                raise MjThrow(LINK)
            return self.hook(m, this, args)
        return self.ret_default  # abstract method reached through a stub


class Runtime:
    """Compiled, immutable view of a typed program shared across executions."""

    def __init__(self, tp: TypedProgram, natives: dict | None = None) -> None:
        self.tp = tp
        self.natives = DEFAULT_NATIVES if natives is None else natives
        self.field_defaults: dict[str, dict] = {}
        self.static_fields: dict[str, list[tuple[str, object]]] = {}
        for name, info in tp.classes.items():
            self.field_defaults[name] = {f.name: default_value(f.type) for _, f in info.instance_fields}
            self.static_fields[name] = [(f, tp.static_init[(name, f)]) for f in info.static_fields]
        self._methods: dict[int, CompiledMethod] = {}
        self._dispatch: dict[tuple, CompiledMethod] = {}
        self._subclass: dict[tuple[str, str], bool] = {}
        self._ctors: dict[tuple, object] = {}
        self._field_inits: dict[str, object] = {}
        self._fragments: dict[tuple, object] = {}
        self._snippets: dict[int, tuple] = {}

    # -- lookup caches -------------------------------------------------------

    def method(self, owner: str, decl: MethodDecl) -> CompiledMethod:
        cm = self._methods.get(id(decl))
        if cm is None:
            cm = self._methods[id(decl)] = CompiledMethod(self, owner, decl)
        return cm

    def dispatch(self, cls: str, sig: tuple) -> CompiledMethod:
        key = (cls, sig)
        cm = self._dispatch.get(key)
        if cm is None:
            owner, decl = self.tp.dispatch(cls, sig)
            cm = self._dispatch[key] = self.method(owner, decl)
        return cm

    def is_subclass(self, sub: str, sup: str) -> bool:
        key = (sub, sup)
        r = self._subclass.get(key)
        if r is None:
            r = self._subclass[key] = self.tp.is_subclass(sub, sup)
        return r

    def make_stub(self, m: Machine, cls: str) -> Obj:
        m.touch(cls)
        return m.alloc(cls, stub=True)

    # -- construction --------------------------------------------------------

    def field_init(self, cls: str):
        fn = self._field_inits.get(cls)
        if fn is None:
            inits = [
                (f.name, self.compile_expr(f.init, self.tp.info, self.tp.types))
                for f in self.tp.classes[cls].decl.fields
                if not f.is_static and f.init is not None
            ]

            def fn(m, this, _inits=inits):
                env = {"this": this}
                for name, ex in _inits:
                    this.fields[name] = ex(m, env)

            self._field_inits[cls] = fn
        return fn

    def constructor(self, cls: str, ctor: MethodDecl | None):
        """fn(m, obj, args) running the constructor chain for class cls."""
        key = (cls, id(ctor))
        fn = self._ctors.get(key)
        if fn is not None:
            return fn
        tp = self.tp
        info = tp.classes[cls]
        sup = info.superclass.name if info.superclass is not None else None
        finit = self.field_init(cls)

        def implicit_super():
            if sup is None:
                return None
            zero = [c for c in tp.classes[sup].decl.constructors if not c.params]
            return self.constructor(sup, zero[0] if zero else None)

        if ctor is None:
            sup_fn = [None]

            def fn(m, obj, args):
                if sup is not None:
                    if sup_fn[0] is None:
                        sup_fn[0] = implicit_super()
                    sup_fn[0](m, obj, ())
                finit(m, obj)
        else:
            body = ctor.body
            pnames = tuple(p.name for p in ctor.params)
            first = body[0] if body else None
            explicit = isinstance(first, SuperCall)
            rest = body[1:] if explicit else body
            super_args = [self.compile_expr(a, tp.info, tp.types) for a in first.args] if explicit else []
            sup_ctor = tp.info[id(first)][2] if explicit else None
            block = self.compile_block(rest, tp.info, tp.types)
            sup_fn = [None]

            def fn(m, obj, args):
                m.fuel -= 1
                if m.fuel < 0:
                    raise MjThrow(FUEL)
                if m.depth >= MAX_DEPTH:
                    raise MjThrow(STACK)
                m.depth += 1
                env = dict(zip(pnames, args))
                env["this"] = obj
                if sup is not None:
                    if sup_fn[0] is None:
                        sup_fn[0] = self.constructor(sup, sup_ctor) if explicit else implicit_super()
                    sargs = [a(m, env) for a in super_args]
                    sup_fn[0](m, obj, sargs)
                finit(m, obj)
                block(m, env)
                m.depth -= 1

        self._ctors[key] = fn
        return fn

    # -- compilation ---------------------------------------------------------

    def compile_block(self, stmts, info, types):
        fns = [self.compile_stmt(s, info, types) for s in stmts]
        if len(fns) == 1:
            return fns[0]

        def block(m, env):
            for f in fns:
                r = f(m, env)
                if r is not NOTHING:
                    return r
            return NOTHING

        return block

    def compile_stmt(self, s, info, types):
        cx = self.compile_expr
        if isinstance(s, LocalDecl):
            name = s.name
            init = cx(s.init, info, types)

            def local(m, env):
                m.fuel -= 1
                if m.fuel < 0:
                    raise MjThrow(FUEL)
                env[name] = init(m, env)
                return NOTHING

            return local
        if isinstance(s, Assign):
            val = cx(s.value, info, types)
            tgt = s.target
            inf = info[id(tgt)]
            if inf[0] == "local":
                name = inf[1]

                def assign_local(m, env):
                    m.fuel -= 1
                    if m.fuel < 0:
                        raise MjThrow(FUEL)
                    env[name] = val(m, env)
                    return NOTHING

                return assign_local
            if inf[0] in ("static", "static_via"):
                key = (inf[1], inf[2])
                owner = inf[1]
                pre = cx(tgt.target, info, types) if isinstance(tgt, FieldAccess) and inf[0] == "static_via" else None

                def assign_static(m, env):
                    m.fuel -= 1
                    if m.fuel < 0:
                        raise MjThrow(FUEL)
                    if pre is not None:
                        pre(m, env)
                    v = val(m, env)
                    m.touch(owner)
                    m.statics[key] = v
                    return NOTHING

                return assign_static
            fname = inf[1]
            if isinstance(tgt, Name):
                def assign_self(m, env):
                    m.fuel -= 1
                    if m.fuel < 0:
                        raise MjThrow(FUEL)
                    env["this"].fields[fname] = val(m, env)
                    return NOTHING

                return assign_self
            obj_fn = cx(tgt.target, info, types)

            def assign_field(m, env):
                m.fuel -= 1
                if m.fuel < 0:
                    raise MjThrow(FUEL)
                o = obj_fn(m, env)
                v = val(m, env)
                if o is None:
                    raise MjThrow(NPE)
                o.fields[fname] = v
                return NOTHING

            return assign_field
        if isinstance(s, ExprStmt):
            ex = cx(s.expr, info, types)

            def expr_stmt(m, env):
                m.fuel -= 1
                if m.fuel < 0:
                    raise MjThrow(FUEL)
                ex(m, env)
                return NOTHING

            return expr_stmt
        if isinstance(s, If):
            cond = cx(s.cond, info, types)
            then = self.compile_block(s.then, info, types)
            orelse = self.compile_block(s.orelse, info, types) if s.orelse else None

            def if_(m, env):
                m.fuel -= 1
                if m.fuel < 0:
                    raise MjThrow(FUEL)
                if cond(m, env):
                    return then(m, env)
                if orelse is not None:
                    return orelse(m, env)
                return NOTHING

            return if_
        if isinstance(s, While):
            cond = cx(s.cond, info, types)
            body = self.compile_block(s.body, info, types)

            def while_(m, env):
                while True:
                    m.fuel -= 1
                    if m.fuel < 0:
                        raise MjThrow(FUEL)
                    if not cond(m, env):
                        return NOTHING
                    r = body(m, env)
                    if r is not NOTHING:
                        return r

            return while_
        if isinstance(s, Return):
            if s.value is None:
                def ret_void(m, env):
                    return None

                return ret_void
            ex = cx(s.value, info, types)

            def ret(m, env):
                m.fuel -= 1
                if m.fuel < 0:
                    raise MjThrow(FUEL)
                return ex(m, env)

            return ret
        if isinstance(s, Throw):
            ex = cx(s.value, info, types)

            def throw(m, env):
                v = ex(m, env)
                raise MjThrow(NPE if v is None else v.cls)

            return throw
        if isinstance(s, SuperCall):
            raise MjTypeError("structure", "super(...) outside constructor head", s.line)
        raise TypeError(f"cannot compile {s!r}")

    def compile_expr(self, e, info, types):
        cx = self.compile_expr
        if isinstance(e, Literal):
            v = e.value
            return lambda m, env: v
        if isinstance(e, This):
            return lambda m, env: env["this"]
        if isinstance(e, Name):
            inf = info[id(e)]
            if inf[0] == "local":
                name = inf[1]
                return lambda m, env: env[name]
            if inf[0] == "field":
                fname = inf[1]
                return lambda m, env: env["this"].fields[fname]
            if inf[0] == "static":
                owner, key = inf[1], (inf[1], inf[2])

                def static_read(m, env):
                    if owner not in m.touched:
                        m.touch(owner)
                    return m.statics[key]

                return static_read
            raise TypeError(f"unexpected name resolution {inf}")
        if isinstance(e, FieldAccess):
            inf = info[id(e)]
            if inf[0] in ("static", "static_via"):
                owner, key = inf[1], (inf[1], inf[2])
                pre = cx(e.target, info, types) if inf[0] == "static_via" else None

                def static_field(m, env):
                    if pre is not None:
                        pre(m, env)
                    if owner not in m.touched:
                        m.touch(owner)
                    return m.statics[key]

                return static_field
            obj_fn = cx(e.target, info, types)
            fname = inf[1]

            def field_read(m, env):
                o = obj_fn(m, env)
                if o is None:
                    raise MjThrow(NPE)
                return o.fields[fname]

            return field_read
        if isinstance(e, Call):
            return self._compile_call(e, info, types)
        if isinstance(e, New):
            _, cls, ctor = info[id(e)]
            args = [cx(a, info, types) for a in e.args]
            holder = [None]

            def new(m, env):
                vals = [a(m, env) for a in args]
                m.touch(cls)
                c = holder[0]
                if c is None:
                    c = holder[0] = self.constructor(cls, ctor)
                o = m.alloc(cls)
                c(m, o, vals)
                return o

            return new
        if isinstance(e, Binary):
            return self._compile_binary(e, info, types)
        if isinstance(e, Unary):
            x = cx(e.operand, info, types)
            if e.op == "-":
                return lambda m, env: _w(-x(m, env))
            return lambda m, env: not x(m, env)
        if isinstance(e, Cast):
            x = cx(e.operand, info, types)
            t = e.type
            if t not in self.tp.classes:
                return x

            def cast(m, env):
                v = x(m, env)
                if v is None or self.is_subclass(v.cls, t):
                    return v
                raise MjThrow(CAST)

            return cast
        if isinstance(e, InstanceOf):
            x = cx(e.operand, info, types)
            t = e.type

            def inst(m, env):
                v = x(m, env)
                return v is not None and self.is_subclass(v.cls, t)

            return inst
        raise TypeError(f"cannot compile expression {e!r}")

    def _compile_call(self, e: Call, info, types):
        cx = self.compile_expr
        kind, owner, decl = info[id(e)]
        args = [cx(a, info, types) for a in e.args]
        if kind in ("static", "static_via"):
            cm = self.method(owner, decl)
            pre = cx(e.target, info, types) if kind == "static_via" else None

            def static_call(m, env):
                if pre is not None:
                    pre(m, env)
                vals = [a(m, env) for a in args]
                if owner not in m.touched:
                    m.touch(owner)
                return cm.call(m, None, vals)

            return static_call
        sig = decl.signature
        dispatch = self.dispatch
        if kind == "self":

            def self_call(m, env):
                this = env["this"]
                vals = [a(m, env) for a in args]
                return dispatch(this.cls, sig).call(m, this, vals)

            return self_call
        recv_fn = cx(e.target, info, types)

        def virtual(m, env):
            recv = recv_fn(m, env)
            vals = [a(m, env) for a in args]
            if recv is None:
                raise MjThrow(NPE)
            cls = recv.cls
            if cls not in m.touched:
                m.touch(cls)
            return dispatch(cls, sig).call(m, recv, vals)

        return virtual

    def _compile_binary(self, e: Binary, info, types):
        cx = self.compile_expr
        a = cx(e.left, info, types)
        b = cx(e.right, info, types)
        op = e.op
        lt, rt_ = types.get(id(e.left)), types.get(id(e.right))
        if op == "+" and "String" in (lt, rt_):
            return lambda m, env: _jstr(a(m, env)) + _jstr(b(m, env))
        if op == "+":
            return lambda m, env: _w(a(m, env) + b(m, env))
        if op == "-":
            return lambda m, env: _w(a(m, env) - b(m, env))
        if op == "*":
            return lambda m, env: _w(a(m, env) * b(m, env))
        if op == "/":
            return lambda m, env: _jdiv(a(m, env), b(m, env))
        if op == "%":
            return lambda m, env: _jmod(a(m, env), b(m, env))
        if op == "<":
            return lambda m, env: a(m, env) < b(m, env)
        if op == "<=":
            return lambda m, env: a(m, env) <= b(m, env)
        if op == ">":
            return lambda m, env: a(m, env) > b(m, env)
        if op == ">=":
            return lambda m, env: a(m, env) >= b(m, env)
        if op == "&&":
            return lambda m, env: a(m, env) and b(m, env)
        if op == "||":
            return lambda m, env: a(m, env) or b(m, env)
        if op == "==":
            if lt in self.tp.classes or rt_ in self.tp.classes or NULL_TYPE in (lt, rt_):
                return lambda m, env: a(m, env) is b(m, env)
            return lambda m, env: a(m, env) == b(m, env)
        if op == "!=":
            if lt in self.tp.classes or rt_ in self.tp.classes or NULL_TYPE in (lt, rt_):
                return lambda m, env: a(m, env) is not b(m, env)
            return lambda m, env: a(m, env) != b(m, env)
        raise TypeError(op)

    # -- snippets and fragments ---------------------------------------------

    def snippet(self, ts: TypedSnippet):
        hit = self._snippets.get(id(ts))
        if hit is not None and hit[0] is ts:
            return hit[1]
        fn = self.compile_block(ts.snippet.statements, ts.info, ts.types) if ts.snippet.statements else None
        self._snippets[id(ts)] = (ts, fn)
        return fn

    def fragment(self, label: str, slot_types: tuple, result_type: str):
        """Compiled `result_type $r = <label>;` with slots `$i` typed by slot_types."""
        key = (label, slot_types, result_type)
        fn = self._fragments.get(key)
        if fn is None:
            expr = parse_expression(label)
            snip = Snippet(
                "$build",
                tuple(Param(t, f"${i}") for i, t in enumerate(slot_types)),
                ("$r",),
                (LocalDecl(result_type, "$r", expr),),
            )
            ts = self.tp.check_snippet(snip, strict_inputs=False)
            fn = self.compile_block(snip.statements, ts.info, ts.types)
            self._fragments[key] = fn
        return fn


def runtime_for(tp: TypedProgram) -> Runtime:
    rt = getattr(tp, "_runtime", None)
    if rt is None:
        rt = Runtime(tp)
        tp._runtime = rt
    return rt


# -- outcomes -----------------------------------------------------------------


@dataclass
class ExecutionOutcome:
    env: dict
    thrown: str | None
    touched_classes: frozenset
    static_state: dict
    heap: dict
    live_out: tuple = ()

    @cached_property
    def alias_partition(self) -> list[frozenset]:
        """Alias classes over live variables and static fields (`Class.field`)."""
        groups: dict[object, list[str]] = {}
        for name in self.observed_names():
            v = self.lookup(name)
            key = ("ref", v.id) if isinstance(v, Obj) else ("name", name)
            groups.setdefault(key, []).append(name)
        return [frozenset(g) for g in groups.values()]

    def observed_names(self) -> list[str]:
        names = [v for v in self.live_out if v in self.env]
        names += [f"{c}.{f}" for (c, f) in sorted(self.static_state)]
        return names

    def lookup(self, name: str):
        if name in self.env:
            return self.env[name]
        c, _, f = name.partition(".")
        return self.static_state[(c, f)]


def execute(snippet, inputs, program, fuel: int = DEFAULT_FUEL) -> ExecutionOutcome:
    """Run a snippet (TypedSnippet, or Snippet checked on the fly) in a fresh machine."""
    rt = program if isinstance(program, Runtime) else runtime_for(program)
    ts = snippet if isinstance(snippet, TypedSnippet) else rt.tp.check_snippet(snippet, strict_inputs=False)
    s = ts.snippet
    m = Machine(rt, fuel)
    env: dict = {}
    thrown = None
    try:
        for p, v in zip(s.inputs, inputs):
            env[p.name] = m.materialize(v)
    except MjThrow as ex:
        thrown = ex.type
    if thrown is None:
        m.touched = set()
        m.fuel = fuel
        m.depth = 0
        fn = rt.snippet(ts)
        if fn is not None:
            try:
                fn(m, env)
            except MjThrow as ex:
                thrown = ex.type
            except RecursionError:
                thrown = STACK
    statics = {}
    for c in sorted(m.touched):
        for f, _ in rt.static_fields.get(c, ()):
            statics[(c, f)] = m.statics[(c, f)]
    return ExecutionOutcome(env, thrown, frozenset(m.touched), statics, m.heap, tuple(s.live_out))


def ensure_class_loaded(outcome: ExecutionOutcome, c: str, program) -> ExecutionOutcome:
    if c in outcome.touched_classes:
        return outcome
    rt = program if isinstance(program, Runtime) else runtime_for(program)
    statics = dict(outcome.static_state)
    for f, v in rt.static_fields.get(c, ()):
        statics[(c, f)] = v
    statics = {k: statics[k] for k in sorted(statics)}
    return replace(outcome, touched_classes=outcome.touched_classes | {c}, static_state=statics)
