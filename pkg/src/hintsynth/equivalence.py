"""Observational equivalence of two execution outcomes.

Four conditions are checked in order, stopping at the first violation:
exception type, live-variable values, static-field values, and aliasing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations
from typing import Callable

from .lang.typecheck import TypedProgram
from .runtime.interp import ExecutionOutcome, Machine, ensure_class_loaded, runtime_for
from .runtime.values import MjThrow, Obj


class Condition(enum.IntEnum):
    EXCEPTION = 1
    LIVE_VARS = 2
    STATICS = 3
    ALIASING = 4

    @property
    def label(self) -> str:
        return {1: "Exception", 2: "LiveVars", 3: "Statics", 4: "Aliasing"}[self.value]

    def __str__(self) -> str:
        return f"{self.label}({self.value})"


@dataclass(frozen=True)
class EquivalenceVerdict:
    equal: bool
    violated_condition: Condition | None = None
    witness: str | None = None

    def to_json(self) -> dict:
        if self.equal:
            return {"equal": True}
        return {
            "equal": False,
            "condition": int(self.violated_condition),
            "condition_name": self.violated_condition.label,
            "witness": self.witness,
        }


EQUAL = EquivalenceVerdict(True)


class _Unbound:
    __slots__ = ()

    def __repr__(self) -> str:
        return "<unbound>"


UNBOUND = _Unbound()


@dataclass(frozen=True)
class EqualsPolicy:
    trusted_types: frozenset = frozenset()
    # runner(a, b) -> bool evaluates the library equals of a on b
    runner: Callable[[Obj, Obj], bool] | None = None


def trusted_types_for(tp: TypedProgram) -> frozenset:
    """Library classes deriving from the root that are Comparable and declare equals."""
    out = set()
    for name, info in tp.classes.items():
        if not info.library or name == "Object":
            continue
        if not tp.is_subclass(name, "Object") or not tp.implements(name, "Comparable"):
            continue
        if any(m.name == "equals" and m.param_types == ("Object",) and not m.is_static for m in info.decl.methods):
            out.add(name)
    return frozenset(out)


def _copy_into(m: Machine, v, memo: dict, side: int):
    if not isinstance(v, Obj):
        return v
    key = (side, v.id)
    hit = memo.get(key)
    if hit is not None:
        return hit
    o = Obj(m.next_id, v.cls, {}, v.stub)
    m.next_id += 1
    m.heap[o.id] = o
    memo[key] = o
    for f, x in v.fields.items():
        o.fields[f] = _copy_into(m, x, memo, side)
    return o


def library_equals_runner(tp: TypedProgram, fuel: int = 10_000) -> Callable[[Obj, Obj], bool]:
    rt = runtime_for(tp)

    def run(a: Obj, b: Obj) -> bool:
        m = Machine(rt, fuel)
        memo: dict = {}
        ca = _copy_into(m, a, memo, 0)
        cb = _copy_into(m, b, memo, 1)
        try:
            return rt.dispatch(ca.cls, ("equals", ("Object",))).call(m, ca, [cb]) is True
        except MjThrow:
            return False
        except RecursionError:
            return False

    return run


def policy_for(tp: TypedProgram) -> EqualsPolicy:
    pol = getattr(tp, "_equals_policy", None)
    if pol is None:
        pol = EqualsPolicy(trusted_types_for(tp), library_equals_runner(tp))
        tp._equals_policy = pol
    return pol


def _structural(a, b, assumed: set) -> list | None:
    """Coinductive structural comparison; returns the field path of a difference."""
    if isinstance(a, Obj) or isinstance(b, Obj):
        if not (isinstance(a, Obj) and isinstance(b, Obj)):
            return []
        key = (a.id, b.id)
        if key in assumed:
            return None
        if a.cls != b.cls:
            return []
        assumed.add(key)
        fa, fb = a.fields, b.fields
        for f in fa:
            d = _structural(fa[f], fb.get(f, UNBOUND), assumed)
            if d is not None:
                return [f] + d
        return None
    if type(a) is not type(b) or a != b:
        return []
    return None


def first_difference(a, b, policy: EqualsPolicy | None = None, assumed: set | None = None) -> list | None:
    """None when the values are deep-equal, else the field path to a disagreement."""
    policy = policy or EqualsPolicy()
    assumed = set() if assumed is None else assumed
    if isinstance(a, Obj) and isinstance(b, Obj):
        key = (a.id, b.id)
        if key in assumed:
            return None
        trusted = policy.trusted_types
        if a.cls in trusted and b.cls in trusted and policy.runner is not None:
            # shortcut: structurally identical graphs agree under any reflexive equals
            if _structural(a, b, set()) is None:
                assumed.add(key)
                return None
            if policy.runner(a, b):
                assumed.add(key)
                return None
            return []
        if a.cls != b.cls:
            return []
        assumed.add(key)
        fa, fb = a.fields, b.fields
        for f in fa:
            d = first_difference(fa[f], fb.get(f, UNBOUND), policy, assumed)
            if d is not None:
                return [f] + d
        return None
    if isinstance(a, Obj) or isinstance(b, Obj):
        return []
    if type(a) is not type(b) or a != b:
        return []
    return None


def deep_equals(v1, v2, h1=None, h2=None, policy: EqualsPolicy | None = None) -> bool:
    """Value equality across two heaps (the heaps are implicit in the objects)."""
    return first_difference(v1, v2, policy) is None


def alias_partitions_agree(p1, p2, domain) -> bool:
    def index(p):
        out = {}
        for i, cls in enumerate(p):
            for name in cls:
                out[name] = i
        return out

    i1, i2 = index(p1), index(p2)
    names = sorted(domain)
    for x, y in combinations(names, 2):
        if (i1.get(x, ("x", x)) == i1.get(y, ("y", y))) != (i2.get(x, ("x", x)) == i2.get(y, ("y", y))):
            return False
    return True


def mutually_loaded(o1: ExecutionOutcome, o2: ExecutionOutcome, program) -> tuple[ExecutionOutcome, ExecutionOutcome]:
    for c in sorted(o2.touched_classes - o1.touched_classes):
        o1 = ensure_class_loaded(o1, c, program)
    for c in sorted(o1.touched_classes - o2.touched_classes):
        o2 = ensure_class_loaded(o2, c, program)
    return o1, o2


def _path(prefix: str, name: str, path: list) -> str:
    return f"{prefix}:{'.'.join([name] + path)}"


def equivalent(
    o1: ExecutionOutcome,
    o2: ExecutionOutcome,
    live1,
    live2,
    policy: EqualsPolicy | None = None,
    *,
    program=None,
    alias_mode: str = "strict",
) -> EquivalenceVerdict:
    """Compare two outcomes; `program` triggers mutual class loading first."""
    if program is not None:
        o1, o2 = mutually_loaded(o1, o2, program)
    # (1) exceptions
    if o1.thrown != o2.thrown:
        return EquivalenceVerdict(
            False, Condition.EXCEPTION, f"exception:{o1.thrown or 'none'}/{o2.thrown or 'none'}"
        )
    # (2) live variables
    live1 = list(live1)
    live2 = list(live2)
    if set(live1) != set(live2):
        diff = sorted(set(live1) ^ set(live2))
        return EquivalenceVerdict(False, Condition.LIVE_VARS, f"live:{diff[0]}")
    for v in live1:
        d = first_difference(o1.env.get(v, UNBOUND), o2.env.get(v, UNBOUND), policy)
        if d is not None:
            return EquivalenceVerdict(False, Condition.LIVE_VARS, _path("live", v, d))
    # (3) statics of every touched class
    keys = sorted(set(o1.static_state) | set(o2.static_state))
    for k in keys:
        d = first_difference(o1.static_state.get(k, UNBOUND), o2.static_state.get(k, UNBOUND), policy)
        if d is not None:
            return EquivalenceVerdict(False, Condition.STATICS, _path("static", f"{k[0]}.{k[1]}", d))
    # (4) aliasing
    names = [v for v in live1] + [f"{c}.{f}" for c, f in keys]
    if alias_mode == "strict":
        for name in names:
            a = _lookup(o1, name)
            b = _lookup(o2, name)
            if isinstance(a, Obj) or isinstance(b, Obj):
                if not (isinstance(a, Obj) and isinstance(b, Obj)) or a.id != b.id:
                    return EquivalenceVerdict(False, Condition.ALIASING, f"alias:{name}")
    else:
        p1 = _partition(o1, names)
        p2 = _partition(o2, names)
        if not alias_partitions_agree(p1, p2, names):
            return EquivalenceVerdict(False, Condition.ALIASING, f"alias:{_alias_witness(p1, p2, names)}")
    return EQUAL


def _lookup(o: ExecutionOutcome, name: str):
    if name in o.env:
        return o.env[name]
    c, _, f = name.partition(".")
    return o.static_state.get((c, f), UNBOUND)


def _partition(o: ExecutionOutcome, names) -> list[frozenset]:
    groups: dict = {}
    for n in names:
        v = _lookup(o, n)
        key = ("ref", v.id) if isinstance(v, Obj) else ("name", n)
        groups.setdefault(key, []).append(n)
    return [frozenset(g) for g in groups.values()]


def _alias_witness(p1, p2, names) -> str:
    def cls_of(p, n):
        for c in p:
            if n in c:
                return c
        return frozenset({n})

    for n in names:
        if cls_of(p1, n) != cls_of(p2, n):
            return n
    return names[0]
