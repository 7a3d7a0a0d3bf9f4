"""Component libraries for synthesis.

A library is seeded per task in three phases: hint components, generators
for target types, then transformers that consume the snippet's inputs.
The Types variant skips the hints and starts from the output types only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .lang.syntax import MethodDecl, is_primitive
from .lang.tasks import RefactoringTask
from .lang.typecheck import TypedProgram
from .runtime.values import value_str


class Kind(str, enum.Enum):
    CONSTANT = "Constant"
    CONSTRUCTOR = "Constructor"
    STATIC = "StaticMethod"
    INSTANCE = "InstanceMethod"
    TRANSFORMER = "Transformer"

    def __str__(self) -> str:
        return self.value


class Origin(str, enum.Enum):
    CODEHINTS = "CodeHints"
    TYPES = "Types"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Component:
    kind: Kind
    owner: str
    name: str
    param_types: tuple[str, ...] = ()
    receiver_type: str | None = None
    produces: str | None = None
    consumes_from_inputs: frozenset = frozenset()
    from_hint: bool = False
    value: object = None  # literal constants only
    literal: bool = False

    @property
    def required_types(self) -> frozenset:
        req = set(self.param_types)
        if self.receiver_type is not None:
            req.add(self.receiver_type)
        return frozenset(req)

    @property
    def is_constant(self) -> bool:
        return self.kind is Kind.CONSTANT

    @property
    def is_void(self) -> bool:
        return self.produces in (None, "void")

    @property
    def slots(self) -> tuple[str, ...]:
        """Argument slot types in rendering order, receiver first."""
        if self.receiver_type is not None:
            return (self.receiver_type,) + self.param_types
        return self.param_types

    @property
    def key(self) -> tuple:
        return (self.kind, self.owner, self.name, self.param_types, self.receiver_type, repr(self.value))

    def render(self, args=()) -> str:
        args = list(args)
        if self.kind is Kind.CONSTANT:
            return value_str(self.value) if self.literal else f"{self.owner}.{self.name}"
        if self.kind is Kind.CONSTRUCTOR:
            return f"new {self.owner}({', '.join(args)})"
        if self.kind is Kind.STATIC:
            return f"{self.owner}.{self.name}({', '.join(args)})"
        recv, rest = args[0], args[1:]
        return f"{recv}.{self.name}({', '.join(rest)})"

    def dump_line(self) -> str:
        tag = " [hint]" if self.from_hint else ""
        if self.kind is Kind.CONSTANT:
            head = value_str(self.value) if self.literal else f"{self.owner}.{self.name}"
            return f"{self.kind} {head} -> {self.produces}{tag}"
        return f"{self.kind} {self.owner}.{self.name}({', '.join(self.param_types)}) -> {self.produces or 'void'}{tag}"


def method_component(owner: str, decl: MethodDecl, receiver: str | None = None, from_hint: bool = False) -> Component:
    if decl.is_ctor:
        return Component(Kind.CONSTRUCTOR, owner, owner, decl.param_types, None, owner, from_hint=from_hint)
    if decl.is_static:
        return Component(Kind.STATIC, owner, decl.name, decl.param_types, None, decl.ret, from_hint=from_hint)
    kind = Kind.TRANSFORMER if decl.ret == "void" else Kind.INSTANCE
    return Component(kind, owner, decl.name, decl.param_types, receiver or owner, decl.ret, from_hint=from_hint)


def constant_component(owner: str, name: str, type_name: str, from_hint: bool = False) -> Component:
    return Component(Kind.CONSTANT, owner, name, (), None, type_name, from_hint=from_hint)


def literal_component(value, type_name: str, from_hint: bool = False) -> Component:
    return Component(Kind.CONSTANT, "", value_str(value), (), None, type_name, from_hint=from_hint,
                     value=value, literal=True)


def is_realisable(c: Component, available) -> bool:
    return all(is_primitive(t) or t in available for t in c.required_types)


@dataclass
class SeedingState:
    consumable_objs: dict[str, str] = field(default_factory=dict)  # input name -> type
    available_types: set[str] = field(default_factory=set)
    target_types: set[str] = field(default_factory=set)


@dataclass
class ComponentLibrary:
    components: list[Component] = field(default_factory=list)
    origin: Origin = Origin.CODEHINTS
    diagnostics: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __contains__(self, c) -> bool:
        return any(x.key == c.key for x in self.components)

    def add(self, c: Component) -> bool:
        if c in self:
            return False
        self.components.append(c)
        return True

    @property
    def constants(self) -> list[Component]:
        return [c for c in self.components if c.is_constant]

    @property
    def methods(self) -> list[Component]:
        return [c for c in self.components if not c.is_constant]

    def dump(self) -> str:
        lines = [f"# {self.origin}-library ({len(self.components)} components)"]
        lines += [c.dump_line() for c in self.components]
        lines += [f"# diagnostic: {d}" for d in self.diagnostics]
        return "\n".join(lines) + "\n"


# -- seeding -------------------------------------------------------------------


def consumed_by(c: Component, consumable: dict[str, str], tp: TypedProgram) -> frozenset:
    req = c.slots
    return frozenset(n for n, t in consumable.items() if any(tp.assignable(t, r) for r in req))


def _with_consumption(c: Component, task: RefactoringTask) -> Component:
    from dataclasses import replace

    ins = {p.name: p.type for p in task.inputs}
    return replace(c, consumes_from_inputs=consumed_by(c, ins, task.program))


def initial_state(task: RefactoringTask) -> SeedingState:
    ins = task.inputs
    out_types = {task.typed.local_types.get(v) or _input_type(task, v) for v in task.outputs}
    return SeedingState(
        consumable_objs={p.name: p.type for p in ins if not is_primitive(p.type)},
        available_types={p.type for p in ins if not is_primitive(p.type)},
        target_types={t for t in out_types if t},
    )


def _input_type(task: RefactoringTask, name: str) -> str | None:
    for p in task.inputs:
        if p.name == name:
            return p.type
    return None


def _public(decl: MethodDecl) -> bool:
    return decl.visibility == "public" and not decl.deprecated


def generators_for(t: str, state: SeedingState, tp: TypedProgram) -> list[Component]:
    """Public, non-deprecated generators of t: constructors, static methods, instance methods."""
    info = tp.classes.get(t)
    if info is None:
        return []
    ctors = [method_component(t, c) for c in tp.public_constructors(t) if not c.deprecated]
    if not info.is_abstract and not info.decl.constructors:
        ctors.append(Component(Kind.CONSTRUCTOR, t, t, (), None, t))
    statics: list[Component] = []
    insts: list[Component] = []
    seen: set = set()
    for host in [t] + sorted(state.available_types - {t}):
        if host not in tp.classes:
            continue
        for owner, m in tp.all_methods(host):
            if not _public(m) or m.ret != t:
                continue
            if m.is_static:
                c = method_component(owner, m)
                bucket = statics
            else:
                c = method_component(owner, m, receiver=host)
                bucket = insts
            if c.key not in seen:
                seen.add(c.key)
                bucket.append(c)
    return ctors + statics + insts


def transformers_for(t: str, tp: TypedProgram) -> list[Component]:
    if t not in tp.classes:
        return []
    out = []
    for owner, m in tp.all_methods(t):
        if _public(m) and not m.is_static and m.ret == "void":
            out.append(method_component(owner, m, receiver=t))
    return out


def _phases_2_3(task: RefactoringTask, lib: ComponentLibrary, state: SeedingState) -> None:
    tp = task.program
    # phase 2: generators for target types that have none yet
    for t in sorted(state.target_types):
        if is_primitive(t) or t not in tp.classes:
            continue
        if any(c.produces == t for c in lib.methods):
            continue
        added = False
        for g in generators_for(t, state, tp):
            if not is_realisable(g, state.available_types):
                continue
            g = _with_consumption(g, task)
            if lib.add(g):
                added = True
                for n in consumed_by(g, state.consumable_objs, tp):
                    state.consumable_objs.pop(n, None)
        if added:
            state.available_types.add(t)
    # phase 3: transformers that consume the remaining inputs
    decl_order = {}
    pool: list[Component] = []
    for t in sorted(state.target_types):
        if is_primitive(t) or t not in state.available_types:
            continue
        for c in transformers_for(t, tp):
            if c.key not in decl_order:
                decl_order[c.key] = len(decl_order)
                pool.append(c)
    for _ in range(len(state.consumable_objs) + 1):
        if not state.consumable_objs:
            break
        best = None
        for c in pool:
            if c in lib or not is_realisable(c, state.available_types):
                continue
            eats = consumed_by(c, state.consumable_objs, tp)
            if not eats:
                continue
            rank = (len(c.param_types), decl_order[c.key])
            if best is None or rank < best[0]:
                best = (rank, c, eats)
        if best is None:
            break
        _, c, eats = best
        lib.add(_with_consumption(c, task))
        for n in eats:
            state.consumable_objs.pop(n, None)
    if state.consumable_objs:
        lib.diagnostics.append("inputs_unconsumed: " + ", ".join(sorted(state.consumable_objs)))


def seed_codehints_library(task: RefactoringTask, hints, program: TypedProgram | None = None):
    from .hints import hint_components

    tp = program or task.program
    state = initial_state(task)
    lib = ComponentLibrary(origin=Origin.CODEHINTS)
    diags: list[str] = []
    consts, methods = hint_components(hints, tp, diags)
    lib.diagnostics.extend(diags)
    # phase 1: hint constants and instructions
    for c in consts:
        lib.add(c)
    for c in methods:
        c = _with_consumption(c, task)
        lib.add(c)
        if is_realisable(c, state.available_types):
            for n in consumed_by(c, state.consumable_objs, tp):
                state.consumable_objs.pop(n, None)
            if c.produces and not is_primitive(c.produces) and c.produces != "void":
                state.available_types.add(c.produces)
        else:
            state.target_types |= {t for t in c.required_types if not is_primitive(t)}
    _phases_2_3(task, lib, state)
    # hint instructions whose types never became available cannot be woven in
    keep = []
    for c in lib.components:
        if not c.is_constant and not is_realisable(c, state.available_types):
            lib.diagnostics.append(f"unrealisable_hint: {c.owner}.{c.name}({', '.join(c.param_types)})")
            continue
        keep.append(c)
    lib.components = keep
    return lib, state


def seed_types_library(task: RefactoringTask, program: TypedProgram | None = None):
    state = initial_state(task)
    lib = ComponentLibrary(origin=Origin.TYPES)
    _phases_2_3(task, lib, state)
    return lib, state
