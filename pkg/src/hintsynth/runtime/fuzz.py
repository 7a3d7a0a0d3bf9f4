"""Typed input generation for verification and oracles."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from string import ascii_letters, digits

from ..lang.parser import INT_MAX, INT_MIN, parse_expression
from ..lang.printer import expr_str
from ..lang.syntax import (
    Binary,
    Call,
    Cast,
    FieldAccess,
    InstanceOf,
    Name,
    New,
    Placeholder,
    Unary,
    is_primitive,
)
from ..lang.typecheck import MjTypeError, TypedProgram
from .interp import runtime_for
from .values import Build, Stub

INT_POOL = (-2, -1, 0, 1, 2, INT_MIN, INT_MAX)
STRING_BASE = ("", "UTF-8")
_ASCII = ascii_letters + digits + " %+-_./"


class Uninstantiable(Exception):
    def __init__(self, type_name: str, reason: str = "") -> None:
        super().__init__(f"cannot instantiate {type_name}" + (f": {reason}" if reason else ""))
        self.type_name = type_name


class CurationError(ValueError):
    pass


@dataclass
class Curation:
    """Explicit constructor expressions per type and denied constructors."""

    allow: dict[str, list[str]] = field(default_factory=dict)
    deny: set[str] = field(default_factory=set)

    def add_line(self, line: str) -> None:
        words = line.split(None, 1)
        if not words:
            return
        if words[0] == "instantiate":
            head, sep, expr = words[1].partition(" via ") if len(words) > 1 else ("", "", "")
            if not sep or not head.strip() or not expr.strip():
                raise CurationError(f"malformed directive: {line!r}")
            self.allow.setdefault(head.strip(), []).append(expr.strip())
        elif words[0] == "deny":
            if len(words) < 2:
                raise CurationError(f"malformed directive: {line!r}")
            self.deny.add(_normalize_sig(words[1]))
        else:
            raise CurationError(f"unknown directive {words[0]!r}")

    def merged(self, other: Curation) -> Curation:
        allow = {k: list(v) for k, v in self.allow.items()}
        for k, v in other.allow.items():
            allow[k] = list(v)  # explicit entries replace the defaults for that type
        return Curation(allow, set(self.deny) | set(other.deny))


def _normalize_sig(s: str) -> str:
    return "".join(s.split())


def default_curation() -> Curation:
    return Curation(
        allow={"Calendar": ["Calendar.getInstance()"], "Component": ["new Canvas(int, int)"]},
        deny={"IntBuffer.IntBuffer(int)"},
    )


def rewrite(expr, fn):
    """Bottom-up copy of an expression; `fn` may return a replacement node or None."""

    def go(e):
        hit = fn(e)
        if hit is not None:
            return hit
        if isinstance(e, Call):
            return replace(e, target=go(e.target) if e.target is not None else None, args=tuple(go(a) for a in e.args))
        if isinstance(e, New):
            return replace(e, args=tuple(go(a) for a in e.args))
        if isinstance(e, FieldAccess):
            return replace(e, target=go(e.target))
        if isinstance(e, Binary):
            return replace(e, left=go(e.left), right=go(e.right))
        if isinstance(e, (Unary, Cast, InstanceOf)):
            return replace(e, operand=go(e.operand))
        return e

    return go(expr)


def slotify(expr, slot_types: list[str], names: dict[str, str] | None = None, slot_names: list | None = None):
    """Replace placeholders (and identifiers listed in `names`) with `$i` slots."""

    def fn(e):
        if isinstance(e, Placeholder):
            slot_types.append(e.type)
        elif names is not None and isinstance(e, Name) and e.ident in names:
            slot_types.append(names[e.ident])
            if slot_names is not None:
                slot_names.append(e.ident)
        else:
            return None
        return Name(f"${len(slot_types) - 1}")

    return rewrite(expr, fn)


@dataclass(frozen=True)
class _Recipe:
    label: str
    slots: tuple[str, ...]
    deprecated: bool = False


class Fuzzer:
    def __init__(self, tp: TypedProgram, curation: Curation | None = None, max_depth: int = 3) -> None:
        self.tp = tp
        self.curation = curation if curation is not None else default_curation()
        self.max_depth = max_depth
        self.rt = runtime_for(tp)
        self.string_pool = tuple(sorted(set(tp.string_literals) | set(STRING_BASE)))
        self._recipes: dict[str, list[_Recipe]] = {}
        self._ok: dict[tuple[str, int], bool] = {}

    # -- recipe tables -------------------------------------------------------

    def recipes(self, t: str) -> list[_Recipe]:
        hit = self._recipes.get(t)
        if hit is not None:
            return hit
        tp = self.tp
        out: list[_Recipe] = []
        if t in self.curation.allow:
            for src in self.curation.allow[t]:
                slots: list[str] = []
                try:
                    e = slotify(parse_expression(src, lenient=True), slots)
                    label = expr_str(e)
                    self.rt.fragment(label, tuple(slots), t)
                except (MjTypeError, Exception) as ex:
                    raise CurationError(f"bad curation expression for {t}: {src!r} ({ex})") from ex
                out.append(_Recipe(label, tuple(slots)))
        elif t in tp.classes:
            info = tp.classes[t]
            if not info.is_abstract:
                for c in tp.public_constructors(t):
                    sig = _normalize_sig(f"{t}.{t}({','.join(c.param_types)})")
                    if sig in self.curation.deny:
                        continue
                    label = f"new {t}({', '.join(f'${i}' for i in range(len(c.params)))})"
                    out.append(_Recipe(label, c.param_types, c.deprecated))
                if not info.decl.constructors and f"{t}.{t}()" not in self.curation.deny:
                    out.append(_Recipe(f"new {t}()", ()))
                fresh = [r for r in out if not r.deprecated]
                out = fresh or out
        self._recipes[t] = out
        return out

    def instantiable(self, t: str, depth: int = 0) -> bool:
        if is_primitive(t):
            return True
        key = (t, depth)
        hit = self._ok.get(key)
        if hit is not None:
            return hit
        self._ok[key] = False  # guards recursive types
        ok = False
        if depth <= self.max_depth:
            rs = self.recipes(t)
            if rs:
                ok = any(all(self.instantiable(s, depth + 1) for s in r.slots) for r in rs)
            elif t in self.tp.classes and self.tp.classes[t].is_abstract:
                ok = True  # stub
        self._ok[key] = ok
        return ok

    # -- drawing -------------------------------------------------------------

    def value(self, t: str, rng: random.Random, depth: int = 0):
        if t == "int":
            if rng.random() < 0.5:
                return rng.choice(INT_POOL)
            return rng.getrandbits(64) - (1 << 63)
        if t == "boolean":
            return rng.random() < 0.5
        if t == "String":
            if rng.random() < 0.5:
                return rng.choice(self.string_pool)
            n = rng.randrange(0, 9)
            return "".join(rng.choice(_ASCII) for _ in range(n))
        if t not in self.tp.classes:
            raise Uninstantiable(t, "unknown type")
        rs = [r for r in self.recipes(t) if all(self.instantiable(s, depth + 1) for s in r.slots)]
        if not rs:
            if not self.recipes(t) and self.tp.classes[t].is_abstract:
                return Stub(t)
            raise Uninstantiable(t, "no usable constructor")
        if depth > self.max_depth:
            raise Uninstantiable(t, "recursion depth exceeded")
        r = rs[0] if len(rs) == 1 else rng.choice(rs)
        args = tuple(self.value(s, rng, depth + 1) for s in r.slots)
        return Build(r.label, t, args)

    def inputs(self, types, rng: random.Random) -> tuple:
        return tuple(self.value(t, rng) for t in types)


def instantiate_for_type(t: str, rng: random.Random, program: TypedProgram, curation: Curation | None = None):
    return Fuzzer(program, curation).value(t, rng)
