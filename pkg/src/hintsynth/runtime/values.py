"""Runtime values, heap objects and input recipes.

Primitive values are plain Python objects: `int` (kept in 64-bit two's
complement range), `bool`, `str` and `None` for null. Objects are `Obj`
instances owned by exactly one machine heap.

Inputs that are objects cannot be shared between executions, so they are
described by *recipes* and rebuilt inside every fresh machine.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class Obj:
    __slots__ = ("id", "cls", "fields", "stub")

    def __init__(self, oid: int, cls: str, fields: dict, stub: bool = False) -> None:
        self.id = oid
        self.cls = cls
        self.fields = fields
        self.stub = stub

    def __repr__(self) -> str:
        return f"<{self.cls}#{self.id}>"


class MjThrow(Exception):
    """A subject-language exception; only its type name is observable."""

    def __init__(self, type_name: str) -> None:
        super().__init__(type_name)
        self.type = type_name


NPE = "NullPointerException"
ARITH = "ArithmeticException"
CAST = "ClassCastException"
FUEL = "FuelExhausted"
STACK = "StackOverflowError"
LINK = "UnsatisfiedLinkError"


def is_ref(v) -> bool:
    return isinstance(v, Obj)


def value_str(v) -> str:
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'
    if isinstance(v, Obj):
        return repr(v)
    return str(v)


# -- recipes -----------------------------------------------------------------

_SLOT = re.compile(r"\$(\d+)")


@dataclass(frozen=True)
class Build:
    """Evaluate the expression `label` with slots `$0`, `$1`, ... bound to `args`."""

    label: str
    result_type: str
    args: tuple = ()
    key: str = field(default="", compare=False)  # curation entry that produced it

    def render(self) -> str:
        return _SLOT.sub(lambda m: render_input(self.args[int(m.group(1))]), self.label)


@dataclass(frozen=True)
class Stub:
    cls: str

    def render(self) -> str:
        return f"stub {self.cls}"


def render_input(v) -> str:
    if isinstance(v, (Build, Stub)):
        return v.render()
    return value_str(v)


def input_type(v) -> str:
    if isinstance(v, Build):
        return v.result_type
    if isinstance(v, Stub):
        return v.cls
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, int):
        return "int"
    if isinstance(v, str):
        return "String"
    raise TypeError(f"no input type for {v!r}")


def input_key(v):
    """A hashable, type-faithful key (keeps 1 and true apart)."""
    if isinstance(v, Build):
        return ("b", v.label, tuple(input_key(a) for a in v.args))
    if isinstance(v, Stub):
        return ("s", v.cls)
    return (type(v).__name__, v)


def input_to_json(v):
    if isinstance(v, Build):
        return {"build": v.label, "type": v.result_type, "args": [input_to_json(a) for a in v.args]}
    if isinstance(v, Stub):
        return {"stub": v.cls}
    return v


def input_from_json(d):
    if isinstance(d, dict):
        if "stub" in d:
            return Stub(d["stub"])
        return Build(d["build"], d["type"], tuple(input_from_json(a) for a in d["args"]))
    return d
